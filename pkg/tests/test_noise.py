import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from holoqec.noise import (
    DEPOLARIZING,
    ETA_SWEEP,
    BiasVector,
    ChannelSpec,
    axis_eta,
    bias_from_eta,
    parse_bias,
    sample_error,
    sample_errors,
    shot_rng,
    single_qubit_prior,
    ternary_grid,
)

etas = st.one_of(st.floats(0, 1e6, allow_nan=False), st.just(math.inf))


def test_bias_from_eta_examples():
    assert bias_from_eta("Z", 0.5).as_tuple() == pytest.approx((1 / 3, 1 / 3, 1 / 3), abs=1e-15)
    assert bias_from_eta("Z", math.inf).as_tuple() == (0.0, 0.0, 1.0)
    assert bias_from_eta("Z", 10).as_tuple() == pytest.approx((1 / 22, 1 / 22, 10 / 11), abs=1e-15)
    assert bias_from_eta("Z", 0).as_tuple() == (0.5, 0.5, 0.0)
    with pytest.raises(ValueError):
        bias_from_eta("Z", -1)
    with pytest.raises(ValueError):
        bias_from_eta("W", 1)


def test_bias_validation():
    with pytest.raises(ValueError):
        BiasVector(0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        BiasVector(-0.1, 0.6, 0.5)
    with pytest.raises(ValueError):
        ChannelSpec(1.5, DEPOLARIZING)


@given(etas)
def test_bias_from_eta_is_axis_symmetric(eta):
    bx, by, bz = (bias_from_eta(a, eta).as_tuple() for a in "XYZ")
    assert bx == (bz[2], bz[0], bz[1])
    assert by == (bz[0], bz[2], bz[1])


@given(st.floats(0, 1e6, allow_nan=False))
def test_eta_round_trip(eta):
    b = bias_from_eta("Z", eta)
    assert b.eta("Z") == pytest.approx(eta, rel=1e-12, abs=1e-12)


def test_eta_sweep_values():
    assert len(ETA_SWEEP) == 16
    assert ETA_SWEEP[0] == 0 and math.isinf(ETA_SWEEP[-1])
    assert list(ETA_SWEEP) == sorted(ETA_SWEEP)


def test_prior_examples():
    assert single_qubit_prior(ChannelSpec(0.0, DEPOLARIZING)).tolist() == [1, 0, 0, 0]
    assert single_qubit_prior(ChannelSpec(0.3, DEPOLARIZING)) == pytest.approx([0.7, 0.1, 0.1, 0.1])
    assert single_qubit_prior(ChannelSpec(0.5, BiasVector(0, 0, 1))).tolist() == [0.5, 0, 0, 0.5]


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_prior_sums_to_one(p, a, b, c):
    total = a + b + c
    if total == 0:
        return
    spec = ChannelSpec(p, BiasVector(a / total, b / total, c / total))
    assert single_qubit_prior(spec).sum() == pytest.approx(1.0, abs=1e-12)


def test_sampling_edge_cases():
    rng = shot_rng(0, 0)
    assert sample_error(7, ChannelSpec(0.0, DEPOLARIZING), rng).is_identity
    op = sample_error(5, ChannelSpec(1.0, BiasVector(0, 0, 1)), rng)
    assert str(op) == "ZZZZZ"
    with pytest.raises(ValueError):
        sample_error(0, ChannelSpec(0.1, DEPOLARIZING), rng)


def test_empirical_frequencies_within_four_sigma():
    spec = ChannelSpec(0.3, BiasVector(0.2, 0.3, 0.5))
    draws = sample_errors(100, spec, seed=5, start=0, stop=1000).ravel()
    counts = np.bincount(draws, minlength=4)
    prior = single_qubit_prior(spec)
    n = draws.size
    sigma = np.sqrt(n * prior * (1 - prior))
    assert np.all(np.abs(counts - n * prior) <= 4 * sigma)


def test_sampling_is_deterministic_and_chunk_independent():
    spec = ChannelSpec(0.2, DEPOLARIZING)
    whole = sample_errors(30, spec, 9, 0, 50)
    parts = np.vstack([sample_errors(30, spec, 9, 0, 17), sample_errors(30, spec, 9, 17, 50)])
    assert np.array_equal(whole, parts)
    assert not np.array_equal(whole, sample_errors(30, spec, 10, 0, 50))


def test_fixed_stream_value():
    # guards the RNG algorithm choice: a silent change would break reproducibility
    draws = sample_errors(8, ChannelSpec(0.5, DEPOLARIZING), 1, 0, 1)[0].tolist()
    assert draws == sample_errors(8, ChannelSpec(0.5, DEPOLARIZING), 1, 0, 1)[0].tolist()
    u = shot_rng(1, 0).random(2)
    assert np.array_equal(u, np.random.Generator(np.random.Philox(np.random.SeedSequence([1, 0]))).random(2))


def test_ternary_grid():
    assert len(ternary_grid(1, extras=())) == 3
    assert len(ternary_grid(2, extras=())) == 6
    assert len(ternary_grid(1)) == 7
    pts = {b.as_tuple() for b in ternary_grid(4)}
    assert (0.25, 0.25, 0.5) in pts
    assert DEPOLARIZING.as_tuple() in pts
    with pytest.raises(ValueError):
        ternary_grid(0)


@pytest.mark.parametrize("m", [1, 2, 3, 5, 8])
def test_ternary_grid_size(m):
    assert len(ternary_grid(m, extras=())) == (m + 1) * (m + 2) // 2


def test_parse_bias_forms():
    assert parse_bias("Z:10").as_tuple() == bias_from_eta("Z", 10).as_tuple()
    assert parse_bias("inf").as_tuple() == (0, 0, 1)
    assert parse_bias("Y:inf").as_tuple() == (0, 1, 0)
    assert parse_bias("0.25,0.25,0.5").as_tuple() == (0.25, 0.25, 0.5)
    assert parse_bias("1/3,1/3,1/3").as_tuple() == pytest.approx(DEPOLARIZING.as_tuple())
    assert parse_bias("depolarizing") == DEPOLARIZING
    for bad in ("1,2", "0,0,0", "Q:1"):
        with pytest.raises(ValueError):
            parse_bias(bad)


def test_axis_eta():
    assert axis_eta(DEPOLARIZING) == ("Z", pytest.approx(0.5))
    assert axis_eta(BiasVector(1, 0, 0)) == ("X", math.inf)
    assert axis_eta(BiasVector(0.5, 0, 0.5)) == ("Y", 0.0)
    axis, eta = axis_eta(BiasVector(0.2, 0.3, 0.5))
    assert axis == "" and math.isnan(eta)
