import itertools
import math

import numpy as np
import pytest

from holoqec.decoder import (
    PlanError,
    TensorNetworkDecoder,
    _group_elements,
    attach_boundary_prior,
    decode_ml,
    decode_oracle,
    merge,
    plan_contraction,
    tile_tensor,
)
from holoqec.lego import Tile, Tiling, build_code, inflate, seed_library
from holoqec.noise import DEPOLARIZING, BiasVector, ChannelSpec, single_qubit_prior
from holoqec.pauli import PAULI_MUL, PauliOp, StabilizerCode

from conftest import SEEDS, holo

PERMS = list(itertools.permutations(range(3)))


def random_triple(rng, r):
    s = rng.integers(0, 2, r)
    if rng.random() < 0.3:
        corners = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (0.5, 0.5, 0), (0.5, 0, 0.5), (0, 0.5, 0.5)]
        bias = BiasVector(*corners[rng.integers(len(corners))])
    else:
        bias = BiasVector(*rng.dirichlet([1, 1, 1]))
    return s, ChannelSpec(float(rng.uniform(0.01, 0.45)), bias)


def assert_equivalent(hcode, s, spec, tn=None):
    tn = tn or TensorNetworkDecoder(hcode)
    got = tn.decode(s, spec)
    ref = decode_oracle(hcode.code, s, spec)
    if math.isinf(ref.log_total_mass):
        assert math.isinf(got.log_total_mass)
        return
    # the network counts every class 2**multiplicity_rank times
    assert got.log_total_mass - ref.log_total_mass == pytest.approx(hcode.multiplicity_rank * math.log(2), abs=1e-9)
    scale = ref.weights.max()
    np.testing.assert_allclose(got.weights, ref.weights, rtol=1e-9, atol=1e-12 * scale)
    assert got.chosen == ref.chosen


@pytest.mark.parametrize("seed", SEEDS)
def test_oracle_equivalence_on_seeds(seed):
    hcode = holo(seed, 0)
    tn = TensorNetworkDecoder(hcode)
    rng = np.random.default_rng(abs(hash(seed)) % 2**32)
    r = len(hcode.code.stabilizers)
    for _ in range(100):
        s, spec = random_triple(rng, r)
        assert_equivalent(hcode, s, spec, tn)


@pytest.mark.parametrize("seed", ["happy", "scf"])
def test_oracle_equivalence_layer_one(seed):
    hcode = holo(seed, 1)
    tn = TensorNetworkDecoder(hcode)
    rng = np.random.default_rng(7)
    r = len(hcode.code.stabilizers)
    for _ in range(100):
        s, spec = random_triple(rng, r)
        assert_equivalent(hcode, s, spec, tn)


def test_multiplicity_is_zero_for_shipped_tilings():
    for seed in SEEDS:
        for layers in range(3):
            assert holo(seed, layers).multiplicity_rank == 0


def test_group_elements_of_single_z():
    elems = _group_elements([PauliOp.from_str("Z")])
    assert sorted(elems[:, 0].tolist()) == [0, 3]


def test_tile_tensor_indicator():
    tile = inflate("happy", 0).tiles[0]
    t = tile_tensor(tile)
    assert t.data.shape == (1,) + (4,) * 6
    assert np.count_nonzero(t.data) == 64
    assert set(np.unique(t.data)) == {0.0, 1.0}
    assert t.data[(0,) * 7] == 1.0
    for seed in seed_library().values():
        legs = tuple(range(seed.q))
        assert tile_tensor(Tile(seed.name, legs)).data[(0,) * (seed.q + 1)] == 1.0


def test_attach_boundary_prior():
    t = tile_tensor(inflate("happy", 0).tiles[0])
    ident = attach_boundary_prior(t, 0, np.array([1.0, 0, 0, 0]))
    np.testing.assert_array_equal(ident.data * np.exp(ident.log_scale)[:, None, None, None, None, None], t.data[:, 0])
    u = t
    for leg in range(6):
        u = attach_boundary_prior(u, leg, np.full(4, 0.25))
    assert u.legs == ()
    value = float(u.data.reshape(-1)[0] * np.exp(u.log_scale[0]))
    assert value == pytest.approx(64 / 4**6)
    assert (u.data >= 0).all()
    with pytest.raises(KeyError):
        attach_boundary_prior(t, 99, np.ones(4))


def dense_decode(hcode, s, spec):
    """Reference contraction with full tile tensors, one leg at a time."""
    code, tiling = hcode.code, hcode.tiling
    f = code.pure_errors(np.asarray(s, dtype=np.uint8)[None, :])[0]
    f_idx = PauliOp.from_symplectic(f).indices()
    prior = single_qubit_prior(spec)
    pos = {leg: i for i, leg in enumerate(tiling.boundary_legs)}
    rename = {b: a for a, b in tiling.contractions}
    tensors = {}
    for i, tile in enumerate(tiling.tiles):
        t = tile_tensor(tile)
        for leg in tile.legs:
            if leg in pos:
                t = attach_boundary_prior(t, leg, prior[PAULI_MUL[f_idx[pos[leg]]]])
        t.legs = tuple(rename.get(leg, leg) for leg in t.legs)
        tensors[i] = t
    plan = plan_contraction(tiling)
    nxt = len(tensors)
    for a, b in plan.steps:
        tensors[nxt] = merge(tensors.pop(a), tensors.pop(b))
        nxt += 1
    (final,) = tensors.values()
    raw = final.data.reshape(4)
    return raw / raw.sum() if raw.sum() > 0 else raw


@pytest.mark.parametrize("seed", ["happy", "613"])
def test_dense_path_matches_fast_path(seed):
    hcode = holo(seed, 1)
    rng = np.random.default_rng(1)
    tn = TensorNetworkDecoder(hcode)
    for _ in range(5):
        s, spec = random_triple(rng, len(hcode.code.stabilizers))
        np.testing.assert_allclose(dense_decode(hcode, s, spec), tn.decode(s, spec).weights, rtol=1e-10, atol=1e-14)


def two_tile_tiling():
    center = Tile("happy", tuple(range(6)), 0)
    other = Tile("happy", tuple(range(6, 12)), 1)
    return Tiling("happy", 1, (center, other), ((0, 6),), (1, 2, 3, 4, 7, 8, 9, 10, 11), 5)


def test_plan_shapes():
    assert plan_contraction(inflate("happy", 0)).steps == ()
    plan = plan_contraction(two_tile_tiling())
    assert plan.steps == ((1, 0),) or plan.steps == ((0, 1),)
    assert plan.frontier == (1,)
    plan = plan_contraction(inflate("happy", 2), frontier_cap=12)
    assert plan.max_frontier <= 12
    assert len(plan.steps) == len(inflate("happy", 2).tiles) - 1


def test_plan_refuses_above_cap():
    with pytest.raises(PlanError, match="tile 0"):
        plan_contraction(inflate("happy", 2), frontier_cap=3)
    with pytest.raises(PlanError, match=r"step \d+ \(merge"):
        plan_contraction(inflate("steane", 3), frontier_cap=12)


def test_two_tile_code_decodes_like_oracle():
    hcode = build_code(two_tile_tiling())
    rng = np.random.default_rng(4)
    for _ in range(20):
        s, spec = random_triple(rng, len(hcode.code.stabilizers))
        assert_equivalent(hcode, s, spec)


def test_noiseless_zero_syndrome_is_identity():
    hcode = holo("happy", 1)
    dist = decode_ml(hcode, [0] * len(hcode.code.stabilizers), ChannelSpec(0.0, DEPOLARIZING))
    assert dist.chosen_class == "I"
    assert dist.weights.tolist() == [1.0, 0.0, 0.0, 0.0]


def test_oracle_prefers_identity_at_low_noise():
    code = holo("happy", 0).code
    w = decode_oracle(code, [0, 0, 0, 0], ChannelSpec(0.1, DEPOLARIZING)).weights
    assert w[0] > w[1:].max()


@pytest.mark.parametrize("seed", SEEDS)
def test_total_probability_over_syndromes(seed):
    hcode = holo(seed, 0)
    r = len(hcode.code.stabilizers)
    spec = ChannelSpec(0.23, BiasVector(0.1, 0.2, 0.7))
    syndromes = np.array(list(itertools.product((0, 1), repeat=r)), dtype=np.uint8)
    w, log_mass = TensorNetworkDecoder(hcode).class_weights(syndromes, spec)
    assert np.exp(log_mass).sum() == pytest.approx(1.0, abs=1e-12)
    assert w.sum(axis=1) == pytest.approx(np.ones(len(w)))
    oracle_total = sum(math.exp(decode_oracle(hcode.code, s, spec).log_total_mass) for s in syndromes)
    assert oracle_total == pytest.approx(1.0, abs=1e-12)


def relabeled(code, perm):
    """Apply a permutation of (X, Y, Z) to every operator; destabilizers stay paired."""
    table = np.array([0, *(1 + np.array(perm))])
    conv = lambda ops: tuple(PauliOp.from_indices(table[op.indices()]) for op in ops)  # noqa: E731
    return StabilizerCode(code.n, code.k, conv(code.stabilizers), conv(code.logical_x), conv(code.logical_z),
                          conv(code.destabilizers))


@pytest.mark.parametrize("perm", PERMS)
def test_depolarizing_weights_are_relabeling_invariant(perm):
    hcode = holo("happy", 0)
    tn = TensorNetworkDecoder(hcode)
    other = relabeled(hcode.code, perm)
    spec = ChannelSpec(0.2, DEPOLARIZING)
    for s in itertools.product((0, 1), repeat=4):
        np.testing.assert_allclose(decode_oracle(other, s, spec).weights, tn.decode(s, spec).weights, rtol=1e-12)


@pytest.mark.parametrize("perm", PERMS)
def test_biased_weights_follow_relabeling(perm):
    hcode = holo("613", 0)
    bias = (0.1, 0.3, 0.6)
    moved = [0.0] * 3
    for i, j in enumerate(perm):
        moved[j] = bias[i]
    other = relabeled(hcode.code, perm)
    for s in itertools.product((0, 1), repeat=5):
        a = decode_oracle(hcode.code, s, ChannelSpec(0.2, BiasVector(*bias))).weights
        b = decode_oracle(other, s, ChannelSpec(0.2, BiasVector(*moved))).weights
        np.testing.assert_allclose(a, b, rtol=1e-12)


def test_decoding_is_deterministic():
    hcode = holo("happy", 2)
    rng = np.random.default_rng(0)
    s = rng.integers(0, 2, (8, len(hcode.code.stabilizers)))
    spec = ChannelSpec(0.15, DEPOLARIZING)
    a = TensorNetworkDecoder(hcode).class_weights(s, spec)
    b = TensorNetworkDecoder(hcode).class_weights(s, spec)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    single = TensorNetworkDecoder(hcode).class_weights(s[:1], spec)
    assert np.array_equal(single[0][0], a[0][0])


def test_tie_break_prefers_lower_class():
    hcode = holo("happy", 0)
    # p = 3/4 depolarizing is the uniform prior, so all four classes tie
    dist = decode_ml(hcode, [0, 0, 0, 0], ChannelSpec(0.75, DEPOLARIZING))
    assert np.allclose(dist.weights, 0.25)
    assert dist.chosen_class == "I"


def test_syndrome_length_checked():
    with pytest.raises(ValueError):
        TensorNetworkDecoder(holo("happy", 0)).decode([0, 1], ChannelSpec(0.1, DEPOLARIZING))


def test_oracle_refuses_large_groups():
    with pytest.raises(ValueError):
        decode_oracle(holo("happy", 2).code, [0] * 94, ChannelSpec(0.1, DEPOLARIZING))
