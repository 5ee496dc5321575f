"""Zero-rate hashing bound of a biased Pauli channel."""

from __future__ import annotations

import numpy as np

from .noise import ETA_SWEEP, BiasVector, ChannelSpec, bias_from_eta, single_qubit_prior


def channel_entropy(spec: ChannelSpec) -> float:
    """Shannon entropy in bits of the four outcomes (I, X, Y, Z), identity included."""
    probs = single_qubit_prior(spec)
    probs = probs[probs > 0]
    return float(-(probs * np.log2(probs)).sum())


def hashing_rate(spec: ChannelSpec) -> float:
    return 1.0 - channel_entropy(spec)


def entropy_peak(bias: BiasVector) -> float:
    """The p maximising the channel entropy: 1 / (1 + 2**-H(bias))."""
    r = np.array(bias.as_tuple())
    r = r[r > 0]
    h_bias = float(-(r * np.log2(r)).sum())
    return 1.0 / (1.0 + 2.0**-h_bias)


def zero_rate_point(bias: BiasVector, tol: float = 1e-12) -> float:
    """Smallest p with zero hashing rate, by bisection on the rising branch."""
    lo, hi = 0.0, entropy_peak(bias)
    rate = lambda p: hashing_rate(ChannelSpec(p, bias))  # noqa: E731
    if rate(hi) > 0:
        # entropy never reaches one bit; cannot happen for a normalized bias
        raise ArithmeticError("hashing rate stays positive")
    if rate(hi) > -1e-15:
        # tangent root at the peak (pure 1-Pauli noise)
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rate(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def eta_sweep_table(axis: str, etas=None) -> list[dict]:
    rows = []
    for eta in ETA_SWEEP if etas is None else etas:
        b = bias_from_eta(axis, eta)
        rows.append({"eta": eta, "r_x": b.r_x, "r_y": b.r_y, "r_z": b.r_z, "p_star": zero_rate_point(b)})
    return rows

