"""Biased IID single-qubit Pauli channels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .pauli import PauliOp

AXES = "XYZ"

# bias values swept along each axis, pure 2-Pauli (0) through pure 1-Pauli (inf)
ETA_SWEEP = (
    0.0,
    1 / 1000,
    33 / 10000,
    99 / 10000,
    33 / 1000,
    1 / 10,
    1 / 3,
    1 / 2,
    1.0,
    3.0,
    10.0,
    30.0,
    100.0,
    300.0,
    1000.0,
    math.inf,
)


@dataclass(frozen=True)
class BiasVector:
    r_x: float
    r_y: float
    r_z: float

    def __post_init__(self) -> None:
        comps = (self.r_x, self.r_y, self.r_z)
        if any(not (0.0 <= c <= 1.0) for c in comps):
            raise ValueError(f"bias components must lie in [0, 1]: {comps}")
        if abs(sum(comps) - 1.0) > 1e-12:
            raise ValueError(f"bias components must sum to 1: {comps}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r_x, self.r_y, self.r_z)

    def eta(self, axis: str = "Z") -> float:
        i = AXES.index(axis)
        comps = self.as_tuple()
        rest = sum(c for j, c in enumerate(comps) if j != i)
        return math.inf if rest == 0 else comps[i] / rest


DEPOLARIZING = BiasVector(1 / 3, 1 / 3, 1 / 3)


@dataclass(frozen=True)
class ChannelSpec:
    p: float
    bias: BiasVector

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")


def bias_from_eta(axis: str, eta: float) -> BiasVector:
    """On-axis share eta/(1+eta); the two off-axis Paulis split the rest evenly."""
    axis = axis.upper()
    if axis not in AXES:
        raise ValueError(f"axis must be one of X, Y, Z, got {axis!r}")
    if eta < 0 or math.isnan(eta):
        raise ValueError(f"eta must be nonnegative, got {eta}")
    if math.isinf(eta):
        on, off = 1.0, 0.0
    else:
        on, off = eta / (1 + eta), 1 / (2 * (1 + eta))
    comps = [off, off, off]
    comps[AXES.index(axis)] = on
    return BiasVector(*comps)


def single_qubit_prior(spec: ChannelSpec) -> np.ndarray:
    """Probabilities of (I, X, Y, Z) on one qubit."""
    b = spec.bias
    return np.array([1.0 - spec.p, spec.p * b.r_x, spec.p * b.r_y, spec.p * b.r_z])


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    """Philox stream for one shot, keyed on (run seed, shot index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, shot])))


def _draw(n: int, spec: ChannelSpec, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(single_qubit_prior(spec))[:3]
    return np.searchsorted(cum, rng.random(n), side="right").astype(np.uint8)


def sample_error(n: int, spec: ChannelSpec, rng: np.random.Generator) -> PauliOp:
    if n < 1:
        raise ValueError("n must be >= 1")
    return PauliOp.from_indices(_draw(n, spec, rng))


def sample_errors(n: int, spec: ChannelSpec, seed: int, start: int, stop: int) -> np.ndarray:
    """Class indices (I=0, X=1, Y=2, Z=3) for shots ``start..stop-1``, shape (shots, n).

    Each shot uses its own stream, so any partition of the shot range into
    chunks reproduces the same errors.
    """
    out = np.empty((stop - start, n), dtype=np.uint8)
    for i, shot in enumerate(range(start, stop)):
        out[i] = _draw(n, spec, shot_rng(seed, shot))
    return out


SPECIAL_POINTS = (
    BiasVector(1.0, 0.0, 0.0),
    BiasVector(0.0, 1.0, 0.0),
    BiasVector(0.0, 0.0, 1.0),
    BiasVector(0.5, 0.5, 0.0),
    BiasVector(0.0, 0.5, 0.5),
    BiasVector(0.5, 0.0, 0.5),
    DEPOLARIZING,
)


def ternary_grid(resolution: int, extras=SPECIAL_POINTS) -> list[BiasVector]:
    """Simplex points (i, j, k)/m with i+j+k = m, followed by any extras not already present."""
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    m = resolution
    points = [BiasVector(i / m, j / m, (m - i - j) / m) for i in range(m, -1, -1) for j in range(m - i, -1, -1)]
    seen = {_key(b) for b in points}
    for b in extras:
        if _key(b) not in seen:
            seen.add(_key(b))
            points.append(b)
    return points


def _key(b: BiasVector) -> tuple[int, int, int]:
    return tuple(round(c * 10**9) for c in b.as_tuple())


def parse_bias(text: str) -> BiasVector:
    """Parse ``Z:10``, ``Y:inf``, ``inf`` (pure Z), ``depolarizing`` or ``rx,ry,rz`` (fractions allowed)."""
    t = text.strip().lower()
    if t in ("depolarizing", "depol"):
        return DEPOLARIZING
    if t in ("inf", "+inf"):
        return bias_from_eta("Z", math.inf)
    if ":" in t:
        axis, eta = t.split(":", 1)
        return bias_from_eta(axis.upper(), math.inf if eta in ("inf", "+inf") else float(Fraction(eta)))
    parts = t.split(",")
    if len(parts) != 3:
        raise ValueError(f"cannot parse bias {text!r}")
    comps = [Fraction(x) for x in parts]
    total = sum(comps)
    if total <= 0:
        raise ValueError(f"bias {text!r} has no weight")
    return BiasVector(*(float(c / total) for c in comps))


def axis_eta(bias: BiasVector) -> tuple[str, float]:
    """The axis whose two off-axis components are equal, with its eta; Z is preferred.

    Returns ``("", nan)`` for biases off every symmetric line.
    """
    comps = bias.as_tuple()
    for axis in "ZYX":
        i = AXES.index(axis)
        a, b = (c for j, c in enumerate(comps) if j != i)
        if math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12):
            return axis, bias.eta(axis)
    return "", math.nan
