"""Exact maximum-likelihood decoding of holographic codes.

The coset weight of logical class L given pure error f is

    W[L] = sum over stabilizers g of  prod_i prior((f . L . g)_i).

Every tile contributes a 0/1 tensor marking membership in its stabilizer group,
boundary legs are weighted by the prior shifted by the pure error, and the
network is contracted down to the open logical leg.  Interior elements that act
trivially on the boundary make every class weight overcounted by the same
factor 2**multiplicity_rank.

``decode_oracle`` computes the same weights by enumerating the boundary
stabilizer group and shares nothing with the network path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .lego import HolographicCode, Tile, Tiling, seed_library
from .noise import ChannelSpec, single_qubit_prior
from .pauli import (
    INDEX_OF_XZ,
    PAULI_CHARS,
    PAULI_MUL,
    PauliOp,
    StabilizerCode,
    pure_error,
)

DEFAULT_FRONTIER_CAP = 12
# float64 entries allowed in one intermediate (per batch)
WORK_BUDGET = 1 << 22


class PlanError(RuntimeError):
    """No contraction order fits under the frontier cap."""


@dataclass
class TileTensor:
    """Dense tensor with a leading batch axis and one 4-valued axis per leg."""

    legs: tuple
    data: np.ndarray
    log_scale: np.ndarray

    @property
    def batch(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class ClassDistribution:
    weights: np.ndarray  # normalized, order I, X, Y, Z
    log_total_mass: float  # natural log of the unnormalized coset mass
    chosen: int

    @property
    def chosen_class(self) -> str:
        return PAULI_CHARS[self.chosen]

    @property
    def raw_weights(self) -> np.ndarray:
        return self.weights * math.exp(self.log_total_mass)

    def to_dict(self) -> dict:
        return {
            "weights": dict(zip(PAULI_CHARS, map(float, self.weights))),
            "chosen_class": self.chosen_class,
            "log_total_mass": self.log_total_mass,
        }


TIE_TOLERANCE = 1e-12


def choose_class(weights: np.ndarray) -> np.ndarray:
    """Argmax over the last axis, with weights within TIE_TOLERANCE of the top
    counted as tied and resolved towards I < X < Y < Z."""
    weights = np.asarray(weights)
    top = weights.max(axis=-1, keepdims=True)
    return np.argmax(weights >= top * (1 - TIE_TOLERANCE), axis=-1)


def _group_elements(generators: Sequence[PauliOp]) -> np.ndarray:
    """All 2**r elements of the span as per-leg class indices, shape (2**r, m)."""
    gens = np.array([g.symplectic() for g in generators], dtype=np.uint8)
    r, m2 = gens.shape
    m = m2 // 2
    elems = np.zeros((1, m2), dtype=np.uint8)
    for row in gens:
        elems = np.concatenate([elems, elems ^ row])
    return INDEX_OF_XZ[elems[:, :m], elems[:, m:]]


def tile_tensor(tile: Tile) -> TileTensor:
    """Indicator of the tile's stabilizer group, built from its group elements."""
    elems = _group_elements(seed_library()[tile.seed].generators)
    q = elems.shape[1]
    data = np.zeros((1,) + (4,) * q)
    data[(0,) + tuple(elems.T)] = 1.0
    return TileTensor(tuple(tile.legs), data, np.zeros(1))


def _rescale(data: np.ndarray, log_scale: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    flat = data.reshape(data.shape[0], -1)
    peak = flat.max(axis=1)
    peak = np.where(peak > 0, peak, 1.0)
    flat /= peak[:, None]
    return data, log_scale + np.log(peak)


def attach_boundary_prior(t: TileTensor, leg, v: np.ndarray) -> TileTensor:
    """Sum ``leg`` against the weight vector ``v`` (shape (4,) or (batch, 4))."""
    if leg not in t.legs:
        raise KeyError(f"leg {leg} is not open on this tensor")
    pos = t.legs.index(leg) + 1
    v = np.broadcast_to(np.asarray(v, dtype=float), (t.batch, 4))
    moved = np.moveaxis(t.data, pos, -1)
    out = np.einsum("b...g,bg->b...", moved, v)
    data, log_scale = _rescale(out.copy(), t.log_scale)
    return TileTensor(t.legs[: pos - 1] + t.legs[pos:], data, log_scale)


def merge(a: TileTensor, b: TileTensor) -> TileTensor:
    """Contract two tensors over every leg label they share."""
    shared = [leg for leg in a.legs if leg in b.legs]
    fa = [leg for leg in a.legs if leg not in shared]
    fb = [leg for leg in b.legs if leg not in shared]
    batch = max(a.batch, b.batch)
    pa = [0] + [a.legs.index(x) + 1 for x in fa + shared]
    pb = [0] + [b.legs.index(x) + 1 for x in shared + fb]
    ma = np.transpose(a.data, pa).reshape(a.batch, 4 ** len(fa), 4 ** len(shared))
    mb = np.transpose(b.data, pb).reshape(b.batch, 4 ** len(shared), 4 ** len(fb))
    out = np.matmul(ma, mb).reshape((batch,) + (4,) * (len(fa) + len(fb)))
    data, log_scale = _rescale(out, a.log_scale + b.log_scale)
    return TileTensor(tuple(fa + fb), data, log_scale)


# --- planning --------------------------------------------------------------


@dataclass(frozen=True)
class ContractionPlan:
    """Pairwise merges over tensor ids; tiles are ids 0..T-1, step i creates id T+i."""

    n_tiles: int
    steps: tuple[tuple[int, int], ...]
    frontier: tuple[int, ...]
    tile_labels: tuple[tuple[int, ...], ...]

    @property
    def max_frontier(self) -> int:
        initial = max((len(x) for x in self.tile_labels), default=0)
        return max((initial, *self.frontier))


def _tile_labels(tiling: Tiling) -> tuple[tuple[int, ...], ...]:
    """Open labels per tile in leg order: bond index per contraction, logical = -1."""
    bond = {}
    for i, (a, b) in enumerate(tiling.contractions):
        bond[a] = i
        bond[b] = i
    out = []
    for tile in tiling.tiles:
        labels = []
        for leg in tile.legs:
            if leg in bond:
                labels.append(bond[leg])
            elif leg == tiling.logical_leg:
                labels.append(-1)
        out.append(tuple(labels))
    return tuple(out)


def plan_contraction(tiling: Tiling, frontier_cap: int = DEFAULT_FRONTIER_CAP) -> ContractionPlan:
    """Greedy pairwise order: fewest open legs after the merge, outermost layer first."""
    labels = _tile_labels(tiling)
    for t, lab in enumerate(labels):
        if len(lab) > frontier_cap:
            raise PlanError(f"tile {t} alone has {len(lab)} open legs, above the cap of {frontier_cap}")
    clusters = {t: (frozenset(lab), tiling.tiles[t].layer) for t, lab in enumerate(labels)}
    steps: list[tuple[int, int]] = []
    frontier: list[int] = []
    next_id = len(labels)
    while len(clusters) > 1:
        holders: dict[int, list[int]] = {}
        for cid, (lab, _) in clusters.items():
            for x in lab:
                if x >= 0:
                    holders.setdefault(x, []).append(cid)
        best = None
        for pair in {tuple(sorted(h)) for h in holders.values() if len(h) == 2}:
            a, b = pair
            result = clusters[a][0] ^ clusters[b][0]
            key = (len(result), -max(clusters[a][1], clusters[b][1]), a, b)
            if best is None or key < best[0]:
                best = (key, a, b, result)
        if best is None:
            raise PlanError("tensor network is disconnected")
        _, a, b, result = best
        if len(result) > frontier_cap:
            raise PlanError(
                f"step {len(steps)} (merge {a}+{b}) leaves {len(result)} open legs, above the cap of {frontier_cap}"
            )
        layer = min(clusters[a][1], clusters[b][1])
        del clusters[a], clusters[b]
        clusters[next_id] = (result, layer)
        steps.append((a, b))
        frontier.append(len(result))
        next_id += 1
    return ContractionPlan(len(labels), tuple(steps), tuple(frontier), labels)


# --- the decoder -----------------------------------------------------------


class _TileProgram:
    """Precomputed boundary absorption for one tile."""

    def __init__(self, elems: np.ndarray, boundary_pos, boundary_idx, open_pos, open_labels):
        self.elems = elems
        self.boundary_pos = np.asarray(boundary_pos, dtype=np.intp)
        self.boundary_idx = np.asarray(boundary_idx, dtype=np.intp)
        self.labels = tuple(open_labels)
        n_open = len(open_pos)
        flat = np.zeros(len(elems), dtype=np.intp)
        for p in open_pos:
            flat = flat * 4 + elems[:, p]
        order = np.argsort(flat, kind="stable")
        self.order = order
        self.uniq, self.starts = np.unique(flat[order], return_index=True)
        self.size = 4**n_open

    def absorb(self, priors: np.ndarray) -> TileTensor:
        batch = priors.shape[0]
        if self.boundary_pos.size:
            sel = priors[:, self.boundary_idx, :]  # (B, nb, 4)
            picked = sel[:, np.arange(len(self.boundary_idx))[None, :], self.elems[:, self.boundary_pos]]
            w = picked.prod(axis=2)  # (B, G)
        else:
            w = np.ones((batch, len(self.elems)))
        summed = np.add.reduceat(w[:, self.order], self.starts, axis=1)
        out = np.zeros((batch, self.size))
        out[:, self.uniq] = summed
        data, log_scale = _rescale(out.reshape((batch,) + (4,) * len(self.labels)), np.zeros(batch))
        return TileTensor(self.labels, data, log_scale)


class TensorNetworkDecoder:
    """Reusable decoder for one holographic code; immutable after construction."""

    def __init__(self, hcode: HolographicCode, frontier_cap: int = DEFAULT_FRONTIER_CAP):
        self.hcode = hcode
        self.code = hcode.code
        tiling = hcode.tiling
        self.plan = plan_contraction(tiling, frontier_cap)
        position = {leg: i for i, leg in enumerate(tiling.boundary_legs)}
        seeds = seed_library()
        self.programs = []
        for tile, labels in zip(tiling.tiles, self.plan.tile_labels):
            elems = _group_elements(seeds[tile.seed].generators)
            bpos, bidx, opos = [], [], []
            for j, leg in enumerate(tile.legs):
                if leg in position:
                    bpos.append(j)
                    bidx.append(position[leg])
                else:
                    opos.append(j)
            self.programs.append(_TileProgram(elems, bpos, bidx, opos, labels))
        self.chunk = max(1, WORK_BUDGET // 4 ** max(self.plan.max_frontier + 2, 1))

    def class_weights(self, syndromes: np.ndarray, spec: ChannelSpec) -> tuple[np.ndarray, np.ndarray]:
        """Normalized class weights (B, 4) and natural-log total masses (B,)."""
        syndromes = np.atleast_2d(np.asarray(syndromes, dtype=np.uint8))
        if syndromes.shape[1] != len(self.code.stabilizers):
            raise ValueError(f"syndrome length {syndromes.shape[1]} != {len(self.code.stabilizers)}")
        prior = single_qubit_prior(spec)
        weights = np.empty((len(syndromes), 4))
        log_mass = np.empty(len(syndromes))
        for lo in range(0, len(syndromes), self.chunk):
            w, m = self._contract(syndromes[lo : lo + self.chunk], prior)
            weights[lo : lo + len(w)] = w
            log_mass[lo : lo + len(w)] = m
        return weights, log_mass

    def _contract(self, syndromes: np.ndarray, prior: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.code.n
        f = self.code.pure_errors(syndromes)
        f_idx = INDEX_OF_XZ[f[:, :n], f[:, n:]]
        priors = prior[PAULI_MUL[f_idx]]  # (B, n, 4): prior of f_i . g
        tensors = {t: prog.absorb(priors) for t, prog in enumerate(self.programs)}
        next_id = len(self.programs)
        for a, b in self.plan.steps:
            tensors[next_id] = merge(tensors.pop(a), tensors.pop(b))
            next_id += 1
        (final,) = tensors.values()
        raw = final.data.reshape(len(syndromes), 4)
        total = raw.sum(axis=1)
        safe = np.where(total > 0, total, 1.0)
        with np.errstate(divide="ignore"):
            log_mass = np.where(total > 0, np.log(safe) + final.log_scale, -np.inf)
        return raw / safe[:, None], log_mass

    def decode(self, s: Sequence[int], spec: ChannelSpec) -> ClassDistribution:
        w, m = self.class_weights(np.asarray(s, dtype=np.uint8)[None, :], spec)
        return ClassDistribution(w[0], float(m[0]), int(choose_class(w[0])))


def decode_ml(
    code: HolographicCode, s: Sequence[int], spec: ChannelSpec, frontier_cap: int = DEFAULT_FRONTIER_CAP
) -> ClassDistribution:
    return TensorNetworkDecoder(code, frontier_cap).decode(s, spec)


# --- enumeration oracle ----------------------------------------------------

MAX_ORACLE_CHECKS = 26
_CHUNK_WIDTH = 7


@numba.njit(cache=True)
def _coset_masses(gx, gz, cx, cz, tables, width):  # pragma: no cover - compiled
    r = gx.shape[0]
    nchunks = tables.shape[0]
    w = np.uint64(width)
    mask = (np.uint64(1) << w) - np.uint64(1)
    nlo = min(r, 12)
    size_lo = 1 << nlo
    lo_x = np.zeros(size_lo, np.uint64)
    lo_z = np.zeros(size_lo, np.uint64)
    for j in range(nlo):
        step = 1 << j
        for i in range(step):
            lo_x[step + i] = lo_x[i] ^ gx[j]
            lo_z[step + i] = lo_z[i] ^ gz[j]
    # table keys are linear in (x, z), so low-half keys are precomputed once
    lo_keys = np.empty((size_lo, nchunks), np.int64)
    for i in range(size_lo):
        for t in range(nchunks):
            sh = np.uint64(t) * w
            lo_keys[i, t] = np.int64(((lo_x[i] >> sh) & mask) | (((lo_z[i] >> sh) & mask) << w))
    base = np.empty(nchunks, np.int64)
    out = np.zeros(cx.shape[0])
    hx = np.uint64(0)
    hz = np.uint64(0)
    for h in range(1 << (r - nlo)):
        if h > 0:
            j = 0
            while (h >> j) & 1 == 0:
                j += 1
            hx ^= gx[nlo + j]
            hz ^= gz[nlo + j]
        for c in range(cx.shape[0]):
            bx = hx ^ cx[c]
            bz = hz ^ cz[c]
            for t in range(nchunks):
                sh = np.uint64(t) * w
                base[t] = np.int64(((bx >> sh) & mask) | (((bz >> sh) & mask) << w))
            acc = 0.0
            for i in range(size_lo):
                prob = 1.0
                for t in range(nchunks):
                    prob *= tables[t, base[t] ^ lo_keys[i, t]]
                acc += prob
            out[c] += acc
    return out


def _chunk_tables(n: int, prior: np.ndarray, width: int) -> np.ndarray:
    nchunks = -(-n // width)
    tables = np.ones((nchunks, 4**width))
    keys = np.arange(4**width)
    xs = keys & ((1 << width) - 1)
    zs = keys >> width
    for t in range(nchunks):
        real = min(width, n - t * width)
        for b in range(real):
            tables[t] *= prior[INDEX_OF_XZ[(xs >> b) & 1, (zs >> b) & 1]]
    return tables


def decode_oracle(code: StabilizerCode, s: Sequence[int], spec: ChannelSpec) -> ClassDistribution:
    """Class weights by explicit enumeration of the stabilizer group."""
    r = len(code.stabilizers)
    if r > MAX_ORACLE_CHECKS:
        raise ValueError(f"oracle enumerates 2**{r} stabilizers; capped at 2**{MAX_ORACLE_CHECKS}")
    if code.n > 64 or code.k != 1:
        raise ValueError("oracle supports k=1 codes on at most 64 qubits")
    f = pure_error(code, s)
    lx, lz = code.logical_x[0], code.logical_z[0]
    reps = [f, f * lx, f * lx * lz, f * lz]
    gx = np.array([g.x for g in code.stabilizers], dtype=np.uint64)
    gz = np.array([g.z for g in code.stabilizers], dtype=np.uint64)
    cx = np.array([c.x for c in reps], dtype=np.uint64)
    cz = np.array([c.z for c in reps], dtype=np.uint64)
    width = min(_CHUNK_WIDTH, code.n)
    raw = _coset_masses(gx, gz, cx, cz, _chunk_tables(code.n, single_qubit_prior(spec), width), width)
    total = raw.sum()
    if total <= 0:
        return ClassDistribution(np.zeros(4), -math.inf, 0)
    return ClassDistribution(raw / total, math.log(total), int(choose_class(raw)))

