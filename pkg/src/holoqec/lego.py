"""Zero-rate holographic codes from seed tensors contracted on layered tilings.

A seed tensor is a q-leg stabilizer state.  The central tile keeps leg q-1 as
the logical leg; every other tile lays all q legs in the plane.  Contracting
two legs identifies them through the Bell pair stabilized by XX and ZZ, so the
traced group keeps the elements that act identically on both legs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .pauli import (
    PauliOp,
    StabilizerCode,
    gf2_rank,
    left_kernel,
    matrix_to_ops,
    mul_gf2,
    ops_to_matrix,
    row_reduce,
)

FORMAT_VERSION = 1


class TilingError(ValueError):
    """A tiling is malformed or cannot be grown under the requested rule."""


class ConstructionError(ValueError):
    """Contraction did not produce a valid one-logical-qubit code."""


@dataclass(frozen=True)
class SeedTensor:
    name: str
    q: int
    generators: tuple[PauliOp, ...]

    @property
    def logical_leg(self) -> int:
        return self.q - 1

    @cached_property
    def derived_code(self) -> StabilizerCode:
        """The [[q-1, 1, d]] code obtained by splitting off the logical leg."""
        mat = ops_to_matrix(self.generators, self.q)
        return split_logical(mat, self.logical_leg)


def _seed(name: str, stabilizers: Sequence[str], logical_x: str, logical_z: str) -> SeedTensor:
    rows = [s + "I" for s in stabilizers] + [logical_x + "X", logical_z + "Z"]
    ops = tuple(PauliOp.from_str(r) for r in rows)
    return SeedTensor(name, ops[0].n, ops)


_SEEDS = {
    "happy": _seed("happy", ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"], "XXXXX", "ZZZZZ"),
    "steane": _seed(
        "steane",
        ["XXIIIXX", "IXXXIIX", "IIIXXXX", "ZZIIIZZ", "IZZZIIZ", "IIIZZZZ"],
        "XXXXXXX",
        "ZZZZZZZ",
    ),
    "613": _seed("613", ["ZIZIII", "XZYYXI", "XXXXZI", "IZZXIX", "XYXYIZ"], "XZXZII", "XYYXII"),
    "scf": _seed("scf", ["XXIXI", "IIXXX", "ZIZZI", "IZIZZ"], "XIXII", "IIZIZ"),
}


def seed_library() -> dict[str, SeedTensor]:
    return dict(_SEEDS)


# --- tilings ---------------------------------------------------------------


@dataclass(frozen=True)
class InflationRule:
    """Geometry of a layered tiling.

    center_sides: planar legs of the central tile (q - 1).
    bulk_sides: planar legs of every other tile (q).
    vertex_degree: tiles meeting at each interior vertex.
    """

    center_sides: int
    bulk_sides: int
    vertex_degree: int


DEFAULT_RULES = {
    "happy": InflationRule(5, 6, 4),
    "scf": InflationRule(5, 6, 4),
    "613": InflationRule(6, 7, 3),
    "steane": InflationRule(7, 8, 3),
}


@dataclass(frozen=True)
class Tile:
    seed: str
    legs: tuple[int, ...]
    layer: int = 0


@dataclass(frozen=True)
class Tiling:
    seed: str
    layers: int
    tiles: tuple[Tile, ...]
    contractions: tuple[tuple[int, int], ...]
    boundary_legs: tuple[int, ...]
    logical_leg: int

    def __post_init__(self) -> None:
        validate_tiling(self)

    @property
    def n_legs(self) -> int:
        return sum(len(t.legs) for t in self.tiles)

    @cached_property
    def leg_owner(self) -> dict[int, tuple[int, int]]:
        """leg id -> (tile index, position within the tile)."""
        return {leg: (t, j) for t, tile in enumerate(self.tiles) for j, leg in enumerate(tile.legs)}

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "layers": self.layers,
            "tiles": [{"seed": t.seed, "legs": list(t.legs), "layer": t.layer} for t in self.tiles],
            "contractions": [list(c) for c in self.contractions],
            "boundary_legs": list(self.boundary_legs),
            "logical_leg": self.logical_leg,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> Tiling:
        return cls(
            seed=doc["seed"],
            layers=int(doc["layers"]),
            tiles=tuple(Tile(t["seed"], tuple(t["legs"]), int(t.get("layer", 0))) for t in doc["tiles"]),
            contractions=tuple((int(a), int(b)) for a, b in doc["contractions"]),
            boundary_legs=tuple(doc["boundary_legs"]),
            logical_leg=int(doc["logical_leg"]),
        )


def validate_tiling(tiling: Tiling) -> None:
    seen: dict[int, int] = {}
    for t, tile in enumerate(tiling.tiles):
        if tile.seed not in _SEEDS:
            raise TilingError(f"tile {t} uses unknown seed {tile.seed!r}")
        if len(tile.legs) != _SEEDS[tile.seed].q:
            raise TilingError(f"tile {t} has {len(tile.legs)} legs, seed {tile.seed!r} needs {_SEEDS[tile.seed].q}")
        for leg in tile.legs:
            if leg in seen:
                raise TilingError(f"leg {leg} appears in tiles {seen[leg]} and {t}")
            seen[leg] = t
    contracted: set[int] = set()
    for a, b in tiling.contractions:
        if a == b or a in contracted or b in contracted:
            raise TilingError(f"contraction ({a}, {b}) reuses a leg")
        contracted.update((a, b))
    groups = [set(tiling.boundary_legs), {tiling.logical_leg}, contracted]
    total = sum(len(g) for g in groups)
    if len(set(tiling.boundary_legs)) != len(tiling.boundary_legs):
        raise TilingError("duplicate boundary leg")
    union = set().union(*groups)
    if total != len(union) or union != set(seen):
        raise TilingError("boundary, logical and contracted legs must partition all legs")
    # connectivity of the tile graph
    parent = list(range(len(tiling.tiles)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in tiling.contractions:
        parent[find(seen[a])] = find(seen[b])
    if len({find(i) for i in range(len(tiling.tiles))}) != 1:
        raise TilingError("contraction graph is disconnected")


MAX_BOUNDARY_LEGS = 2048


def inflate(
    seed: SeedTensor | str,
    layers: int,
    rule: InflationRule | None = None,
    max_boundary: int = MAX_BOUNDARY_LEGS,
) -> Tiling:
    """Grow a tiling by edge inflation around a central tile.

    The boundary is a cyclic sequence of free legs; between neighbours sits a
    vertex touched by ``k`` placed tiles.  Each layer gives every free leg a new
    tile.  Consecutive legs whose shared vertex is one tile short of full go to
    the same new tile (a vertex-child, 2 inward legs); otherwise a leg gets its
    own edge-child.  New tiles that meet at a vertex two short of full share an
    edge.  Tile legs are listed counterclockwise, inward legs first.
    """
    if isinstance(seed, str):
        seed = _SEEDS[seed]
    if layers < 0:
        raise ValueError("layers must be >= 0")
    rule = rule or DEFAULT_RULES[seed.name]
    if rule.bulk_sides != seed.q or rule.center_sides != seed.q - 1:
        raise TilingError(f"rule {rule} does not match the {seed.q}-leg seed {seed.name!r}")
    predicted = boundary_size(rule, layers)
    if predicted > max_boundary:
        raise TilingError(
            f"{layers} layers would give {predicted} boundary legs, above the budget of {max_boundary}; "
            "raise max_boundary if the memory is available"
        )

    s0, s, deg = rule.center_sides, rule.bulk_sides, rule.vertex_degree
    tiles = [Tile(seed.name, tuple(range(s0 + 1)), 0)]
    logical_leg = s0
    next_leg = s0 + 1
    contractions: list[tuple[int, int]] = []
    boundary = list(range(s0))
    vertex_k = [1] * s0  # vertex_k[i] sits between boundary[i] and boundary[i+1]

    for layer in range(1, layers + 1):
        e = len(boundary)
        # rotate so a group never wraps past the end of the list
        start = next((i + 1) % e for i in range(e) if vertex_k[i] != deg - 1)
        boundary = boundary[start:] + boundary[:start]
        vertex_k = vertex_k[start:] + vertex_k[:start]
        groups: list[list[int]] = [[]]
        for i in range(e):
            groups[-1].append(boundary[i])
            if i < e - 1 and vertex_k[i] != deg - 1:
                groups.append([])
        # junction after group g is the vertex after its last leg
        ends = np.cumsum([len(g) for g in groups]) - 1
        junction_k = [vertex_k[i] for i in ends]
        if any(k >= deg for k in junction_k):
            raise TilingError("vertex over-filled; inflation rule is inconsistent")
        shared = [k == deg - 2 for k in junction_k]

        new_tiles = []
        for g, legs_in in enumerate(groups):
            left = shared[g - 1]
            right = shared[g]
            n_out = s - len(legs_in) - left - right
            if n_out < 1:
                raise TilingError(f"layer {layer}: a tile has no outward legs; the rule is not hyperbolic")
            inward = list(range(next_leg, next_leg + len(legs_in)))
            next_leg += len(legs_in)
            contractions += list(zip(legs_in, inward))
            left_leg = None
            if left:
                left_leg = next_leg
                next_leg += 1
            out = list(range(next_leg, next_leg + n_out))
            next_leg += n_out
            right_leg = None
            if right:
                right_leg = next_leg
                next_leg += 1
            order = inward[::-1] + ([left_leg] if left else []) + out + ([right_leg] if right else [])
            new_tiles.append((order, left_leg, out, right_leg))

        new_boundary: list[int] = []
        new_k: list[int] = []
        for g, (order, left_leg, out, right_leg) in enumerate(new_tiles):
            tiles.append(Tile(seed.name, tuple(order), layer))
            new_boundary += out
            new_k += [1] * (len(out) - 1)
            if shared[g]:
                nxt_left = new_tiles[(g + 1) % len(new_tiles)][1]
                contractions.append((right_leg, nxt_left))
                new_k.append(2)
            else:
                new_k.append(junction_k[g] + 2)
        boundary, vertex_k = new_boundary, new_k

    return Tiling(seed.name, layers, tuple(tiles), tuple(contractions), tuple(boundary), logical_leg)


def boundary_size(rule: InflationRule, layers: int) -> int:
    """Boundary leg count after ``layers`` of inflation, from vertex-occupancy counts only."""
    s, deg = rule.bulk_sides, rule.vertex_degree
    edges = rule.center_sides
    hist = {1: rule.center_sides}  # occupancy k -> number of boundary vertices
    for _ in range(layers):
        full = hist.get(deg - 1, 0)
        touching = hist.get(deg - 2, 0)
        n_tiles = edges - full
        new_edges = s * n_tiles - edges - 2 * touching
        new_hist = {1: new_edges - n_tiles}
        for k, c in hist.items():
            if k <= deg - 3:
                new_hist[k + 2] = new_hist.get(k + 2, 0) + c
        if touching:
            new_hist[2] = new_hist.get(2, 0) + touching
        edges, hist = new_edges, new_hist
    return edges


# --- tracing ---------------------------------------------------------------


def _trace_matrix(mat: np.ndarray, a: int, b: int) -> tuple[np.ndarray, int]:
    m = mat.shape[1] // 2
    rows = mat.copy()
    cons = np.stack([rows[:, a] ^ rows[:, b], rows[:, m + a] ^ rows[:, m + b]], axis=1)
    keep = np.ones(len(rows), dtype=bool)
    for col in (0, 1):
        hits = np.flatnonzero(cons[:, col] & keep)
        if hits.size == 0:
            continue
        piv, rest = hits[0], hits[1:]
        rows[rest] ^= rows[piv]
        cons[rest] ^= cons[piv]
        keep[piv] = False
    rows = np.delete(rows[keep], [a, b, m + a, m + b], axis=1)
    reduced, pivots = row_reduce(rows) if len(rows) else (rows, [])
    return reduced, len(rows) - len(pivots)


def self_trace(generators: Sequence[PauliOp], a: int, b: int) -> tuple[list[PauliOp], int]:
    """Contract legs ``a`` and ``b`` of a stabilizer group.

    Returns a basis on the remaining legs (original order) and the rank of the
    elements that act only on the two traced legs, which the contraction absorbs.
    """
    m = generators[0].n
    if a == b or not (0 <= a < m and 0 <= b < m):
        raise IndexError(f"cannot trace legs {a} and {b} of a {m}-leg tensor")
    out, kernel = _trace_matrix(ops_to_matrix(generators, m), a, b)
    if m == 2:
        return [], kernel
    return matrix_to_ops(out), kernel


def split_logical(mat: np.ndarray, logical_col: int) -> StabilizerCode:
    """Split a pure-state group on ``m`` legs into a k=1 code on the other legs."""
    m = mat.shape[1] // 2
    order = [logical_col, m + logical_col] + [c for c in range(2 * m) if c not in (logical_col, m + logical_col)]
    reduced, pivots = row_reduce(mat, col_order=order)
    if len(pivots) != m:
        raise ConstructionError(f"group has rank {len(pivots)} on {m} legs; not a stabilizer state")
    if pivots[:2] != [logical_col, m + logical_col]:
        raise ConstructionError("logical leg is not fully supported; the tiling loses the logical qubit")
    keep = [c for c in range(m) if c != logical_col]
    cols = keep + [m + c for c in keep]
    body = reduced[:, cols]
    lx, lz = matrix_to_ops(body[:2])
    stabs = matrix_to_ops(body[2:])
    return StabilizerCode.build(stabs, [lx], [lz])


# --- building codes --------------------------------------------------------


@dataclass(frozen=True)
class HolographicCode:
    code: StabilizerCode
    tiling: Tiling
    multiplicity_rank: int = field(default=0)


def _network_matrix(tiling: Tiling) -> np.ndarray:
    n_legs = tiling.n_legs
    ids = sorted(tiling.leg_owner)
    col = {leg: i for i, leg in enumerate(ids)}
    blocks = []
    for tile in tiling.tiles:
        seed = ops_to_matrix(_SEEDS[tile.seed].generators)
        q = len(tile.legs)
        block = np.zeros((q, 2 * n_legs), dtype=np.uint8)
        tgt = [col[leg] for leg in tile.legs]
        block[:, tgt] = seed[:, :q]
        block[:, [n_legs + c for c in tgt]] = seed[:, q:]
        blocks.append(block)
    return np.vstack(blocks), col


def build_code(tiling: Tiling, method: str = "kernel") -> HolographicCode:
    """Contract every tile of ``tiling`` into a code on its boundary legs.

    ``method="kernel"`` imposes all leg-matching constraints in one GF(2)
    elimination; ``method="sequential"`` applies :func:`self_trace` pair by
    pair.  Both yield the same group.
    """
    mat, col = _network_matrix(tiling)
    n_legs = len(col)
    if method == "sequential":
        alive = list(range(n_legs))
        multiplicity = 0
        for a, b in tiling.contractions:
            ia, ib = alive.index(col[a]), alive.index(col[b])
            mat, kernel = _trace_matrix(mat, ia, ib)
            multiplicity += kernel
            alive = [c for c in alive if c not in (col[a], col[b])]
        open_cols = [alive.index(col[leg]) for leg in tiling.boundary_legs] + [alive.index(col[tiling.logical_leg])]
        width = len(alive)
    elif method == "kernel":
        pairs = np.array([[col[a], col[b]] for a, b in tiling.contractions], dtype=np.intp).reshape(-1, 2)
        cons = np.concatenate(
            [mat[:, pairs[:, 0]] ^ mat[:, pairs[:, 1]], mat[:, n_legs + pairs[:, 0]] ^ mat[:, n_legs + pairs[:, 1]]],
            axis=1,
        )
        mat = mul_gf2(left_kernel(cons), mat)
        open_cols = [col[leg] for leg in tiling.boundary_legs] + [col[tiling.logical_leg]]
        width = n_legs
        multiplicity = None
    else:
        raise ValueError(f"unknown method {method!r}")
    cols = open_cols + [width + c for c in open_cols]
    restricted = mat[:, cols]
    rank = gf2_rank(restricted)
    if multiplicity is None:
        multiplicity = mat.shape[0] - rank
    code = split_logical(restricted, len(open_cols) - 1)
    return HolographicCode(code, tiling, multiplicity)


# --- persistence -----------------------------------------------------------


def code_to_dict(hcode: HolographicCode) -> dict:
    c = hcode.code
    doc = {"format": "holographic-code", "version": FORMAT_VERSION}
    doc.update(hcode.tiling.to_dict())
    doc["multiplicity_rank"] = hcode.multiplicity_rank
    doc["code"] = {
        "n": c.n,
        "k": c.k,
        "stabilizers": [str(s) for s in c.stabilizers],
        "logical_x": [str(s) for s in c.logical_x],
        "logical_z": [str(s) for s in c.logical_z],
        "destabilizers": [str(s) for s in c.destabilizers],
    }
    return doc


def code_from_dict(doc: dict) -> HolographicCode:
    tiling = Tiling.from_dict(doc)
    if "code" not in doc:
        return build_code(tiling)
    c = doc["code"]
    ops = lambda rows: tuple(PauliOp.from_str(r) for r in rows)  # noqa: E731
    code = StabilizerCode(
        int(c["n"]), int(c["k"]), ops(c["stabilizers"]), ops(c["logical_x"]), ops(c["logical_z"]), ops(c["destabilizers"])
    )
    if code.n != len(tiling.boundary_legs):
        raise ConstructionError("code size does not match the tiling boundary")
    return HolographicCode(code, tiling, int(doc.get("multiplicity_rank", 0)))


def save_code(hcode: HolographicCode, path: str | Path) -> None:
    Path(path).write_text(json.dumps(code_to_dict(hcode), indent=1) + "\n", encoding="utf-8")


def load_code(path: str | Path) -> HolographicCode:
    return code_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
