"""Phaseless Pauli operators, stabilizer codes and GF(2) symplectic algebra.

Operators are stored as a pair of packed integers (X part, Z part).  Qubit 0
is the most significant bit, matching the text form where the first
character is qubit 0.  Phases are never tracked.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

PAULI_CHARS = "IXYZ"

# Pauli class index used by the decoder: I=0, X=1, Y=2, Z=3.
X_OF_INDEX = np.array([0, 1, 1, 0], dtype=np.uint8)
Z_OF_INDEX = np.array([0, 0, 1, 1], dtype=np.uint8)
INDEX_OF_XZ = np.array([[0, 3], [1, 2]], dtype=np.uint8)  # [x][z]
# phaseless product table on class indices
PAULI_MUL = INDEX_OF_XZ[X_OF_INDEX[:, None] ^ X_OF_INDEX[None, :], Z_OF_INDEX[:, None] ^ Z_OF_INDEX[None, :]]


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


@dataclass(frozen=True)
class PauliOp:
    n: int
    x: int
    z: int

    @classmethod
    def identity(cls, n: int) -> PauliOp:
        return cls(n, 0, 0)

    @classmethod
    def from_str(cls, text: str) -> PauliOp:
        x = z = 0
        for ch in text.strip().upper():
            if ch not in PAULI_CHARS:
                raise ValueError(f"invalid Pauli character {ch!r} in {text!r}")
            x = (x << 1) | (ch in "XY")
            z = (z << 1) | (ch in "YZ")
        return cls(len(text.strip()), x, z)

    @classmethod
    def from_bits(cls, x_bits: Sequence[int], z_bits: Sequence[int]) -> PauliOp:
        if len(x_bits) != len(z_bits):
            raise DimensionError("x and z parts differ in length")
        x = z = 0
        for xb, zb in zip(x_bits, z_bits):
            x = (x << 1) | (int(xb) & 1)
            z = (z << 1) | (int(zb) & 1)
        return cls(len(x_bits), x, z)

    @classmethod
    def from_symplectic(cls, vec: np.ndarray) -> PauliOp:
        """Inverse of :meth:`symplectic`: a length-2n 0/1 vector ``[x | z]``."""
        n = len(vec) // 2
        return cls.from_bits(vec[:n], vec[n:])

    @classmethod
    def from_indices(cls, idx: Sequence[int]) -> PauliOp:
        idx = np.asarray(idx, dtype=np.intp)
        return cls.from_bits(X_OF_INDEX[idx], Z_OF_INDEX[idx])

    def __str__(self) -> str:
        return "".join(self[i] for i in range(self.n))

    def __getitem__(self, i: int) -> str:
        shift = self.n - 1 - i
        return PAULI_CHARS[INDEX_OF_XZ[(self.x >> shift) & 1, (self.z >> shift) & 1]]

    def __mul__(self, other: PauliOp) -> PauliOp:
        return multiply(self, other)

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def x_bits(self) -> np.ndarray:
        return _int_to_bits(self.x, self.n)

    @property
    def z_bits(self) -> np.ndarray:
        return _int_to_bits(self.z, self.n)

    def symplectic(self) -> np.ndarray:
        return np.concatenate([self.x_bits, self.z_bits])

    def indices(self) -> np.ndarray:
        """Per-qubit class index (I=0, X=1, Y=2, Z=3)."""
        return INDEX_OF_XZ[self.x_bits, self.z_bits]


def _int_to_bits(v: int, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    raw = np.frombuffer(v.to_bytes((n + 7) // 8, "big"), dtype=np.uint8)
    return np.unpackbits(raw)[-n:]


def _check_dims(a: PauliOp, b: PauliOp) -> None:
    if a.n != b.n:
        raise DimensionError(f"qubit count mismatch: {a.n} != {b.n}")


def symplectic_product(a: PauliOp, b: PauliOp) -> int:
    """0 if ``a`` and ``b`` commute, 1 otherwise."""
    _check_dims(a, b)
    return ((a.x & b.z).bit_count() + (a.z & b.x).bit_count()) & 1


def multiply(a: PauliOp, b: PauliOp) -> PauliOp:
    _check_dims(a, b)
    return PauliOp(a.n, a.x ^ b.x, a.z ^ b.z)


def ops_to_matrix(ops: Sequence[PauliOp], n: int | None = None) -> np.ndarray:
    if n is None:
        n = ops[0].n
    mat = np.zeros((len(ops), 2 * n), dtype=np.uint8)
    for i, op in enumerate(ops):
        if op.n != n:
            raise DimensionError(f"row {i} acts on {op.n} qubits, expected {n}")
        mat[i] = op.symplectic()
    return mat


def matrix_to_ops(mat: np.ndarray) -> list[PauliOp]:
    return [PauliOp.from_symplectic(row) for row in mat]


# --- GF(2) matrices -------------------------------------------------------


def _eliminate(mat: np.ndarray, col_order: Iterable[int]) -> tuple[np.ndarray, list[int]]:
    """Gauss-Jordan over GF(2) on the listed columns; pivot rows come first."""
    m = (np.asarray(mat, dtype=np.uint8) & 1).copy()
    rows = m.shape[0]
    pivots: list[int] = []
    r = 0
    for c in col_order:
        if r == rows:
            break
        hits = np.flatnonzero(m[r:, c]) + r
        if hits.size == 0:
            continue
        p = hits[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        others = np.flatnonzero(m[:, c])
        others = others[others != r]
        if others.size:
            m[others] ^= m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def row_reduce(mat: np.ndarray, col_order: Sequence[int] | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2), zero rows dropped.

    ``col_order`` (a permutation of all columns) lets callers force pivots
    onto particular columns first.
    """
    mat = np.asarray(mat, dtype=np.uint8)
    order = range(mat.shape[1]) if col_order is None else col_order
    m, pivots = _eliminate(mat, order)
    return m[: len(pivots)], pivots


def gf2_rank(mat: np.ndarray) -> int:
    if mat.size == 0:
        return 0
    return len(_eliminate(mat, range(mat.shape[1]))[1])


def left_kernel(mat: np.ndarray) -> np.ndarray:
    """Basis (as rows) of ``{u : u @ mat = 0 mod 2}``."""
    rows, cols = mat.shape
    aug = np.concatenate([np.asarray(mat, dtype=np.uint8) & 1, np.eye(rows, dtype=np.uint8)], axis=1)
    m, pivots = _eliminate(aug, range(cols))
    return m[len(pivots) :, cols:]


def solve_gf2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """One solution ``x`` (columns) of ``a @ x = b`` over GF(2).

    Raises ``ValueError`` if the system is inconsistent.
    """
    a = np.asarray(a, dtype=np.uint8) & 1
    b = np.asarray(b, dtype=np.uint8) & 1
    cols = a.shape[1]
    m, pivots = _eliminate(np.concatenate([a, b], axis=1), range(cols))
    if m[len(pivots) :, cols:].any():
        raise ValueError("inconsistent GF(2) system")
    x = np.zeros((cols, b.shape[1]), dtype=np.uint8)
    x[pivots] = m[: len(pivots), cols:]
    return x


def mul_gf2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product mod 2 through float BLAS (exact below 2**24 terms)."""
    return (np.asarray(a, dtype=np.float32) @ np.asarray(b, dtype=np.float32)).astype(np.int64).astype(np.uint8) & 1


def symplectic_form(mat: np.ndarray) -> np.ndarray:
    """Swap the X and Z halves so that ``u @ symplectic_form(v).T`` is the commutator."""
    n = mat.shape[-1] // 2
    return np.concatenate([mat[..., n:], mat[..., :n]], axis=-1)


# --- operations on operator lists ------------------------------------------


def rref(rows: Sequence[PauliOp]) -> tuple[list[PauliOp], int]:
    if not rows:
        return [], 0
    reduced, pivots = row_reduce(ops_to_matrix(rows))
    return matrix_to_ops(reduced), len(pivots)


def contains(group_basis: Sequence[PauliOp], op: PauliOp) -> bool:
    """Membership of ``op`` in the GF(2) span of ``group_basis``."""
    if op.is_identity:
        return True
    if not group_basis:
        return False
    for g in group_basis:
        _check_dims(g, op)
    base = ops_to_matrix(group_basis)
    return gf2_rank(np.vstack([base, op.symplectic()])) == gf2_rank(base)


def span(generators: Sequence[PauliOp]) -> Iterable[PauliOp]:
    """Every element of the group generated by ``generators`` (2**len elements)."""
    n = generators[0].n
    for mask in range(1 << len(generators)):
        x = z = 0
        for j, g in enumerate(generators):
            if mask >> j & 1:
                x ^= g.x
                z ^= g.z
        yield PauliOp(n, x, z)


# --- stabilizer codes -----------------------------------------------------


@dataclass(frozen=True)
class StabilizerCode:
    n: int
    k: int
    stabilizers: tuple[PauliOp, ...]
    logical_x: tuple[PauliOp, ...]
    logical_z: tuple[PauliOp, ...]
    destabilizers: tuple[PauliOp, ...]

    @classmethod
    def build(
        cls,
        stabilizers: Sequence[PauliOp],
        logical_x: Sequence[PauliOp] = (),
        logical_z: Sequence[PauliOp] = (),
    ) -> StabilizerCode:
        """Assemble a code, solving for destabilizers and checking every invariant."""
        n = stabilizers[0].n if stabilizers else logical_x[0].n
        r = len(stabilizers)
        k = len(logical_x)
        if len(logical_z) != k:
            raise ValueError("logical_x and logical_z must have equal length")
        if r + k != n:
            raise ValueError(f"{r} stabilizers and {k} logicals do not fit {n} qubits")
        rows = ops_to_matrix([*stabilizers, *logical_x, *logical_z], n)
        # destabilizer i: commutes with everything except stabilizer i
        target = np.zeros((r + 2 * k, r), dtype=np.uint8)
        target[:r, :r] = np.eye(r, dtype=np.uint8)
        destab = solve_gf2(symplectic_form(rows), target).T
        code = cls(n, k, tuple(stabilizers), tuple(logical_x), tuple(logical_z), tuple(matrix_to_ops(destab)))
        check_code(code)
        return code

    @cached_property
    def stabilizer_matrix(self) -> np.ndarray:
        return ops_to_matrix(self.stabilizers, self.n)

    @cached_property
    def destabilizer_matrix(self) -> np.ndarray:
        return ops_to_matrix(self.destabilizers, self.n)

    @cached_property
    def logical_matrix(self) -> np.ndarray:
        """Rows: logical Z then logical X, so commutators read off the (X, Z) class bits."""
        return ops_to_matrix([*self.logical_z, *self.logical_x], self.n)

    # batched helpers on 0/1 arrays of shape (..., 2n)

    def syndromes(self, errors: np.ndarray) -> np.ndarray:
        return mul_gf2(errors, symplectic_form(self.stabilizer_matrix).T)

    def pure_errors(self, syndromes: np.ndarray) -> np.ndarray:
        return mul_gf2(syndromes, self.destabilizer_matrix)

    def logical_classes(self, residuals: np.ndarray) -> np.ndarray:
        """Class index (I=0, X=1, Y=2, Z=3) of zero-syndrome residuals (k == 1)."""
        bits = mul_gf2(residuals, symplectic_form(self.logical_matrix).T)
        return INDEX_OF_XZ[bits[..., 0], bits[..., 1]]


def check_code(code: StabilizerCode) -> None:
    """Raise ``ValueError`` unless every stabilizer-code invariant holds."""
    s = code.stabilizers
    for i, j in itertools.combinations(range(len(s)), 2):
        if symplectic_product(s[i], s[j]):
            raise ValueError(f"stabilizers {i} and {j} anticommute")
    for j, (lx, lz) in enumerate(zip(code.logical_x, code.logical_z)):
        if not symplectic_product(lx, lz):
            raise ValueError(f"logical pair {j} commutes")
        for i, g in enumerate(s):
            if symplectic_product(g, lx) or symplectic_product(g, lz):
                raise ValueError(f"logical {j} anticommutes with stabilizer {i}")
    for a, b in itertools.combinations(range(code.k), 2):
        pairs = [
            (code.logical_x[a], code.logical_x[b]),
            (code.logical_x[a], code.logical_z[b]),
            (code.logical_z[a], code.logical_x[b]),
            (code.logical_z[a], code.logical_z[b]),
        ]
        if any(symplectic_product(u, v) for u, v in pairs):
            raise ValueError(f"logicals {a} and {b} do not commute")
    logicals = [*code.logical_x, *code.logical_z]
    for i, d in enumerate(code.destabilizers):
        for j, g in enumerate(s):
            if symplectic_product(d, g) != (i == j):
                raise ValueError(f"destabilizer {i} has wrong commutation with stabilizer {j}")
        if any(symplectic_product(d, lo) for lo in logicals):
            raise ValueError(f"destabilizer {i} anticommutes with a logical")
    if gf2_rank(ops_to_matrix([*s, *logicals], code.n)) != len(s) + 2 * code.k:
        raise ValueError("generator set is not full rank")


def syndrome(code: StabilizerCode, e: PauliOp) -> tuple[int, ...]:
    _check_dims(code.stabilizers[0], e)
    return tuple(symplectic_product(g, e) for g in code.stabilizers)


def pure_error(code: StabilizerCode, s: Sequence[int]) -> PauliOp:
    if len(s) != len(code.destabilizers):
        raise DimensionError(f"syndrome has {len(s)} bits, code has {len(code.destabilizers)} stabilizers")
    f = PauliOp.identity(code.n)
    for bit, d in zip(s, code.destabilizers):
        if bit:
            f = f * d
    return f


def logical_class(code: StabilizerCode, r: PauliOp) -> str:
    if code.k != 1:
        raise ValueError("logical_class needs exactly one logical qubit")
    if any(syndrome(code, r)):
        raise ValueError("residual has a nonzero syndrome")
    bx = symplectic_product(r, code.logical_z[0])
    bz = symplectic_product(r, code.logical_x[0])
    return PAULI_CHARS[INDEX_OF_XZ[bx, bz]]


MAX_DISTANCE_QUBITS = 12


def min_distance(code: StabilizerCode, max_weight: int | None = None) -> int | None:
    """Minimum weight of a nontrivial logical operator, by weight-ascending search.

    With ``max_weight`` the search stops there and returns ``None`` if no
    logical that light exists; this bounded form has no qubit cap.
    """
    n = code.n
    if max_weight is None and n > MAX_DISTANCE_QUBITS:
        raise ValueError(f"min_distance search is capped at {MAX_DISTANCE_QUBITS} qubits (got {n})")
    for w in range(1, min(n, max_weight or n) + 1):
        supports = np.array(list(itertools.combinations(range(n), w)), dtype=np.intp)
        kinds = np.array(list(itertools.product((1, 2, 3), repeat=w)), dtype=np.intp)
        idx = np.zeros((len(supports), len(kinds), n), dtype=np.intp)
        rows = np.arange(len(supports))[:, None, None]
        cols = np.arange(len(kinds))[None, :, None]
        idx[rows, cols, supports[:, None, :]] = kinds[None, :, :]
        idx = idx.reshape(-1, n)
        errs = np.concatenate([X_OF_INDEX[idx], Z_OF_INDEX[idx]], axis=1)
        silent = ~code.syndromes(errs).any(axis=1)
        if silent.any() and (code.logical_classes(errs[silent]) != 0).any():
            return w
    if max_weight is not None:
        return None
    raise ValueError("code has no nontrivial logical operator")
