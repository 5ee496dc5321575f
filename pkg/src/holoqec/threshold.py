"""Monte Carlo logical error rates, threshold crossings and bias sweeps."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import binomtest

from .decoder import DEFAULT_FRONTIER_CAP, TensorNetworkDecoder, choose_class
from .hashing import zero_rate_point
from .lego import HolographicCode
from .noise import BiasVector, ChannelSpec, sample_errors, single_qubit_prior
from .pauli import X_OF_INDEX, Z_OF_INDEX, StabilizerCode

log = logging.getLogger(__name__)

RECORD_SCHEMA = 1
SHOT_CHUNK = 1000
MAX_EXACT_QUBITS = 12
MAX_EXACT_CHECKS = 20
SIGMA_FLOOR = 1e-9

SUMMARY_COLUMNS = ("code", "layers_used", "r_x", "r_y", "r_z", "eta", "axis", "p_th", "sigma", "hashing_p_star")


# --- single-point estimation -----------------------------------------------


def _count_chunk(decoder: TensorNetworkDecoder, spec: ChannelSpec, seed: int, start: int, stop: int) -> int:
    code = decoder.code
    e = sample_errors(code.n, spec, seed, start, stop)
    errors = np.concatenate([X_OF_INDEX[e], Z_OF_INDEX[e]], axis=1)
    s = code.syndromes(errors)
    weights, _ = decoder.class_weights(s, spec)
    chosen = choose_class(weights)
    actual = code.logical_classes(errors ^ code.pure_errors(s))
    return int(np.count_nonzero(chosen != actual))


_WORKER_DECODER: TensorNetworkDecoder | None = None


def _init_worker(hcode: HolographicCode, frontier_cap: int) -> None:
    global _WORKER_DECODER
    _WORKER_DECODER = TensorNetworkDecoder(hcode, frontier_cap)


def _worker_count(args: tuple) -> int:
    return _count_chunk(_WORKER_DECODER, *args)


def count_failures(
    hcode: HolographicCode,
    spec: ChannelSpec,
    shots: int,
    seed: int,
    threads: int = 1,
    decoder: TensorNetworkDecoder | None = None,
    frontier_cap: int = DEFAULT_FRONTIER_CAP,
) -> int:
    """Number of decoding failures in ``shots`` sampled errors.

    Shot ``i`` always draws from the stream keyed on ``(seed, i)`` and shots
    are chunked independently of ``threads``, so the count is the same for any
    worker count.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    chunks = [(spec, seed, lo, min(lo + SHOT_CHUNK, shots)) for lo in range(0, shots, SHOT_CHUNK)]
    if threads <= 1 or len(chunks) == 1:
        decoder = decoder or TensorNetworkDecoder(hcode, frontier_cap)
        return sum(_count_chunk(decoder, *c) for c in chunks)
    with ProcessPoolExecutor(
        max_workers=min(threads, len(chunks)), initializer=_init_worker, initargs=(hcode, frontier_cap)
    ) as pool:
        return sum(pool.map(_worker_count, chunks))


def wilson_interval(failures: int, shots: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(failures, shots).proportion_ci(confidence_level=confidence, method="wilson")
    return (float(ci.low), float(ci.high))


def logical_error_rate(
    hcode: HolographicCode,
    spec: ChannelSpec,
    shots: int,
    seed: int,
    threads: int = 1,
    decoder: TensorNetworkDecoder | None = None,
    frontier_cap: int = DEFAULT_FRONTIER_CAP,
) -> tuple[float, tuple[float, float]]:
    """Failure fraction of ML decoding and its Wilson 95% interval."""
    failures = count_failures(hcode, spec, shots, seed, threads, decoder, frontier_cap)
    return failures / shots, wilson_interval(failures, shots)


def exact_failure_probability(code: StabilizerCode, spec: ChannelSpec) -> float:
    """Failure probability of ML decoding, summed over every error pattern.

    Each error is binned by (syndrome, logical class of error times pure
    error); the decoder keeps the heaviest class per syndrome, ties going to
    the lowest class index, and everything else is failure mass.
    """
    n, r = code.n, len(code.stabilizers)
    if n > MAX_EXACT_QUBITS or r > MAX_EXACT_CHECKS:
        raise ValueError(f"exact enumeration refused for n={n}, n-k={r} (caps {MAX_EXACT_QUBITS}, {MAX_EXACT_CHECKS})")
    prior = single_qubit_prior(spec)
    masses = np.zeros((1 << r) * 4)
    digits = 4 ** np.arange(n - 1, -1, -1)
    block = 1 << 16
    for lo in range(0, 4**n, block):
        idx = np.arange(lo, min(lo + block, 4**n), dtype=np.int64)
        e = (idx[:, None] // digits) % 4
        prob = np.prod(prior[e], axis=1)
        errors = np.concatenate([X_OF_INDEX[e], Z_OF_INDEX[e]], axis=1)
        s = code.syndromes(errors)
        cls = code.logical_classes(errors ^ code.pure_errors(s))
        s_idx = s.astype(np.int64) @ (1 << np.arange(r - 1, -1, -1, dtype=np.int64)) if r else np.zeros(len(idx), np.int64)
        masses += np.bincount(s_idx * 4 + cls, weights=prob, minlength=masses.size)
    masses = masses.reshape(-1, 4)
    return float(max(0.0, 1.0 - masses.max(axis=1).sum()))


# --- threshold extraction --------------------------------------------------


@dataclass(frozen=True)
class RateCurve:
    """Logical error rates of one code size over a grid of physical error rates."""

    layers: int
    ps: tuple[float, ...]
    rates: tuple[float, ...]
    shots: tuple[int, ...]

    def __post_init__(self) -> None:
        if not (len(self.ps) == len(self.rates) == len(self.shots)):
            raise ValueError("ps, rates and shots must have equal length")
        if any(not 0.0 <= r <= 1.0 for r in self.rates):
            raise ValueError("rates must lie in [0, 1]")

    @classmethod
    def from_counts(cls, layers: int, ps: Sequence[float], failures: Sequence[int], shots: int) -> RateCurve:
        return cls(layers, tuple(ps), tuple(f / shots for f in failures), (shots,) * len(ps))

    @property
    def variances(self) -> np.ndarray:
        # binomial variance, with the rate nudged off 0/1 so empty cells still carry error
        shots = np.asarray(self.shots, float)
        r = np.clip(np.asarray(self.rates), 0.5 / shots, 1 - 0.5 / shots)
        return r * (1 - r) / shots


@dataclass(frozen=True)
class Crossing:
    lower: int
    upper: int
    p: float
    sigma: float


@dataclass(frozen=True)
class ThresholdEstimate:
    """Mean of pairwise layer crossings; ``p_th`` is NaN when nothing crossed."""

    p_th: float
    sigma: float
    crossings: tuple[Crossing, ...] = ()
    missing: tuple[tuple[int, int], ...] = ()

    @property
    def found(self) -> bool:
        return bool(self.crossings)

    def to_dict(self) -> dict:
        return {
            "p_th": self.p_th,
            "sigma": self.sigma,
            "crossings": [asdict(c) for c in self.crossings],
            "missing": [list(m) for m in self.missing],
        }


def _pair_crossing(small: RateCurve, large: RateCurve) -> Crossing | None:
    common = sorted(set(small.ps) & set(large.ps))
    if len(common) < 2:
        return None
    i_s = [small.ps.index(p) for p in common]
    i_l = [large.ps.index(p) for p in common]
    d = np.asarray(small.rates)[i_s] - np.asarray(large.rates)[i_l]
    var = small.variances[i_s] + large.variances[i_l]
    for i in range(len(common) - 1):
        # the larger code stops winning between these grid points
        if d[i] > 0 and d[i + 1] <= 0:
            p0, p1 = common[i], common[i + 1]
            gap = d[i] - d[i + 1]
            p = p0 + (p1 - p0) * d[i] / gap
            dp_d0 = (p1 - p0) * -d[i + 1] / gap**2
            dp_d1 = (p1 - p0) * d[i] / gap**2
            sigma = math.sqrt(dp_d0**2 * var[i] + dp_d1**2 * var[i + 1])
            return Crossing(small.layers, large.layers, float(p), float(sigma))
    return None


def estimate_threshold(curves: Iterable[RateCurve]) -> ThresholdEstimate:
    """Threshold from linear-interpolated crossings of consecutive code sizes.

    ``sigma`` combines the spread of the pairwise crossings with their
    propagated binomial errors.
    """
    curves = sorted(curves, key=lambda c: c.layers)
    if len(curves) < 2:
        raise ValueError("need curves for at least two code sizes")
    found, missing = [], []
    for small, large in zip(curves, curves[1:]):
        c = _pair_crossing(small, large)
        if c is None:
            missing.append((small.layers, large.layers))
        else:
            found.append(c)
    if not found:
        return ThresholdEstimate(math.nan, math.nan, (), tuple(missing))
    ps = np.array([c.p for c in found])
    stat = math.sqrt(sum(c.sigma**2 for c in found)) / len(found)
    spread = float(ps.std(ddof=1)) if len(found) > 1 else 0.0
    sigma = max(math.hypot(spread, stat), SIGMA_FLOOR)
    return ThresholdEstimate(float(ps.mean()), sigma, tuple(found), tuple(missing))


# --- run records and sweeps ------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    code: str
    layers: int
    bias: tuple[float, float, float]
    p: float
    shots: int
    failures: int
    seed: int
    wall_time: float = field(default=0.0, compare=False)

    def __post_init__(self) -> None:
        if not 0 <= self.failures <= self.shots:
            raise ValueError("failures must lie in [0, shots]")

    @property
    def key(self) -> tuple:
        return (self.code, self.layers, tuple(self.bias), self.p, self.shots, self.seed)

    def to_json(self) -> str:
        """One JSON line; wall time is left out so result files are reproducible."""
        doc = {
            "schema": RECORD_SCHEMA,
            "code": self.code,
            "layers": self.layers,
            "bias": list(self.bias),
            "p": self.p,
            "shots": self.shots,
            "failures": self.failures,
            "seed": self.seed,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> RunRecord:
        doc = json.loads(line)
        if doc.get("schema") != RECORD_SCHEMA:
            raise ValueError(f"unsupported record schema {doc.get('schema')!r}")
        return cls(
            doc["code"], int(doc["layers"]), tuple(doc["bias"]), float(doc["p"]), int(doc["shots"]),
            int(doc["failures"]), int(doc["seed"]),
        )


def load_records(path: Path) -> list[RunRecord]:
    """Records already in ``path``; a torn final line from an interrupted run is dropped."""
    if not path.exists():
        return []
    raw = path.read_bytes()
    cut = raw.rfind(b"\n") + 1
    if cut != len(raw):
        with open(path, "r+b") as fh:
            fh.truncate(cut)
    return [RunRecord.from_json(line) for line in raw[:cut].decode("utf-8").splitlines() if line.strip()]


def hashing_centered_grid(bias: BiasVector, points: int = 9, span: float = 0.3) -> tuple[float, ...]:
    """``points`` rates spread over p* (1 - span) .. p* (1 + span), rounded to 1e-6."""
    center = zero_rate_point(bias)
    grid = center * (1 + np.linspace(-span, span, points))
    return tuple(float(round(min(max(p, 1e-6), 1.0), 6)) for p in grid)


@dataclass(frozen=True)
class BiasPoint:
    bias: BiasVector
    eta: float = math.nan
    axis: str = ""


@dataclass(frozen=True)
class SweepRow:
    code: str
    layers: tuple[int, ...]
    point: BiasPoint
    estimate: ThresholdEstimate
    hashing_p_star: float

    def as_csv_row(self) -> list[str]:
        b = self.point.bias
        return [
            self.code,
            "-".join(str(L) for L in self.layers),
            _fmt(b.r_x),
            _fmt(b.r_y),
            _fmt(b.r_z),
            _fmt(self.point.eta),
            self.point.axis,
            _fmt(self.estimate.p_th),
            _fmt(self.estimate.sigma),
            _fmt(self.hashing_p_star),
        ]


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return format(x, ".10g")


def run_curves(
    family: str,
    codes: dict[int, HolographicCode],
    bias: BiasVector,
    grid: Sequence[float],
    shots: int,
    seed: int,
    threads: int = 1,
    results: Path | None = None,
    done: dict | None = None,
) -> list[RateCurve]:
    """Rate curves for every code size, reusing records in ``done`` and appending new ones to ``results``."""
    done = {} if done is None else done
    curves = []
    for layers in sorted(codes):
        hcode = codes[layers]
        decoder = TensorNetworkDecoder(hcode) if threads <= 1 else None
        failures = []
        for p in grid:
            rec = RunRecord(f"{family}_L{layers}", layers, bias.as_tuple(), float(p), shots, 0, seed)
            if rec.key not in done:
                t0 = time.perf_counter()
                k = count_failures(hcode, ChannelSpec(float(p), bias), shots, seed, threads, decoder)
                rec = RunRecord(rec.code, layers, rec.bias, rec.p, shots, k, seed, time.perf_counter() - t0)
                log.info("%s p=%.6g failures=%d/%d (%.2fs)", rec.code, p, k, shots, rec.wall_time)
                if results is not None:
                    with open(results, "a", encoding="utf-8") as fh:
                        fh.write(rec.to_json() + "\n")
                done[rec.key] = rec
            failures.append(done[rec.key].failures)
        curves.append(RateCurve.from_counts(layers, [float(p) for p in grid], failures, shots))
    return curves


def sweep(
    family: str,
    codes: dict[int, HolographicCode],
    points: Sequence[BiasPoint],
    grid_policy: str | Sequence[float] = "hashing-centered",
    shots: int = 2000,
    seed: int = 0,
    threads: int = 1,
    results: str | Path | None = None,
    grid_points: int = 9,
    grid_span: float = 0.3,
) -> list[SweepRow]:
    """Threshold estimate per bias point.

    Every (code, bias, p) point becomes a :class:`RunRecord` appended to
    ``results``; points already recorded there are skipped, so an interrupted
    sweep resumes where it stopped.  A bias whose evaluation raises is recorded
    as a NaN row and the sweep moves on.
    """
    results = Path(results) if results is not None else None
    done = {r.key: r for r in load_records(results)} if results is not None else {}
    rows = []
    for point in points:
        p_star = zero_rate_point(point.bias)
        if isinstance(grid_policy, str):
            if grid_policy != "hashing-centered":
                raise ValueError(f"unknown grid policy {grid_policy!r}")
            grid = hashing_centered_grid(point.bias, grid_points, grid_span)
        else:
            grid = tuple(float(p) for p in grid_policy)
        try:
            curves = run_curves(family, codes, point.bias, grid, shots, seed, threads, results, done)
            est = estimate_threshold(curves)
        except Exception as exc:  # keep sweeping; the row records the failure as NaN
            log.warning("bias %s failed: %s", point.bias.as_tuple(), exc)
            est = ThresholdEstimate(math.nan, math.nan)
        rows.append(SweepRow(family, tuple(sorted(codes)), point, est, p_star))
    return rows


def summary_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow(row.as_csv_row())
    return buf.getvalue()
