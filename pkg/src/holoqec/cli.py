"""Command-line front end: build codes, decode, estimate error rates and thresholds."""

from __future__ import annotations

import json
import logging
import math
import os
import re
import sys
from fractions import Fraction
from pathlib import Path

import click
import numpy as np
import yaml

from . import __version__
from .decoder import DEFAULT_FRONTIER_CAP, TensorNetworkDecoder
from .hashing import eta_sweep_table, zero_rate_point
from .lego import HolographicCode, build_code, inflate, load_code, save_code, seed_library
from .noise import AXES, ETA_SWEEP, ChannelSpec, axis_eta, bias_from_eta, parse_bias, ternary_grid
from .pauli import check_code, gf2_rank, ops_to_matrix
from .threshold import BiasPoint, count_failures, summary_csv, sweep, wilson_interval

OUTPUT_DIR_ENV = "HOLOQEC_OUTPUT_DIR"
_CODE_NAME = re.compile(r"^([A-Za-z0-9]+)_L(\d+)$")


def _default_threads() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # not available on every platform
        return os.cpu_count() or 1


def _output_path(path: str | None) -> Path | None:
    """Relative output paths land in $HOLOQEC_OUTPUT_DIR when it is set."""
    if path is None or path == "-":
        return None
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(text: str, out: str | None) -> None:
    path = _output_path(out)
    if path is None:
        click.echo(text, nl=False)
    else:
        path.write_text(text, encoding="utf-8")


def resolve_code(ref: str) -> HolographicCode:
    """A code file path, or ``<seed>_L<layers>`` built on the fly."""
    path = Path(ref)
    if path.exists():
        return load_code(path)
    m = _CODE_NAME.match(ref)
    if m and m.group(1) in seed_library():
        return build_code(inflate(m.group(1), int(m.group(2))))
    raise click.BadParameter(f"{ref!r} is neither a code file nor <seed>_L<layers>", param_hint="--code")


def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (inclusive) or a comma list of rates."""
    if ":" in text:
        start, stop, step = (Fraction(t) for t in text.split(":"))
        if step <= 0 or stop < start:
            raise click.BadParameter(f"bad grid {text!r}", param_hint="--grid")
        count = int((stop - start) / step) + 1
        return tuple(float(start + i * step) for i in range(count))
    return tuple(float(Fraction(t)) for t in text.split(","))


def parse_layers(text: str) -> tuple[int, ...]:
    return tuple(sorted({int(t) for t in text.split(",")}))


class _BiasType(click.ParamType):
    name = "bias"

    def convert(self, value, param, ctx):
        if isinstance(value, BiasPoint):
            return value
        try:
            bias = parse_bias(str(value))
        except (ValueError, ZeroDivisionError) as exc:
            self.fail(str(exc), param, ctx)
        text = str(value).strip().upper()
        if ":" in text:
            axis = text.split(":", 1)[0]
            return BiasPoint(bias, float(bias.eta(axis)), axis)
        axis, eta = axis_eta(bias)
        return BiasPoint(bias, eta, axis)


BIAS = _BiasType()


class _JsonErrorGroup(click.Group):
    """Reports every failure as one JSON object on stderr with a nonzero exit code."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.ClickException as exc:
            _report(type(exc).__name__, exc.format_message())
            sys.exit(exc.exit_code)
        except click.Abort:
            _report("Abort", "aborted")
            sys.exit(1)
        except Exception as exc:  # anything else is a runtime failure of the command
            _report(type(exc).__name__, str(exc))
            sys.exit(1)
        sys.exit(rv if isinstance(rv, int) else 0)


def _report(kind: str, message: str) -> None:
    click.echo(json.dumps({"error": kind, "message": message}), err=True)


def _load_config(ctx: click.Context, param, value):
    if value is None:
        return None
    doc = yaml.safe_load(Path(value).read_text(encoding="utf-8")) or {}
    if not isinstance(doc, dict):
        raise click.BadParameter("config must be a mapping of command names to options", param=param)
    # keys use the flag spelling (grid-points or grid_points); map them to parameter names
    group = ctx.command
    default_map = {}
    for cmd_name, opts in doc.items():
        cmd = group.commands.get(cmd_name.replace("_", "-")) if isinstance(group, click.Group) else None
        if cmd is None:
            raise click.BadParameter(f"config names unknown command {cmd_name!r}", param=param)
        names = {}
        for prm in cmd.params:
            names[prm.name] = prm.name
            for flag in getattr(prm, "opts", []):
                names[flag.lstrip("-").replace("-", "_")] = prm.name
        mapped = {}
        for key, val in (opts or {}).items():
            norm = str(key).replace("-", "_")
            if norm not in names:
                raise click.BadParameter(f"config option {key!r} is not known to {cmd_name!r}", param=param)
            mapped[names[norm]] = val
        default_map[cmd_name.replace("_", "-")] = mapped
    ctx.default_map = default_map
    return value


@click.group(cls=_JsonErrorGroup, context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__)
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    callback=_load_config,
    is_eager=True,
    expose_value=False,
    help="YAML file mapping command names to option values; flags override it.",
)
@click.option("-v", "--verbose", count=True, help="Log progress to stderr (-vv for debug).")
def cli(verbose: int) -> None:
    """Zero-rate holographic codes: construction, ML decoding and thresholds."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


# --- construction ----------------------------------------------------------


@cli.command()
@click.argument("seed_name", type=click.Choice(sorted(seed_library())))
@click.argument("layers", type=click.IntRange(min=0))
@click.option("--out", "out", default=None, help="Code file path [default: <seed>_L<layers>.json].")
@click.option("--method", type=click.Choice(["kernel", "sequential"]), default="kernel", show_default=True,
              help="Contraction algorithm; both produce the same group.")
def build(seed_name: str, layers: int, out: str | None, method: str) -> None:
    """Inflate SEED_NAME for LAYERS layers and write the contracted code as JSON."""
    hcode = build_code(inflate(seed_name, layers), method=method)
    path = _output_path(out or f"{seed_name}_L{layers}.json")
    save_code(hcode, path)
    per_layer = {}
    for tile in hcode.tiling.tiles:
        per_layer[tile.layer] = per_layer.get(tile.layer, 0) + 1
    summary = {
        "path": str(path),
        "n": hcode.code.n,
        "k": hcode.code.k,
        "tiles_per_layer": [per_layer[i] for i in sorted(per_layer)],
        "multiplicity_rank": hcode.multiplicity_rank,
    }
    click.echo(json.dumps(summary))


@cli.command()
@click.argument("code_file", type=click.Path(exists=True, dir_okay=False))
def verify(code_file: str) -> None:
    """Check every stabilizer-code invariant of CODE_FILE and that it matches its tiling."""
    hcode = load_code(code_file)
    check_code(hcode.code)
    rebuilt = build_code(hcode.tiling)
    stored = ops_to_matrix(hcode.code.stabilizers, hcode.code.n)
    fresh = ops_to_matrix(rebuilt.code.stabilizers, rebuilt.code.n)
    same_group = gf2_rank(stored) == gf2_rank(fresh) == gf2_rank(np.vstack([stored, fresh]))
    if not same_group or hcode.code.k != 1:
        raise click.ClickException("stored stabilizers differ from the tiling contraction")
    click.echo(json.dumps({"path": code_file, "n": hcode.code.n, "k": hcode.code.k, "ok": True}))


# --- decoding --------------------------------------------------------------


@cli.command()
@click.option("--code", "code_ref", required=True, help="Code file or <seed>_L<layers>.")
@click.option("--syndrome", required=True, help="Bit string, one bit per stabilizer.")
@click.option("--bias", type=BIAS, default="depolarizing", show_default=True, help="Z:10, inf, depolarizing or rx,ry,rz.")
@click.option("--p", "p", type=click.FloatRange(0, 1), required=True, help="Physical error rate.")
@click.option("--frontier-cap", type=click.IntRange(min=1), default=DEFAULT_FRONTIER_CAP, show_default=True)
def decode(code_ref: str, syndrome: str, bias: BiasPoint, p: float, frontier_cap: int) -> None:
    """Class weights of the most likely logical correction for one syndrome."""
    hcode = resolve_code(code_ref)
    if set(syndrome) - {"0", "1"}:
        raise click.BadParameter("syndrome must be a 0/1 string", param_hint="--syndrome")
    s = [int(c) for c in syndrome]
    dist = TensorNetworkDecoder(hcode, frontier_cap).decode(s, ChannelSpec(p, bias.bias))
    click.echo(json.dumps(dist.to_dict()))


@cli.command()
@click.option("--code", "code_ref", required=True, help="Code file or <seed>_L<layers>.")
@click.option("--bias", type=BIAS, default="depolarizing", show_default=True)
@click.option("--p", "p", type=click.FloatRange(0, 1), required=True)
@click.option("--shots", type=click.IntRange(min=1), default=2000, show_default=True)
@click.option("--seed", type=int, required=True, help="Run seed; shot i uses the stream keyed on (seed, i).")
@click.option("--threads", type=click.IntRange(min=1), default=_default_threads, help="Worker processes.")
@click.option("--out", default=None, help="Write the JSON result here instead of stdout.")
def lerate(code_ref: str, bias: BiasPoint, p: float, shots: int, seed: int, threads: int, out: str | None) -> None:
    """Monte Carlo logical error rate of ML decoding at one point."""
    hcode = resolve_code(code_ref)
    failures = count_failures(hcode, ChannelSpec(p, bias.bias), shots, seed, threads)
    lo, hi = wilson_interval(failures, shots)
    doc = {
        "code": code_ref,
        "n": hcode.code.n,
        "bias": list(bias.bias.as_tuple()),
        "p": p,
        "shots": shots,
        "failures": failures,
        "seed": seed,
        "rate": failures / shots,
        "ci95": [lo, hi],
    }
    _emit(json.dumps(doc) + "\n", out)


# --- thresholds ------------------------------------------------------------


def _stochastic_options(f):
    f = click.option("--out", default=None, help="Summary CSV path [default: stdout].")(f)
    f = click.option("--results", default=None, help="JSON-lines file of per-point records; reused to resume.")(f)
    f = click.option("--threads", type=click.IntRange(min=1), default=_default_threads, help="Worker processes.")(f)
    f = click.option("--seed", type=int, required=True, help="Run seed (mandatory).")(f)
    f = click.option("--shots", type=click.IntRange(min=1), default=2000, show_default=True)(f)
    return f


def _grid_options(f):
    f = click.option("--grid-span", type=float, default=0.3, show_default=True,
                     help="Relative half-width of the hashing-centered grid.")(f)
    f = click.option("--grid-points", type=click.IntRange(min=2), default=9, show_default=True)(f)
    f = click.option("--grid", default=None,
                     help="Fixed p grid, start:stop:step or comma list [default: centered on the hashing point].")(f)
    return f


def _family(refs: list[str]) -> tuple[str, dict[int, HolographicCode]]:
    codes = {}
    seeds = set()
    for ref in refs:
        hcode = resolve_code(ref)
        seeds.add(hcode.tiling.seed)
        codes[hcode.tiling.layers] = hcode
    if len(seeds) != 1:
        raise click.BadParameter("all codes must share one seed", param_hint="--code")
    if len(codes) < 2:
        raise click.BadParameter("need at least two distinct layer counts", param_hint="--code")
    return seeds.pop(), codes


@cli.command()
@click.option("--code", "code_refs", multiple=True, help="Code file or <seed>_L<layers>; repeat or list after the flag.")
@click.argument("more_codes", nargs=-1)
@click.option("--bias", type=BIAS, default="depolarizing", show_default=True)
@_grid_options
@_stochastic_options
def threshold(code_refs, more_codes, bias, grid, grid_points, grid_span, shots, seed, threads, results, out) -> None:
    """Threshold from layer-crossing curves of one code family at one bias."""
    refs = [r for chunk in (*code_refs, *more_codes) for r in chunk.split(",") if r]
    family, codes = _family(refs)
    policy = parse_grid(grid) if grid else "hashing-centered"
    rows = sweep(family, codes, [bias], policy, shots, seed, threads, _output_path(results), grid_points, grid_span)
    _emit(summary_csv(rows), out)


def _family_options(f):
    f = click.option("--layers", default="1,2,3", show_default=True, help="Comma list of layer counts.")(f)
    f = click.option("--family", type=click.Choice(sorted(seed_library())), default="happy", show_default=True)(f)
    return f


def _family_codes(family: str, layers: str) -> dict[int, HolographicCode]:
    return {L: build_code(inflate(family, L)) for L in parse_layers(layers)}


@cli.command("sweep-eta")
@_family_options
@click.option("--axis", type=click.Choice(list(AXES), case_sensitive=False), default="Z", show_default=True)
@click.option("--etas", default=None, help="Comma list of eta values (inf allowed) [default: the 16-value sweep].")
@_grid_options
@_stochastic_options
def sweep_eta(family, layers, axis, etas, grid, grid_points, grid_span, shots, seed, threads, results, out) -> None:
    """Thresholds along an eta sweep on one axis."""
    axis = axis.upper()
    values = ETA_SWEEP if etas is None else tuple(_parse_eta(t) for t in etas.split(","))
    points = [BiasPoint(bias_from_eta(axis, eta), eta, axis) for eta in values]
    policy = parse_grid(grid) if grid else "hashing-centered"
    codes = _family_codes(family, layers)
    rows = sweep(family, codes, points, policy, shots, seed, threads, _output_path(results), grid_points, grid_span)
    _emit(summary_csv(rows), out)


def _parse_eta(text: str) -> float:
    t = text.strip().lower()
    return math.inf if t in ("inf", "+inf") else float(Fraction(t))


@cli.command("sweep-ternary")
@_family_options
@click.option("--resolution", type=click.IntRange(min=1), default=2, show_default=True,
              help="Simplex subdivision; points are (i, j, k)/resolution.")
@click.option("--extras/--no-extras", default=True, show_default=True,
              help="Also include pure, two-Pauli and depolarizing points.")
@_grid_options
@_stochastic_options
def sweep_ternary(family, layers, resolution, extras, grid, grid_points, grid_span, shots, seed, threads, results, out):
    """Thresholds over a grid of bias vectors on the simplex."""
    biases = ternary_grid(resolution) if extras else ternary_grid(resolution, extras=())
    points = [BiasPoint(b, *reversed(axis_eta(b))) for b in biases]
    policy = parse_grid(grid) if grid else "hashing-centered"
    codes = _family_codes(family, layers)
    rows = sweep(family, codes, points, policy, shots, seed, threads, _output_path(results), grid_points, grid_span)
    _emit(summary_csv(rows), out)


@cli.command("hashing-bound")
@click.option("--bias", type=BIAS, default=None, help="Single bias vector.")
@click.option("--eta-sweep", "axis", type=click.Choice(list(AXES), case_sensitive=False), default=None,
              help="Tabulate the 16-value eta sweep on this axis instead.")
@click.option("--out", default=None, help="CSV path [default: stdout].")
def hashing_bound(bias: BiasPoint | None, axis: str | None, out: str | None) -> None:
    """Zero-rate hashing point p* as CSV (eta, r_x, r_y, r_z, p_star)."""
    if (bias is None) == (axis is None):
        raise click.UsageError("give exactly one of --bias or --eta-sweep")
    if axis is not None:
        rows = eta_sweep_table(axis.upper())
    else:
        b = bias.bias
        rows = [{"eta": bias.eta, "r_x": b.r_x, "r_y": b.r_y, "r_z": b.r_z, "p_star": zero_rate_point(b)}]
    lines = ["eta,r_x,r_y,r_z,p_star"]
    for r in rows:
        lines.append(",".join(format(r[k], ".10g") for k in ("eta", "r_x", "r_y", "r_z", "p_star")))
    _emit("\n".join(lines) + "\n", out)


cli.add_command(hashing_bound, "hashing")


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
