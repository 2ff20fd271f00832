"""Command-line experiment runner.

    illposed run shear-gap --sigma 0.5 --epsilon 0.01
    illposed run norm-scaling --config ns.toml --out results/
    illposed report results/*/manifest.json
    illposed audit-covering --alpha 0.5 --xi-max 256

Exit codes: 0 all assertions pass, 1 an assertion failed, 2 invalid
configuration, 3 unreadable manifest or output, 4 memory budget exceeded.
"""

from __future__ import annotations

import json
import math
import os
import platform
import sys
import time
from datetime import datetime, timezone
from importlib.metadata import version as dist_version
from pathlib import Path

import click
import numpy as np
import scipy

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from illposed import __version__
from illposed.errors import ConfigError, CoverageError, ParameterError, ResolutionError, ResourceError
from illposed.experiments import EXPERIMENTS, ExperimentResult, Table, run_experiment
from illposed.funcspace import audit_bapu, audit_covering, build_alpha_covering, build_bapu
from illposed.spectral import make_grid, save_field

EXIT_FAIL, EXIT_CONFIG, EXIT_IO, EXIT_RESOURCE = 1, 2, 3, 4
DEFAULT_OUT = "illposed_out"
DEFAULT_MEMORY_MB = 4096.0
REPORT_COLUMNS = ("experiment", "key_params", "measured", "predicted", "status")


class CliError(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


# ----------------------------------------------------------------------
# value parsing


def parse_float(text) -> float:
    """Float with ``inf`` and simple multiples of ``pi`` (``pi``, ``2pi``, ``pi/2``)."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower().replace("*", "")
    if s in ("inf", "+inf", "infinity"):
        return math.inf
    if "pi" in s:
        num, _, den = s.partition("pi")
        val = (float(num) if num else 1.0) * math.pi
        if den:
            if not den.startswith("/"):
                raise ValueError(text)
            val /= float(den[1:])
        return val
    return float(s)


def _scalar(kind: type, v):
    if kind is bool:
        return v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes")
    if kind is int:
        if isinstance(v, float) and not v.is_integer():
            raise ValueError(v)
        return int(v)
    if kind is float:
        return parse_float(v)
    return str(v)


def coerce(default, value):
    """Convert a flag string or TOML value to the type of ``default``."""
    if isinstance(default, (tuple, list)):
        items = value if isinstance(value, (list, tuple)) else [x for x in str(value).split(",") if x.strip()]
        kind = int if default and all(isinstance(d, int) for d in default) else float
        return tuple(_scalar(kind, x) for x in items)
    kind = type(default)
    if kind is float and isinstance(value, (list, tuple)):
        raise ValueError(value)
    return _scalar(kind if kind in (int, float, bool) else str, value)


def _param_names() -> list[str]:
    names = set()
    for ex in EXPERIMENTS.values():
        names.update(ex.defaults)
    return sorted(names)


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as e:
        raise CliError(f"cannot read config {path}: {e}", EXIT_IO) from e
    except tomllib.TOMLDecodeError as e:
        raise CliError(f"config {path} is not valid TOML: {e}", EXIT_CONFIG) from e
    return doc


def resolve(experiment: str, config: dict, flags: dict) -> dict:
    """Experiment parameters: TOML ``[params]`` overridden by flags, typed by the defaults."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {sorted(EXPERIMENTS)}")
    defaults = EXPERIMENTS[experiment].defaults
    raw = dict(config.get("params", {}))
    for key in ("seed", "workers"):
        if key in config:
            raw[key] = config[key]
    raw.update({k: v for k, v in flags.items() if v is not None})
    out = {}
    for k, v in raw.items():
        if k not in defaults:
            raise ConfigError(f"{experiment} does not take parameter {k!r}")
        try:
            out[k] = coerce(defaults[k], v)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"cannot read {k}={v!r} as {type(defaults[k]).__name__}") from e
    return out


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    return v


def versions() -> dict:
    return {
        "illposed": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "click": dist_version("click"),
    }


def write_artifacts(res: ExperimentResult, out_dir: Path, config_echo: dict, timings: dict) -> Path:
    """CSV per table, ILF2 per snapshot, and ``manifest.json``; returns the manifest path."""
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for t in res.tables:
        name = f"{t.name}.csv"
        t.to_csv(out_dir / name)
        outputs.append(name)
    for key in sorted(res.fields):
        name = f"{key}.ilf2"
        save_field(res.fields[key], out_dir / name)
        outputs.append(name)
    ex = EXPERIMENTS[res.experiment]
    full = {**ex.defaults, **res.params}
    manifest = {
        "experiment": res.experiment,
        "config": config_echo,
        "key_params": {k: _jsonable(full[k]) for k in ex.key_params},
        "versions": versions(),
        "timings": timings,
        "outputs": outputs,
        "headline": res.headline,
        "assertions": [c.to_dict() for c in res.checks],
        "passed": res.passed,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


# ----------------------------------------------------------------------
# report


def read_manifest(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        for key in ("experiment", "assertions", "headline"):
            doc[key]
    except OSError as e:
        raise CliError(f"cannot read manifest {path}: {e}", EXIT_IO) from e
    except (ValueError, KeyError, TypeError) as e:
        raise CliError(f"corrupt manifest {path}: {e!r}", EXIT_IO) from e
    return doc


def report_rows(manifests: list[dict]) -> list[tuple]:
    """One row per manifest, sorted by experiment id.

    The row shows the headline assertion, or the first failing one.
    """
    rows = []
    for m in sorted(manifests, key=lambda d: d["experiment"]):
        checks = m["assertions"]
        failed = [c for c in checks if not c["passed"]]
        shown = failed[0] if failed else next((c for c in checks if c["name"] == m["headline"]), checks[0] if checks else None)
        keys = " ".join(f"{k}={_fmt_param(v)}" for k, v in m.get("key_params", {}).items())
        meas = "" if shown is None else f"{shown['name']}={shown['measured']:.6g}" if shown["measured"] is not None else shown["name"]
        pred = "" if shown is None else shown["predicted"]
        rows.append((m["experiment"], keys, meas, pred, "FAIL" if failed else "PASS"))
    return rows


def _fmt_param(v) -> str:
    if isinstance(v, list):
        return ",".join(_fmt_param(x) for x in v)
    if isinstance(v, float):
        return f"{v:g}"
    return str(v)


def format_table(columns, rows) -> str:
    cells = [list(columns)] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells)


# ----------------------------------------------------------------------
# click commands


@click.group()
@click.version_option(__version__, prog_name="illposed")
def main():
    """Numerical experiments on norm inflation and ill-posedness for incompressible Euler."""


def _run_options(fn):
    for name in reversed(_param_names()):
        fn = click.option(_flag(name), name, default=None, metavar="VALUE",
                          help="comma-separated list" if any(
                              isinstance(e.defaults.get(name), tuple) for e in EXPERIMENTS.values()) else None)(fn)
    return fn


@main.command()
@click.argument("experiment", type=click.Choice(sorted(EXPERIMENTS)))
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="TOML config; flags override it.")
@click.option("--out", "out", default=None, help="Output directory (default: $ILLPOSED_OUT or ./illposed_out).")
@click.option("--memory-mb", "memory_mb", default=None, type=float, help="Memory budget for grid arrays.")
@_run_options
def run(experiment, config_path, out, memory_mb, **flags):
    """Run EXPERIMENT and write CSV tables, snapshots and a JSON manifest."""
    config = load_config(config_path) if config_path else {}
    if config.get("experiment", experiment) != experiment:
        raise CliError(f"config is for {config['experiment']!r}, not {experiment!r}", EXIT_CONFIG)
    memory_mb = memory_mb if memory_mb is not None else float(config.get("memory_mb", DEFAULT_MEMORY_MB))
    base = Path(out or os.environ.get("ILLPOSED_OUT") or config.get("out") or DEFAULT_OUT)
    try:
        params = resolve(experiment, config, flags)
        started = datetime.now(timezone.utc).isoformat(timespec="seconds")
        t0 = time.perf_counter()
        res = run_experiment(experiment, params, memory_mb)
        wall = time.perf_counter() - t0
    except (ConfigError, CoverageError, ParameterError, ResolutionError) as e:
        raise CliError(f"config error: {e}", EXIT_CONFIG) from e
    except ResourceError as e:
        raise CliError(f"resource error: {e}", EXIT_RESOURCE) from e
    echo = {
        "experiment": experiment,
        "params": _jsonable({**EXPERIMENTS[experiment].defaults, **res.params, **params}),
        "memory_mb": memory_mb,
    }
    try:
        path = write_artifacts(res, base / experiment, echo, {"started": started, "wall_seconds": wall})
    except OSError as e:
        raise CliError(f"cannot write outputs under {base}: {e}", EXIT_IO) from e
    for c in res.checks:
        click.echo(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.measured:.6g} (predicted {c.predicted})")
    click.echo(f"manifest: {path}")
    if not res.passed:
        sys.exit(EXIT_FAIL)


@main.command()
@click.argument("manifests", nargs=-1, type=click.Path(dir_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Also write the table as CSV.")
def report(manifests, csv_path):
    """Summarise run manifests in one table; exit 1 if any assertion failed."""
    docs = [read_manifest(p) for p in manifests]
    rows = report_rows(docs)
    click.echo(format_table(REPORT_COLUMNS, rows))
    if csv_path:
        Table("report", REPORT_COLUMNS, rows).to_csv(csv_path)
    if any(r[-1] == "FAIL" for r in rows):
        sys.exit(EXIT_FAIL)


@main.command("audit-covering")
@click.option("--alpha", default="0.3,0.5,0.8,1", help="comma-separated list")
@click.option("--xi-max", "xi_max", default="256")
@click.option("--p", "p", default="inf")
@click.option("--L", "L", default="pi")
@click.option("--N", "N", default=512, type=int)
@click.option("--out", "out", default=None, help="Write covering JSON files here.")
def audit_covering_cmd(alpha, xi_max, p, L, N, out):
    """Check the covering and partition-of-unity invariants."""
    try:
        alphas = [parse_float(a) for a in alpha.split(",")]
        xi, pp, LL = parse_float(xi_max), parse_float(p), parse_float(L)
    except ValueError as e:
        raise CliError(f"config error: cannot parse {e}", EXIT_CONFIG) from e
    for a in alphas:
        if not 0 < a <= 1:
            raise CliError(f"config error: violated: 0 < alpha <= 1 (alpha={a})", EXIT_CONFIG)
    g = make_grid(LL, N)
    ok = True
    for a in alphas:
        cov = build_alpha_covering(a, xi, g)
        inv = {**audit_covering(cov), **audit_bapu(build_bapu(cov, pp))}
        for name, (passed, val) in inv.items():
            ok &= bool(passed)
            click.echo(f"alpha={a:g}  {name:<13} {'PASS' if passed else 'FAIL'}  {val}")
        if out:
            d = Path(out)
            d.mkdir(parents=True, exist_ok=True)
            (d / f"covering_alpha_{a:g}.json").write_text(cov.to_json(), encoding="utf-8")
    if not ok:
        sys.exit(EXIT_FAIL)


if __name__ == "__main__":  # pragma: no cover
    main()
