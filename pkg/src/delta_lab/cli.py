"""Command-line front end: ``delta-lab <command> [flags]``.

Every run writes one CSV (to ``--out`` or stdout) and, when ``--out`` is a
file, a ``<out>.manifest.json`` with the config echo, timings and a SHA-256
of the CSV text. Exit codes: 0 ok, 2 validation, 3 resource guard,
4 internal consistency.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from . import delta as dl
from . import divisor_sieve as ds
from . import jutila as ju
from . import mainterm as mt
from . import zeta_engine as ze
from .errors import DeltaLabError, ValidationError
from .parallel import resolve_workers

COMMANDS = ("sieve", "delta", "ms", "jutila-compare", "fit", "zeta-moment",
            "e-ms", "perron", "omega", "beta", "mainterm")
PRECISIONS = ("standard", "extended")


@dataclass
class ExperimentConfig:
    command: str
    k: int = 2
    X: int | None = None
    h: int | None = None
    h_grid: tuple = ()
    quad_order: int = dl.DEFAULT_QUAD_ORDER
    workers: int = 1
    cache_dir: str = str(ds.DEFAULT_CACHE_DIR)
    out: str | None = None
    precision: str = "standard"
    x: float | None = None
    T: float | None = None
    T_grid: tuple = ()
    sigma: float | None = None
    samples: int = 100_000
    quad_nodes: int = 64
    plot: str | None = None
    action: str | None = None

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d["h_grid"] = list(self.h_grid)
        d["T_grid"] = list(self.T_grid)
        return d

    @classmethod
    def from_echo(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["h_grid"] = tuple(d.get("h_grid", ()))
        d["T_grid"] = tuple(d.get("T_grid", ()))
        return cls(**d)


# key -> converter, for both flags and config files
_KEYS = {
    "k": int,
    "X": int,
    "h": int,
    "h_grid": lambda v: tuple(int(p) for p in str(v).split(",") if p.strip()),
    "quad_order": int,
    "workers": int,
    "cache_dir": str,
    "out": str,
    "precision": str,
    "x": float,
    "T": float,
    "T_grid": lambda v: tuple(float(p) for p in str(v).split(",") if p.strip()),
    "sigma": float,
    "samples": int,
    "quad_nodes": int,
    "plot": str,
}


def read_config_file(path: str | os.PathLike) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Keys may use - or _."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ValidationError(f"{path}:{lineno}: unknown key '{key}'")
        out[key] = _convert(key, val)
    return out


def _convert(key, val):
    try:
        return _KEYS[key](val)
    except ValueError:
        raise ValidationError(f"bad value for {key}: {val!r}") from None


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="delta-lab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("action", nargs="?", help="sub-verb (mainterm dump)")
    p.add_argument("--config", help="key = value file; flags override it")
    for key in _KEYS:
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
    return p


def parse_config(argv: list[str], config_file: str | None = None) -> ExperimentConfig:
    """Defaults < config file < flags, then validated for the chosen command."""
    ns = _parser().parse_args(argv)
    merged: dict = {}
    path = ns.config or config_file
    if path:
        merged.update(read_config_file(path))
    for key in _KEYS:
        v = getattr(ns, key)
        if v is not None:
            merged[key] = _convert(key, v)
    if "workers" not in merged:
        merged["workers"] = resolve_workers(None)
    cfg = ExperimentConfig(command=ns.command, action=ns.action, **merged)
    validate(cfg)
    return cfg


def config_file_text(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` as a ``key = value`` file that parses back to the same config."""
    lines = []
    for key in _KEYS:
        v = getattr(cfg, key)
        if v is None or v == ():
            continue
        if isinstance(v, tuple):
            v = ",".join(repr(p) for p in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def _need(cfg, *names):
    for n in names:
        if getattr(cfg, n) in (None, ()):
            raise ValidationError(f"{cfg.command}: missing required --{n.replace('_', '-')}")


def validate(cfg: ExperimentConfig) -> None:
    c = cfg.command
    if cfg.precision not in PRECISIONS:
        raise ValidationError(f"--precision must be one of {PRECISIONS}")
    if cfg.workers < 1:
        raise ValidationError("--workers must be >= 1")
    if cfg.quad_order not in dl.QUAD_ORDERS:
        raise ValidationError(f"--quad-order must be one of {dl.QUAD_ORDERS}")
    if c not in ("e-ms", "jutila-compare", "fit", "zeta-moment") and not 2 <= cfg.k <= ds.K_MAX:
        raise ValidationError(f"--k must be in [2, {ds.K_MAX}]")
    if c == "mainterm":
        if cfg.action != "dump":
            raise ValidationError("mainterm: the only action is 'dump'")
        return
    if cfg.action is not None:
        raise ValidationError(f"{c}: unexpected positional argument {cfg.action!r}")
    if c in ("sieve", "delta", "beta"):
        _need(cfg, "X")
        if cfg.X < 1:
            raise ValidationError("--X must be >= 1")
    elif c in ("ms", "omega"):
        _need(cfg, "X", "h")
        if cfg.h < 1:
            raise ValidationError("--h must be >= 1 (theorem range is 1 << h <= sqrt(X)/2)")
        if cfg.X < 1:
            raise ValidationError("--X must be >= 1")
    elif c == "jutila-compare":
        _need(cfg, "X", "h")
        if not 1 <= cfg.h <= math.sqrt(cfg.X):
            raise ValidationError("--h must satisfy 1 <= h <= sqrt(X)")
        if cfg.quad_nodes < 64:
            raise ValidationError("--quad-nodes must be >= 64")
    elif c == "fit":
        _need(cfg, "X", "h_grid")
        if len(cfg.h_grid) < 8:
            raise ValidationError("--h-grid needs at least 8 values")
        if max(cfg.h_grid) > math.sqrt(cfg.X):
            raise ValidationError("--h-grid values must be <= sqrt(X)")
        if math.log(max(cfg.h_grid) / min(cfg.h_grid)) < math.log(8):
            raise ValidationError("--h-grid must span at least a factor 8")
    elif c == "zeta-moment":
        _need(cfg, "T")
        if not 1 <= cfg.k <= 5:
            raise ValidationError("--k must be in [1, 5] for zeta-moment")
    elif c == "e-ms":
        _need(cfg, "X")
        if cfg.h is None and not cfg.h_grid:
            raise ValidationError("e-ms: missing required --h or --h-grid")
    elif c == "perron":
        _need(cfg, "x")
        if cfg.T is None and not cfg.T_grid:
            raise ValidationError("perron: missing required --T or --T-grid")
        if not 2 <= cfg.k <= 4:
            raise ValidationError("--k must be in [2, 4] for perron")


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

@dataclass
class RunManifest:
    config: dict
    version: str
    wall_time: float
    timings: dict = field(default_factory=dict)
    checksum: str = ""

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


class _Timer:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def stage(self, name):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                timer.timings[name] = timer.timings.get(name, 0.0) + time.perf_counter() - self.t

        return _Ctx()


def execute(cfg: ExperimentConfig) -> tuple[list[str], list[tuple[float, float]], dict]:
    """Run the experiment; returns (csv lines incl. header, plot points, stage timings)."""
    tm = _Timer()
    ext = cfg.precision == "extended"
    w = cfg.workers
    plot: list[tuple[float, float]] = []
    c = cfg.command
    if c == "mainterm":
        with tm.stage("mainterm"):
            lines = ["k,j,p_coeff,q_coeff"] + mt.dump_rows(cfg.k)
    elif c == "sieve":
        cache = ds.CheckpointCache(cfg.cache_dir)
        with tm.stage("summatory"):
            s = ds.summatory_dk(cfg.k, cfg.X, cache=cache, workers=w)
        lines = ["k,x,sum", f"{cfg.k},{cfg.X},{s}"]
    elif c == "delta":
        cache = ds.CheckpointCache(cfg.cache_dir)
        with tm.stage("delta"):
            v = dl.delta_k(cfg.k, cfg.X, cache=cache, workers=w)
        lines = ["k,x,delta", f"{cfg.k},{cfg.X},{v!r}"]
    elif c == "ms":
        with tm.stage("mean_squares"):
            r = dl.theorem2_report(cfg.k, cfg.X, cfg.h, cfg.quad_order, workers=w, extended=ext)
        lines = [dl.MeanSquareResult.CSV_HEADER, r.csv_row()]
    elif c == "jutila-compare":
        with tm.stage("series"):
            s = ju.jutila_series(cfg.X, cfg.h, cfg.quad_nodes, workers=w)
        with tm.stage("direct"):
            d = dl.continuous_mean_square(2, cfg.X, cfg.h, cfg.quad_order, workers=w, extended=ext)
        r = ju.JutilaComparison(cfg.X, cfg.h, s.value, d)
        lines = [ju.JutilaComparison.CSV_HEADER, r.csv_row()]
    elif c == "fit":
        samples = []
        with tm.stage("mean_squares"):
            for h in sorted(cfg.h_grid):
                v = dl.discrete_mean_square(2, cfg.X, h, workers=w, extended=ext)
                samples.append((cfg.X, h, v))
                plot.append((math.log(math.sqrt(cfg.X) / h), v / (cfg.X * h)))
        with tm.stage("fit"):
            f = ju.fit_log_cubic(samples)
        lines = [ju.CubicFit.CSV_HEADER] + f.csv_rows()
    elif c == "zeta-moment":
        sigma = cfg.sigma if cfg.sigma is not None else ze.SIGMA_K.get(cfg.k, 0.5)
        with tm.stage("moment"):
            r = ze.moment_integral(cfg.k, sigma, cfg.T, workers=w)
        lines = [ze.MomentResult.CSV_HEADER, r.csv_row()]
    elif c == "e-ms":
        hs = sorted(cfg.h_grid) if cfg.h_grid else [cfg.h]
        tab = ze.MeanSquareTable(step=0.125, workers=w)
        lines = ["X,h,value,cubic_main"]
        with tm.stage("e_ms"):
            for h in hs:
                v = ze.e_short_diff_ms(cfg.X, h, table=tab)
                m = ju.expected_cubic_main(cfg.X, h) if h <= math.sqrt(cfg.X) else float("nan")
                lines.append(f"{cfg.X},{h},{v!r},{m!r}")
                plot.append((math.log(math.sqrt(cfg.X) / h), v / (cfg.X * h)))
    elif c == "perron":
        Ts = sorted(cfg.T_grid) if cfg.T_grid else [cfg.T]
        lines = [ze.PerronReport.CSV_HEADER]
        with tm.stage("perron"):
            for T in Ts:
                r = ze.perron_truncated(cfg.k, cfg.x, T, workers=w)
                lines.append(r.csv_row())
                plot.append((T, r.abs_error))
    elif c == "omega":
        with tm.stage("scan"):
            r = ju.omega_scan(cfg.k, cfg.X, cfg.h, cfg.samples, workers=w)
        lines = [ju.OmegaReport.CSV_HEADER, r.csv_row()]
    elif c == "beta":
        with tm.stage("global_mean_square"):
            g = dl.global_mean_square(cfg.k, cfg.X, cfg.quad_order, workers=w, extended=ext)
        lines = ["k,X,X_half,integral,half_integral,beta_hat",
                 f"{g.k},{g.X},{g.X_half},{g.value!r},{g.half_value!r},{g.beta_hat!r}"]
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError(f"unknown command {c}")
    return lines, plot, tm.timings


def checksum(lines: list[str]) -> str:
    return hashlib.sha256(("\n".join(lines) + "\n").encode()).hexdigest()


def run(cfg: ExperimentConfig, stdout=None) -> int:
    """Execute ``cfg``; write CSV, optional plot data, and the manifest. Returns the exit code."""
    stdout = stdout or sys.stdout
    t0 = time.perf_counter()
    try:
        lines, plot, timings = execute(cfg)
    except DeltaLabError as exc:
        print(f"delta-lab: {exc}", file=sys.stderr)
        return exc.exit_code
    text = "\n".join(lines) + "\n"
    if cfg.out:
        out = Path(cfg.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        manifest = RunManifest(cfg.echo(), __version__, time.perf_counter() - t0, timings, checksum(lines))
        Path(str(out) + ".manifest.json").write_text(manifest.to_json())
    else:
        stdout.write(text)
    if cfg.plot and plot:
        Path(cfg.plot).write_text("".join(f"{a!r} {b!r}\n" for a, b in plot))
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except DeltaLabError as exc:
        print(f"delta-lab: {exc}", file=sys.stderr)
        return exc.exit_code
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
