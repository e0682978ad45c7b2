"""Command-line experiment runner.

    typicality-lab fixed-overlap-scan --n 8 --J pi/4 --h pi/5 --b pi/4 \\
        --z-grid 21 --samples 10000 --seed 42 --out scan.csv

Every run writes the table (CSV or JSON) and a ``<out>.meta.json`` sidecar
whose ``config`` entry reproduces the run when passed back via ``--config``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import time
import warnings
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import closedform as cf
from . import ensembles as en
from . import kicked_ising as ki
from . import montecarlo as mc
from .errors import ConfigError, TypicalityError

EXPERIMENTS = (
    "fixed-overlap-scan",
    "full-average-scan",
    "histogram",
    "nonuniform-fixed-scan",
    "nonuniform-full-scan",
    "form-factor",
    "rho-solve",
)
SCAN_EXPERIMENTS = EXPERIMENTS[:2] + EXPERIMENTS[3:5]
SCAN_COLUMNS = ("theta", "abs_z", "analytic_mean", "analytic_std",
                "mc_mean", "mc_std", "mc_std_error", "n_samples")
DEFAULT_SAMPLES = {
    "fixed-overlap-scan": 10,
    "nonuniform-fixed-scan": 10,
    "full-average-scan": 100,
    "nonuniform-full-scan": 100,
    "histogram": 10_000,
}
SCHEMA_PATH = Path(__file__).with_name("schemas") / "output.schema.json"

_ANGLE = re.compile(r"^([+-]?)(\d+(?:\.\d*)?|\.\d+)?\*?pi(?:/(\d+(?:\.\d*)?))?$")


def parse_angle(text) -> float:
    """Parse a decimal or a multiple of pi such as 'pi/4', '2pi/5', '-pi/4'."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).replace(" ", "").lower()
    m = _ANGLE.match(s)
    if m:
        sign, num, den = m.groups()
        value = float(num or 1) * math.pi / float(den or 1)
        return -value if sign == "-" else value
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as a number or multiple of pi") from None


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 8
    J: str = "pi/4"
    h: str = "pi/5"
    b: str = "pi/4"
    m_z: float | None = None
    m_z_prime: float | None = None
    theta_grid: int = 21
    samples: int | None = None
    seed: int = 0
    output: str | None = None
    format: str = "csv"
    T_max: int = 10
    bins: int = 50
    abs_z: float = 0.0
    method: str = "uniform"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        for key in ("J", "h", "b"):
            value = getattr(self, key)
            setattr(self, key, str(value))
            parse_angle(value)
        if self.samples is None:
            self.samples = DEFAULT_SAMPLES.get(self.experiment, 0)
        if self.output is None:
            self.output = f"{self.experiment}.{self.format}"
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.experiment in SCAN_EXPERIMENTS and self.theta_grid < 2:
            raise ConfigError("theta_grid needs at least two points")
        if self.experiment in SCAN_EXPERIMENTS + ("histogram",) and self.samples < 1:
            raise ConfigError("samples must be positive")
        if self.experiment in ("nonuniform-fixed-scan", "nonuniform-full-scan", "rho-solve") \
                and self.m_z is None:
            raise ConfigError(f"{self.experiment} requires m_z")
        if self.experiment == "nonuniform-full-scan" and self.m_z_prime is None:
            raise ConfigError("nonuniform-full-scan requires m_z_prime")
        if self.method not in ("uniform", "inverse"):
            raise ConfigError("method must be 'uniform' or 'inverse'")
        if not 0.0 <= self.abs_z <= 1.0:
            raise ConfigError("abs_z must lie in [0, 1]")

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def chain(self) -> ki.KicParams:
        return ki.KicParams(int(self.n), parse_angle(self.J), parse_angle(self.h), parse_angle(self.b))

    def to_dict(self) -> dict:
        return asdict(self)


def theta_grid(count: int) -> np.ndarray:
    return np.linspace(0.0, np.pi / 2, count)


# -- experiments ---------------------------------------------------------------

def _scan_row(theta, analytic_mean, analytic_std, res: mc.EstimatorResult) -> dict:
    return {
        "theta": float(theta),
        "abs_z": float(np.cos(theta)),
        "analytic_mean": float(analytic_mean),
        "analytic_std": float(analytic_std),
        "mc_mean": res.mean,
        "mc_std": res.std_dev,
        "mc_std_error": res.std_error,
        "n_samples": res.n_samples,
    }


def _deformation(n: int, m: float) -> tuple[en.Deformation, en.DensityOperator]:
    rho = en.solve_reimann_rho(ki.build_magnetization(n), float(m))
    return en.deformation_from(rho), rho


def run_scan(cfg: ExperimentConfig, workers: int) -> tuple[list[dict], dict]:
    U = ki.build_floquet(cfg.chain())
    N = U.dim
    tr1, tr2 = ki.trace_power(U, 1), ki.trace_power(U, 2)
    meta = {"K1": abs(tr1) ** 2 / N, "trace_U": [tr1.real, tr1.imag],
            "trace_U2": [tr2.real, tr2.imag], "purities": {}, "y": {}}
    L = Lp = None
    if cfg.experiment.startswith("nonuniform"):
        L, rho = _deformation(cfg.n, cfg.m_z)
        meta["purities"]["rho"] = en.purity(rho)
        meta["y"]["rho"] = rho.y
    if cfg.experiment == "nonuniform-full-scan":
        Lp, rho_p = _deformation(cfg.n, cfg.m_z_prime)
        meta["purities"]["rho_prime"] = en.purity(rho_p)
        meta["y"]["rho_prime"] = rho_p.y
        meta["overlap_trace"] = en.overlap_trace(L.source, rho_p)

    fixed = cfg.experiment in ("fixed-overlap-scan", "nonuniform-fixed-scan")
    chi = mc.haar_state(cfg.seed, 0, N) if fixed else "resample"
    dense = U.dense if fixed or Lp is not None else None
    rows = []
    for j, theta in enumerate(theta_grid(cfg.theta_grid)):
        z = float(np.cos(theta))
        if cfg.experiment == "fixed-overlap-scan":
            mean = cf.ha_fixed_overlap(chi, dense, z, N)
            std = math.sqrt(cf.hv_fixed_overlap(chi, dense, z, N))
        elif cfg.experiment == "nonuniform-fixed-scan":
            mean = cf.ha_fixed_overlap_deformed(chi, dense, L, z, N)
            std = math.sqrt(cf.hv_fixed_overlap_deformed(chi, dense, L, z, N))
        elif cfg.experiment == "full-average-scan":
            mean = cf.ha_fixed_overlap_both_unitary(meta["K1"], z, N)
            std = math.sqrt(cf.hv_fixed_overlap_both_unitary(tr1, tr2, z, N))
        else:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                mean = cf.approx_ha_full_nonuniform(dense, L, Lp, z, N)
            if caught:
                meta["validity_gate_warning"] = str(caught[0].message)
            std = math.nan
        res = mc.estimate_fixed_overlap(U, chi, z, cfg.samples, cfg.seed, deformation=L,
                                        deformation_prime=Lp, stream=j + 1, workers=workers,
                                        method=cfg.method, dim=N)
        rows.append(_scan_row(theta, mean, std, res))
    return rows, meta


def run_histogram(cfg: ExperimentConfig, workers: int) -> tuple[list[dict], dict]:
    U = ki.build_floquet(cfg.chain())
    N = U.dim
    hist = mc.histogram_transition(U, cfg.abs_z, cfg.samples, cfg.bins, cfg.seed,
                                   workers=workers, dim=N)
    edges = hist.bin_edges
    total = hist.counts.sum()
    rows = []
    for left, right, count in zip(edges[:-1], edges[1:], hist.counts):
        width = right - left
        if cfg.abs_z == 0.0 and right <= 1.0:
            analytic = (cf.kumaraswamy_cdf(right, N) - cf.kumaraswamy_cdf(left, N)) / width
        else:
            analytic = math.nan
        rows.append({"bin_left": float(left), "bin_right": float(right), "count": int(count),
                     "density": float(count / (total * width)), "analytic_density": float(analytic)})
    kum = cf.kumaraswamy_moments(N)
    meta = {
        "moments": asdict(hist.moments),
        "kumaraswamy_moments": asdict(kum),
        "ks_statistic": hist.ks_statistic,
        "ks_critical_0.01": 1.63 / math.sqrt(cfg.samples),
        "K1": ki.form_factor(U, 1),
    }
    return rows, meta


def run_form_factor(cfg: ExperimentConfig, workers: int) -> tuple[list[dict], dict]:
    U = ki.build_floquet(cfg.chain())
    rows = []
    for T in range(0, cfg.T_max + 1):
        tr = ki.trace_power(U, T)
        rows.append({"T": T, "form_factor": abs(tr) ** 2 / U.dim,
                     "trace_real": tr.real, "trace_imag": tr.imag})
    return rows, {"dim": U.dim}


def run_rho(cfg: ExperimentConfig, workers: int) -> tuple[list[dict], dict]:
    M = ki.build_magnetization(int(cfg.n))
    rho = en.solve_reimann_rho(M, float(cfg.m_z))
    values, counts = M.spectrum()
    rows = []
    for value, count in zip(values, counts):
        p = float(rho.spectrum[np.flatnonzero(M.eigenvalues == value)[0]])
        rows.append({"eigenvalue": int(value), "multiplicity": int(count), "probability": p,
                     "lambda": math.sqrt(M.dim * p)})
    meta = {"y": rho.y, "purities": {"rho": en.purity(rho)},
            "effective_dimension": en.effective_dimension(rho),
            "trace": float(rho.spectrum.sum()),
            "expectation": float(np.dot(rho.spectrum, M.eigenvalues))}
    return rows, meta


RUNNERS = {
    "histogram": run_histogram,
    "form-factor": run_form_factor,
    "rho-solve": run_rho,
}


# -- output --------------------------------------------------------------------

def format_value(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def render_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[c]) for c in columns])
    return buf.getvalue()


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def render_json(experiment: str, rows: list[dict], columns) -> str:
    doc = {"experiment": experiment, "columns": list(columns),
           "records": [{c: _json_safe(row[c]) for c in columns} for row in rows]}
    return json.dumps(doc, indent=1) + "\n"


def columns_for(experiment: str, rows: list[dict]):
    if experiment in SCAN_EXPERIMENTS:
        return SCAN_COLUMNS
    return tuple(rows[0].keys())


def run(cfg: ExperimentConfig, workers: int = 1, plot: bool = False) -> dict:
    """Run one experiment, write its outputs and return the metadata."""
    start = time.perf_counter()
    runner = RUNNERS.get(cfg.experiment, run_scan)
    rows, meta = runner(cfg, workers)
    columns = columns_for(cfg.experiment, rows)
    out = Path(cfg.output)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    text = render_csv(rows, columns) if cfg.format == "csv" else render_json(cfg.experiment, rows, columns)
    out.write_text(text)
    meta = {"config": cfg.to_dict(), "library_version": __version__,
            "columns": list(columns), **meta,
            "wall_time_s": time.perf_counter() - start}
    if plot:
        from .plotting import PLOTTERS
        kind = "scan" if cfg.experiment in SCAN_EXPERIMENTS else cfg.experiment
        figure = out.with_name(out.name + ".png")
        title = f"{cfg.experiment}: n={cfg.n}, J={cfg.J}, h={cfg.h}, b={cfg.b}"
        PLOTTERS[kind](rows, title, figure)
        meta["figure"] = str(figure)
    Path(str(out) + ".meta.json").write_text(json.dumps(meta, indent=1, default=_json_safe) + "\n")
    return meta


# -- argument handling ---------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="typicality-lab", description=__doc__.split("\n")[0])
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="JSON file with ExperimentConfig keys; flags override it")
    p.add_argument("--n", type=int)
    p.add_argument("--J")
    p.add_argument("--h")
    p.add_argument("--b")
    p.add_argument("--m-z", dest="m_z", type=float)
    p.add_argument("--m-z-prime", dest="m_z_prime", type=float)
    p.add_argument("--z-grid", dest="theta_grid", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--T-max", dest="T_max", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--abs-z", dest="abs_z", type=float)
    p.add_argument("--method", choices=("uniform", "inverse"))
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--plot", action="store_true", help="also render <out>.png")
    return p


def config_from_args(argv) -> tuple[ExperimentConfig, argparse.Namespace]:
    args = build_parser().parse_args(argv)
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]
    data["experiment"] = args.experiment
    for f in fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if f.name != "experiment" and value is not None:
            data[f.name] = value
    return ExperimentConfig.from_mapping(data), args


def main(argv=None) -> int:
    try:
        cfg, args = config_from_args(sys.argv[1:] if argv is None else argv)
        cfg.chain()
    except TypicalityError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        meta = run(cfg, workers=max(1, args.workers), plot=args.plot)
    except (TypicalityError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {cfg.output} ({meta['wall_time_s']:.2f} s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
