"""Benchmark harness: random instance families, algorithm matrices, count tables.

Rows go to ``rows.csv`` / ``rows.json``, discounted bounds to ``bounds.csv``,
median operator-application tables to ``summary.txt`` and the config with
generator choices to ``meta.json``. Apart from the
``wall_time`` column the output depends only on the config.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .discounted import BoundsInterval, lambda_bounds_from_discounted, solve_discounted
from .errors import AviError, InputError
from .model import GeneratorSpec, generate_random_mdp
from .oracle import POLICY_CAP, brute_force_lambda_star, n_policies, oracle_step_size
from .solvers import SolverConfig, parse_lambda0, solve_model
from .ssp import build_ssp

log = logging.getLogger(__name__)

ROW_COLUMNS = (
    "example", "density", "seed", "algorithm", "sweep", "accel", "lambda0",
    "status", "outer_iterations", "operator_applications", "phase1_iterations",
    "lambda_hat", "lambda_star", "bound_lower", "bound_upper", "agree", "error",
    "wall_time",
)
BOUND_COLUMNS = ("example", "density", "seed", "alpha", "lower", "upper",
                 "iterations", "lambda_ref")


def _solver_config(d: dict) -> SolverConfig:
    try:
        return SolverConfig(**d)
    except TypeError as exc:
        raise InputError(f"bad algorithm entry {d!r}: {exc}") from exc
    except ValueError as exc:
        raise InputError(f"bad algorithm entry {d!r}: {exc}") from exc


@dataclass(frozen=True)
class BenchConfig:
    example: str = "uniform"
    n_states: int = 50
    max_actions: int = 50
    densities: tuple = (0.3,)
    seeds: int = 3
    base_seed: int = 0
    cost_range: tuple = (0.0, 10.0)
    algorithms: tuple = ()
    phase1_alphas: tuple = ()
    phase1_eps: float = 1e-9
    oracle: bool = False
    agreement_tol: float = 1e-5
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "densities", tuple(float(d) for d in self.densities))
        object.__setattr__(self, "cost_range", tuple(float(c) for c in self.cost_range))
        object.__setattr__(self, "phase1_alphas", tuple(float(a) for a in self.phase1_alphas))
        algs = tuple(a if isinstance(a, SolverConfig) else _solver_config(a)
                     for a in self.algorithms)
        object.__setattr__(self, "algorithms", algs)
        if self.seeds < 1:
            raise InputError("need at least one seed per cell")
        if not all(0.0 < d <= 1.0 for d in self.densities):
            raise InputError(f"densities must lie in (0, 1], got {self.densities}")
        if not all(0.0 <= a < 1.0 for a in self.phase1_alphas):
            raise InputError("phase-1 discount factors must lie in [0, 1)")
        if self.workers < 1:
            raise InputError("workers must be positive")
        for d in self.densities:
            self.generator(d, 0).check()

    def generator(self, density: float, k: int) -> GeneratorSpec:
        return GeneratorSpec(self.n_states, self.max_actions, density,
                             self.cost_range, self.base_seed + k)

    @classmethod
    def from_dict(cls, data: dict) -> "BenchConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise InputError(f"unknown bench config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "BenchConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise InputError(f"{path}: bench config must be a JSON object")
        return cls.from_dict(data)


@dataclass
class BenchRow:
    example: str
    density: float
    seed: int
    algorithm: str
    sweep: str
    accel: str
    lambda0: str
    status: str
    outer_iterations: int | None = None
    operator_applications: int | None = None
    phase1_iterations: int = 0
    lambda_hat: float | None = None
    lambda_star: float | None = None
    bound_lower: float | None = None
    bound_upper: float | None = None
    agree: bool | None = None
    error: str = ""
    wall_time: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == "converged"


@dataclass
class BoundRow:
    example: str
    density: float
    seed: int
    alpha: float
    lower: float
    upper: float
    iterations: int
    lambda_ref: float | None


@dataclass
class BenchResult:
    rows: list = field(default_factory=list)
    bounds: list = field(default_factory=list)
    config: BenchConfig | None = None

    def by_instance(self):
        groups = {}
        for r in self.rows:
            groups.setdefault((r.density, r.seed), []).append(r)
        return groups


def _phase1(m, alpha, eps):
    v, it = solve_discounted(m, alpha, SolverConfig().phase1_accel, eps)
    return lambda_bounds_from_discounted(v, alpha, it)


def _run_cell(cfg: BenchConfig, density: float, k: int):
    spec = cfg.generator(density, k)
    m = generate_random_mdp(spec)
    s = build_ssp(m)
    seed = spec.rng_seed
    ref = None
    if cfg.oracle and n_policies(m) <= POLICY_CAP:
        ref, _ = brute_force_lambda_star(m)

    cache: dict[float, BoundsInterval] = {}

    def bounds_at(alpha, eps):
        key = (alpha, eps)
        if key not in cache:
            cache[key] = _phase1(m, alpha, eps)
        return cache[key]

    bound_rows = [BoundRow(cfg.example, density, seed, a, b.lower, b.upper, b.iterations, ref)
                  for a in cfg.phase1_alphas
                  for b in [bounds_at(a, cfg.phase1_eps)]]

    rows = []
    for sc in cfg.algorithms:
        row = BenchRow(cfg.example, density, seed, sc.label, sc.sweep.value, sc.accel.value,
                       str(sc.lambda0), "error", lambda_star=ref)
        t0 = time.perf_counter()
        try:
            kind, alpha = parse_lambda0(sc.lambda0)
            b = bounds_at(alpha, sc.phase1_eps) if kind == "disc" else None
            gamma = oracle_step_size(m) if sc.gamma_oracle else None
            sol = solve_model(s, sc, b, gamma)
        except AviError as exc:
            row.error = f"{type(exc).__name__}: {exc}"
        else:
            row.status = sol.status
            row.outer_iterations = sol.outer_iterations
            row.operator_applications = sol.operator_applications
            row.lambda_hat = sol.lam
            if b is not None:
                row.phase1_iterations = b.iterations
                row.bound_lower, row.bound_upper = b.lower, b.upper
        row.wall_time = time.perf_counter() - t0
        rows.append(row)
    _flag_agreement(rows, ref, cfg.agreement_tol)
    return rows, bound_rows


def _flag_agreement(rows, ref, tol):
    """Mark converged rows whose estimate strays from the instance reference."""
    done = [r.lambda_hat for r in rows if r.converged]
    if not done:
        return
    centre = ref if ref is not None else float(np.median(done))
    for r in rows:
        if r.converged:
            r.agree = bool(abs(r.lambda_hat - centre) <= tol)


def _cell_job(args):
    return _run_cell(*args)


def run_benchmark(cfg: BenchConfig, out_dir=None) -> BenchResult:
    """Run every configured algorithm on every (density, seed) instance."""
    jobs = [(cfg, d, k) for d in cfg.densities for k in range(cfg.seeds)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_cell_job, jobs))
    else:
        results = [_cell_job(j) for j in jobs]
    out = BenchResult(config=cfg)
    for rows, bounds in results:
        out.rows.extend(rows)
        out.bounds.extend(bounds)
    if out_dir is not None:
        write_outputs(out, out_dir)
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv(records, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for rec in records:
        d = asdict(rec)
        w.writerow([_fmt(d[c]) for c in columns])
    return buf.getvalue()


def rows_csv(rows) -> str:
    return _csv(rows, ROW_COLUMNS)


def bounds_csv(bounds) -> str:
    return _csv(bounds, BOUND_COLUMNS)


def summary_tables(result: BenchResult) -> str:
    """Median operator applications per density and algorithm, plus bounds medians."""
    lines = []
    labels = list(dict.fromkeys(r.algorithm + ("" if r.lambda0 == "rmax" else f"[{r.lambda0}]")
                                for r in result.rows))
    if labels:
        cells = {}
        for r in result.rows:
            lab = r.algorithm + ("" if r.lambda0 == "rmax" else f"[{r.lambda0}]")
            if r.converged:
                cells.setdefault((r.density, lab), []).append(r.operator_applications)
        width = max(12, *(len(x) + 2 for x in labels))
        lines.append("median operator applications (converged runs)")
        lines.append("density".ljust(9) + "".join(x.rjust(width) for x in labels))
        for d in dict.fromkeys(r.density for r in result.rows):
            vals = [cells.get((d, x)) for x in labels]
            txt = ["-" if not v else f"{np.median(v):g}" for v in vals]
            lines.append(f"{d:<9g}" + "".join(t.rjust(width) for t in txt))
    if result.bounds:
        if lines:
            lines.append("")
        alphas = list(dict.fromkeys(b.alpha for b in result.bounds))
        lines.append("median discounted bounds (lower, upper) per density")
        lines.append("density".ljust(9) + "".join(f"alpha={a:g}".rjust(24) for a in alphas))
        for d in dict.fromkeys(b.density for b in result.bounds):
            txt = []
            for a in alphas:
                sel = [b for b in result.bounds if b.density == d and b.alpha == a]
                lo = np.median([b.lower for b in sel])
                hi = np.median([b.upper for b in sel])
                txt.append(f"{lo:.4f}, {hi:.4f}".rjust(24))
            lines.append(f"{d:<9g}" + "".join(txt))
    return "\n".join(lines) + "\n"


def _json_safe(d):
    return {k: (None if isinstance(v, float) and not np.isfinite(v) else v) for k, v in d.items()}


def _config_record(cfg: BenchConfig) -> dict:
    rec = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if f.name == "algorithms":
            value = [{k: (v.value if hasattr(v, "value") else v)
                      for k, v in asdict(sc).items()} for sc in value]
        rec[f.name] = list(value) if isinstance(value, tuple) else value
    return rec


def metadata(cfg: BenchConfig) -> dict:
    """Run metadata; ``cost_range_is_default`` marks the unpublished cost range choice."""
    from . import __version__
    return {
        "package_version": __version__,
        "config": _config_record(cfg),
        "cost_range_is_default": cfg.cost_range == BenchConfig.cost_range,
        "generator": "uniform action counts in [1, max_actions], "
                     "round(density * n) nonzeros per row, forced entry to the last state",
    }


def write_outputs(result: BenchResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rows.csv").write_text(rows_csv(result.rows))
    (out / "rows.json").write_text(json.dumps(
        [{c: _json_safe(asdict(r))[c] for c in ROW_COLUMNS} for r in result.rows], indent=1))
    (out / "bounds.csv").write_text(bounds_csv(result.bounds))
    (out / "summary.txt").write_text(summary_tables(result))
    if result.config is not None:
        (out / "meta.json").write_text(json.dumps(metadata(result.config), indent=1) + "\n")
