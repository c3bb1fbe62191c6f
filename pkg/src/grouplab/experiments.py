"""End-to-end experiment runners producing deterministic reports.

Each runner takes a config dataclass and a master seed and returns an
``ExperimentReport``.  Cells draw from their own streams keyed by
(seed, experiment stream, cell index), so reports do not depend on how many
cells run concurrently.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from itertools import permutations
from typing import Any, Callable, Sequence

import numpy as np

from . import empirical as emp
from .errors import ConfigError
from .estimates import EstimateWithCI, RunningStats, Z_BAND, chunk_sizes, monte_carlo
from .laplacian import eigenvalue_envelope, laplacian_audit, laplacian_table
from .partitions import (dims_table, lb1_audit, lb2_audit, lr_conservation_audit, lr_level_audit,
                         step_roundtrip_audit, weyl_dimension)
from .sampling import (GroupSpec, RngStream, gaussian_batch, gmd_batch, gram_schmidt_batch, haar_batch,
                       phi_array)
from .weyl import MonomialIndex, comfortable_junta, lambda_bracket_audit, lambda_S

SCHEMA = 1
STREAMS = {
    "haar-check": 1, "coupling": 2, "level-d": 3, "product-free": 4, "mixing": 5,
    "doubling": 6, "repr-audit": 7, "dims": 8, "laplacian": 9,
}
STATUSES = ("pass", "fail", "skipped", "info", "out_of_range")


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    if isinstance(x, list):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return x


@dataclass
class Cell:
    name: str
    params: dict
    value: Any = None
    std_error: float | None = None
    n_samples: int | None = None
    bound: Any = None
    status: str = "pass"
    note: str = ""
    seed: dict | None = None

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def estimate_cell(name: str, params: dict, est: EstimateWithCI, bound, passed: bool | None,
                  note: str = "") -> Cell:
    status = "info" if passed is None else ("pass" if passed else "fail")
    return Cell(name, params, est.value, est.std_error, est.n_samples, bound, status, note, est.seed)


def exact_cell(name: str, params: dict, value, bound, passed: bool | None, note: str = "") -> Cell:
    status = "info" if passed is None else ("pass" if passed else "fail")
    return Cell(name, params, value, None, None, bound, status, note)


@dataclass
class ExperimentReport:
    experiment: str
    group: str | None
    grid: dict
    cells: list[Cell]
    seed: int
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not any(c.status == "fail" for c in self.cells)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def counts(self) -> dict:
        return {s: sum(c.status == s for c in self.cells) for s in STATUSES}

    def to_dict(self) -> dict:
        return _jsonable({
            "experiment": self.experiment,
            "group": self.group,
            "grid": self.grid,
            "seed": self.seed,
            "verdict": self.verdict,
            "counts": self.counts(),
            "notes": self.notes,
            "cells": [c.to_dict() for c in self.cells],
        })

    def to_json(self) -> str:
        return json.dumps({"schema": SCHEMA, **self.to_dict()}, indent=2, sort_keys=True)

    def to_text(self) -> str:
        head = ["cell", "value", "s.e.", "bound", "status", "note"]
        rows = []
        for c in self.cells:
            rows.append([c.name, _fmt(c.value), _fmt(c.std_error), _fmt(c.bound), c.status, c.note])
        widths = [max(len(str(r[i])) for r in [head] + rows) for i in range(len(head))]
        lines = [f"{self.experiment}  group={self.group}  seed={self.seed}  verdict={self.verdict}"]
        lines += [f"  note: {n}" for n in self.notes]
        for r in [head] + rows:
            lines.append("  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip())
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", "cell", "params", "value", "std_error", "n_samples", "bound",
                    "status", "note"])
        for c in self.cells:
            w.writerow([self.experiment, c.name, json.dumps(_jsonable(c.params), sort_keys=True),
                        _jsonable(c.value), c.std_error, c.n_samples, _jsonable(c.bound), c.status,
                        c.note])
        return buf.getvalue()


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _stream(experiment: str, seed: int, *path: int) -> RngStream:
    return RngStream(seed, STREAMS[experiment], tuple(path))


def run_parallel(tasks: Sequence[Callable[[], Any]], jobs: int | None = None) -> list:
    """Run independent zero-argument tasks, returning results in task order."""
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda t: t(), tasks))


def _within(est: EstimateWithCI, target: float) -> bool:
    return est.contains(target, Z_BAND)


# ---------------------------------------------------------------------------
# Configs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HaarCheckConfig:
    family: str = "SO"
    n: int = 8
    samples: int = 100_000
    x11_tol: float = 0.005
    unit_tol: float = 1e-10
    coupling_n: int = 16
    roundtrip_samples: int = 1000
    roundtrip_tol: float = 1e-9
    forward_samples: int = 100_000
    covariance_pairs: int = 200

    SAMPLE_FIELDS = ("samples", "forward_samples")

    @classmethod
    def quick(cls) -> "HaarCheckConfig":
        return cls(samples=20_000, forward_samples=20_000, roundtrip_samples=200)


@dataclass(frozen=True)
class CouplingConfig:
    n: int = 16
    diag_dmax: int = 4
    diag_samples: int = 1_000_000
    offdiag_ns: tuple[int, ...] = (16, 64)
    offdiag_dmax: int = 4
    offdiag_samples: int = 200_000
    gmd_ns: tuple[int, ...] = (8, 16, 32)
    gmd_samples: int = 100_000
    lambda_n: int = 12
    lambda_samples: int = 200_000
    bracket_ns: tuple[int, ...] = (36, 100)
    bracket_dmax: int = 6
    noise_ds: tuple[int, ...] = (1, 2, 3)
    rhos: tuple[float, ...] = (0.3, 0.5, 0.8)
    noise_C: float = 4.0
    noise_samples: int = 100_000
    comf_n: int = 10
    comf_samples: int = 100_000

    SAMPLE_FIELDS = ("diag_samples", "offdiag_samples", "gmd_samples", "lambda_samples",
                     "noise_samples", "comf_samples")

    @classmethod
    def quick(cls) -> "CouplingConfig":
        return cls(diag_dmax=2, diag_samples=20_000, offdiag_samples=20_000, gmd_samples=20_000,
                   lambda_samples=20_000, bracket_dmax=4, noise_ds=(1, 2), rhos=(0.5,), noise_samples=10_000,
                   comf_samples=10_000)


@dataclass(frozen=True)
class LevelDConfig:
    n: int = 12
    alphas: tuple[float, ...] = (0.05, 0.1, 0.2, 0.5)
    ds: tuple[int, ...] = (0, 1, 2, 3)
    C: float = 10.0
    n_fit: int = 200_000
    n_eval: int = 200_000

    SAMPLE_FIELDS = ("n_fit", "n_eval")

    @classmethod
    def quick(cls) -> "LevelDConfig":
        return cls(n_fit=20_000, n_eval=20_000)


@dataclass(frozen=True)
class ProductFreeConfig:
    ns: tuple[int, ...] = (4, 8)
    thresholds: tuple[float, ...] = (-0.6, 0.0)
    pairs: int = 100_000

    SAMPLE_FIELDS = ("pairs",)
    SAFE_THRESHOLD = -0.6

    @classmethod
    def quick(cls) -> "ProductFreeConfig":
        return cls(pairs=5_000)


@dataclass(frozen=True)
class MixingConfig:
    n: int = 6
    t_anti: float = 0.5
    mid_measure: float = 0.4
    samples: int = 100_000
    sweep_ts: tuple[float, ...] = (0.6, 0.3, 0.0)
    sweep_outer: int = 4000
    sweep_inner: int = 50

    SAMPLE_FIELDS = ("samples", "sweep_outer")

    @classmethod
    def quick(cls) -> "MixingConfig":
        return cls(samples=10_000, sweep_outer=500, sweep_inner=20)


@dataclass(frozen=True)
class DoublingConfig:
    n: int = 3
    alphas: tuple[float, ...] = (1.0, 0.5, 0.05)
    conv_outer: int = 4000
    conv_inner: int = 100
    witness_outer: int = 4000
    witness_inner: int = 200

    SAMPLE_FIELDS = ("conv_outer", "witness_outer")
    MIN_MEASURE = 1e-2

    @classmethod
    def quick(cls) -> "DoublingConfig":
        return cls(conv_outer=500, conv_inner=30, witness_outer=500, witness_inner=50)


@dataclass(frozen=True)
class ReprAuditConfig:
    lb1_ns: tuple[int, ...] = (10, 20)
    lb1_dmax: int = 6
    lb2_ns: tuple[int, ...] = (10, 12)
    lr_ns: tuple[int, ...] = (5, 8)
    lr_size: int = 4
    lr_level_ns: tuple[int, ...] = (5, 6, 8)
    lr_level_total: int = 5
    oracle_max: int = 20
    standard_nmax: int = 30
    laplacian_nmax: int = 12
    laplacian_dmax: int = 8

    SAMPLE_FIELDS = ()

    @classmethod
    def quick(cls) -> "ReprAuditConfig":
        return cls()


@dataclass(frozen=True)
class DimsConfig:
    family: str = "SO"
    n: int = 11
    dmax: int = 6

    SAMPLE_FIELDS = ()


@dataclass(frozen=True)
class LaplacianConfig:
    families: tuple[str, ...] = ("SO", "SU", "Sp", "Spin")
    n: int = 0  # 0 sweeps every n up to n_max
    n_max: int = 12
    dmax: int = 8

    SAMPLE_FIELDS = ()


CONFIGS = {
    "haar-check": HaarCheckConfig, "coupling": CouplingConfig, "level-d": LevelDConfig,
    "product-free": ProductFreeConfig, "mixing": MixingConfig, "doubling": DoublingConfig,
    "repr-audit": ReprAuditConfig, "dims": DimsConfig, "laplacian": LaplacianConfig,
}


def _coerce(default, text: str, key: str):
    try:
        if isinstance(default, bool):
            if text.strip().lower() in ("1", "true", "yes", "on"):
                return True
            if text.strip().lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, tuple):
            items = [s.strip() for s in text.split(",") if s.strip()]
            kind = type(default[0]) if default else float
            return tuple(kind(s) if kind is not str else s for s in items)
        return type(default)(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {text!r}") from exc


def make_config(experiment: str, params: dict | None = None, samples: int | None = None,
                quick: bool = False):
    """Build the config for an experiment from string (or typed) parameters."""
    if experiment not in CONFIGS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    cls = CONFIGS[experiment]
    base = cls.quick() if quick and hasattr(cls, "quick") else cls()
    updates = {}
    known = {f.name: getattr(base, f.name) for f in fields(cls)}
    for key, val in (params or {}).items():
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"unknown key {key!r} for {experiment}")
        updates[key] = _coerce(known[key], val, key) if isinstance(val, str) else val
    if samples is not None:
        if samples < 1:
            raise ConfigError("--samples must be positive")
        for name in cls.SAMPLE_FIELDS:
            updates[name] = int(samples)
    return replace(base, **updates)


def config_dict(cfg) -> dict:
    return _jsonable({f.name: getattr(cfg, f.name) for f in fields(cfg)})


# ---------------------------------------------------------------------------
# Haar correctness and the coupling identity
# ---------------------------------------------------------------------------

def run_haar_check(cfg: HaarCheckConfig = HaarCheckConfig(), seed: int = 0,
                   jobs: int | None = None) -> ExperimentReport:
    g = GroupSpec(cfg.family, cfg.n)
    name = "haar-check"
    cells = []

    def unit_draw(sub: RngStream, size: int) -> np.ndarray:
        X = haar_batch(g, sub, size)
        if g.field == "quaternion":
            X = phi_array(X)
        eye = np.eye(X.shape[-1])
        orth = np.abs(np.conj(np.swapaxes(X, -1, -2)) @ X - eye).max(axis=(-2, -1))
        det = np.abs(np.linalg.det(X) - 1.0)
        x11 = np.abs(X[:, 0, 0]) ** 2
        return np.stack([orth, det, x11], axis=1)

    rng = _stream(name, seed, 0)
    worst = np.zeros(2)
    stats = RunningStats()
    for i, size in enumerate(chunk_sizes(cfg.samples)):
        vals = unit_draw(rng.fork(i), size)
        worst = np.maximum(worst, vals[:, :2].max(axis=0))
        stats.push(vals[:, 2])
    params = {"family": g.family, "n": g.n, "samples": cfg.samples}
    cells.append(exact_cell("unitarity", params, float(worst[0]), cfg.unit_tol,
                            bool(worst[0] < cfg.unit_tol)))
    cells.append(exact_cell("determinant", params, float(worst[1]), cfg.unit_tol,
                            bool(worst[1] < cfg.unit_tol)))
    est = stats.estimate(rng.provenance)
    target = 1.0 / g.n if g.field != "quaternion" else 1.0 / (2 * g.n)
    cells.append(estimate_cell("E|X11|^2", params, est, target,
                               abs(est.value - target) < cfg.x11_tol, f"tolerance {cfg.x11_tol}"))
    if g.field == "real":
        cells += coupling_identity_cells(cfg.coupling_n, cfg.roundtrip_samples, cfg.roundtrip_tol,
                                         cfg.forward_samples, cfg.covariance_pairs,
                                         _stream(name, seed, 1))
    notes = ["samples are undilated; the coupling cells use the √n convention"]
    return ExperimentReport(name, str(g), config_dict(cfg), cells, seed, notes)


def coupling_identity_cells(n: int, roundtrip_samples: int, tol: float, forward_samples: int,
                            n_pairs: int, rng: RngStream) -> list[Cell]:
    """Round trip √n·GS(Y)·G_induced = Y, and moments of √n·X·G for independent X, G."""
    cells = []
    Y = gaussian_batch(n, "real", rng.fork(0), roundtrip_samples)
    Q, T = gram_schmidt_batch(Y, "real")
    G = T / math.sqrt(n)
    err = float(np.abs(math.sqrt(n) * Q @ G - Y).max())
    upper = bool(np.allclose(np.tril(G, -1), 0.0))
    cells.append(exact_cell("coupling-roundtrip", {"n": n, "samples": roundtrip_samples}, err, tol,
                            err < tol and upper, "induced G is upper triangular" if upper else
                            "induced G not upper triangular"))

    g = GroupSpec("SO", n)
    pair_rng = np.random.default_rng(list(rng.fork(1).generator.integers(0, 2**32, 4)))
    flat_pairs = set()
    while len(flat_pairs) < n_pairs:
        a, b = pair_rng.choice(n * n, 2, replace=False)
        flat_pairs.add((int(min(a, b)), int(max(a, b))))
    pairs = np.array(sorted(flat_pairs))

    def draw(s: RngStream, size: int) -> np.ndarray:
        X = haar_batch(g, s.fork(0), size)
        Gm = gmd_batch(n, "real", s.fork(1), size)
        Z = (math.sqrt(n) * X @ Gm).reshape(size, -1)
        mean = Z.mean(axis=1)
        second = (Z**2).mean(axis=1)
        cov = Z[:, pairs[:, 0]] * Z[:, pairs[:, 1]]
        return np.concatenate([mean[:, None], second[:, None], cov], axis=1)

    ests = monte_carlo(draw, forward_samples, rng.fork(2)).estimates(rng.provenance)
    params = {"n": n, "samples": forward_samples}
    cells.append(estimate_cell("forward-entry-mean", params, ests[0], 0.0, _within(ests[0], 0.0)))
    cells.append(estimate_cell("forward-entry-variance", params, ests[1], 1.0, _within(ests[1], 1.0)))
    for (a, b), est in zip(pairs, ests[2:]):
        p = {"n": n, "entries": [divmod(int(a), n), divmod(int(b), n)]}
        cells.append(estimate_cell("forward-covariance", p, est, 0.0, _within(est, 0.0)))
    return cells


# ---------------------------------------------------------------------------
# Coupling suite
# ---------------------------------------------------------------------------

def diagonal_forms(n: int, dmax: int) -> list[tuple[int, ...]]:
    """Column tuples for rows 0..d-1: permutations of the first and of the last d columns."""
    out = []
    for d in range(1, dmax + 1):
        out += list(permutations(range(d)))
        out += [p for p in permutations(range(n - d, n)) if p not in out]
    return out


def offdiagonal_grid(n: int, dmax: int) -> list[tuple[MonomialIndex, MonomialIndex, int, int]]:
    """(x_I, x_J, d, ℓ) with I the identity on rows 0..d-1 and J moving the first ℓ rows to fresh columns."""
    grid = []
    for d in range(1, dmax + 1):
        for ell in range(1, d + 1):
            I = MonomialIndex.of((r, r) for r in range(d))
            J = MonomialIndex.of((r, d + r if r < ell else r) for r in range(d))
            grid.append((I, J, d, ell))
    return grid


def gmd_grid(n: int) -> list[list[tuple[int, int]]]:
    """Admissible index multisets: no entry more than twice."""
    last = n - 1
    return [
        [(0, 1)],
        [(0, 1), (0, 1)],
        [(0, 0)],
        [(0, 0), (0, 0)],
        [(0, 1), (1, 2)],
        [(0, 1), (0, 1), (1, 2), (1, 2)],
        [(0, 0), (0, 1), (0, 1)],
        [(last, last), (last, last)],
        [(0, 2), (1, 2), (0, 2), (1, 2)],
        [(1, 1), (0, 1), (0, 1), (2, 3)],
    ]


LAMBDA_SETS = [[(0, 0)], [(0, 0), (1, 1)], [(0, 1), (1, 0)], [(0, 2), (1, 0), (2, 1)]]
NOISE_SHAPES = {1: [(1,)], 2: [(2,), (1, 1)], 3: [(3,), (2, 1), (1, 1, 1)], 4: [(4,), (2, 2), (1, 1, 1, 1)]}


def run_coupling_suite(cfg: CouplingConfig = CouplingConfig(), seed: int = 0,
                       jobs: int | None = None) -> ExperimentReport:
    name = "coupling"
    n = cfg.n

    def diagonal() -> list[Cell]:
        forms = diagonal_forms(n, cfg.diag_dmax)
        polys = [emp.row_form(cols, n) for cols in forms]
        ests = emp.norms_under("nu", polys, cfg.diag_samples, _stream(name, seed, 0))
        return [estimate_cell("nu-diagonal", {"n": n, "columns": list(cols), "d": len(cols)}, est, 1.0,
                              _within(est, 1.0)) for cols, est in zip(forms, ests)]

    def offdiagonal(k: int, m: int) -> Callable[[], list[Cell]]:
        def run() -> list[Cell]:
            grid = offdiagonal_grid(m, cfg.offdiag_dmax)
            ests = emp.off_diagonal_pairings([(I, J) for I, J, _, _ in grid], m, cfg.offdiag_samples,
                                             _stream(name, seed, 1, k))
            out = []
            for (I, J, d, ell), est in zip(grid, ests):
                eps = emp.epsilon_ell(ell, d, m)
                out.append(estimate_cell("nu-offdiagonal", {"n": m, "d": d, "ell": ell,
                                                            "J": [c for _, c, _ in J.positions]},
                                         est, eps, abs(est.value) <= eps + Z_BAND * est.std_error))
            return out
        return run

    def gmd(k: int, m: int) -> Callable[[], list[Cell]]:
        def run() -> list[Cell]:
            out = []
            for j, idx in enumerate(gmd_grid(m)):
                est = emp.gmd_moment(idx, m, cfg.gmd_samples, _stream(name, seed, 2, k, j))
                b = emp.gmd_bound(idx, m)
                out.append(estimate_cell("gmd-moment", {"n": m, "indices": idx, "ell": emp.gmd_ell(idx)},
                                         est, b, est.value <= b + Z_BAND * est.std_error))
            return out
        return run

    def lambdas() -> list[Cell]:
        out = []
        m = cfg.lambda_n
        for j, S in enumerate(LAMBDA_SETS):
            est = emp.lambda_S_regression(S, m, cfg.lambda_samples, _stream(name, seed, 3, j))
            target = lambda_S(S, m)
            out.append(estimate_cell("lambda-S-regression", {"n": m, "S": S}, est, target,
                                     _within(est, target)))
        return out

    def bracket() -> list[Cell]:
        rows = lambda_bracket_audit(cfg.bracket_ns, cfg.bracket_dmax)
        bad = [r for r in rows if not r.passed]
        note = f"{len(rows)} sets" + (f"; first failure n={bad[0].n} S={bad[0].S}" if bad else "")
        return [exact_cell("lambda-S-bracket", {"ns": list(cfg.bracket_ns), "dmax": cfg.bracket_dmax},
                           len(bad), 0, not bad, note)]

    def noise(k: int, rho: float) -> Callable[[], list[Cell]]:
        def run() -> list[Cell]:
            shapes = [lam for d in cfg.noise_ds for lam in NOISE_SHAPES[d]]
            polys = [comfortable_junta(lam, n) for lam in shapes]
            res = emp.noise_pairings(polys, rho, GroupSpec("SO", n), cfg.noise_samples,
                                     _stream(name, seed, 4, k), cfg.noise_C)
            out = []
            for lam, (pair, norm, margin) in zip(shapes, res):
                floor = (rho / cfg.noise_C) ** sum(lam)
                ok = margin.value >= -Z_BAND * margin.std_error
                out.append(estimate_cell("noise-floor", {"n": n, "shape": list(lam), "rho": rho},
                                         pair, floor * norm.value, ok,
                                         f"margin {margin.value:.4g} ± {margin.std_error:.2g}"))
            return out
        return run

    def comf() -> list[Cell]:
        out = []
        m = cfg.comf_n
        for j, lam in enumerate([(), (1,), (2,), (1, 1)]):
            d = sum(lam)
            f = comfortable_junta(lam, m) if d else emp.GroupPolynomial.constant(1.0, m)
            lhs, rhs, diff = emp.comf_projection_mc(f, d, cfg.comf_samples, _stream(name, seed, 5, j))
            out.append(estimate_cell("comf-projection", {"n": m, "shape": list(lam),
                                                         "factor": emp.comf_projection_factor(d, m)},
                                     lhs, rhs.value, _within(diff, 0.0),
                                     f"difference {diff.value:.3g} ± {diff.std_error:.2g}"))
        return out

    tasks = [diagonal]
    tasks += [offdiagonal(k, m) for k, m in enumerate(cfg.offdiag_ns)]
    tasks += [gmd(k, m) for k, m in enumerate(cfg.gmd_ns)]
    tasks += [lambdas, bracket]
    tasks += [noise(k, rho) for k, rho in enumerate(cfg.rhos)]
    tasks += [comf]
    cells = [c for part in run_parallel(tasks, jobs) for c in part]
    notes = [f"noise floor tested at C = {cfg.noise_C}",
             "multi-cell checks use the 3 s.e. band per cell at a fixed seed"]
    return ExperimentReport(name, f"SO({n})", config_dict(cfg), cells, seed, notes)


# ---------------------------------------------------------------------------
# Level-d inequality
# ---------------------------------------------------------------------------

def run_level_d(cfg: LevelDConfig = LevelDConfig(), seed: int = 0,
                jobs: int | None = None) -> ExperimentReport:
    name = "level-d"
    g = GroupSpec("SO", cfg.n)
    bases: dict[int, emp.EmpiricalBasis] = {}
    plan = []
    for i, alpha in enumerate(cfg.alphas):
        for d in cfg.ds:
            params = {"n": cfg.n, "alpha": alpha, "d": d}
            if 2 * d >= cfg.n:
                plan.append(Cell("level-d", params, status="skipped", note="d >= n/2"))
            elif not emp.level_d_admissible(alpha, d):
                plan.append(Cell("level-d", params, status="skipped", note="d > log(1/alpha)/2"))
            else:
                plan.append((i, alpha, d, params))
    for d in sorted({p[2] for p in plan if isinstance(p, tuple)}):
        bases[d] = emp.fit_empirical_basis(g, d, max(cfg.n_fit, emp.FIT_FACTOR * len(emp.monomial_list(cfg.n, d))),
                                           _stream(name, seed, 0, d))

    def cell(i: int, alpha: float, d: int, params: dict) -> Callable[[], Cell]:
        def run() -> Cell:
            t = emp.cap_threshold(cfg.n, alpha)
            f = emp.IndicatorSpec.cap(t)
            est = emp.project_low_degree_norm(f, bases[d], cfg.n_eval, _stream(name, seed, 1, i, d))
            bound = emp.level_d_bound(alpha, d, cfg.C)
            lo = alpha**2 - Z_BAND * est.std_error
            ok = lo <= est.value <= bound + Z_BAND * est.std_error
            return estimate_cell("level-d", {**params, "threshold": t, "rank": bases[d].rank}, est,
                                 bound, ok, f"lower {alpha ** 2:.4g}")
        return run

    tasks = [cell(*p) for p in plan if isinstance(p, tuple)]
    done = iter(run_parallel(tasks, jobs))
    cells = [p if isinstance(p, Cell) else next(done) for p in plan]
    notes = [f"envelope alpha^2 (10C log(1/alpha)/d)^d with C = {cfg.C}",
             "basis fitted and evaluated on independent streams"]
    return ExperimentReport(name, str(g), config_dict(cfg), cells, seed, notes)


# ---------------------------------------------------------------------------
# Product-freeness, mixing and doubling
# ---------------------------------------------------------------------------

def run_product_free(cfg: ProductFreeConfig = ProductFreeConfig(), seed: int = 0,
                     jobs: int | None = None) -> ExperimentReport:
    name = "product-free"

    def cell(i: int, j: int, n: int, t: float) -> Callable[[], Cell]:
        def run() -> Cell:
            g = GroupSpec("SO", n)
            A = emp.IndicatorSpec.cap(t, "lt")
            mu = A.measure(g)
            rng = _stream(name, seed, i, j)
            hits = emp.product_hits(A, g, cfg.pairs, rng)
            implied_c = -math.log(mu) / n ** (1 / 3)
            params = {"n": n, "threshold": t, "pairs": cfg.pairs, "measure": mu,
                      "implied_c": implied_c}
            if t <= cfg.SAFE_THRESHOLD:
                return Cell("product-free", params, hits, None, cfg.pairs, 0,
                            "pass" if hits == 0 else "fail", "products landing in A", rng.provenance)
            note = "not product-free" if hits else "no violation observed"
            return Cell("product-free", params, hits, None, cfg.pairs, None, "info", note,
                        rng.provenance)
        return run

    tasks = [cell(i, j, n, t) for i, n in enumerate(cfg.ns) for j, t in enumerate(cfg.thresholds)]
    cells = run_parallel(tasks, jobs)
    notes = ["measure reported against exp(-c n^(1/3)) as context: implied_c = -log(mu)/n^(1/3)",
             f"thresholds above {cfg.SAFE_THRESHOLD} are demonstrations, not pass/fail cells"]
    return ExperimentReport(name, "SO(n)", config_dict(cfg), list(cells), seed, notes)


def run_mixing(cfg: MixingConfig = MixingConfig(), seed: int = 0,
               jobs: int | None = None) -> ExperimentReport:
    name = "mixing"
    g = GroupSpec("SO", cfg.n)
    cap = emp.IndicatorSpec.cap

    def whole() -> Cell:
        W = emp.IndicatorSpec.whole()
        est = emp.convolution_form(W, W, W, g, cfg.samples, _stream(name, seed, 0))
        return estimate_cell("whole-group", {"n": cfg.n}, est, 1.0, _within(est, 1.0))

    def mid() -> Cell:
        t = emp.cap_threshold(cfg.n, cfg.mid_measure)
        A = cap(t)
        est = emp.convolution_form(A, A, A, g, cfg.samples, _stream(name, seed, 1))
        return estimate_cell("aligned-caps", {"n": cfg.n, "measure": cfg.mid_measure, "threshold": t},
                             est, None, None)

    def anti() -> Cell:
        t = cfg.t_anti
        A, C = cap(t), cap(-t, "lt")
        mu = A.measure(g)
        params = {"n": cfg.n, "threshold": t, "measure": mu}
        if mu < 1e-2:
            return Cell("anti-aligned", params, status="out_of_range", note="cap measure below 1e-2")
        est = emp.convolution_form(A, A, C, g, cfg.samples, _stream(name, seed, 2))
        return estimate_cell("anti-aligned", params, est, 1.0,
                             est.value + Z_BAND * est.std_error < 1.0,
                             "Pr[ab in C]/mu(C) below 1 by 3 s.e.")

    def sweep() -> list[Cell]:
        out, prev = [], None
        for j, t in enumerate(cfg.sweep_ts):
            A = cap(t)
            est = emp.l2_mixing_proxy(A, A, g, cfg.sweep_outer, cfg.sweep_inner,
                                      _stream(name, seed, 3, j))
            ok = est.value >= -Z_BAND * est.std_error
            note = "nonnegative"
            if prev is not None:
                slack = Z_BAND * math.hypot(prev.std_error, est.std_error)
                ok = ok and est.value <= prev.value + slack
                note = "nonnegative, not above the smaller cap"
            out.append(estimate_cell("l2-proxy", {"n": cfg.n, "threshold": t, "measure": A.measure(g)},
                                     est, 0.0, ok, note))
            prev = est
        return out

    asym_t = 10 / cfg.n ** (1 / 3)
    res = run_parallel([whole, mid, anti, sweep], jobs)
    cells = res[:3] + res[3]
    cells.append(Cell("asymptotic-threshold", {"n": cfg.n, "threshold": asym_t}, status="out_of_range",
                      note="10/n^(1/3) exceeds 1 at this n"))
    notes = ["no unbiased total-variation estimator: the L2 proxy ||f_A*f_B - 1||^2 stands in"]
    return ExperimentReport(name, str(g), config_dict(cfg), cells, seed, notes)


def run_doubling(cfg: DoublingConfig = DoublingConfig(), seed: int = 0,
                 jobs: int | None = None) -> ExperimentReport:
    name = "doubling"
    g = GroupSpec("SO", cfg.n)

    def cell(i: int, alpha: float) -> Callable[[], Cell]:
        def run() -> Cell:
            A = emp.IndicatorSpec.whole() if alpha >= 1 else emp.IndicatorSpec.cap(emp.cap_threshold(cfg.n, alpha))
            params = {"n": cfg.n, "alpha": alpha}
            if A.measure(g) < cfg.MIN_MEASURE:
                return Cell("doubling", params, status="out_of_range", note="measure below 1e-2")
            sq = emp.conv_sq_norm(A, g, cfg.conv_outer, cfg.conv_inner, _stream(name, seed, i, 0))
            direct = emp.square_set_witness(A, g, cfg.witness_outer, cfg.witness_inner,
                                            _stream(name, seed, i, 1))
            lower = 1.0 / sq.value
            ok = lower <= direct.value + Z_BAND * direct.std_error
            params.update(conv_sq_norm=sq.value, conv_sq_se=sq.std_error, lower_bound=lower)
            return estimate_cell("doubling", params, direct, lower, ok,
                                 "direct witness estimate of mu(A^2) against 1/||f*f||^2")
        return run

    cells = run_parallel([cell(i, a) for i, a in enumerate(cfg.alphas)], jobs)
    notes = ["direct estimates count x with an inner witness y in A, xy^-1 in A, so they bound mu(A^2) from below"]
    return ExperimentReport(name, str(g), config_dict(cfg), list(cells), seed, notes)


# ---------------------------------------------------------------------------
# Exact audits
# ---------------------------------------------------------------------------

def _ambient(family: str, n: int) -> int:
    return 2 * n if family == "Sp" else n


def dimension_oracle_rows(oracle_max: int = 20, standard_nmax: int = 30) -> list[tuple[str, int, int]]:
    """(label, computed, expected) for the closed-form dimension oracles."""
    rows = []
    for l in range(oracle_max + 1):
        rows.append((f"SO(3) ({l})", weyl_dimension(GroupSpec("SO", 3), (l,) if l else ()), 2 * l + 1))
    for d in range(oracle_max + 1):
        lam = (d,) if d else ()
        rows.append((f"SU(2) ({d})", weyl_dimension(GroupSpec("SU", 2), lam), d + 1))
        rows.append((f"Sp(1) ({d})", weyl_dimension(GroupSpec("Sp", 1), lam), d + 1))
    for n in range(3, standard_nmax + 1):
        rows.append((f"SO({n}) (1)", weyl_dimension(GroupSpec("SO", n), (1,)), n))
    for n in range(2, standard_nmax + 1):
        rows.append((f"SU({n}) (1)", weyl_dimension(GroupSpec("SU", n), (1,)), n))
    for n in range(1, standard_nmax + 1):
        rows.append((f"Sp({n}) (1)", weyl_dimension(GroupSpec("Sp", n), (1,)), 2 * n))
    return rows


def _audit_cell(label: str, rows, params: dict) -> Cell:
    failures = [r for r in rows if not r.passed]
    note = "" if not failures else "first failure " + str(failures[0].partition)
    return exact_cell(label, {**params, "rows": len(rows)}, len(failures), 0, not failures, note)


def run_repr_audits(cfg: ReprAuditConfig = ReprAuditConfig(), seed: int = 0,
                    jobs: int | None = None) -> ExperimentReport:
    name = "repr-audit"
    cells = []
    oracle = dimension_oracle_rows(cfg.oracle_max, cfg.standard_nmax)
    bad = [label for label, got, want in oracle if got != want]
    cells.append(exact_cell("dimension-oracles", {"rows": len(oracle)}, len(bad), 0, not bad,
                            ", ".join(bad[:3])))
    cells.append(_audit_cell("lb1", lb1_audit(cfg.lb1_ns, cfg.lb1_dmax), {"ns": cfg.lb1_ns,
                                                                         "dmax": cfg.lb1_dmax}))
    cells.append(_audit_cell("lb2", lb2_audit(cfg.lb2_ns), {"ns": cfg.lb2_ns}))
    cells.append(_audit_cell("dims SO(11)", dims_table(GroupSpec("SO", 11), 6), {"dmax": 6}))
    cells.append(_audit_cell("dims Sp(6)", dims_table(GroupSpec("Sp", 6), 7), {"dmax": 7}))
    cells.append(_audit_cell("lr-conservation", lr_conservation_audit(cfg.lr_ns, cfg.lr_size),
                             {"ns": cfg.lr_ns, "max_size": cfg.lr_size}))
    cells.append(_audit_cell("lr-top-level", lr_level_audit(cfg.lr_level_ns, cfg.lr_level_total),
                             {"ns": cfg.lr_level_ns, "max_total": cfg.lr_level_total}))
    cells.append(_audit_cell("step-roundtrip", step_roundtrip_audit(), {}))
    rows = laplacian_audit(n_max=cfg.laplacian_nmax, dmax=cfg.laplacian_dmax)
    for fam in ("SO", "SU", "Sp", "Spin"):
        fam_rows = [r for r in rows if r.family == fam]
        c = _audit_cell(f"laplacian {fam}", fam_rows, {"n_max": cfg.laplacian_nmax,
                                                        "dmax": cfg.laplacian_dmax})
        ambient_fail = sum(not (eigenvalue_envelope(r.D, _ambient(fam, r.n)) <= r.eigenvalue <= 0)
                           for r in fam_rows)
        c.params["failures_with_ambient_size"] = ambient_fail
        cells.append(c)
    so3 = [laplacian_table("SO", 3, cfg.laplacian_dmax)]
    bad3 = [r for r in so3[0] if r.eigenvalue != -2 * r.D - 2 * r.D**2]
    cells.append(exact_cell("laplacian SO(3) closed form", {"dmax": cfg.laplacian_dmax}, len(bad3), 0,
                            not bad3))
    notes = ["exact sweeps, no Monte-Carlo content",
             "failures_with_ambient_size re-checks the envelope with n replaced by the matrix size (2n for Sp)"]
    return ExperimentReport(name, None, config_dict(cfg), cells, seed, notes)


def run_dims(cfg: DimsConfig = DimsConfig(), seed: int = 0, jobs: int | None = None) -> ExperimentReport:
    g = GroupSpec(cfg.family, cfg.n)
    cells = [exact_cell("dimension", {"partition": r.partition, "level": r.level, "regime": r.check},
                        r.dimension, r.bound, r.passed) for r in dims_table(g, cfg.dmax)]
    return ExperimentReport("dims", str(g), config_dict(cfg), cells, seed)


def dims_csv(cfg: DimsConfig) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "n", "partition", "level", "dimension", "bound", "pass"])
    for r in dims_table(GroupSpec(cfg.family, cfg.n), cfg.dmax):
        w.writerow(r.csv_fields())
    return buf.getvalue()


def _laplacian_rows(cfg: LaplacianConfig):
    if cfg.n:
        return [r for fam in cfg.families for r in laplacian_table(fam, cfg.n, cfg.dmax)]
    return laplacian_audit(cfg.families, cfg.n_max, cfg.dmax)


def run_laplacian(cfg: LaplacianConfig = LaplacianConfig(), seed: int = 0,
                  jobs: int | None = None) -> ExperimentReport:
    cells = [exact_cell("eigenvalue", {"family": r.family, "n": r.n, "partition": r.partition, "D": r.D,
                                       "mirrored": r.mirrored}, r.eigenvalue, r.bound, r.passed)
             for r in _laplacian_rows(cfg)]
    return ExperimentReport("laplacian", None, config_dict(cfg), cells, seed)


def laplacian_csv(cfg: LaplacianConfig) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "n", "partition", "D", "eigenvalue", "bound", "pass"])
    for r in _laplacian_rows(cfg):
        w.writerow(r.csv_fields())
    return buf.getvalue()


RUNNERS = {
    "haar-check": run_haar_check, "coupling": run_coupling_suite, "level-d": run_level_d,
    "product-free": run_product_free, "mixing": run_mixing, "doubling": run_doubling,
    "repr-audit": run_repr_audits, "dims": run_dims, "laplacian": run_laplacian,
}
