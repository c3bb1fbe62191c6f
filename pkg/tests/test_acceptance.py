"""The fifteen acceptance criteria, each at its stated sample size and tolerance.

Every test records one pass/fail line, printed at the end of the run.
"""

import subprocess
import sys
import time

import numpy as np

from conftest import ACCEPTANCE
from grouplab import empirical as emp
from grouplab import experiments as ex
from grouplab.estimates import RunningStats, chunk_sizes
from grouplab.laplacian import laplacian_audit, laplacian_eigenvalue
from grouplab.partitions import (dims_table, lb1_audit, lb2_audit, lr_conservation_audit,
                                 lr_level_audit)
from grouplab.sampling import GroupSpec, RngStream, haar_batch
from grouplab.weyl import comfortable_junta, lambda_bracket_audit

SEED = 42
Z = 3.0


def record(k: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_01_haar_correctness():
    def run():
        g = GroupSpec("SO", 8)
        rng = RngStream(SEED, 101)
        worst_orth = worst_det = 0.0
        stats = RunningStats()
        for i, size in enumerate(chunk_sizes(100_000)):
            X = haar_batch(g, rng.fork(i), size)
            worst_orth = max(worst_orth, float(np.abs(np.swapaxes(X, -1, -2) @ X - np.eye(8)).max()))
            worst_det = max(worst_det, float(np.abs(np.linalg.det(X) - 1).max()))
            stats.push(X[:, 0, 0] ** 2)
        return worst_orth, worst_det, stats.estimate()

    (orth, det, x11), secs = timed(run)
    ok = orth < 1e-10 and det < 1e-10 and abs(x11.value - 0.125) <= 0.005 and secs < 60
    record(1, ok, f"max|XᵀX-I| {orth:.2e}, max|det-1| {det:.2e}, E[X11²] {x11.value:.5f}, {secs:.1f}s")


def test_02_coupling_exactness():
    cells = ex.coupling_identity_cells(16, 1000, 1e-9, 100_000, 200, RngStream(SEED, 102))
    trip = cells[0]
    covs = [c for c in cells if c.name == "forward-covariance"]
    bad = [c.name for c in cells if c.status != "pass"]
    ok = not bad and len(covs) == 200 and trip.value < 1e-9
    record(2, ok, f"round trip {trip.value:.2e}, {len(cells) - 1} forward cells, failing {bad[:3]}")


def test_03_lambda_bracket():
    rows, secs = timed(lambda: lambda_bracket_audit((36, 100), 6))
    bad = [r for r in rows if not r.passed]
    record(3, not bad and secs < 10, f"{len(rows)} sets, {len(bad)} outside the bracket, {secs:.1f}s")


def test_04_nu_diagonal():
    n = 16
    forms = ex.diagonal_forms(n, 4)
    polys = [emp.row_form(cols, n) for cols in forms]
    ests, secs = timed(lambda: emp.norms_under("nu", polys, 1_000_000, RngStream(SEED, 104)))
    bad = [cols for cols, e in zip(forms, ests) if not e.contains(1.0, Z)]
    worst = max(abs(e.value - 1) / e.std_error for e in ests)
    record(4, not bad and secs < 180,
           f"{len(forms)} forms, worst |z| {worst:.2f}, failing {bad[:3]}, {secs:.1f}s")


def test_05_nu_offdiagonal():
    def run():
        out = []
        for k, n in enumerate((16, 64)):
            grid = ex.offdiagonal_grid(n, 4)
            ests = emp.off_diagonal_pairings([(I, J) for I, J, _, _ in grid], n, 200_000,
                                             RngStream(SEED, 105, (k,)))
            out += [(n, d, ell, e, emp.epsilon_ell(ell, d, n)) for (_, _, d, ell), e in zip(grid, ests)]
        return out

    cells, secs = timed(run)
    bad = [(n, d, ell) for n, d, ell, e, eps in cells if abs(e.value) > eps + Z * e.std_error]
    record(5, len(cells) == 20 and not bad and secs < 180,
           f"{len(cells)} cells, failing {bad[:3]}, {secs:.1f}s")


def test_06_gmd_moments():
    def run():
        out = []
        for k, n in enumerate((8, 16, 32)):
            for j, idx in enumerate(ex.gmd_grid(n)):
                e = emp.gmd_moment(idx, n, 100_000, RngStream(SEED, 106, (k, j)))
                out.append((n, idx, e, emp.gmd_bound(idx, n)))
        return out

    cells, secs = timed(run)
    bad = [(n, idx) for n, idx, e, b in cells if e.value > b + Z * e.std_error]
    record(6, len(cells) == 30 and not bad and secs < 60,
           f"{len(cells)} cells, failing {bad[:2]}, {secs:.1f}s")


def test_07_dimension_oracles():
    rows, secs = timed(lambda: ex.dimension_oracle_rows(20, 30))
    bad = [label for label, got, want in rows if got != want]
    record(7, not bad and secs < 1, f"{len(rows)} oracle rows, failing {bad[:3]}, {secs:.2f}s")


def test_08_dimension_bounds():
    def run():
        return (lb1_audit((10, 20), 6) + lb2_audit((10, 12))
                + dims_table(GroupSpec("SO", 11), 6) + dims_table(GroupSpec("Sp", 6), 7))

    rows, secs = timed(run)
    bad = [(r.family, r.n, r.partition) for r in rows if not r.passed]
    record(8, not bad and secs < 30, f"{len(rows)} rows, failing {bad[:3]}, {secs:.1f}s")


def test_09_littlewood_richardson():
    def run():
        return lr_conservation_audit((5, 8), 4), lr_level_audit((5, 6, 8), 5)

    (cons, top), secs = timed(run)
    bad = [r.partition for r in cons + top if not r.passed]
    record(9, not bad and secs < 30,
           f"{len(cons)} conservation + {len(top)} top-level rows, failing {bad[:3]}, {secs:.1f}s")


def test_10_laplacian():
    rows, secs = timed(lambda: laplacian_audit(("SO", "SU", "Sp", "Spin"), 12, 8))
    so3 = all(laplacian_eigenvalue("SO", (l,) if l else (), 3) == -2 * l - 2 * l * l for l in range(9))
    fails = {}
    for r in rows:
        if not r.passed:
            fails[r.family] = fails.get(r.family, 0) + 1
    first = next((r for r in rows if not r.passed), None)
    detail = f"{len(rows)} rows, failures per family {fails or 'none'}, SO(3) closed form {so3}, {secs:.1f}s"
    if first is not None:
        detail += f"; e.g. {first.family}({first.n}) {first.partition}: {first.eigenvalue} < {first.bound}"
    record(10, not fails and so3 and secs < 10, detail)


def test_11_level_d():
    cfg = ex.make_config("level-d", {"alphas": (0.05, 0.1, 0.2), "ds": (1, 2, 3)})
    rep, secs = timed(lambda: ex.run_level_d(cfg, seed=SEED, jobs=1))
    checked = [c for c in rep.cells if c.status in ("pass", "fail")]
    bad = [(c.params["alpha"], c.params["d"]) for c in checked if c.status == "fail"]
    vals = ", ".join(f"α={c.params['alpha']} d={c.params['d']}: {c.value:.5f}±{c.std_error:.1g}"
                     for c in checked)
    record(11, checked and not bad and secs < 300, f"{vals}; failing {bad}, {secs:.1f}s")


def test_12_product_free():
    def run():
        A = emp.IndicatorSpec.cap(-0.6, "lt")
        return [emp.product_hits(A, GroupSpec("SO", n), 100_000, RngStream(SEED, 112, (n,)))
                for n in (4, 8)]

    hits, secs = timed(run)
    record(12, hits == [0, 0] and secs < 120, f"hits in SO(4), SO(8): {hits}, {secs:.1f}s")


def test_13_anti_aligned_mixing():
    def run():
        g = GroupSpec("SO", 6)
        A, C = emp.IndicatorSpec.cap(0.5), emp.IndicatorSpec.cap(-0.5, "lt")
        return emp.convolution_form(A, A, C, g, 100_000, RngStream(SEED, 113))

    est, secs = timed(run)
    record(13, est.value + Z * est.std_error < 1.0 and secs < 120,
           f"Pr[ab∈C]/μ(C) = {est.value:.4g} ± {est.std_error:.2g}, {secs:.1f}s")


def test_14_noise_floor():
    n, C = 16, 4.0
    shapes = [lam for d in (1, 2, 3) for lam in ex.NOISE_SHAPES[d]]
    polys = [comfortable_junta(lam, n) for lam in shapes]

    def run():
        return {rho: emp.noise_pairings(polys, rho, GroupSpec("SO", n), 100_000,
                                        RngStream(SEED, 114, (k,)), C)
                for k, rho in enumerate((0.3, 0.5, 0.8))}

    res, secs = timed(run)
    bad = [(rho, lam) for rho, trip in res.items() for lam, (_, _, m) in zip(shapes, trip)
           if m.value < -Z * m.std_error]
    worst = min(m.value / m.std_error for trip in res.values() for _, _, m in trip)
    record(14, not bad and secs < 300,
           f"{len(shapes) * 3} cells, smallest margin {worst:.1f} s.e., failing {bad[:3]}, {secs:.1f}s")


def test_15_determinism(tmp_path):
    outs = []
    for name in ("first.json", "second.json"):
        subprocess.run([sys.executable, "-m", "grouplab", "all", "--seed", "42", "--out", name],
                       cwd=tmp_path, capture_output=True, text=True)
        outs.append((tmp_path / name).read_bytes())
    record(15, outs[0] == outs[1] and len(outs[0]) > 0,
           f"two runs of `all --seed 42`: {len(outs[0])} bytes, identical {outs[0] == outs[1]}")
