"""Acceptance criteria 1-10.

The seven experiments are run once through the CLI at their reference
configuration; most criteria read the asserted inequalities back from the
manifests.  Criterion 10 reruns the whole suite and compares CSV bytes.
"""

import json
import time

import numpy as np
import pytest
from click.testing import CliRunner

from illposed.euler2d import DiagnosticSpec, EulerState, SolverConfig, odd_odd_defect, project, solve
from illposed.experiments import EXPERIMENTS, scaling_exponents
from illposed.expcli import main
from illposed.initdata import OMEGA0_W1R_BOUND, Omega0Params, omega0, omega0_w1r_norm
from illposed.shear3d import ShearSolution, bump_pair, constant_pair, verify_euler
from illposed.spectral import make_grid

from conftest import random_bandlimited, record

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

SIGMAS = (0.25, 0.5, 0.75)


def run_suite(out):
    runner = CliRunner()
    runs = {}
    for name in sorted(EXPERIMENTS):
        t0 = time.perf_counter()
        r = runner.invoke(main, ["run", name, "--out", str(out)], catch_exceptions=False)
        wall = time.perf_counter() - t0
        m = json.loads((out / name / "manifest.json").read_text())
        runs[name] = dict(exit_code=r.exit_code, manifest=m, wall=wall, dir=out / name,
                          checks={a["name"]: a for a in m["assertions"]})
    return runs


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    return run_suite(tmp_path_factory.mktemp("suite"))


def _checks(run, names):
    return [run["checks"][n] for n in names]


def _summ(cs):
    return ", ".join(f"{c['name']}={c['measured']:.4g} ({c['predicted']})" for c in cs)


def test_criterion_1_shear_gap(suite):
    run = suite["shear-gap"]
    tb = np.genfromtxt(run["dir"] / "shear_gap.csv", delimiter=",", names=True)
    assert len(tb) == 9
    dist_ok = np.all(np.abs(tb["initial_distance"] / tb["epsilon"] - 1) <= 1e-12)
    gap_ok = np.all(tb["gap_lower_bound"] >= 2 * (1 - 1e-2))
    wq_ok = np.all(tb["witness_defect"] <= 1e-12)
    fast = run["manifest"]["timings"]["wall_seconds"] < 10
    ok = bool(dist_ok and gap_ok and wq_ok and fast)
    record("1", ok, f"min gap {tb['gap_lower_bound'].min():.6g}, max witness defect {tb['witness_defect'].max():.2g}, "
           f"{run['manifest']['timings']['wall_seconds']:.1f} s")
    assert ok


def test_criterion_2_residual():
    worst = 0.0
    for maker in (constant_pair, bump_pair):
        for s in SIGMAS:
            for eps in (1e-1, 1e-2, 1e-3):
                sp = maker(s, eps)
                for t in (0.0, 0.25, 0.5, 1.0):
                    for which in ("f", "g"):
                        worst = max(worst, verify_euler(ShearSolution(sp, t, which)))
    ok = worst < 1e-10
    record("2", ok, f"max residual {worst:.2g}")
    assert ok


def test_criterion_3_scaling(suite):
    run = suite["norm-scaling"]
    cs = _checks(run, ("item1_slope", "item2_slope", "item3_slope"))
    fast = run["manifest"]["timings"]["wall_seconds"] < 60
    ok = all(c["passed"] for c in cs) and fast
    record("3", ok, _summ(cs))
    assert ok


def test_criterion_3_sharp_item3_rate(suite):
    # the inverse Laplacian gains |xi|^-1 ~ k^-1 on the support of beta
    run = suite["norm-scaling"]
    assert scaling_exponents(0.5, 4.0, np.inf, 0.5)["item3_sharp"] == -1.75
    cs = _checks(run, ("item3_sharp_slope", "item3_bound"))
    record("3 (sharp item-3 rate)", all(c["passed"] for c in cs), _summ(cs))
    assert all(c["passed"] for c in cs)


def test_criterion_4_lemfi(suite):
    cs = _checks(suite["lemfi-equivalence"], ("ratio_lower", "ratio_upper"))
    ok = all(c["passed"] for c in cs)
    record("4", ok, _summ(cs))
    assert ok


def test_criterion_5_decay_and_bound(suite):
    run = suite["lemfi-equivalence"]
    names = [n for n in run["checks"] if n.startswith("decay_alpha_")] + ["omega0n_bound"]
    assert len(names) == 4
    cs = _checks(run, names)
    ok = all(c["passed"] for c in cs)
    record("5", ok, _summ(cs))
    assert ok


def test_criterion_6_omega0_bound():
    vals = [omega0_w1r_norm(Omega0Params(M, 1, N, r)) * M**2 for M in (2, 4, 8) for N in (2, 4, 8) for r in (2.25, 2.5, 3.0)]
    ok = max(vals) <= OMEGA0_W1R_BOUND
    record("6", ok, f"M^2 ||omega_0||_W1r in [{min(vals):.4g}, {max(vals):.4g}], bound {OMEGA0_W1R_BOUND:g}")
    assert ok


def test_criterion_7_covering(suite):
    run = suite["covering-audit"]
    cs = list(run["checks"].values())
    assert len(cs) == 4 * 7 + 3
    failed = [c["name"] for c in cs if not c["passed"]]
    ok = not failed
    record("7", ok, f"{len(cs) - len(failed)}/{len(cs)} invariants; " + _summ(_checks(run, ("besov_lower", "besov_upper", "embedding_constant"))))
    assert ok, failed


def test_criterion_8_conservation():
    g = make_grid(np.pi, 512)
    w = project(random_bandlimited(g, 8, np.random.default_rng(11)))
    dt = 0.4 * g.h / EulerState(0.0, w).velocity.sup_norm()
    res = solve(w, SolverConfig(dt=dt, t_end=100 * dt, cadence=20))
    drift = {n: float(np.abs(res.table.column(n) / res.table.column(n)[0] - 1).max()) for n in ("energy", "enstrophy")}
    c = res.table.column("omega_sup")
    sup = float(np.abs(c / c[0] - 1).max())
    P = Omega0Params(2, 1, 1, 2.5)
    sym = solve(omega0(P, make_grid(2.0, 512)), SolverConfig(dt=0.1, t_end=1.0, cadence=5),
                DiagnosticSpec(refine_sup=False, hist_oversample=1))
    odd = max(odd_odd_defect(s.omega) for s in sym.states)
    ok = drift["energy"] < 1e-6 and drift["enstrophy"] < 1e-6 and sup < 1e-4 and odd < 1e-12
    record("8", ok, f"energy {drift['energy']:.2g}, enstrophy {drift['enstrophy']:.2g}, sup {sup:.2g}, odd-odd {odd:.2g}")
    assert ok


def test_criterion_9_flow(suite):
    run = suite["flow-jacobian"]
    cs = list(run["checks"].values())
    ok = all(c["passed"] for c in cs)
    record("9", ok, _summ(cs))
    assert ok


def test_criterion_10_determinism(suite, tmp_path):
    again = run_suite(tmp_path)
    diffs = []
    n = 0
    for name, run in suite.items():
        for f in sorted(run["dir"].glob("*.csv")):
            n += 1
            if f.read_bytes() != (again[name]["dir"] / f.name).read_bytes():
                diffs.append(f"{name}/{f.name}")
        assert run["exit_code"] == again[name]["exit_code"]
    ok = not diffs and n >= 7
    record("10", ok, f"{n - len(diffs)}/{n} CSVs byte-identical")
    assert ok, diffs


def test_suite_exit_codes(suite):
    # the only failing reference experiment is norm-scaling (item-3 slope)
    codes = {k: v["exit_code"] for k, v in suite.items()}
    assert codes.pop("norm-scaling") == 1
    assert set(codes.values()) == {0}
