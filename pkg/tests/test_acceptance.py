"""Acceptance run: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they come;
they are also repeated in the terminal summary. The full simulation grid is
run once per module at 1e4 quadrature points and shared by criteria 1, 3, 4.
"""
import math
import time

import mpmath as mp
import numpy as np
import pytest

from gammashape import specfun
from gammashape.approx import approximate
from gammashape.cli import main
from gammashape.harness import GridCase, case_posterior, iteration_table, run_grid, worst_case
from gammashape.model import GammaParams, ShapePosterior, SufficientStats, d2log_f, dlog_f, log_f
from gammashape.quadrature import QuadConfig, discrepancy
from gammashape.sampler import make_rng, mc_standard_error, mh_chain

from oracles import trapezoid_discrepancy
from posteriors import CASES, posterior

GRID_POINTS = 10_000
EXACT_POINTS = 100_000
EPS, MAX_ITER = 1e-8, 10

# tolerances as stated for each criterion
RESIDUAL_TOL = 1e-6
IDENTITY_TV, IDENTITY_KL = 1e-10, 1e-12
ORACLE_TOL = 1e-4
DERIV_TOL = 1e-5
MH_SE = 4.0
RECURRENCE_TOL = 1e-12
ROUND_TRIP_TOL = 1e-10
COMPOSITE_TOL = 1e-10

MISMATCHED = [
    ((2.0, 1.0), (2.0, 2.0)),
    ((3.0, 2.0), (2.5, 1.5)),
    ((2.0, 2.0), (2.0, 1.0)),
    ((5.0, 5.0), (4.0, 3.5)),
    ((1.5, 1.0), (1.2, 0.7)),
]
IDENTITY = [(1.0, 1.0), (0.1, 0.1), (0.01, 0.01), (3.0, 2.0), (250.0, 7.0)]


@pytest.fixture(scope="module")
def grid():
    from gammashape.approx import AlgoConfig
    start = time.process_time()
    res = run_grid(0, AlgoConfig(EPS, MAX_ITER), QuadConfig(GRID_POINTS))
    return res, time.process_time() - start


def test_criterion_1_iteration_bound(grid, acceptance_line):
    res, cpu = grid
    table = iteration_table(res)
    total = len(res)
    converged = sum(1 for r in res if r.approx is not None and r.approx.converged)
    over = sum(col[">=5"] + col["failed"] for col in table.values())
    worst = max(r.approx.iterations for r in res if r.approx is not None)
    ok = total == 22815 and converged == total and over == 0
    acceptance_line(1, ok, f"{converged}/{total} converged, max {worst} iterations, "
                           f"{over} runs >= 5; grid CPU time {cpu:.0f} s at N={GRID_POINTS}")
    assert ok


def test_criterion_2_prior_only_exact(acceptance_line):
    worst_fit = worst_tv = worst_kl = 0.0
    for a0, b0 in IDENTITY + [(0.3, 5e-4), (1e-3, 1e3)]:
        prior = GammaParams(a0, b0)
        fit = approximate(SufficientStats(0, 0.0, 0.0, 0.0), prior).params
        worst_fit = max(worst_fit, abs(fit.shape - a0), abs(fit.rate - b0))
        rep = discrepancy(ShapePosterior(SufficientStats(0, 0.0, 0.0, 0.0), prior), fit,
                          QuadConfig(EXACT_POINTS))
        worst_tv = max(worst_tv, rep.tv)
        worst_kl = max(worst_kl, rep.kl_fg, rep.kl_gf)
    ok = worst_fit == 0.0 and worst_tv <= IDENTITY_TV and worst_kl <= IDENTITY_KL
    acceptance_line(2, ok, f"fit error {worst_fit:.1e}, tv {worst_tv:.1e}, kl {worst_kl:.1e}")
    assert ok


def test_criterion_3_fixed_point_residual(grid, acceptance_line):
    res, _ = grid
    residuals = [abs(r.approx.residual) for r in res if r.approx is not None and r.approx.converged]
    worst = max(residuals)
    ok = len(residuals) == len(res) and worst <= RESIDUAL_TOL
    acceptance_line(3, ok, f"max |a dlog_f + 1| = {worst:.2e} over {len(residuals)} converged runs")
    assert ok


def test_criterion_4_monotone_trends(grid, acceptance_line):
    res, _ = grid
    failed = sum(1 for r in res if not r.ok)
    tv = {(row["a0"], row["n"]): row["tv"] for row in worst_case(res)}
    ns, a0s = (1, 10, 100), (0.01, 0.1, 1.0)
    along_n = all(tv[(a0, ns[i])] > tv[(a0, ns[i + 1])] for a0 in a0s for i in range(2))
    along_a0 = all(tv[(a0s[i], n)] > tv[(a0s[i + 1], n)] for n in ns for i in range(2))
    ok = failed == 0 and along_n and along_a0
    cells = " ".join(f"({a0:g},{n}):{tv[(a0, n)]:.4f}" for a0 in a0s for n in ns)
    acceptance_line(4, ok, f"worst tv by (a0,n) {cells}; error rows {failed}")
    assert ok


def test_criterion_5_quadrature_oracle(acceptance_line):
    identity_ok = True
    for a0, b0 in IDENTITY:
        rep = discrepancy(ShapePosterior(SufficientStats(0, 0.0, 0.0, 0.0), GammaParams(a0, b0)),
                          GammaParams(a0, b0), QuadConfig(EXACT_POINTS))
        identity_ok &= rep.tv <= IDENTITY_TV and max(rep.kl_fg, rep.kl_gf) <= IDENTITY_KL
    errors = []
    for f, g in MISMATCHED:
        ref = trapezoid_discrepancy(f, g)
        rep = discrepancy(ShapePosterior(SufficientStats(0, 0.0, 0.0, 0.0), GammaParams(*f)),
                          GammaParams(*g), QuadConfig(EXACT_POINTS))
        errors.append(max(abs(rep.tv - ref[0]), abs(rep.kl_fg - ref[1]), abs(rep.kl_gf - ref[2])))
    ok = identity_ok and max(errors) <= ORACLE_TOL
    detail = ", ".join(f"{f}|{g}: {e:.1e}" for (f, g), e in zip(MISMATCHED, errors))
    acceptance_line(5, ok, f"identity {'ok' if identity_ok else 'bad'}; oracle errors {detail}")
    assert ok


def _richardson(d, h):
    return (4.0 * d(h / 2) - d(h)) / 3.0


def test_criterion_6_derivatives(acceptance_line):
    rng = make_rng(606)
    e1 = e2 = 0.0
    for k in range(1000):
        case = GridCase.make(int(rng.choice([1, 10, 100])), float(rng.choice([0.5, 1.0, 2.0])),
                             10.0 ** rng.uniform(-6, 6), 10.0 ** rng.uniform(-6, 6),
                             float(rng.choice([1.0, 0.1, 0.01])), 1, k)
        post = case_posterior(case)
        a = approximate(post.stats, post.prior).params.mean

        def lf(x):
            return float(log_f(x, post))

        d1 = _richardson(lambda h: (lf(a + h) - lf(a - h)) / (2 * h), 1e-3 * a)
        d2 = _richardson(lambda h: (lf(a + h) - 2 * lf(a) + lf(a - h)) / (h * h), 1e-2 * a)
        e1 = max(e1, abs(d1 / dlog_f(a, post) - 1))
        e2 = max(e2, abs(d2 / d2log_f(a, post) - 1))
    ok = e1 <= DERIV_TOL and e2 <= DERIV_TOL
    acceptance_line(6, ok, f"max relative error dlog_f {e1:.1e}, d2log_f {e2:.1e} on 1000 posteriors")
    assert ok


def test_criterion_7_mh_exactness(acceptance_line):
    steps = 10**6
    worst = 0.0
    for name in sorted(CASES):
        post = posterior(name)
        rep = discrepancy(post, approximate(post.stats, post.prior).params, QuadConfig(EXACT_POINTS))
        chain, _ = mh_chain(make_rng(CASES[name][4]), rep.mean_f, post.stats, post.prior, steps)
        m = chain.mean()
        z_mean = abs(m - rep.mean_f) / mc_standard_error(chain)
        z_var = abs(chain.var() - rep.var_f) / mc_standard_error((chain - m) ** 2)
        worst = max(worst, z_mean, z_var)
    _, accepts = mh_chain(make_rng(7), 1.0, SufficientStats(0, 0.0, 0.0, 0.0), GammaParams(0.5, 2.0), steps)
    ok = worst <= MH_SE and accepts == steps
    acceptance_line(7, ok, f"worst |chain - quadrature| {worst:.2f} SE over 5 posteriors; "
                           f"prior-only acceptance {accepts / steps}")
    assert ok


def test_criterion_8_special_functions(acceptance_line):
    mp.mp.dps = 40
    xs = np.logspace(-8, 8, 321)
    comp = 0.0
    for x in xs:
        X = mp.mpf(float(x))
        comp = max(comp,
                   abs(specfun.log_minus_digamma(x) / float(mp.log(X) - mp.digamma(X)) - 1),
                   abs(specfun.a_sq_trigamma_minus_a(x) / float(X * X * mp.psi(1, X) - X) - 1))
    d = specfun.digamma(xs + 1.0) - specfun.digamma(xs) - 1.0 / xs
    t = specfun.trigamma(xs + 1.0) - specfun.trigamma(xs) + 1.0 / xs**2
    rec = max(np.max(np.abs(d) / np.maximum(np.abs(specfun.digamma(xs + 1.0)), 1.0 / xs)),
              np.max(np.abs(t) / specfun.trigamma(xs)))
    trip = 0.0
    rng = make_rng(808)
    for _ in range(2000):
        shape, rate = 10.0 ** rng.uniform(-8, 8), 10.0 ** rng.uniform(-3, 3)
        p = rng.uniform(1e-6, 1 - 1e-6)
        x = math.exp(specfun.gamma_log_quantile(p, shape, rate))
        if x * rate >= np.finfo(float).tiny:
            trip = max(trip, abs(specfun.reg_lower_inc_gamma(shape, rate * x) - p))
    ok = comp <= COMPOSITE_TOL and rec <= RECURRENCE_TOL and trip <= ROUND_TRIP_TOL
    acceptance_line(8, ok, f"composites vs mpmath {comp:.1e}, recurrences {rec:.1e}, round trip {trip:.1e}")
    assert ok


def test_criterion_9_determinism(tmp_path, capsys, acceptance_line):
    args = ["simulate", "--a0", "0.01,1", "--n", "1,100", "--r", "0.5", "--replicates", "1",
            "--quad-points", "2000", "--master-seed", "2718"]
    outs = []
    for k, workers in enumerate((1, 1, 2)):
        path = tmp_path / f"run{k}.csv"
        assert main(args + ["--workers", str(workers), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    capsys.readouterr()
    ok = outs[0] == outs[1] == outs[2] and outs[0].count(b"\n") == 1 + 4 * 169
    acceptance_line(9, ok, f"{len(outs)} runs (workers 1, 1, 2) byte-identical: {ok}")
    assert ok
