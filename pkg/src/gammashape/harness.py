"""
Simulation grid for the shape approximation.

Each run draws n observations from Gamma(a_true, rate a_true/mu_true), fits
the approximation with the mean misspecified as mu = r * mu_true and prior
Gamma(a0, a0), and measures the discrepancy from the exact full conditional.
Every run has its own seed, hashed from its grid coordinates, so results do
not depend on enumeration order or on how the work is split across processes.
"""
import csv
import hashlib
import io
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .approx import AlgoConfig, ApproxResult, approximate
from .errors import DomainError
from .model import GammaParams, ShapePosterior, compute_stats_from_log
from .quadrature import DiscrepancyReport, QuadConfig, cdf_table, discrepancy
from .sampler import make_rng, sample_log_gamma

A0_VALUES = (1.0, 0.1, 0.01)
N_VALUES = (1, 10, 100)
R_VALUES = (0.5, 1.0, 2.0)
EXPONENTS = tuple(range(-6, 7))
REPLICATES = 5
ITER_BUCKETS = ("1", "2", "3", "4", ">=5")

CSV_FIELDS = (
    "a0", "n", "r", "a_true", "mu_true", "replicate", "seed",
    "A", "B", "iterations", "converged", "residual", "tv", "kl_fg", "kl_gf", "status",
)
_FLOAT_FIELDS = ("a0", "r", "a_true", "mu_true", "A", "B", "residual", "tv", "kl_fg", "kl_gf")
_INT_FIELDS = ("n", "replicate", "seed", "iterations")


def _exponent(x):
    # decade exponent for grid values, the value itself off the grid
    e = math.log10(x)
    return int(round(e)) if abs(e - round(e)) < 1e-9 else x


def case_seed(master_seed, n, r, a_true, mu_true, a0, replicate):
    """Stable 64-bit seed from the case coordinates and the master seed."""
    key = "|".join(repr(v) for v in (
        int(master_seed), int(n), float(r), _exponent(a_true), _exponent(mu_true),
        float(a0), int(replicate),
    ))
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class GridCase:
    n: int
    r: float
    a_true: float
    mu_true: float
    a0: float
    replicate: int
    seed: int

    def __post_init__(self):
        if self.n < 0 or int(self.n) != self.n:
            raise DomainError(f"n must be a nonnegative integer, got {self.n!r}")
        for name in ("r", "a_true", "mu_true", "a0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    @property
    def b0(self):
        # prior mean fixed at one
        return self.a0

    @property
    def prior(self):
        return GammaParams(self.a0, self.b0)

    @property
    def mu(self):
        return self.r * self.mu_true

    @classmethod
    def make(cls, n, r, a_true, mu_true, a0, replicate=1, master_seed=0):
        seed = case_seed(master_seed, n, r, a_true, mu_true, a0, replicate)
        return cls(int(n), float(r), float(a_true), float(mu_true), float(a0), int(replicate), seed)


def enumerate_grid(master_seed=0, a0s=None, ns=None, rs=None, replicates=REPLICATES):
    """All grid cases in a fixed order: a0, n, r, a_true, mu_true, replicate."""
    a0s = A0_VALUES if a0s is None else a0s
    ns = N_VALUES if ns is None else ns
    rs = R_VALUES if rs is None else rs
    cases = []
    for a0 in a0s:
        for n in ns:
            for r in rs:
                for ea in EXPONENTS:
                    for em in EXPONENTS:
                        for rep in range(1, replicates + 1):
                            cases.append(GridCase.make(n, r, 10.0**ea, 10.0**em, a0, rep, master_seed))
    return cases


@dataclass(frozen=True)
class CaseResult:
    case: GridCase
    approx: Optional[ApproxResult]
    report: Optional[DiscrepancyReport]
    status: str = "ok"

    @property
    def ok(self):
        return self.status == "ok"

    def record(self):
        """Flat dict keyed by the CSV columns."""
        c = self.case
        rec = dict(a0=c.a0, n=c.n, r=c.r, a_true=c.a_true, mu_true=c.mu_true,
                   replicate=c.replicate, seed=c.seed, A=None, B=None, iterations=None,
                   converged=None, residual=None, tv=None, kl_fg=None, kl_gf=None,
                   status=self.status)
        if self.approx is not None:
            rec.update(A=self.approx.A, B=self.approx.B, iterations=self.approx.iterations,
                       converged=self.approx.converged, residual=self.approx.residual)
        if self.report is not None:
            rec.update(tv=self.report.tv, kl_fg=self.report.kl_fg, kl_gf=self.report.kl_gf)
        return rec


def case_posterior(case):
    """Simulate the case's data and return its full conditional."""
    rng = make_rng(case.seed)
    log_x = sample_log_gamma(rng, case.a_true, case.a_true / case.mu_true, case.n)
    stats = compute_stats_from_log(log_x, case.mu)
    return ShapePosterior(stats, case.prior, case.mu)


def run_case(case, cfg=None, qcfg=None):
    """Fit and score one case; failures become a status string, not an exception."""
    cfg = cfg or AlgoConfig()
    qcfg = qcfg or QuadConfig()
    fit = None
    try:
        post = case_posterior(case)
        fit = approximate(post.stats, post.prior, cfg)
        report = discrepancy(post, fit.params, qcfg)
    except (ValueError, ArithmeticError) as exc:
        msg = " ".join(str(exc).split())
        return CaseResult(case, fit, None, f"error: {type(exc).__name__}: {msg}")
    return CaseResult(case, fit, report)


def _run_one(args):
    case, cfg, qcfg = args
    return run_case(case, cfg, qcfg)


def run_grid(master_seed=0, cfg=None, qcfg=None, *, a0s=None, ns=None, rs=None,
             replicates=REPLICATES, workers=1, cases=None):
    """Run every (filtered) grid case; results come back in case order."""
    if cases is None:
        cases = enumerate_grid(master_seed, a0s, ns, rs, replicates)
    cfg = cfg or AlgoConfig()
    qcfg = qcfg or QuadConfig()
    jobs = [(c, cfg, qcfg) for c in cases]
    if workers <= 1 or len(jobs) < 2:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (8 * workers))))


def _as_record(item):
    return item.record() if isinstance(item, CaseResult) else item


def _ok(rec):
    return rec["status"] == "ok"


def iteration_table(results, a0s=A0_VALUES):
    """Counts of runs needing 1, 2, 3, 4 and >=5 iterations, per a0.

    Runs that errored before the fit finished are counted under "failed".
    """
    table = {float(a0): dict.fromkeys(ITER_BUCKETS + ("failed",), 0) for a0 in a0s}
    for item in results:
        rec = _as_record(item)
        col = table.setdefault(float(rec["a0"]), dict.fromkeys(ITER_BUCKETS + ("failed",), 0))
        k = rec["iterations"]
        if k is None:
            col["failed"] += 1
        else:
            col[ITER_BUCKETS[min(int(k), 5) - 1]] += 1
    return table


def format_iteration_table(table):
    cols = list(table)
    head = ["iterations"] + [f"a0={a0:g}" for a0 in cols]
    rows = [[k] + [str(table[a0][k]) for a0 in cols] for k in ITER_BUCKETS + ("failed",)]
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in [head] + rows)


def worst_case(results):
    """Per (a0, n): average each metric over replicates, then take the maximum.

    Returns rows sorted by (a0, n) with the number of combinations averaged.
    """
    sums = defaultdict(lambda: [0.0, 0.0, 0.0, 0])
    for item in results:
        rec = _as_record(item)
        if not _ok(rec):
            continue
        key = (float(rec["a0"]), int(rec["n"]), float(rec["r"]),
               float(rec["a_true"]), float(rec["mu_true"]))
        acc = sums[key]
        acc[0] += rec["tv"]
        acc[1] += rec["kl_fg"]
        acc[2] += rec["kl_gf"]
        acc[3] += 1
    worst = {}
    for (a0, n, *_), (tv, kf, kg, m) in sums.items():
        w = worst.setdefault((a0, n), {"a0": a0, "n": n, "tv": 0.0, "kl_fg": 0.0,
                                       "kl_gf": 0.0, "combos": 0})
        w["tv"] = max(w["tv"], tv / m)
        w["kl_fg"] = max(w["kl_fg"], kf / m)
        w["kl_gf"] = max(w["kl_gf"], kg / m)
        w["combos"] += 1
    return [worst[k] for k in sorted(worst)]


def cdf_dump(case, cfg=None, qcfg=None, points=512):
    """(a, true CDF, approximate CDF) arrays for one simulated case."""
    post = case_posterior(case)
    fit = approximate(post.stats, post.prior, cfg)
    return cdf_table(post, fit.params, qcfg, points)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(results, fh, fields=CSV_FIELDS):
    """One row per result; floats are written with repr so they round-trip."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(fields)
    for item in results:
        rec = _as_record(item)
        w.writerow([_fmt(rec[f]) for f in fields])


def results_to_csv(results):
    buf = io.StringIO()
    write_csv(results, buf)
    return buf.getvalue()


def _parse(field, text):
    if text == "":
        return None
    if field in _FLOAT_FIELDS:
        return float(text)
    if field in _INT_FIELDS:
        return int(text)
    if field == "converged":
        return text == "true"
    return text


def read_csv(fh):
    """Records written by ``write_csv``, typed back."""
    reader = csv.DictReader(fh)
    missing = set(CSV_FIELDS) - set(reader.fieldnames or ())
    if missing:
        raise DomainError(f"CSV is missing columns: {sorted(missing)}")
    return [{f: _parse(f, row[f]) for f in CSV_FIELDS} for row in reader]
