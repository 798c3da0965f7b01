"""End-to-end verification of the decomposition identities.

Each identity kind produces a :class:`VerificationReport` holding the test
statistics next to their thresholds.  Simulated samples are cached per run
so kinds that need the same rates share draws; the cache key carries every
parameter that changes a draw.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import risk_sim, wiener_hopf
from .analytic import kernel_coeff_queue, kernel_coeff_risk, kernel_curve, phi_inverse
from .config import ExperimentConfig
from .errors import ConfigError, DecompLabError, ModelError, StationarityWarning
from .inversion import InversionConfig, invert_cdf_grid, stieltjes_convolution
from .model import (
    INF,
    ExtendedRate,
    mean_drift,
    require_decomposition_hypotheses,
    rescale_queue,
    rescale_risk,
    validate_queue,
)
from .queue_sim import estimate_V_transform, replay_queue
from .stats import convolve_samples, empirical_lt, ks_two_sample

log = logging.getLogger(__name__)

KINDS = (
    "thm1_main",
    "thm1_supp1",
    "thm1_supp2",
    "thm1_supp_combined",
    "dec_alt",
    "law_inv",
    "thm2_queue",
    "analytic_vs_sim",
    "kernel_curve",
    "wh_limits",
    "wh_identity",
    "rescale_invariance",
    "monotone_rates",
    "convolution_cdf",
)
DEFAULT_SUITE = KINDS

EXIT_PASS, EXIT_FAIL, EXIT_INVALID = 0, 1, 2

KERNEL_THETA = 1j * np.logspace(-1, 1, 20)
IDENTITY_THETA = 1j * np.logspace(math.log10(0.05), math.log10(50.0), 40)
LIMIT_S = (0.5, 1.0, 2.0)
LIMIT_RATE_HIGH, LIMIT_RATE_LOW = 1e4, 1e-4
RESCALE_QUEUE_REPLICAS = 4
RESCALE_QUEUE_RTOL = 1e-9


@dataclass(frozen=True)
class Statistic:
    """One test statistic; it passes when ``value <= threshold``."""

    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.threshold)

    def to_json(self) -> dict:
        return {"name": self.name, "value": self.value, "threshold": self.threshold, "pass": self.passed}


@dataclass
class VerificationReport:
    identity: str
    params: dict = field(default_factory=dict)
    statistics: list = field(default_factory=list)
    seeds: dict = field(default_factory=dict)
    anomalies: list = field(default_factory=list)
    skipped: str | None = None
    error: str | None = None
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return self.error is None and all(s.passed for s in self.statistics)

    @property
    def status(self) -> str:
        if self.error is not None:
            return "FAIL"
        if self.skipped is not None:
            return "SKIP"
        return "PASS" if self.passed else "FAIL"

    def add(self, name: str, value: float, threshold: float) -> None:
        self.statistics.append(Statistic(name, float(value), float(threshold)))

    def worst(self) -> Statistic | None:
        if not self.statistics:
            return None
        return max(self.statistics, key=lambda s: s.value / s.threshold if s.threshold > 0 else math.inf)

    def summary(self) -> str:
        head = f"{self.status:4s} {self.identity}"
        if self.error:
            return f"{head}: {self.error}"
        if self.skipped:
            return f"{head}: {self.skipped}"
        w = self.worst()
        n = len(self.statistics)
        tail = f" worst {w.name} = {w.value:.3g} (threshold {w.threshold:.3g})" if w else ""
        return f"{head}: {n} statistics,{tail} [{self.runtime:.1f} s]"

    def to_json(self) -> dict:
        return {
            "identity": self.identity,
            "params": self.params,
            "statistics": [s.to_json() for s in self.statistics],
            "thresholds": [s.threshold for s in self.statistics],
            "pass": self.passed,
            "status": self.status,
            "seeds": self.seeds,
            "anomalies": self.anomalies,
            "skipped": self.skipped,
            "error": self.error,
            "runtime": self.runtime,
        }


class _Skip(Exception):
    pass


def _rate_json(r) -> float | str:
    return ExtendedRate.of(r).to_json()


def _kind_rng(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(label.encode())])


class SampleCache:
    """Memoized ``U`` samples keyed by every input that changes a draw."""

    def __init__(self):
        self._store: dict = {}
        self.hits = 0

    def get(self, key, build):
        if key in self._store:
            self.hits += 1
            return self._store[key]
        val = build()
        self._store[key] = val
        return val

    def __len__(self) -> int:
        return len(self._store)


class _Context:
    """Shared state of one suite run."""

    def __init__(self, config: ExperimentConfig, jobs: int, cache: SampleCache | None):
        self.config = config
        self.model = config.risk
        self.jobs = jobs
        self.cache = cache if cache is not None else SampleCache()
        b = config.budget
        self.seed = config.seed
        self.N = b.N
        self.T = risk_sim.default_horizon(self.model) if b.T is None else float(b.T)
        self.eps = risk_sim.default_eps(self.model) if b.epsilon_x is None else float(b.epsilon_x)
        self.x_max = risk_sim.default_x_max(self.model) if b.x_max is None else float(b.x_max)
        self.tol = config.tolerances
        self.s_grid = tuple(float(s) for s in config.grids.s)
        self.mu1 = mean_drift(self.model.spec1)
        self.mu2 = mean_drift(self.model.spec2)

    @property
    def r1(self) -> ExtendedRate:
        return self.model.r1

    @property
    def r2(self) -> ExtendedRate:
        return self.model.r2

    def sim_params(self) -> dict:
        return {"N": self.N, "T": self.T, "eps_x": self.eps, "x_max": self.x_max, "seed": self.seed}

    def U(self, r1, r2, N: int | None = None, stream: int | None = None) -> risk_sim.USample:
        m = self.model.with_rates(r1, r2)
        N = self.N if N is None else N
        stream = risk_sim.rate_stream(m.r1, m.r2) if stream is None else stream
        key = ("U", _rate_json(m.r1), _rate_json(m.r2), self.T, N, self.seed, self.eps, self.x_max, stream)
        return self.cache.get(
            key,
            lambda: risk_sim.sample_U(m, N, self.T, self.seed, stream, self.eps, self.x_max, self.jobs),
        )

    def U_conditional(self, r1, r2, condition) -> risk_sim.USample:
        m = self.model.with_rates(r1, r2)
        key = (
            "U|", _rate_json(m.r1), _rate_json(m.r2), condition.key(),
            self.T, self.N, self.seed, self.eps, self.x_max,
        )
        return self.cache.get(
            key,
            lambda: risk_sim.sample_U_conditional(
                m, condition, self.N, self.T, self.seed, None, self.eps, self.x_max, self.jobs
            ),
        )


def _transform_side(samples, s: float):
    """Transform of an independent sum at ``s`` with a delta-method standard error."""
    ests = [empirical_lt(x, s) for x in samples]
    prod = math.prod(e.estimate for e in ests)
    var = 0.0
    for i, e in enumerate(ests):
        others = math.prod(o.estimate for j, o in enumerate(ests) if j != i)
        var += (others * e.stderr) ** 2
    return prod, math.sqrt(var)


def compare_sides(
    report: VerificationReport,
    left,
    right,
    s_grid,
    rng: np.random.Generator,
    c_alpha: float,
    ks_slack: float,
    sigmas: float,
    grid_slack: float,
    label: str = "",
) -> None:
    """KS test and transform-grid test of ``sum(left) = sum(right)`` in law.

    Each side is a list of independent :class:`EmpiricalSample`; a side with
    several members is convolved for the KS test, while its transform is the
    product of member transforms.
    """
    prefix = f"{label}:" if label else ""
    sides = []
    for part in (left, right):
        acc = part[0]
        for nxt in part[1:]:
            acc = convolve_samples(acc, nxt, rng)
        sides.append(acc)
    ks = ks_two_sample(sides[0], sides[1], c_alpha, ks_slack)
    report.add(f"{prefix}ks", ks.statistic, ks.threshold)
    for s in s_grid:
        a, sa = _transform_side(left, s)
        b, sb = _transform_side(right, s)
        report.add(f"{prefix}lt(s={s:g})", abs(a - b), sigmas * math.hypot(sa, sb) + grid_slack)


def _compare(ctx: _Context, report: VerificationReport, left, right, label: str = "") -> None:
    t = ctx.tol
    rng = _kind_rng(ctx.seed, report.identity + label)
    compare_sides(report, left, right, ctx.s_grid, rng, t.ks_c_alpha, t.ks_slack, t.sigmas, t.grid_slack, label)


def _record(report: VerificationReport, *samples: risk_sim.USample) -> None:
    for x in samples:
        tag = f"U({x.r1.to_json()},{x.r2.to_json()})"
        report.seeds[tag] = {"seed": x.seed, "stream": x.stream}
        if x.failures or x.anomalies:
            report.anomalies.append(f"{tag}: {x.failures} bracket failures, {x.anomalies} non-monotone replicas")


def _emp(*samples: risk_sim.USample):
    return [x.empirical() for x in samples]


def _need_positive(mu: float, which: str) -> None:
    if mu <= 0:
        raise _Skip(f"needs a positive mean drift for company {which}")


# --------------------------------------------------------------------------
# Simulation kinds
# --------------------------------------------------------------------------


def _thm1_main(ctx, rep):
    r1, r2 = ctx.r1, ctx.r2
    a, b, c = ctx.U(r1, r2), ctx.U(r1, 0), ctx.U(0, r2)
    _record(rep, a, b, c)
    _compare(ctx, rep, _emp(a), _emp(b, c))


def _thm1_supp1(ctx, rep):
    _need_positive(ctx.mu2, "2")
    a = ctx.U(ctx.r1, 0)
    b = ctx.U_conditional(ctx.r1, INF, risk_sim.SecondPathNonnegative())
    _record(rep, a, b)
    _compare(ctx, rep, _emp(a), _emp(b))
    p = ctx.mu2 / ctx.model.spec2.drift
    se = math.sqrt(p * (1.0 - p) / b.attempts)
    rep.add("acceptance_rate", abs(b.acceptance_rate - p), ctx.tol.sigmas * se)
    rep.params["acceptance_rate"] = b.acceptance_rate
    rep.params["acceptance_target"] = p


def _thm1_supp2(ctx, rep):
    _need_positive(ctx.mu1, "1")
    a, b, c = ctx.U(INF, ctx.r2), ctx.U(0, ctx.r2), ctx.U(INF, 0)
    _record(rep, a, b, c)
    _compare(ctx, rep, _emp(a), _emp(b, c))


def _thm1_supp_combined(ctx, rep):
    _need_positive(ctx.mu1, "1")
    a, b = ctx.U(ctx.r1, ctx.r2), ctx.U(INF, 0)
    c, d = ctx.U(ctx.r1, 0), ctx.U(INF, ctx.r2)
    _record(rep, a, b, c, d)
    _compare(ctx, rep, _emp(a, b), _emp(c, d))


def _dec_alt(ctx, rep):
    r1, r2 = ctx.r1, ctx.r2
    a, b = ctx.U(r1, r2), ctx.U(0, r2)
    c = ctx.U_conditional(r1, r2, risk_sim.UZeroAtRates(0, r2))
    _record(rep, a, b, c)
    _compare(ctx, rep, _emp(a), _emp(b, c))
    rep.params["acceptance_rate"] = c.acceptance_rate


def _law_inv(ctx, rep):
    rates = [ExtendedRate.of(r) for r in ctx.config.grids.law_inv_r2]
    if ctx.mu2 <= 0:
        dropped = [r for r in rates if r.is_infinite]
        rates = [r for r in rates if not r.is_infinite]
        if dropped:
            rep.params["dropped"] = "infinite r2 needs a positive mean drift for company 2"
    if len(rates) < 2:
        raise _Skip("fewer than two admissible r2 values")
    members = [ctx.U_conditional(ctx.r1, r, risk_sim.UZeroAtRates(0, r)) for r in rates]
    _record(rep, *members)
    rep.params["r2_values"] = [r.to_json() for r in rates]
    rep.params["acceptance_rates"] = [m.acceptance_rate for m in members]
    base = members[0].empirical()
    for r, m in zip(rates[1:], members[1:]):
        _compare(ctx, rep, [base], [m.empirical()], label=f"r2={r.to_json()}")


def _analytic_vs_sim(ctx, rep):
    a = ctx.U(ctx.r1, ctx.r2)
    _record(rep, a)
    emp = a.empirical()
    floor = float(phi_inverse(ctx.model.spec1, 0.0))
    grid = [s for s in ctx.s_grid if s > floor]
    if len(grid) < len(ctx.s_grid):
        rep.params["dropped_s"] = [s for s in ctx.s_grid if s <= floor]
    if not grid:
        raise _Skip(f"no grid point above Phi1(0) = {floor:.6g}")
    exact = np.asarray(wiener_hopf.F1_hat(ctx.model, np.array(grid)))
    for s, f in zip(grid, exact):
        e = empirical_lt(emp, s)
        rep.add(f"lt(s={s:g})", abs(e.estimate - f), ctx.tol.sigmas * e.stderr + ctx.tol.grid_slack)


def _thm2_queue(ctx, rep):
    q = ctx.config.queue
    try:
        require_decomposition_hypotheses(q)
    except ModelError as exc:
        raise _Skip(str(exc)) from None
    b = ctx.config.budget
    total = b.queue_total_time or 1e6 / min(q.spec1.drift, q.spec2.drift)
    n_rep = b.queue_replicas
    T = total / n_rep
    s = np.array(ctx.s_grid)
    rho1, rho2 = q.rho1, q.rho2
    pairs = {"11": (rho1, rho2), "00": (0.0, 0.0), "10": (rho1, 0.0), "01": (0.0, rho2)}
    est = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", StationarityWarning)
        for k, (a, c) in pairs.items():
            est[k] = estimate_V_transform(
                q.with_rates(a, c), s, T, n_rep, ctx.seed,
                burn_in_fraction=b.burn_in_fraction, jobs=ctx.jobs,
            )
    for w in caught:
        rep.anomalies.append(str(w.message))
    rep.params.update({"T": T, "replicas": n_rep, "total_time": total, "rho1": rho1, "rho2": rho2})
    sig = ctx.tol.sigmas
    e11, e00, e10, e01 = est["11"], est["00"], est["10"], est["01"]
    lhs = e11.normalized * e00.normalized
    rhs = e10.normalized * e01.normalized
    lse = np.hypot(e11.normalized_se * e00.normalized, e00.normalized_se * e11.normalized)
    rse = np.hypot(e10.normalized_se * e01.normalized, e01.normalized_se * e10.normalized)
    for i, si in enumerate(s):
        rep.add(f"product(s={si:g})", abs(lhs[i] - rhs[i]), sig * math.hypot(lse[i], rse[i]))
    for k, e in est.items():
        rep.add(f"normalization[{k}]", abs(e.raw_at_zero - 1.0), sig * e.raw_at_zero_se)
    exact = np.asarray(wiener_hopf.G1_hat(q, s))
    for i, si in enumerate(s):
        rep.add(f"G1_hat(s={si:g})", abs(e11.normalized[i] - exact[i]), sig * e11.normalized_se[i])


def _rescale_invariance(ctx, rep):
    b = ctx.config.budget
    c = b.rescale_factor
    n = b.rescale_replicas
    stream = risk_sim.rate_stream(ctx.r1, ctx.r2, label="rescale")
    base = risk_sim.sample_U(ctx.model, n, ctx.T, ctx.seed, stream, ctx.eps, ctx.x_max, ctx.jobs)
    scaled = risk_sim.sample_U(rescale_risk(ctx.model, c), n, ctx.T, ctx.seed, stream, ctx.eps, ctx.x_max, ctx.jobs)
    _record(rep, base, scaled)
    nan_a, nan_b = np.isnan(base.values), np.isnan(scaled.values)
    rep.add("failure_mismatch", float(np.sum(nan_a != nan_b)), 0.0)
    ok = ~(nan_a | nan_b)
    diff = float(np.max(np.abs(base.values[ok] - scaled.values[ok]))) if ok.any() else 0.0
    rep.add("max_abs_diff", diff, ctx.eps)
    rep.params.update({"factor": c, "replicas": n})
    q = ctx.config.queue
    if q is None:
        return
    validate_queue(q)
    if q.rho1 * q.rho2 >= 1.0:
        rep.params["queue"] = "skipped: rho1 * rho2 >= 1"
        return
    qs = rescale_queue(q, c)
    qstream = risk_sim.rate_stream(q.rho1, q.rho2, label="rescale-queue")
    worst = 0.0
    s = np.array(ctx.s_grid)
    for i in range(RESCALE_QUEUE_REPLICAS):
        pa = risk_sim.sample_paths(q, ctx.T, ctx.seed, qstream, i)
        pb = risk_sim.sample_paths(qs, ctx.T, ctx.seed, qstream, i)
        ra, rb = replay_queue(pa, q, s), replay_queue(pb, qs, s)
        for x, y in ((ra.v, rb.v), (ra.both_empty, rb.both_empty), (ra.second_empty, rb.second_empty)):
            scale = max(float(np.max(np.abs(x))), 1e-300)
            worst = max(worst, float(np.max(np.abs(x - y))) / scale)
    rep.add("queue_W1_rel_diff", worst, RESCALE_QUEUE_RTOL)


def _monotone_rates(ctx, rep):
    n = ctx.config.budget.monotone_replicas
    r1, r2 = ctx.r1, ctx.r2
    stream = risk_sim.rate_stream(r1, r2, label="monotone")
    pts = {(0, 0), (r1, 0), (0, r2), (r1, r2)}
    chains = [((0, 0), (r1, 0)), ((r1, 0), (r1, r2)), ((0, 0), (0, r2)), ((0, r2), (r1, r2))]
    if not r1.is_infinite:
        big = (r1.value * 2.0 if r1.value > 0 else 1.0, r2)
        pts.add(big)
        chains.append(((r1, r2), big))
    if not r2.is_infinite:
        big = (r1, r2.value * 2.0 if r2.value > 0 else 1.0)
        pts.add(big)
        chains.append(((r1, r2), big))
    if ctx.mu1 > 0 and not r1.is_infinite:
        pts.add((INF, r2))
        chains.append(((r1, r2), (INF, r2)))
    vals = {}
    for p in pts:
        key = (_rate_json(p[0]), _rate_json(p[1]))
        m = ctx.model.with_rates(*p)
        vals[key] = risk_sim.sample_U(m, n, ctx.T, ctx.seed, stream, ctx.eps, ctx.x_max, ctx.jobs).values
    for lo, hi in chains:
        a = vals[(_rate_json(lo[0]), _rate_json(lo[1]))]
        b = vals[(_rate_json(hi[0]), _rate_json(hi[1]))]
        ok = np.isfinite(a) & np.isfinite(b)
        excess = float(np.max(a[ok] - b[ok])) if ok.any() else 0.0
        name = f"U{tuple(_rate_json(x) for x in lo)}<=U{tuple(_rate_json(x) for x in hi)}"
        rep.add(name, max(excess, 0.0), ctx.eps)
    rep.params.update({"replicas": n, "stream": stream})


# --------------------------------------------------------------------------
# Analytic kinds
# --------------------------------------------------------------------------


def _kernel_curve(ctx, rep):
    m = ctx.model
    s1, s2 = kernel_curve(m.spec1, m.spec2, KERNEL_THETA)
    k = kernel_coeff_risk(m, s1, s2)
    F1 = wiener_hopf.F1_transform(m, s1)
    F2 = wiener_hopf.F2_transform(m, s2)
    scale = np.maximum(np.abs(k.A1 * F1), np.abs(k.A2 * F2))
    rep.add("risk_kernel_rel", float(np.max(np.abs(k.A1 * F1 + k.A2 * F2) / scale)), ctx.tol.identity)
    r1, r2 = m.r1, m.r2
    if not (r1.is_infinite or r2.is_infinite):
        m0r, mr0 = m.with_rates(0, r2), m.with_rates(r1, 0)
        lhs = wiener_hopf.F1_hat(m, s1) * wiener_hopf.F2_hat(m0r, s2) * wiener_hopf.F2_hat(mr0, s2)
        rhs = wiener_hopf.F1_hat(m0r, s1) * wiener_hopf.F1_hat(mr0, s1) * wiener_hopf.F2_hat(m, s2)
        rep.add("transform_product_rel", float(np.max(np.abs(lhs - rhs) / np.abs(rhs))), ctx.tol.identity)
    q = ctx.config.queue
    if q is not None and q.rho1 * q.rho2 < 1.0:
        kq = kernel_coeff_queue(q, s1, s2)
        G1 = wiener_hopf.G1_transform(q, s1)
        G2 = wiener_hopf.G2_transform(q, s2)
        scale = np.maximum(np.abs(kq.A1 * G1), np.abs(kq.A2 * G2))
        rep.add("queue_kernel_rel", float(np.max(np.abs(kq.A1 * G1 + kq.A2 * G2) / scale)), ctx.tol.identity)
    rep.params["theta"] = "i * logspace(-1, 1, 20)"


def _wh_limits(ctx, rep):
    sp1, sp2 = ctx.model.spec1, ctx.model.spec2
    s = np.array(LIMIT_S)
    hi = np.asarray(wiener_hopf.psi_plus(sp1, sp2, LIMIT_RATE_HIGH, s))
    rep.add("r_high", float(np.max(np.abs(hi - 1.0))), ctx.tol.limit)
    lo = np.asarray(wiener_hopf.psi_plus(sp1, sp2, LIMIT_RATE_LOW, s))
    if ctx.mu1 > 0:
        ref = np.asarray(wiener_hopf.wh_limit(sp1, sp2, "r_zero", s))
        rep.add("r_low", float(np.max(np.abs(lo - ref))), ctx.tol.limit)
    elif ctx.mu2 > 0:
        ref = np.asarray(wiener_hopf.wh_limit(sp1, sp2, "r_zero_scaled", s))
        rep.add("r_low_scaled", float(np.max(np.abs(lo / LIMIT_RATE_LOW - ref))), ctx.tol.limit_scaled)
    rep.params.update({"s": list(LIMIT_S), "r_high": LIMIT_RATE_HIGH, "r_low": LIMIT_RATE_LOW})


def _wh_identity(ctx, rep):
    sp1, sp2 = ctx.model.spec1, ctx.model.spec2
    for r in ctx.config.grids.r:
        ev = wiener_hopf.evaluator(sp1, sp2, float(r))
        mirror = wiener_hopf.evaluator(sp2, sp1, 1.0 / float(r))
        res = ev.identity_residual(IDENTITY_THETA, partner=mirror)
        rep.add(f"residual(r={r:g})", float(np.max(res)), ctx.tol.identity)
    rep.params["theta"] = "i * logspace(log10 0.05, log10 50, 40)"


def _convolution_cdf(ctx, rep):
    m = ctx.model
    r1, r2 = m.r1, m.r2
    if r1.is_infinite or r2.is_infinite:
        raise _Skip("needs finite rates")
    floor = float(phi_inverse(m.spec1, 0.0))
    u_all = np.array(ctx.config.grids.convolution_u, dtype=float)
    u = u_all[math.log(2.0) / u_all > floor]
    if u.size == 0:
        raise _Skip("every u needs transform values below Phi1(0)")
    if u.size < u_all.size:
        rep.params["dropped_u"] = u_all[math.log(2.0) / u_all <= floor].tolist()
    cfg = InversionConfig(abscissa=floor)

    def cdf(model):
        f = lambda s: wiener_hopf.F1_hat(model, s)
        return lambda x: invert_cdf_grid(f, x, cfg).cdf, float(f(np.array([1e6]))[0])

    whole, _ = cdf(m)
    first, atom = cdf(m.with_rates(r1, 0))
    second, _ = cdf(m.with_rates(0, r2))
    direct = whole(u)
    conv = stieltjes_convolution(first, atom, second, u)
    rep.add("max_abs_diff", float(np.max(np.abs(direct - conv))), ctx.tol.convolution)
    rep.params["u"] = u.tolist()


_DISPATCH = {
    "thm1_main": _thm1_main,
    "thm1_supp1": _thm1_supp1,
    "thm1_supp2": _thm1_supp2,
    "thm1_supp_combined": _thm1_supp_combined,
    "dec_alt": _dec_alt,
    "law_inv": _law_inv,
    "thm2_queue": _thm2_queue,
    "analytic_vs_sim": _analytic_vs_sim,
    "kernel_curve": _kernel_curve,
    "wh_limits": _wh_limits,
    "wh_identity": _wh_identity,
    "rescale_invariance": _rescale_invariance,
    "monotone_rates": _monotone_rates,
    "convolution_cdf": _convolution_cdf,
}


def verify_identity(
    kind: str,
    config: ExperimentConfig,
    jobs: int = 1,
    cache: SampleCache | None = None,
) -> VerificationReport:
    """Run one identity check; numerical failures become a FAIL with their cause."""
    if kind not in _DISPATCH:
        raise ValueError(f"unknown identity kind {kind!r}; choose from {', '.join(KINDS)}")
    ctx = _Context(config, jobs, cache)
    rep = VerificationReport(identity=kind)
    m = config.risk
    rep.params = {
        "model": config.name,
        "r1": m.r1.to_json(),
        "r2": m.r2.to_json(),
        **ctx.sim_params(),
        "tolerances": dict(vars(config.tolerances)),
    }
    rep.seeds["master"] = config.seed
    t0 = time.perf_counter()
    try:
        _DISPATCH[kind](ctx, rep)
    except _Skip as exc:
        rep.skipped = str(exc)
    except DecompLabError as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
    rep.runtime = time.perf_counter() - t0
    log.info(rep.summary())
    return rep


def check_suite(config: ExperimentConfig, suite) -> None:
    """Reject a suite that cannot run on this configuration.

    Raises:
        ConfigError: unknown kind, or a queue kind without a usable queue model.
    """
    unknown = [k for k in suite if k not in _DISPATCH]
    if unknown:
        raise ConfigError(f"unknown identity kinds: {', '.join(unknown)}")
    if "thm2_queue" in suite:
        q = config.queue
        if q is None:
            raise ConfigError("thm2_queue needs a queue section")
        if q.rho1 * q.rho2 >= 1.0:
            raise ConfigError(f"thm2_queue needs rho1 * rho2 < 1, got {q.rho1 * q.rho2:g}")
        try:
            validate_queue(q)
        except ModelError as exc:
            raise ConfigError(str(exc)) from None


def run_suite(config: ExperimentConfig, suite=DEFAULT_SUITE, jobs: int = 1):
    """Run ``suite`` in order with a shared sample cache.

    Returns:
        ``(reports, exit_status)`` with status 0 when every report passes.

    Raises:
        ConfigError: the suite cannot run on this configuration.
    """
    suite = list(suite)
    check_suite(config, suite)
    cache = SampleCache()
    reports = [verify_identity(k, config, jobs, cache) for k in suite]
    status = EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL
    return reports, status
