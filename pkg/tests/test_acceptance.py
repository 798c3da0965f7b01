"""Acceptance criteria, one test per criterion.

The full default suites on both bundled configurations run once per session
and the criteria read their reports; each criterion prints one PASS/FAIL line.
"""

import csv
import math
import time
from importlib import resources

import numpy as np
import pytest

from decomplab import risk_sim
from decomplab.cli import main
from decomplab.config import builtin_config
from decomplab.verify import EXIT_PASS, IDENTITY_THETA, KERNEL_THETA, LIMIT_S, run_suite, verify_identity

CFG_A = str(resources.files("decomplab.configs").joinpath("cfg_a.json"))


@pytest.fixture(scope="session")
def suites():
    out = {}
    for name in ("cfg_a", "cfg_b"):
        cfg = builtin_config(name)
        t0 = time.perf_counter()
        reports, status = run_suite(cfg)
        out[name] = {"config": cfg, "reports": {r.identity: r for r in reports}, "status": status,
                     "runtime": time.perf_counter() - t0}
    return out


def _report(suites, name, kind):
    return suites[name]["reports"][kind]


def _worst(rep):
    w = rep.worst()
    return f"{w.name} = {w.value:.3g} <= {w.threshold:.3g}" if w else rep.status


def test_criterion_01_closed_form_ruin_oracle(tmp_path, criterion):
    with criterion(1, "closed-form ruin oracle") as c:
        t0 = time.perf_counter()
        code = main(["analyze", "--config", CFG_A, "--what", "invert-U", "--rates", "inf", "0", "--out", str(tmp_path)])
        elapsed = time.perf_counter() - t0
        with open(tmp_path / "U_cdf.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        u = np.array([float(r["u"]) for r in rows])
        cdf = np.array([float(r["cdf"]) for r in rows])
        err = float(np.max(np.abs(cdf - (1.0 - 0.5 * np.exp(-0.5 * u)))))
        c.check(code == 0, f"exit {code}")
        c.check(u.min() <= 0.1 and u.max() >= 10.0, f"u in [{u.min():g}, {u.max():g}]")
        c.check(err <= 1e-4, f"max abs error {err:.2e} <= 1e-4")
        c.check(elapsed < 5.0, f"runtime {elapsed:.2f} s < 5 s")


def test_criterion_02_wh_identity(criterion):
    with criterion(2, "Wiener-Hopf factorization identity") as c:
        cfg = builtin_config("cfg_a")
        c.check(len(IDENTITY_THETA) == 40 and np.isclose(abs(IDENTITY_THETA[0]), 0.05)
                and np.isclose(abs(IDENTITY_THETA[-1]), 50.0), "theta = i * [0.05, 50], 40 points")
        c.check(sorted(cfg.grids.r) == [0.1, 1.0, 10.0], f"r = {list(cfg.grids.r)}")
        t0 = time.perf_counter()
        rep = verify_identity("wh_identity", cfg)
        elapsed = time.perf_counter() - t0
        worst = max(s.value for s in rep.statistics)
        c.check(rep.status == "PASS" and worst < 1e-6, f"max residual {worst:.2e} < 1e-6")
        c.check(elapsed < 30.0, f"runtime {elapsed:.2f} s < 30 s")


def test_criterion_03_wh_limits(suites, criterion):
    with criterion(3, "Wiener-Hopf limits") as c:
        c.check(tuple(LIMIT_S) == (0.5, 1.0, 2.0), "s in {0.5, 1, 2}")
        a = {s.name: s for s in _report(suites, "cfg_a", "wh_limits").statistics}
        c.check(a["r_high"].passed and a["r_high"].threshold == 1e-3, f"CFG-A r = 1e4: {a['r_high'].value:.2e}")
        c.check(a["r_low"].passed and a["r_low"].threshold == 1e-3, f"CFG-A r = 1e-4: {a['r_low'].value:.2e}")
        b = {s.name: s for s in _report(suites, "cfg_b", "wh_limits").statistics}
        st = b.get("r_low_scaled")
        c.check(st is not None and st.passed and st.threshold == 1e-2,
                f"CFG-B scaled r = 1e-4: {st.value:.2e}" if st else "CFG-B scaled limit missing")


def test_criterion_04_kernel_curve(suites, criterion):
    with criterion(4, "kernel-curve annihilation") as c:
        c.check(len(KERNEL_THETA) == 20, "20 kernel-curve points on i * [0.1, 10]")
        st = {s.name: s for s in _report(suites, "cfg_a", "kernel_curve").statistics}
        for name in ("risk_kernel_rel", "transform_product_rel"):
            s = st.get(name)
            c.check(s is not None and s.value < 1e-6, f"{name} {s.value:.2e} < 1e-6" if s else f"{name} missing")


def _ks_threshold_is_nominal(rep, N):
    nominal = 1.628 * math.sqrt(2.0 / N) + 0.005
    ks = [s for s in rep.statistics if s.name.endswith("ks")]
    return bool(ks) and all(math.isclose(s.threshold, nominal, rel_tol=1e-12) for s in ks)


def test_criterion_05_main_decomposition(suites, criterion):
    with criterion(5, "main risk decomposition") as c:
        for name in ("cfg_a", "cfg_b"):
            rep = _report(suites, name, "thm1_main")
            cfg = suites[name]["config"]
            c.check(cfg.budget.N == 20000 and cfg.seed == 7, f"{name}: N = {cfg.budget.N}, seed {cfg.seed}")
            c.check(_ks_threshold_is_nominal(rep, 20000), f"{name}: KS threshold 1.628 sqrt(2/N) + 0.005")
            c.check(rep.status == "PASS", f"{name}: {rep.status}, {_worst(rep)}, {rep.runtime:.0f} s")
            c.check(rep.runtime < 300, f"{name}: runtime {rep.runtime:.0f} s < 300 s")


def test_criterion_06_supplementary(suites, criterion):
    kinds = ("thm1_supp1", "thm1_supp2", "thm1_supp_combined", "dec_alt", "law_inv")
    with criterion(6, "supplementary decompositions") as c:
        for kind in kinds:
            rep = _report(suites, "cfg_a", kind)
            c.check(rep.status == "PASS", f"CFG-A {kind} {rep.status}")
        supp1 = _report(suites, "cfg_a", "thm1_supp1")
        acc = [s for s in supp1.statistics if s.name == "acceptance_rate"]
        c.check(acc and acc[0].passed and supp1.params["acceptance_target"] == pytest.approx(1 / 3),
                f"acceptance rate {supp1.params['acceptance_rate']:.4f} vs 1/3")
        law = _report(suites, "cfg_a", "law_inv")
        c.check(law.params["r2_values"] == [0.0, 0.25, 1.0, "inf"], f"law_inv r2 = {law.params['r2_values']}")
        for kind in kinds:
            rep = _report(suites, "cfg_b", kind)
            c.check(rep.status != "FAIL", f"CFG-B {kind} {rep.status}")


def test_criterion_07_analytic_vs_simulation(suites, criterion):
    with criterion(7, "analytic transform vs simulation") as c:
        rep = _report(suites, "cfg_a", "analytic_vs_sim")
        names = [s.name for s in rep.statistics]
        c.check(names == [f"lt(s={s:g})" for s in (0.25, 0.5, 1, 2, 4)], f"grid {names}")
        c.check(rep.status == "PASS", f"{rep.status}, {_worst(rep)}")


def test_criterion_08_queue_decomposition(suites, criterion):
    with criterion(8, "queue decomposition") as c:
        rep = _report(suites, "cfg_a", "thm2_queue")
        c.check(rep.params["rho1"] == 0.5 and rep.params["rho2"] == 0.4, "rho = (0.5, 0.4)")
        c.check(rep.params["total_time"] == pytest.approx(1e6 / 2.0), f"total time {rep.params['total_time']:g}")
        groups = {}
        for s in rep.statistics:
            groups.setdefault(s.name.split("(")[0].split("[")[0], []).append(s)
        for g in ("product", "normalization", "G1_hat"):
            ok = g in groups and all(s.passed for s in groups[g])
            c.check(ok, f"{g} {len(groups.get(g, []))} points within 3 sigma")


def test_criterion_09_exact_structure(suites, criterion):
    with criterion(9, "exact structural properties") as c:
        for name in ("cfg_a", "cfg_b"):
            for kind in ("rescale_invariance", "monotone_rates"):
                rep = _report(suites, name, kind)
                c.check(rep.status == "PASS", f"{name} {kind} {rep.status}, {_worst(rep)}")
        mono = _report(suites, "cfg_a", "monotone_rates")
        c.check(mono.params["replicas"] == 100, f"monotone replicas {mono.params['replicas']}")
        cfg = builtin_config("cfg_a")
        one = risk_sim.sample_U(cfg.risk, 400, None, 7, jobs=1)
        two = risk_sim.sample_U(cfg.risk, 400, None, 7, jobs=2)
        c.check(np.array_equal(one.values, two.values, equal_nan=True), "sample_U identical for 1 and 2 workers")


def test_criterion_10_full_suite(suites, criterion):
    with criterion(10, "full default suite") as c:
        total = 0.0
        for name in ("cfg_a", "cfg_b"):
            s = suites[name]
            failed = [k for k, r in s["reports"].items() if r.status == "FAIL"]
            c.check(s["status"] == EXIT_PASS, f"{name} exit {s['status']} {failed or ''}".rstrip())
            total += s["runtime"]
        c.check(total < 600, f"both suites {total:.0f} s < 600 s on one worker")
