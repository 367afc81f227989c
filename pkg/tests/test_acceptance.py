"""Acceptance suite: one PASS/FAIL line per criterion (run with ``-s`` to see them)."""

import time
import warnings

import numpy as np
import pytest

from fdmzi.cli import fock_check, main
from fdmzi.fitting import DataSeries, fit_poly, fit_sin2, synthetic_sin2
from fdmzi.lossy import (PAPER_PARAMETERS, LossBudget, ConversionCurve, lossy_visibility_l,
                         lossy_visibility_u, optimal_pump_power)
from fdmzi.mzi import (DegenerateFringeWarning, MziConfig, fringe_sweep, sampled_visibility,
                       visibility_closed_form)
from fdmzi.noise import PAPER_NOISE, FilterScenario, expected_visibility, min_filter_ratio

B, N = PAPER_PARAMETERS, PAPER_NOISE


def verdict(criterion, checks, elapsed, limit):
    """Print one line and fail with every unmet sub-check listed."""
    checks = list(checks) + [(f"runtime {elapsed:.2f}s < {limit:g}s", elapsed < limit)]
    ok = all(c for _, c in checks)
    failed = [name for name, c in checks if not c]
    detail = "; ".join(name for name, _ in checks)
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion} unmet: {failed}"


def test_1_headline_visibility():
    t0 = time.perf_counter()
    vu, vl = lossy_visibility_u(140.0, B), lossy_visibility_l(140.0, B)
    verdict(1, [(f"v_U(140)={vu:.4f} in 0.99±0.01", abs(vu - 0.99) <= 0.01),
                (f"v_L(140)={vl:.4f} in 0.99±0.01", abs(vl - 0.99) <= 0.01)],
            time.perf_counter() - t0, 0.5)


def test_2_optimal_pump_power():
    t0 = time.perf_counter()
    opt = optimal_pump_power(B)
    verdict(2, [(f"argmax min(v_U,v_L)={opt.power_mw:.2f} mW in 140±10",
                 abs(opt.power_mw - 140.0) <= 10.0)],
            time.perf_counter() - t0, 1.0)


def test_3_filter_claim():
    t0 = time.perf_counter()
    v = expected_visibility(FilterScenario.from_ratios(1.0, 1.4, 1.4, 0.1), 140.0, B, N, "U")
    bound = min_filter_ratio(0.9, 0.1, 140.0, B, N, "U")
    narrow = min_filter_ratio(0.9, 0.1, 140.0, B, N, "U", input_bw=9.6e-3)
    wide = min_filter_ratio(0.9, 0.1, 140.0, B, N, "U", input_bw=1.2)
    verdict(3, [
        (f"V_U(mu=0.1, ratio=1.4)={v:.6f} >= 0.90", v >= 0.90),
        (f"bound ratio={bound.ratio:.4f} in 1.4±0.1", bound.feasible and abs(bound.ratio - 1.4) <= 0.1),
        (f"9.6 MHz input -> {narrow.filter_bw * 1e3:.2f} MHz in 13±1", abs(narrow.filter_bw * 1e3 - 13) <= 1),
        (f"1.2 GHz input -> {wide.filter_bw:.3f} GHz in 1.6±0.1", abs(wide.filter_bw - 1.6) <= 0.1),
    ], time.perf_counter() - t0, 1.0)


def test_4_lossless_ideal():
    t0 = time.perf_counter()
    vis = visibility_closed_form(0.5, 0.5)
    rng = np.random.default_rng(2024)
    phases = np.linspace(0.0, 2 * np.pi, 10_000, endpoint=False)
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateFringeWarning)
        for r1, r2 in rng.uniform(0.0, 1.0, (100, 2)):
            cf = visibility_closed_form(r1, r2)
            res = fringe_sweep(MziConfig.from_reflectances(r1, r2), phases)
            worst = max(worst, abs(res.v_upper - cf.upper), abs(res.v_lower - cf.lower))
    verdict(4, [(f"closed form (0.5,0.5)=({vis.upper:g},{vis.lower:g}) == (1,1)",
                 vis.upper == 1.0 and vis.lower == 1.0),
                (f"sweep vs closed form max err {worst:.2e} < 1e-5", worst < 1e-5)],
            time.perf_counter() - t0, 1.0)


def test_5_fock_oracle():
    t0 = time.perf_counter()
    ok, lines = fock_check(n_max=20, trials=100, seed=0, tolerance=1e-10)
    verdict(5, [(" | ".join(lines[1:4]), ok)], time.perf_counter() - t0, 30.0)


def test_6_fit_round_trips():
    t0 = time.perf_counter()
    checks = []
    for a, eta in ((0.94, 0.0042), (0.58, 0.017)):
        rep = fit_sin2(synthetic_sin2(a, eta))
        err = max(abs(rep.params["A"] / a - 1), abs(rep.params["eta"] / eta - 1))
        checks.append((f"noiseless ({a},{eta}) rel err {err:.1e} <= 1e-6", err <= 1e-6))
        hits = 0
        for seed in range(100):
            data = synthetic_sin2(a, eta, sigma=0.01, rng=np.random.default_rng(seed), p_min=20.0)
            r = fit_sin2(data)
            hits += (abs(r.params["A"] - a) <= 3 * r.stderr["A"]
                     and abs(r.params["eta"] - eta) <= 3 * r.stderr["eta"])
        checks.append((f"noisy ({a},{eta}) {hits}/100 within 3 SE", hits >= 95))
    x = np.linspace(0.0, 400.0, 21)
    for coeffs in ((3.5e3, 4.6e2, 9.1e3), (2.0e3, 2.9e3, 4.8e4), (6.2e3, 2.6e4)):
        rep = fit_poly(DataSeries(x, np.polyval(coeffs, x)), len(coeffs) - 1)
        got = [rep.params[k] for k in "abc"[:len(coeffs)]]
        err = max(abs(g / c - 1) for g, c in zip(got, coeffs))
        checks.append((f"poly {coeffs} rel err {err:.1e} <= 1e-9", err <= 1e-9))
    verdict(6, checks, time.perf_counter() - t0, 60.0)


def test_7_reduction_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_lossless = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateFringeWarning)
        for _ in range(100):
            c1 = ConversionCurve(rng.uniform(0.2, 1.0), rng.uniform(1e-3, 2e-2))
            c2 = ConversionCurve(rng.uniform(0.2, 1.0), rng.uniform(1e-3, 2e-2))
            b = LossBudget.lossless(c1, c2)
            p = rng.uniform(0.0, 400.0)
            r1 = c1.amplitude * np.sin(np.sqrt(c1.rate * p)) ** 2
            r2 = c2.amplitude * np.sin(np.sqrt(c2.rate * p)) ** 2
            cf = visibility_closed_form(r1, r2)
            worst_lossless = max(worst_lossless, abs(lossy_visibility_u(p, b) - cf.upper),
                                 abs(lossy_visibility_l(p, b) - cf.lower))
    worst_mu = 0.0
    for p in (50.0, 140.0, 300.0):
        sc = FilterScenario.from_ratios(1.0, 1.4, 1.4, 1e9)
        worst_mu = max(worst_mu,
                       abs(expected_visibility(sc, p, B, N, "U") - lossy_visibility_u(p, B)),
                       abs(expected_visibility(sc, p, B, N, "L") - lossy_visibility_l(p, B)))
    verdict(7, [(f"lossy -> lossless max err {worst_lossless:.1e} <= 1e-12", worst_lossless <= 1e-12),
                (f"noisy -> lossy at mu=1e9 max err {worst_mu:.1e} <= 1e-9", worst_mu <= 1e-9)],
            time.perf_counter() - t0, 1.0)


def test_8_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    for run in ("a", "b"):
        for cmd in ("visibility-sweep", "noise-vis"):
            assert main([cmd, "--out", str(tmp_path / run), "--format", "csv"]) == 0
    capsys.readouterr()
    same = {name: (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
            for name in ("visibility_sweep.csv", "noise_vis.csv")}
    with capsys.disabled():
        verdict(8, [(f"{name} byte-identical", ok) for name, ok in same.items()],
                time.perf_counter() - t0, 30.0)
