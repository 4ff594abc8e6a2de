"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.

Criterion 3 compares the computed theory columns against the values printed
in the reproduction-target table. Several printed entries are not
reproducible from the companion purity table and the closed forms (some
would need visibility above 1), so that test documents the disagreement and
fails honestly; see the assertion message for the full comparison.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from tribell import bellcore, cli, closedform, expsim, optimizer, qstate, tomo

DEG = np.deg2rad
FOUR = ("I10", "I96", "I99", "I185")


def _report(num: int, desc: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    tail = f" - {detail}" if detail else ""
    print(f"\n[ACCEPTANCE] criterion {num} ({desc}): {status}{tail}")


def _closed_form_max(name: str, theta: float) -> float:
    if name == "I10":
        return closedform.i10_max_exact(theta)[0] if theta > 0 else 1.0
    if name in ("I96", "I99"):
        return closedform.i96_max_gghz(theta)
    return closedform.i185_max_gghz(theta)


def test_criterion_1_closed_forms_vs_oracle():
    t0 = time.monotonic()
    cfg = optimizer.OptimizerConfig(multistart_count=16, seed=20250810)
    worst = 0.0
    for deg in np.linspace(0.0, 45.0, 25):
        theta = DEG(deg)
        rho = qstate.to_density(qstate.make_gghz(theta))
        for name in FOUR:
            got = optimizer.maximize(rho, bellcore.builtin(name), cfg).value
            worst = max(worst, abs(got - _closed_form_max(name, theta)))
    elapsed = time.monotonic() - t0
    ok = worst < 1e-6 and elapsed < 120.0
    _report(1, "closed forms vs numeric oracle",
            ok, f"worst deviation {worst:.2e}, {elapsed:.1f}s")
    assert worst < 1e-6
    assert elapsed < 120.0


def test_criterion_2_crossovers():
    b1, b2 = closedform.region_boundaries_deg()
    onset = closedform.svetlichny_onset_deg()
    tau = closedform.ms_vs_gghz_crossover()
    ok = (abs(b1 - 14.94) <= 0.1 and abs(b2 - 29.5) <= 0.1
          and abs(onset - 22.5) <= 0.05 and abs(tau - 0.0434) <= 1e-3)
    _report(2, "threshold crossovers",
            ok, f"b1={b1:.3f} b2={b2:.3f} onset={onset:.3f} tau*={tau:.5f}")
    assert abs(b1 - 14.94) <= 0.1
    assert abs(b2 - 29.5) <= 0.1
    assert abs(onset - 22.5) <= 0.05
    assert abs(tau - 0.0434) <= 1e-3


# printed theory columns of the reproduction-target table: (p~I10, p~I96, p~I185)
_TABLE2_PRINTED = {
    45.0: (0.990, 1.252, 1.387),
    40.0: (1.040, 1.246, 1.369),
    36.0: (1.064, 1.221, 1.311),
    30.0: (1.089, 1.187, 1.204),
    25.0: (1.102, 1.155, 1.071),
    21.0: (1.087, 1.115, 0.945),
    17.0: (1.073, 1.080, 0.814),
    10.0: (1.049, 1.041, 0.926),
    5.0: (1.014, 1.008, 0.980),
    0.0: (0.996, 0.997, 0.997),
}


def test_criterion_3_table2_theory_columns():
    lines = []
    failures = []
    for deg, purity in cli.TABLE2_ROWS:
        theta = DEG(deg)
        ptilde = np.sqrt((8.0 * purity - 1.0) / 7.0)
        computed = (
            ptilde * _closed_form_max("I10", theta),
            ptilde * closedform.i96_max_gghz(theta),
            ptilde * closedform.i185_max_gghz(theta),
        )
        printed = _TABLE2_PRINTED[deg]
        for name, got, want in zip(("I10", "I96", "I185"), computed, printed):
            delta = abs(got - want)
            mark = "ok" if delta <= 0.002 else "MISMATCH"
            lines.append(
                f"  theta={deg:4.1f} P={purity:.3f} {name:>4}: computed {got:.4f} "
                f"printed {want:.3f} |diff| {delta:.4f} {mark}"
            )
            if delta > 0.002:
                failures.append((deg, name, got, want, delta))
    ok = not failures
    _report(3, "reproduction-table theory columns",
            ok, f"{len(failures)}/30 entries beyond 0.002")
    if failures:
        detail = "\n".join(lines)
        worst = max(f[4] for f in failures)
        pytest.fail(
            "computed p~ x I_max disagrees with the printed table on "
            f"{len(failures)}/30 entries (worst {worst:.4f}).\n"
            "The printed values are not reproducible from the companion purity\n"
            "table and the closed forms: e.g. the theta=10 row would need\n"
            "visibility p~ > 1 for I96, and the theta=21 I185 entry is\n"
            "inconsistent with the other columns of its own row for any p~.\n"
            "The closed forms themselves are the certified quantum maxima\n"
            "(criterion 1 pins them against the independent optimizer).\n" + detail
        )


def test_criterion_4_violation_for_any_entanglement():
    worst_margin = np.inf
    for deg in np.arange(0.5, 45.0 + 0.25, 0.5):
        theta = DEG(deg)
        best = max(_closed_form_max(name, theta) for name in FOUR)
        worst_margin = min(worst_margin, best - 1.0)
    ok = worst_margin > 1e-6
    _report(4, "some inequality violated at every theta > 0",
            ok, f"worst margin {worst_margin:.2e}")
    assert worst_margin > 1e-6


def test_criterion_5_characterization_pipeline():
    # closed forms against matrix computations
    worst = 0.0
    for theta in np.linspace(0.0, np.pi / 4, 8):
        psi = qstate.make_gghz(theta)
        for p in np.linspace(0.0, 1.0, 8):
            rho = qstate.depolarize(psi, p)
            worst = max(worst, abs(qstate.fidelity(rho, psi) - (1 + 7 * p) / 8))
            pur = qstate.purity(rho)
            worst = max(worst, abs(pur - (1 + 7 * p * p) / 8))
            worst = max(worst, abs(qstate.f_max_bound(pur) - qstate.fidelity(rho, psi)))
            worst = max(worst, abs(qstate.tri_negativity(rho) - qstate.n_tri_model(theta, pur)))
    formulas_ok = worst < 1e-9

    # full synthetic pipeline, 10 seeds at exposure 1e6
    rho_true = qstate.depolarize(qstate.make_gghz(np.pi / 4), 0.98097)
    tset = tomo.pauli_set()
    reports = []
    for seed in range(10):
        data = tomo.simulate_tomography(rho_true, tset, 1e6, seed=seed)
        result = tomo.reconstruct_ml(data, max_iterations=30000)
        reports.append(tomo.state_report(result))
    f = float(np.mean([r.fidelity for r in reports]))
    p = float(np.mean([r.purity for r in reports]))
    fmax = float(np.mean([r.fidelity_max for r in reports]))
    ntri = float(np.mean([r.tri_negativity for r in reports]))
    targets = {"F": (f, 0.98), "P": (p, 0.967), "F_max": (fmax, 0.983), "N_tri": (ntri, 0.976)}
    pipeline_ok = all(abs(got - want) <= 0.02 for got, want in targets.values())

    _report(5, "state-characterization pipeline", formulas_ok and pipeline_ok,
            f"formula deviation {worst:.1e}; "
            + " ".join(f"{k}={got:.4f}(target {want})" for k, (got, want) in targets.items()))
    assert formulas_ok
    for key, (got, want) in targets.items():
        assert abs(got - want) <= 0.02, key


def test_criterion_6_estimators():
    # exact expected counts reproduce the quantum correlators exactly
    rng = np.random.default_rng(5)
    worst = 0.0
    from conftest import random_density, random_settings

    for _ in range(10):
        rho = random_density(rng)
        ms = random_settings(rng)
        triple = expsim.SettingTriple(a=ms.a0, b=ms.b0, c=ms.c1)
        rec = expsim.CountsRecord(
            counts=expsim.born_probabilities(rho, triple) * 1e5, setting=triple, exposure=1e5
        )
        pairs = [
            (expsim.corr3(rec), bellcore.CorrelatorTerm(0, 0, 1)),
            (expsim.corr2(rec, "AB"), bellcore.CorrelatorTerm(0, 0, None)),
            (expsim.corr2(rec, "BC"), bellcore.CorrelatorTerm(None, 0, 1)),
            (expsim.corr1(rec, "A"), bellcore.CorrelatorTerm(0, None, None)),
        ]
        for est, term in pairs:
            worst = max(worst, abs(est - bellcore.correlator(rho, ms, term)))
    exact_ok = worst < 1e-12

    # sampled Svetlichny value on the GHZ state: 3-sigma coverage over seeds
    rho = qstate.to_density(qstate.make_gghz(np.pi / 4))
    ineq = bellcore.builtin("I185")
    settings = closedform.i185_optimal_settings_gghz(np.pi / 4)
    hits = 0
    for seed in range(100):
        value, run = expsim.measure_inequality(rho, ineq, settings, 1e5, seed=seed)
        _, sd = expsim.monte_carlo_errors(run, ineq, 100, seed=seed)
        if abs(value - np.sqrt(2)) <= 3 * sd:
            hits += 1
    coverage_ok = hits >= 95
    _report(6, "estimator consistency and coverage", exact_ok and coverage_ok,
            f"exact deviation {worst:.1e}; {hits}/100 runs within 3 sigma")
    assert exact_ok
    assert coverage_ok


def test_criterion_7_lhv_transcription():
    bounds = {name: bellcore.lhv_bound(bellcore.builtin(name)) for name in FOUR}
    ok = all(abs(b - 1.0) < 1e-12 for b in bounds.values())
    _report(7, "classical bounds by enumeration", ok,
            " ".join(f"{k}={v:.12f}" for k, v in bounds.items()))
    for b in bounds.values():
        assert b == pytest.approx(1.0, abs=1e-12)


def test_criterion_8_replay_determinism(tmp_path):
    jobs = [
        (["curves", "--grid", "0:45:9", "--out", str(tmp_path / "curves.csv")],
         [tmp_path / "curves.csv"], tmp_path / "curves.manifest.json"),
        (["table2", "--rows", "30:0.965", "--exposure", "1e4", "--seed", "3",
          "--out", str(tmp_path / "t2.csv")], [tmp_path / "t2.csv"],
         tmp_path / "t2.manifest.json"),
        (["experiment", "--theta", "45", "--p", "0.98", "--exposure", "1e4", "--seed", "4",
          "--out-dir", str(tmp_path / "exp")],
         sorted((tmp_path / "exp").glob("*")), tmp_path / "exp" / "manifest.json"),
    ]
    identical = True
    for args, _, _ in jobs:
        assert cli.main(args) == 0
    for args, outputs, manifest in jobs:
        outputs = [p for p in (Path(o) for o in outputs)
                   if p.is_file() and p.name != "manifest.json"]
        if not outputs:
            outputs = [p for p in Path(manifest).parent.glob("*")
                       if p.is_file() and p.name != "manifest.json"]
        before = {p: p.read_bytes() for p in outputs}
        assert cli.main(["replay", str(manifest)]) == 0
        after = {p: p.read_bytes() for p in outputs}
        identical = identical and before == after
    _report(8, "manifest replay is byte-identical", identical)
    assert identical
