"""Acceptance criteria AC1-AC10, one PASS/FAIL line each at the stated tolerances."""
import time

import pytest

from nullcone import suites
from nullcone.config import GridConfig


@pytest.fixture
def report_line(capsys):
    def emit(rule, title, rep, elapsed, budget=None):
        ok = rep.passed and (budget is None or elapsed < budget)
        detail = "; ".join(f"{c.rule}={'ok' if c.passed else 'FAIL'}" for c in rep.checks)
        limit = f" (< {budget:g} s)" if budget is not None else ""
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {rule} {title}: {detail}; "
                  f"{elapsed:.2f} s{limit}")
        assert rep.passed, rep.failing_rules()
        if budget is not None:
            assert elapsed < budget
    return emit


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def test_ac1_background_fidelity(report_line):
    rep, dt = timed(suites.background_suite, M=1.0, a=0.0, r_min=10.0, r_max=1000.0, n=200,
                    tol=1e-8)
    assert rep.values["decay_const[trchi-2/r]"] <= 3 and rep.values["decay_const[rho]"] <= 2.1
    report_line("AC1", "background fidelity", rep, dt, 10)


def test_ac2_hodge_identities(report_line):
    rep, dt = timed(suites.hodge_suite, L=16, trials=100, seed=0, tol=1e-9)
    report_line("AC2", "Hodge identities and solver residual", rep, dt, 5)


def test_ac3_poincare(report_line):
    rep, dt = timed(suites.poincare_suite, L=12, eps=0.01, trials=5, seed=0)
    report_line("AC3", "Poincare minimum", rep, dt, 10)


def test_ac4_divergence_identity(report_line):
    rep, dt = timed(suites.mms_suite, M=0.0, s=5, seed=0, threshold=1.9)
    report_line("AC4", "pair identity convergence", rep, dt, 60)


def test_ac5_case_table(report_line):
    rep, dt = timed(suites.cases_suite)
    report_line("AC5", "case selection table", rep, dt, 1)


def test_ac6_transport(report_line):
    rep, dt = timed(suites.transport_suite, nodes=41, tol=1e-6)
    report_line("AC6", "transport conservation and order", rep, dt)


def test_ac7_decay_checker(report_line):
    rep, dt = timed(suites.decay_suite)
    assert rep.values["mutants"] >= 10
    report_line("AC7", "decay type-checker", rep, dt, 1)


def test_ac8_frames(report_line):
    rep, dt = timed(suites.frames_suite, seed=0, trials=20)
    report_line("AC8", "frame transformations", rep, dt)


def test_ac9_linear_evolution(report_line):
    cfg = GridConfig(n_u=64, n_ub=64, L=8, s=5.0, background="minkowski")
    (_, rep), dt = timed(suites.evolve_suite, cfg, seed=0, oracle_tol=1e-6)
    report_line("AC9", "linear Bianchi evolution", rep, dt, 120)


def test_ac10_peeling(report_line):
    rep, dt = timed(suites.peeling_suite, ("3.5", "5", "6.5", "7", "8"))
    report_line("AC10", "peeling tables", rep, dt, 1)
