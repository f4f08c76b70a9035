import math
import warnings

import numpy as np
import pytest

from conftest import GAP, spin_boson
from polaron_ccqme import bath as B
from polaron_ccqme import oracle
from polaron_ccqme.errors import ConfigError
from polaron_ccqme.model import SIGMA_Z, default_initial_state
from polaron_ccqme.validation import ed_benchmark


def test_uncoupled_ed_is_unitary():
    system, bath = spin_boson(0.0, 1.0)
    db = oracle.discretize_bath(bath.density, 1.0, 2, 3, omega_max=8.0)
    ed = oracle.exact_evolve(system, db, default_initial_state(2), 1.0, 40)
    exact = 0.5 + 0.5 * np.cos(GAP * ed.times)
    assert np.max(np.abs(ed.observables["sz"] - exact)) < 1e-12


def test_pure_dephasing_ed_keeps_populations():
    system, bath = spin_boson(0.3, 1.0, h=0.0)
    db = oracle.discretize_bath(bath.density, 1.0, 2, 4, omega_max=8.0)
    rho0 = np.array([[0.7, 0.3], [0.3, 0.3]], dtype=complex)
    ed = oracle.exact_evolve(system, db, rho0, 1.0, 40)
    assert np.max(np.abs(ed.observables["p0"] - 0.7)) < 1e-12
    assert np.max(np.abs(ed.traces - 1)) < 1e-12
    assert np.max(np.abs(ed.states[1:, 0, 1])) < 0.3


def test_single_mode_ed_runs():
    system, bath = spin_boson(0.2, 1.0)
    db = oracle.discretize_bath(bath.density, 1.0, 1, 6, omega_max=8.0)
    assert math.isinf(db.recurrence_time())
    ed = oracle.exact_evolve(system, db, default_initial_state(2), 1.0, 10)
    assert ed.warning is None
    assert np.min(ed.min_eigs) > -1e-12


def test_ed_dimension_cap():
    system, bath = spin_boson(0.1, 1.0)
    db = oracle.discretize_bath(bath.density, 1.0, 7, 4, omega_max=8.0)
    with pytest.raises(ConfigError, match="exceeds"):
        oracle.exact_evolve(system, db, default_initial_state(2), 1.0, 10)


def test_recurrence_warning():
    system, bath = spin_boson(0.1, 1.0)
    db = oracle.discretize_bath(bath.density, 1.0, 3, 3, omega_max=8.0)
    with pytest.warns(RuntimeWarning, match="recurrence"):
        ed = oracle.exact_evolve(system, db, default_initial_state(2), 2.0 * db.recurrence_time(), 20)
    assert "recurrence" in ed.warning


def test_discrete_kappa_converges():
    system, bath = spin_boson(0.1, 2.0)
    db = oracle.discretize_bath(bath.density, 2.0, 2000)
    assert oracle.discrete_kappa(db, 2.0) == pytest.approx(B.kappa_pair(2.0, bath), abs=1e-4)
    report = oracle.discretization_report(db, bath.density)
    assert max(report.values()) < 1e-3


def test_discrete_correlation_matches_continuum():
    _, bath = spin_boson(0.1, 2.0)
    db = oracle.discretize_bath(bath.density, 2.0, 2000)
    tau = np.linspace(0.0, 5.0, 11)
    kk = B.kappa_pair(2.0, bath) ** 2
    for d1, d2 in ((2.0, -2.0), (2.0, 2.0)):
        ref = B.correlation(d1 * d2, kk, tau, bath)
        got = oracle.discrete_correlation(db, d1, d2, tau)
        assert np.max(np.abs(got - ref)) < 1e-4


def test_discrete_correlation_edge_cases():
    _, bath = spin_boson(0.1, 2.0)
    db = oracle.discretize_bath(bath.density, 2.0, 50)
    k = oracle.discrete_kappa(db, 2.0)
    assert oracle.discrete_correlation(db, 2.0, -2.0, 0.0) == pytest.approx(1.0 - k * k, rel=1e-12)
    assert oracle.discrete_correlation(db, 0.0, 2.0, 1.0) == 0
    with pytest.raises(ConfigError):
        oracle.discretize_bath(bath.density, 2.0, 0)


def test_ed_state_is_physical():
    ed, _ = ed_benchmark(modes=3, cutoff=3, steps=40)
    assert np.max(np.abs(ed.traces - 1)) < 1e-12
    assert np.min(ed.min_eigs) > -1e-12
    assert np.allclose(ed.observables["sz"], np.einsum("ij,kji->k", SIGMA_Z, ed.states).real)


@pytest.mark.xfail(
    strict=True,
    reason="Fock cutoff 4 -> 6 moves <sigma_z> by about 2e-2 over the benchmark window, above the 1e-3 target",
)
def test_fock_cutoff_convergence():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lo, _ = ed_benchmark(cutoff=4)
        hi, _ = ed_benchmark(cutoff=6)
    diff = float(np.max(np.abs(lo.observables["sz"] - hi.observables["sz"])))
    print(f"cutoff 4 -> 6: max |d sz| = {diff:.4f}")
    assert diff < 1e-3
