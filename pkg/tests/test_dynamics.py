import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pairwave import analytic, dynamics
from pairwave import quantum as qc
from pairwave.hamiltonian import HarmonicHamiltonian, build_full, system_layout
from pairwave.model import derive, baseline_spec
from pairwave.oracles import random_density, random_hermitian, random_lindblad

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def static_h(m):
    return HarmonicHamiltonian(qc.HilbertLayout((m.shape[0],)), m)


def test_zero_hamiltonian_leaves_state():
    psi = np.array([0.6, 0.8j, 0.0])
    res = dynamics.propagate_state(static_h(np.zeros((3, 3))), psi, 5.0)
    assert np.array_equal(res.final, psi)


@pytest.mark.parametrize("dt", [0.0, -1e-3])
def test_nonpositive_dt_rejected(dt):
    h = static_h(np.eye(2))
    with pytest.raises(ValueError):
        dynamics.propagate_state(h, np.array([1.0, 0.0]), 1.0, dt)
    with pytest.raises(ValueError):
        dynamics.evolve_master(h, dynamics.LindbladSet(), np.diag([1.0, 0.0]), 1.0, dt)


def test_bad_initial_states_rejected():
    h = static_h(np.eye(2))
    with pytest.raises(ValueError):
        dynamics.propagate_state(h, np.array([1.0, 1.0]), 1.0)
    with pytest.raises(ValueError):
        dynamics.evolve_master(h, dynamics.LindbladSet(), np.array([[1.0, 1.0], [0.0, 0.0]]), 1.0)
    with pytest.raises(ValueError):
        dynamics.evolve_master(h, dynamics.LindbladSet(), np.diag([0.7, 0.7]), 1.0)
    with pytest.raises(ValueError):
        dynamics.evolve_master(h, dynamics.LindbladSet(), np.diag([1.5, -0.5]), 1.0)


def test_norm_drift_aborts():
    h = static_h(np.diag([40.0, -40.0]))
    with pytest.raises(dynamics.IntegrationError) as err:
        dynamics.propagate_state(h, np.array([1.0, 0.0]), 1.0, dt=0.1)
    assert err.value.diagnostics.max_norm_deviation > dynamics.NORM_ABORT


@given(seeds, st.floats(0.1, 5.0))
@settings(max_examples=15, deadline=None)
def test_static_hamiltonian_matches_expm(seed, t):
    rng = np.random.default_rng(seed)
    h = random_hermitian(6, rng)
    psi = rng.normal(size=6) + 1j * rng.normal(size=6)
    psi /= np.linalg.norm(psi)
    res = dynamics.propagate_state(static_h(h), psi, t)
    assert np.max(np.abs(res.final - qc.expm_oracle(-1j * t * h) @ psi)) < 1e-8


def test_step_lands_on_t_final():
    res = dynamics.propagate_state(static_h(np.diag([1.0, -1.0])), np.array([1.0, 0.0]), 0.1, dt=0.03, samples=5)
    assert res.diagnostics.steps == 4
    assert res.diagnostics.dt == pytest.approx(0.025)
    assert res.times[-1] == pytest.approx(0.1)
    assert res.final[0] == pytest.approx(np.exp(-0.1j), abs=1e-9)


def test_default_dt_resolves_fastest_harmonic():
    spec = baseline_spec()
    h = build_full(spec)
    period = 2 * math.pi / h.max_frequency
    assert h.max_frequency == pytest.approx(2 * math.pi * 8.25)
    assert dynamics.default_dt(h) <= period / 40
    assert period / 40 == pytest.approx(3.03e-3, abs=1e-5)
    assert dynamics.default_dt(h) == pytest.approx(period / dynamics.POINTS_PER_PERIOD)


# -- baseline-parameter pure-state runs ---------------------------------------------

@pytest.fixture(scope="module")
def closed_runs():
    spec = baseline_spec(c1=11, dissipation=False)
    h = build_full(spec)
    psi0 = analytic.initial_state(spec)
    t = derive(spec).t_op
    dt = dynamics.default_dt(h)
    return (
        dynamics.propagate_state(h, psi0, t, samples=50),
        dynamics.propagate_state(h, psi0, t, dt / 2, samples=2),
    )


def test_norm_preserved_over_t_op(closed_runs):
    coarse, _ = closed_runs
    assert coarse.diagnostics.max_norm_deviation < 1e-9
    assert len(coarse.times) == 50


def test_richardson_half_step(closed_runs):
    coarse, fine = closed_runs
    assert np.linalg.norm(coarse.final - fine.final) < 1e-8


# -- master equation ------------------------------------------------------------

@given(seeds)
@settings(max_examples=25, deadline=None)
def test_lindblad_rhs_trace_and_hermiticity(seed):
    rng = np.random.default_rng(seed)
    d = 5
    rho = random_density(d, rng)
    out = dynamics.lindblad_rhs(rho, random_hermitian(d, rng), random_lindblad(d, rng))
    assert abs(np.trace(out)) < 1e-12
    assert np.max(np.abs(out - out.conj().T)) < 1e-12


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_rhs_matches_superoperator(seed):
    rng = np.random.default_rng(seed)
    d = 6
    h = random_hermitian(d, rng)
    lind = random_lindblad(d, rng)
    rho = random_density(d, rng)
    expected = (dynamics.lindblad_superoperator(h, lind) @ rho.ravel()).reshape(d, d)
    scale = max(1.0, np.max(np.abs(expected)))
    assert np.max(np.abs(dynamics.lindblad_rhs(rho, h, lind) - expected)) < 1e-12 * scale
    fast = dynamics.make_master_rhs(static_h(h), lind)(0.0, rho)
    assert np.max(np.abs(fast - expected)) < 1e-12 * scale


def test_fast_rhs_matches_reference_on_model():
    spec = baseline_spec(n_max=1).replace(
        dissipation=baseline_spec().dissipation.scaled(1e3)  # exaggerate so every term matters
    )
    h = build_full(spec)
    lind = dynamics.build_lindblad(spec)
    rho = random_density(h.dim, np.random.default_rng(7), rank=3)
    rhs = dynamics.make_master_rhs(h, lind)
    for t in (0.0, 0.123, 5.0):
        ref = dynamics.lindblad_rhs(rho, h.evaluate(t), lind)
        assert np.max(np.abs(rhs(t, rho) - ref)) < 1e-12


def test_build_lindblad_channels():
    spec = baseline_spec(n_max=1)
    lind = dynamics.build_lindblad(spec)
    assert len(lind.collapse) == 4 + 3
    assert len(lind.dephasing) == 2
    assert not dynamics.build_lindblad(spec.replace(include_dissipation=False))


def test_single_mode_decay():
    d, kappa = 4, 0.7
    lay = qc.HilbertLayout((d,))
    a = qc.annihilate(d)
    lind = dynamics.LindbladSet(((a, kappa),))
    rho0 = np.diag([0.0, 1.0, 0.0, 0.0]).astype(complex)
    res = dynamics.evolve_master(
        HarmonicHamiltonian(lay, np.zeros((d, d))), lind, rho0, 3.0, observables={"n": qc.number(d)}, samples=31
    )
    expected = np.exp(-kappa * res.times)
    assert np.max(np.abs(res.observables["n"].real - expected)) < 1e-6


def test_master_without_dissipation_matches_pure_state():
    spec = baseline_spec(n_max=1, dissipation=False)
    h = build_full(spec)
    psi0 = analytic.initial_state(spec)
    t = 5.0
    psi = dynamics.propagate_state(h, psi0, t).final
    rho = dynamics.evolve_master(h, dynamics.LindbladSet(), np.outer(psi0, psi0.conj()), t).final
    assert np.max(np.abs(rho - np.outer(psi, psi.conj()))) < 1e-8


def test_master_diagnostics_and_rehermitization():
    spec = baseline_spec(n_max=1)
    h = build_full(spec)
    psi0 = analytic.initial_state(spec)
    res = dynamics.evolve_master(h, dynamics.build_lindblad(spec), np.outer(psi0, psi0.conj()), 4.0)
    diag = res.diagnostics
    assert diag.rehermitizations == diag.steps // dynamics.REHERMITIZE_EVERY
    assert diag.max_trace_deviation < 1e-8
    assert diag.max_hermiticity_drift < 1e-10
    assert diag.min_eigenvalue >= -1e-7


def test_trace_drift_aborts():
    # a non-trace-preserving "collapse" built from a wrongly signed rate is rejected up front
    with pytest.raises(ValueError):
        dynamics.LindbladSet(((np.eye(2), -1.0),))
    h = static_h(np.diag([30.0, -30.0]))
    rho = np.full((2, 2), 0.5, dtype=complex)
    lind = dynamics.LindbladSet(((np.array([[0, 1], [0, 0]], dtype=complex), 50.0),))
    with pytest.raises(dynamics.IntegrationError):
        dynamics.evolve_master(h, lind, rho, 1.0, dt=0.2)
