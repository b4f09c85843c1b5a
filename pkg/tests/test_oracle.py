import numpy as np
import pytest
from scipy.integrate import solve_ivp

from lambda_absorb.errors import DimensionMismatchError
from lambda_absorb.model import (
    BASIC_SPACE,
    CascadeParams,
    PulseShape,
    build_basic_model,
    build_entanglement_model,
)
from lambda_absorb.oracle import (
    DensityMatrix,
    c1_flux,
    final_observables,
    flux_operator,
    integrate_master,
    kernel_rhs,
    lindblad_rhs,
    steady_state_ok,
)
from lambda_absorb.trajectory import IntegratorConfig

# regression pin, cross-checked against an adaptive DOP853 run below
CANONICAL_ABSORBED = 0.9772360267927338


def random_rho(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    r = a @ a.conj().T
    return r / np.trace(r)


@pytest.fixture(scope="module")
def canonical_run():
    m = build_basic_model(CascadeParams())
    rho, trace = integrate_master(m, IntegratorConfig())
    return m, rho, trace


def test_dark_state_is_stationary():
    m = build_basic_model(CascadeParams())
    rho = DensityMatrix.pure(BASIC_SPACE.basis([1, 2]))
    for t in (0.0, 20.0, 55.0):
        assert np.abs(lindblad_rhs(rho, t, m)).max() == 0.0
        assert np.abs(kernel_rhs(rho, t, m)).max() < 1e-15


@pytest.mark.parametrize("builder,params", [
    (build_basic_model, CascadeParams(gamma30_S=3.0, gamma21_T=0.4, eta=0.6)),
    (build_entanglement_model, CascadeParams(eta=0.3, eta_S=0.3, gamma21_T=0.2)),
])
def test_kernel_matches_dense_reference(builder, params):
    m = builder(params)
    rng = np.random.default_rng(0)
    for t in (3.0, 20.0, 31.7):
        rho = DensityMatrix(m.space, random_rho(m.space.dim, rng))
        dense = lindblad_rhs(rho, t, m)
        assert abs(np.trace(dense)) < 1e-12
        assert np.allclose(kernel_rhs(rho, t, m), dense, atol=1e-12, rtol=0)


def test_effective_hamiltonian_form():
    m = build_basic_model(CascadeParams(gamma30_S=2.0, gamma21_T=0.3, eta=0.8))
    rng = np.random.default_rng(5)
    for t in (10.0, 20.0):
        r = random_rho(9, rng)
        h = m.h_eff(t).entries
        expected = -1j * (h @ r - r @ h.conj().T)
        for _, c in m.collapse_ops:
            expected = expected + c.entries @ r @ c.entries.conj().T
        assert np.allclose(lindblad_rhs(DensityMatrix(m.space, r), t, m), expected, atol=1e-12, rtol=0)


def test_density_matrix_shape_checked():
    with pytest.raises(DimensionMismatchError):
        DensityMatrix(BASIC_SPACE, np.eye(3))


def test_eta_zero_leaves_target_untouched():
    m = build_basic_model(CascadeParams(eta=0.0))
    rho, _ = integrate_master(m, IntegratorConfig())
    obs = final_observables(m, rho)
    assert obs["absorbed"] < 1e-14
    # whatever the source did, the target is still in |1>
    assert abs(rho.population([1, 1]) + rho.population([0, 1]) - 1.0) < 1e-9


def test_canonical_absorption_pinned(canonical_run):
    m, rho, _ = canonical_run
    assert abs(final_observables(m, rho)["absorbed"] - CANONICAL_ABSORBED) < 1e-9


@pytest.mark.slow
def test_canonical_absorption_independent_integrator():
    m = build_basic_model(CascadeParams())
    rho0 = DensityMatrix.pure(m.initial_state).entries

    def f(t, y):
        r = DensityMatrix(m.space, y.reshape(9, 9))
        return lindblad_rhs(r, t, m).ravel()

    sol = solve_ivp(f, (0.0, 100.0), rho0.ravel().astype(complex), method="DOP853", rtol=1e-10, atol=1e-12)
    rho = sol.y[:, -1].reshape(9, 9)
    absorbed = rho[BASIC_SPACE.basis_index([1, 2])] [BASIC_SPACE.basis_index([1, 2])].real
    assert abs(absorbed - CANONICAL_ABSORBED) < 1e-7


def test_trace_and_positivity(canonical_run):
    m, rho, trace = canonical_run
    assert trace.trace_drift.max() < 1e-10
    assert trace.min_eigenvalue.min() > -1e-10
    assert rho.min_eigenvalue() > -1e-10
    assert steady_state_ok(m, rho, IntegratorConfig())


def test_population_bookkeeping(canonical_run):
    m, rho, trace = canonical_run
    obs = final_observables(m, rho)
    ground = sum(rho.population([s, t]) for s in (0, 1) for t in (1, 2))
    assert abs(ground - 1.0) < 1e-9
    assert abs(obs["absorbed"] + obs["failed"] + rho.population([0, 1]) + rho.population([0, 2]) - 1) < 1e-9
    # absorbed and failed are sampled monotone once the pulse has passed
    a = trace.observables["absorbed"]
    assert np.all(np.diff(a[trace.times > 40]) >= -1e-12)


def test_c1_flux_integrates_to_failure(canonical_run):
    m, rho, trace = canonical_run
    flux = c1_flux(trace)
    assert np.all(flux >= -1e-14)
    # every photon leaving through C1 ends in |1_S,1_T> (only C1 maps |1,3> -> |1,1> and source decay)
    dt = trace.times[1] - trace.times[0]
    total = float(np.sum(0.5 * (flux[1:] + flux[:-1])) * dt)
    assert abs(total - rho.population([1, 1])) < 5e-3


def test_flux_operator_without_offset():
    m = build_basic_model(CascadeParams())
    c1 = m.collapse("C1").entries
    assert np.allclose(flux_operator(m), c1.conj().T @ c1)


def test_pure_states_give_unit_trace():
    rng = np.random.default_rng(1)
    amp = rng.normal(size=9) + 1j * rng.normal(size=9)
    from lambda_absorb.core import StateVector, normalize
    rho = DensityMatrix.pure(normalize(StateVector(BASIC_SPACE, amp)))
    assert abs(rho.trace - 1) < 1e-14
    assert abs(rho.min_eigenvalue()) < 1e-12


def test_no_drive_nothing_happens():
    m = build_basic_model(CascadeParams(pulse=PulseShape(omega0=0.0)))
    rho, _ = integrate_master(m, IntegratorConfig(t_end=10.0))
    assert rho.population([0, 1]) == 1.0
