import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambda_absorb.core import dagger, sigma
from lambda_absorb.errors import ConfigurationError
from lambda_absorb.model import (
    BASIC_SPACE,
    ENTANGLEMENT_SPACE,
    CascadeParams,
    PulseShape,
    build_basic_model,
    build_collapse_ops,
    build_entanglement_model,
    build_h_eff,
    build_h_herm,
    omega_L,
)

SP = BASIC_SPACE


def ops_dict(params):
    return dict(build_collapse_ops(params, SP))


def test_omega_L_peak_and_tails():
    p = PulseShape(omega0=1.0, tau=10.0, t0=20.0)
    assert omega_L(20.0, p) == 1.0
    assert omega_L(1e6, p) == 0.0
    assert omega_L(-1e6, p) == 0.0
    assert math.isclose(omega_L(30.0, p), math.exp(-1), rel_tol=1e-15)


def test_pulse_validation():
    with pytest.raises(ConfigurationError):
        PulseShape(tau=0)
    with pytest.raises(ConfigurationError):
        PulseShape(omega0=-1)


@pytest.mark.parametrize("kw", [{"gamma31_S": -1}, {"eta": 1.5}, {"eta_S": -0.1}, {"gamma21_T": float("nan")}])
def test_params_validation(kw):
    with pytest.raises(ConfigurationError):
        CascadeParams(**kw)


def test_collapse_eta_one():
    c = ops_dict(CascadeParams(gamma31_S=10, gamma31_T=1, eta=1))
    assert math.isclose(c["C1"].element([1, 1], [3, 1]).real, math.sqrt(10), rel_tol=1e-15)
    assert math.isclose(c["C1"].element([0, 1], [0, 3]).real, 1.0)
    assert np.all(c["C2"].entries == 0)
    assert list(c) == ["C1", "C2", "C3"]


def test_collapse_eta_zero():
    c = ops_dict(CascadeParams(eta=0.0, gamma31_T=2.0))
    assert c["C1"].element([0, 1], [0, 3]) == 0
    assert math.isclose(c["C2"].element([0, 1], [0, 3]).real, math.sqrt(2.0))


def test_collapse_optional_channels():
    c = ops_dict(CascadeParams(gamma30_S=4.0, gamma21_T=0.5))
    assert list(c) == ["C1", "C2", "C3", "C4", "C5"]
    assert math.isclose(c["C4"].element([0, 2], [3, 2]).real, 2.0)
    assert math.isclose(c["C5"].element([1, 2], [1, 2]).real, 0.5)
    assert math.isclose(c["C5"].element([1, 1], [1, 1]).real, -0.5)


def test_decay_sum_hand_expanded():
    p = CascadeParams(gamma31_S=10, gamma30_S=3, gamma31_T=1, gamma32_T=2, eta=0.7)
    total = sum((dagger(c) @ c).entries for _, c in build_collapse_ops(p, SP))
    # hand expansion in the 9-dim basis (S-major): index = 3*s + t, s in (0,1,3), t in (1,2,3)
    expected = np.zeros((9, 9))
    for t in range(3):
        expected[2 * 3 + t, 2 * 3 + t] += p.gamma31_S + p.gamma30_S
    for s in range(3):
        expected[3 * s + 2, 3 * s + 2] += p.gamma31_T + p.gamma32_T
    cross = math.sqrt(p.gamma31_S * p.gamma31_T * p.eta)
    # sigma31^S sigma13^T: |3_S,1_T><1_S,3_T| and its adjoint
    expected[2 * 3 + 0, 1 * 3 + 2] += cross
    expected[1 * 3 + 2, 2 * 3 + 0] += cross
    assert np.allclose(total, expected, atol=1e-14, rtol=0)


def test_h_eff_elements(canonical):
    h = build_h_eff(canonical, SP, t=5.0)
    assert np.isclose(h.element([1, 3], [3, 1]), -1j * math.sqrt(10), atol=1e-15)
    assert h.element([3, 1], [1, 3]) == 0


def test_no_drive_leaves_initial_state():
    p = CascadeParams(pulse=PulseShape(omega0=0.0))
    m = build_basic_model(p)
    psi0 = m.initial_state.amp
    for t in (0.0, 20.0, 50.0):
        assert np.all(build_h_eff(p, SP, t).entries @ psi0 == 0)


def test_h_herm_properties(canonical):
    assert build_h_herm(canonical, SP, 17.0).is_hermitian(1e-12)
    p0 = canonical.with_(eta=0.0)
    h = build_h_herm(p0, SP, 17.0)
    drive = (sigma(SP, "S", 0, 3) + sigma(SP, "S", 3, 0)) * omega_L(17.0, p0.pulse)
    assert h.allclose(drive, atol=0)


rates = st.floats(0.0, 20.0)


@settings(max_examples=60, deadline=None)
@given(rates, rates, rates, rates, rates, st.floats(0.0, 1.0), st.floats(-50.0, 150.0))
def test_reconstruction_identity(g31s, g30s, g31t, g32t, g21t, eta, t):
    p = CascadeParams(gamma31_S=g31s, gamma30_S=g30s, gamma31_T=g31t, gamma32_T=g32t, gamma21_T=g21t, eta=eta)
    decay = sum((dagger(c) @ c).entries for _, c in build_collapse_ops(p, SP))
    rebuilt = build_h_herm(p, SP, t).entries - 0.5j * decay
    assert np.max(np.abs(rebuilt - build_h_eff(p, SP, t).entries)) <= 1e-12
    m = build_basic_model(p)
    assert np.max(np.abs(m.h_eff(t).entries - build_h_eff(p, SP, t).entries)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(rates, rates, st.floats(0.0, 1.0))
def test_unidirectional(g31s, g31t, eta):
    h = build_h_eff(CascadeParams(gamma31_S=g31s, gamma31_T=g31t, eta=eta), SP, 0.0)
    assert h.element([3, 1], [1, 3]) == 0
    assert math.isclose(abs(h.element([1, 3], [3, 1])), math.sqrt(g31s * g31t * eta), rel_tol=1e-12, abs_tol=1e-300)


def test_collapse_annihilate_ground_manifold():
    p = CascadeParams(gamma30_S=1.0, gamma21_T=0.3, eta=0.6)
    for label, c in build_collapse_ops(p, SP):
        if label == "C5":
            assert np.count_nonzero(c.entries - np.diag(np.diag(c.entries))) == 0
            continue
        for s in ("0", "1"):
            for t in ("1", "2"):
                assert np.all(c.entries @ SP.basis([s, t]).amp == 0), (label, s, t)


def test_eta_zero_decouples():
    h = build_h_eff(CascadeParams(eta=0.0), SP, 20.0).entries
    # mixing between source and target means a nonzero element whose S and T labels both differ
    for a in range(9):
        for b in range(9):
            la, lb = SP.multi_index(a), SP.multi_index(b)
            if la[0] != lb[0] and la[1] != lb[1]:
                assert h[a, b] == 0


def test_basic_model_structure(canonical):
    m = build_basic_model(canonical)
    assert m.space.dim == 9
    assert abs(np.vdot(m.initial_state.amp, m.initial_state.amp) - 1) < 1e-15
    p = m.projectors["absorbed"].entries
    assert np.array_equal(p @ p, p)
    assert len(m.collapse_ops) == 3
    assert m.initial_state.ket({"S": 0, "T": 1}) == 1


def test_entanglement_model_structure():
    p = CascadeParams(eta=0.8)
    m = build_entanglement_model(p)
    assert m.space == ENTANGLEMENT_SPACE and m.space.dim == 20
    bell = m.projectors["bell"].entries
    succ = m.projectors["success"].entries
    assert np.allclose(succ @ bell, bell)
    h = m.h_eff(3.0)
    g = math.sqrt(p.gamma31_S / 2 * p.gamma31_T * p.eta)
    for pol in "+-":
        assert np.isclose(h.element(["1" + pol, "3" + pol], ["3", "1"]), -1j * g, atol=1e-14)
        assert h.element(["3", "1"], ["1" + pol, "3" + pol]) == 0
    assert [l for l, _ in m.collapse_ops] == ["C1+", "C1-", "C2+", "C2-", "C3"]


def test_entanglement_eta_zero_no_success():
    from lambda_absorb.oracle import final_observables, integrate_master
    from lambda_absorb.trajectory import IntegratorConfig

    m = build_entanglement_model(CascadeParams(eta=0.0))
    rho, _ = integrate_master(m, IntegratorConfig(dt=1e-2, t_end=100))
    assert final_observables(m, rho)["success"] == 0.0
