import math
import warnings

import numpy as np
import pytest
from scipy import linalg

from conftest import GAMMA_C, PLANT_A, PLANT_B, TAU_C, UPSILON
from encctl.designer import (
    DesignError,
    DesignSpec,
    certify_security,
    cheap_gain,
    design,
    find_k_star,
    find_T_star,
    pole_place,
    riccati_finite,
    riccati_step,
)
from encctl.security_curves import gramian_trace_sum, log_sdt
from encctl.simulator import PlantModel

F_CHEAP_REF = np.array([[-0.78077641, 0.8096118]])


def test_scalar_riccati_is_deadbeat():
    seq = riccati_finite([[0.7]], [[1.0]], 5)
    assert all(np.allclose(P, 1.0) for P in seq.P)
    assert all(np.allclose(F, -0.7) for F in seq.gains)
    assert seq.horizon == 5


def test_zero_plant_gives_zero_gains():
    seq = riccati_finite(np.zeros((2, 2)), np.eye(2), 4)
    assert all(np.allclose(F, 0) for F in seq.gains)
    assert all(np.allclose(P, np.eye(2)) for P in seq.P)


def test_finite_horizon_gains_converge_to_stationary():
    seq = riccati_finite(PLANT_A, PLANT_B, 200)
    assert np.allclose(seq.gains[0], cheap_gain(PLANT_A, PLANT_B), atol=1e-8)
    assert all(np.linalg.eigvalsh(P).min() > 0 for P in seq.P)


def test_riccati_rejects_rank_deficient_input():
    with pytest.raises(DesignError, match="full column rank"):
        riccati_finite(np.eye(2), np.array([[1.0, 2.0], [2.0, 4.0]]), 3)


def test_cheap_gain_unstable_plant():
    F, P = cheap_gain(PLANT_A, PLANT_B, return_P=True)
    assert np.allclose(F, F_CHEAP_REF, atol=1e-7)
    P_next, _ = riccati_step(PLANT_A, PLANT_B, P)
    assert np.max(np.abs(P_next - P)) <= 1e-9
    assert max(abs(np.linalg.eigvals(PLANT_A + PLANT_B @ F))) < 1


def test_cheap_gain_against_scipy_dare_with_tiny_input_weight():
    rng = np.random.default_rng(0)
    for _ in range(5):
        A = rng.standard_normal((3, 3))
        B = rng.standard_normal((3, 2))
        F = cheap_gain(A, B)
        R = 1e-9 * np.eye(2)
        P = linalg.solve_discrete_are(A, B, np.eye(3), R)
        F_ref = -np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
        assert np.allclose(F, F_ref, atol=1e-5)


def test_full_actuation_cancels_plant():
    A = np.array([[0.2, 1.0], [0.0, 0.3]])
    assert np.allclose(cheap_gain(A, np.eye(2)), -A)


def test_scalar_cheap_gain():
    F, P = cheap_gain([[1.7]], [[1.0]], return_P=True)
    assert np.allclose(F, -1.7) and np.allclose(P, 1.0)


def test_pole_placement_baseline():
    F = pole_place(PLANT_A, PLANT_B, [0.99, -0.99])
    assert np.allclose(F, [[-0.0398, 0.2]], atol=1e-12)
    Acl = PLANT_A + PLANT_B @ F
    assert np.trace(Acl) == pytest.approx(0, abs=1e-12)
    assert np.linalg.det(Acl) == pytest.approx(-0.9801)


def test_pole_placement_identity_and_random():
    assert np.allclose(pole_place(PLANT_A, PLANT_B, np.linalg.eigvals(PLANT_A)), 0, atol=1e-12)
    rng = np.random.default_rng(1)
    for _ in range(10):
        A = rng.standard_normal((3, 3))
        B = rng.standard_normal((3, 1))
        poles = rng.uniform(-0.9, 0.9, 3)
        F = pole_place(A, B, poles)
        assert np.allclose(np.sort(np.linalg.eigvals(A + B @ F).real), np.sort(poles), atol=1e-6)
    with pytest.raises(ValueError):
        pole_place(PLANT_A, np.eye(2), [0.1, 0.2])
    with pytest.raises(DesignError):
        pole_place(np.eye(2), np.array([[1.0], [1.0]]), [0.1, 0.2])


def test_pole_placement_conjugate_pair():
    F = pole_place(PLANT_A, PLANT_B, [0.5 + 0.3j, 0.5 - 0.3j])
    eig = np.linalg.eigvals(PLANT_A + PLANT_B @ F)
    assert np.allclose(np.sort_complex(eig), np.sort_complex([0.5 - 0.3j, 0.5 + 0.3j]))


def test_T_star_hand_cases():
    assert find_T_star(np.zeros((2, 2)), 0.9) == 2
    # n = 1, A = 0: E(T) = T, so T* is the first integer above 1/gamma_c
    assert find_T_star(np.zeros((1, 1)), 0.25) == 5
    assert find_T_star(np.zeros((1, 1)), 0.3) == 4
    assert find_T_star(np.zeros((2, 2)), 10.0) == 1


def test_T_star_cap_and_warning():
    with pytest.raises(DesignError, match="within 10 steps"):
        find_T_star(np.zeros((1, 1)), 1e-6, cap=10)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        find_T_star(np.array([[1.1]]), 1e-3)
    assert any("Schur" in str(w.message) for w in rec)


@pytest.mark.parametrize("F, T_expect", [([[-0.0398, 0.2]], 18586), (F_CHEAP_REF, 384473)])
def test_T_star_reference_values_and_tightness(F, T_expect):
    A = PLANT_A + PLANT_B @ np.array(F)
    T = find_T_star(A, GAMMA_C)
    assert T == T_expect
    assert 2 / gramian_trace_sum(A, T) < GAMMA_C
    assert 2 / gramian_trace_sum(A, T - 1) >= GAMMA_C


@pytest.mark.parametrize("T, k", [(0, 1091), (18586, 734), (384473, 641)])
def test_k_star_reference_values(T, k):
    assert find_k_star(T, TAU_C, UPSILON) == k
    assert log_sdt(T, k) > math.log(TAU_C)
    assert log_sdt(T, k - 1) <= math.log(TAU_C)


def test_design_pipeline_reference_plant(unstable_plant):
    spec = DesignSpec(unstable_plant, GAMMA_C, TAU_C, UPSILON)
    res = design(spec)
    assert (res.T_star, res.k_star) == (384473, 641)
    assert np.allclose(res.F_star, F_CHEAP_REF, atol=1e-7)
    rec = res.to_record()
    assert rec["T_star"] == 384473 and rec["gain_kind"] == "cheap"
    assert design(spec, static_key=True).k_star == 1091
    assert design(spec, F=[[-0.0398, 0.2]]).k_star == 734


def test_design_large_gamma_gives_single_sample():
    plant = PlantModel([[0.5]], [[1.0]], [[1.0]])
    res = design(DesignSpec(plant, 2.0, TAU_C, UPSILON))
    assert res.T_star == 1
    assert res.k_star == find_k_star(1, TAU_C, UPSILON)


def test_design_spec_validation(unstable_plant):
    with pytest.raises(ValueError):
        DesignSpec(unstable_plant, 0.0, TAU_C, UPSILON)
    with pytest.raises(ValueError):
        DesignSpec(unstable_plant, GAMMA_C, math.inf, UPSILON)


def test_certificate_flags_short_keys():
    A = PLANT_A + PLANT_B @ F_CHEAP_REF
    cert = certify_security(A, 1e-2, TAU_C, 40, scan_to=200)
    assert not cert.secure and cert.first_violation is not None


def test_certificate_secure_for_designed_scalar_plant():
    plant = PlantModel([[0.5]], [[1.0]], [[1.0]])
    spec = DesignSpec(plant, 1e-3, 1e-6, UPSILON)
    res = design(spec)
    A = plant.closed_loop(res.F_star)
    cert = certify_security(A, spec.gamma_c, spec.tau_c, res.k_star, scan_to=res.T_star)
    assert cert.secure and cert.scanned_to >= res.T_star
    assert cert.tau_exceeds_from <= res.T_star
    short = certify_security(A, spec.gamma_c, spec.tau_c, res.k_star - 1, scan_to=res.T_star)
    assert not short.secure and short.first_violation == res.T_star
