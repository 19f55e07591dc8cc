import cmath
import math

import numpy as np
import pytest
from conftest import dense_grid_argmax, raw_mimo, raw_steering

from mpcrb import (ArrayGeometry, ConditioningError, DegenerateBoundError,
                   MultipathScene, SearchConfig, SingularInformationError,
                   XiVector, ZetaSet, cd_matrix, compressed_mean, crb_theta,
                   e_adot, fim, mcrb_sandwich, mcrb_theta_closed,
                   scene_from_ratios, standard_virtual_ula, steering, theta_a,
                   theta_a_paper_form, zeta_set)

GEOM = standard_virtual_ula(3, 4)
RNG = np.random.default_rng(303)
TIGHT = SearchConfig(refine_tol=1e-9)


def unit_e_adot_geometry():
    """Two-element receive pair placed so that E_Adot = 1 at broadside."""
    a = 1.0 / (2.0 * np.pi)
    return ArrayGeometry(tx_positions=[0.0], rx_positions=[-a, a])


def fig2_scene(snr_db=10.0, k=1):
    return scene_from_ratios(GEOM, 0.0, np.deg2rad(0.5), snr_db, 0.0, 0.0, k, 1.0)


# ---------------------------------------------------------------------------
# FIM / CRB

def test_fim_unit_substitution():
    g = unit_e_adot_geometry()
    sc = scene_from_ratios(g, 0.0, 0.01, 0.0, 0.0, 0.0)      # snr 0 dB -> sigma 1
    j = fim(sc, f_tau=1.0, f_omega=1.0)
    np.testing.assert_allclose(j, np.diag([2.0, 2.0, 2.0, 2.0, 2.0]), atol=1e-12)


def test_fim_linear_in_pulse_count():
    sc1 = fig2_scene(k=1)
    sc2 = fig2_scene(k=2)
    np.testing.assert_allclose(fim(sc2, 1.0, 1.0), 2.0 * fim(sc1, 1.0, 1.0),
                               rtol=1e-14)


def test_fim_theta_entry_fig2_preset():
    sc = fig2_scene(snr_db=10.0, k=64)
    j = fim(sc, 1.0, 1.0)
    assert j[4, 4] == pytest.approx(2 * 10 * 64 * 117.6128, rel=1e-5)
    assert j[4, 4] * crb_theta(sc) == pytest.approx(1.0, rel=1e-12)


def test_fim_rejects_singular_information():
    g = standard_virtual_ula(1, 1)
    sc = scene_from_ratios(g, 0.0, 0.01, 10.0, 0.0, 0.0)
    with pytest.raises(SingularInformationError):
        fim(sc, 1.0, 1.0)
    with pytest.raises(SingularInformationError):
        crb_theta(sc)


def test_crb_unit_and_scaling():
    g = unit_e_adot_geometry()
    sc = scene_from_ratios(g, 0.0, 0.01, 0.0, 0.0, 0.0)
    assert crb_theta(sc) == pytest.approx(0.5, rel=1e-12)
    sc4 = scene_from_ratios(g, 0.0, 0.01, 10 * math.log10(4.0), 0.0, 0.0)
    assert crb_theta(sc4) == pytest.approx(0.125, rel=1e-12)


def test_crb_fig2_value_via_fd_oracle():
    sc = fig2_scene()
    fd = (raw_steering(GEOM.rx_positions, 1e-6) - raw_steering(GEOM.rx_positions, -1e-6)) / 2e-6
    ft = (raw_steering(GEOM.tx_positions, 1e-6) - raw_steering(GEOM.tx_positions, -1e-6)) / 2e-6
    e_fd = np.sum(np.abs(fd) ** 2) + np.sum(np.abs(ft) ** 2)
    assert crb_theta(sc) == pytest.approx(1.0 / (2 * 10 * e_fd), rel=1e-7)


def test_fim_crb_identity_random_scenes():
    for _ in range(20):
        sc = scene_from_ratios(GEOM, float(RNG.uniform(-0.5, 0.5)), 0.3,
                               float(RNG.uniform(-10, 30)),
                               float(RNG.uniform(-10, 30)),
                               float(RNG.uniform(-3, 3)),
                               int(RNG.integers(1, 64)),
                               float(RNG.uniform(0.5, 3.0)))
        assert fim(sc, 1.0, 1.0)[4, 4] * crb_theta(sc) == pytest.approx(1.0, rel=1e-12)


# ---------------------------------------------------------------------------
# zeta set and curvature matrix

def test_zeta_multipath_free():
    sc = scene_from_ratios(GEOM, 0.0, 0.2, 10.0, 0.0, 0.0)
    sc = MultipathScene(geom=GEOM, theta=sc.theta, psi=sc.psi,
                        alpha_d=2.0 + 0j, alpha_i=0.0 + 0j,
                        sigma_w2=sc.sigma_w2)
    z = zeta_set(sc)
    e = e_adot(steering(GEOM, 0.0))
    assert z.zeta4 == 0 and z.zeta5 == 0
    assert z.zeta3 == pytest.approx(4.0 * e, rel=1e-12)


def test_zeta_coherent_triples_curvature():
    sc = scene_from_ratios(GEOM, 0.0, 0.0, 10.0, 0.0, 0.0)
    z = zeta_set(sc)
    e = e_adot(steering(GEOM, 0.0))
    assert z.zeta3 == pytest.approx(3.0 * e, rel=1e-12)


def test_zeta5_against_raw_trace_oracle():
    theta, psi = 0.13, -0.29
    alpha_i = 0.7 * cmath.exp(0.9j)
    sc = MultipathScene(geom=GEOM, theta=theta, psi=psi, alpha_d=1.2 + 0.4j,
                        alpha_i=alpha_i, sigma_w2=0.3)
    z = zeta_set(sc)
    # independent trace built from raw steering vectors and explicit sums
    h = 1e-7
    ar = raw_steering(GEOM.rx_positions, theta)
    at = raw_steering(GEOM.tx_positions, theta)
    dar = (raw_steering(GEOM.rx_positions, theta + h)
           - raw_steering(GEOM.rx_positions, theta - h)) / (2 * h)
    dat = (raw_steering(GEOM.tx_positions, theta + h)
           - raw_steering(GEOM.tx_positions, theta - h)) / (2 * h)
    _, a_i = raw_mimo(GEOM, theta, psi)
    da_d = np.outer(dar, at) + np.outer(ar, dat)
    trace = sum(np.conj(da_d[m, n]) * a_i[m, n]
                for m in range(4) for n in range(3))
    assert z.zeta5 == pytest.approx(alpha_i * trace, rel=1e-6)


def test_cd_matrix_diagonal_case_and_symmetry():
    z = ZetaSet(zeta1=1.0, zeta2=1.0, zeta3=5.0, zeta4=0.0, zeta5=0.0)
    np.testing.assert_allclose(cd_matrix(z, scale=3.0),
                               3.0 * np.diag([1, 1, 1.0, 1.0, 5.0]))
    z = ZetaSet(zeta1=0.4, zeta2=2.2, zeta3=-1.0,
                zeta4=0.3 - 1.1j, zeta5=-0.8 + 0.2j)
    c = cd_matrix(z)
    np.testing.assert_array_equal(c, c.T)
    assert c[0, 3] == z.zeta4.imag and c[1, 3] == -z.zeta4.real
    assert c[0, 4] == -z.zeta5.real and c[1, 4] == -z.zeta5.imag


def test_cd_matrix_against_finite_difference_curvature():
    """Assemble C_D rows (alpha_R, alpha_I, theta) from the definition:
    FD second derivatives of the assumed compressed mean contracted with the
    indirect-path residual."""
    theta, psi = 0.05, np.deg2rad(4.0)
    sc = scene_from_ratios(GEOM, theta, psi, 10.0, 3.0, 0.8, 2, 1.5)
    k, ep, sig2 = sc.k_pulses, sc.e_p, sc.sigma_w2
    scale = 2.0 * k * ep / sig2
    cd = cd_matrix(zeta_set(sc), scale=scale)

    _, a_i = raw_mimo(GEOM, theta, psi)
    res = k * ep * sc.alpha_i * a_i.ravel()

    def mu(a_re, a_im, th):
        ar = raw_steering(GEOM.rx_positions, th)
        at = raw_steering(GEOM.tx_positions, th)
        return k * ep * (a_re + 1j * a_im) * np.outer(ar, at).ravel()

    x0 = np.array([sc.alpha_d.real, sc.alpha_d.imag, theta])
    h = np.array([1e-5, 1e-5, 1e-6])

    def dmu(i):
        xp, xm = x0.copy(), x0.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        return (mu(*xp) - mu(*xm)) / (2 * h[i])

    def d2mu(i, j):
        if i == j:
            xp, xm = x0.copy(), x0.copy()
            xp[i] += h[i]
            xm[i] -= h[i]
            return (mu(*xp) - 2 * mu(*x0) + mu(*xm)) / h[i] ** 2
        out = np.zeros_like(res)
        for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            x = x0.copy()
            x[i] += si * h[i]
            x[j] += sj * h[j]
            out = out + si * sj * mu(*x)
        return out / (4 * h[i] * h[j])

    idx = [0, 1, 4]   # alpha_R, alpha_I, theta rows of the 5x5 matrix
    for a in range(3):
        for b in range(3):
            j_ab = (2.0 / (k * ep * sig2)) * np.real(np.vdot(dmu(a), dmu(b)))
            c_ab = j_ab - (2.0 / (k * ep * sig2)) * np.real(
                np.vdot(d2mu(a, b), res))
            assert cd[idx[a], idx[b]] == pytest.approx(
                c_ab, rel=2e-5, abs=1e-6 * scale)


# ---------------------------------------------------------------------------
# pseudo-true angle

def test_theta_a_trivial_cases():
    clean = MultipathScene(geom=GEOM, theta=0.1, psi=0.3, alpha_d=1.0,
                           alpha_i=0.0, sigma_w2=1.0)
    assert abs(theta_a(clean) - 0.1) < 1e-7
    coherent = scene_from_ratios(GEOM, 0.1, 0.1, 10.0, 0.0, 0.0)
    assert abs(theta_a(coherent) - 0.1) < 1e-7


def test_theta_a_fig2_regression_and_dense_grid_oracle():
    sc = fig2_scene()
    got = theta_a(sc)
    assert 0.0 < got < np.deg2rad(0.5)
    # independent dense-grid argmax of the projection objective, 1e-4 deg step
    mean = compressed_mean(sc)
    oracle = dense_grid_argmax(GEOM, mean, 0.0, np.deg2rad(0.5),
                               np.deg2rad(1e-4))
    assert got == pytest.approx(oracle, abs=np.deg2rad(2e-4))
    # frozen regression value from the dense-grid oracle
    assert got == pytest.approx(2.9079547702e-3, abs=1e-9)


def test_theta_a_scale_and_rotation_invariance():
    sc = scene_from_ratios(GEOM, 0.0, np.deg2rad(2.0), 10.0, 4.0, 0.9)
    ref = theta_a(sc)
    for factor in (3.7, cmath.exp(1.3j), 0.2 * cmath.exp(-2.2j)):
        sc2 = MultipathScene(geom=GEOM, theta=sc.theta, psi=sc.psi,
                             alpha_d=sc.alpha_d * factor,
                             alpha_i=sc.alpha_i * factor,
                             sigma_w2=sc.sigma_w2)
        assert theta_a(sc2) == pytest.approx(ref, abs=1e-9)


def test_theta_a_span_must_contain_theta():
    sc = fig2_scene()
    with pytest.raises(ValueError):
        theta_a(sc, SearchConfig(span=(0.1, 0.5)))


def test_theta_a_paper_form_differs_in_general():
    sc = scene_from_ratios(GEOM, 0.0, np.deg2rad(2.0), 10.0, 3.0, 0.7)
    a = theta_a(sc)
    b = theta_a_paper_form(sc)
    assert abs(a - b) > 1e-6      # the weightings genuinely differ
    with pytest.raises(ValueError):
        theta_a_paper_form(scene_from_ratios(GEOM, 0.0, 0.02, 10.0, 0.0, math.pi))


# ---------------------------------------------------------------------------
# closed form and sandwich

def test_mcrb_closed_multipath_free_is_crb():
    sc = MultipathScene(geom=GEOM, theta=0.07, psi=0.5, alpha_d=1.4 - 0.2j,
                        alpha_i=0.0, sigma_w2=0.25)
    bb = mcrb_theta_closed(sc)
    assert bb.mcrb_theta == bb.crb_theta
    assert bb.b_theta_theta == 0.0 and bb.theta_a == sc.theta


def test_mcrb_closed_coherent_ninth():
    sc = scene_from_ratios(GEOM, 0.0, 0.0, 10.0, 0.0, 0.0)
    bb = mcrb_theta_closed(sc, search=TIGHT)
    assert bb.mcrb_theta == pytest.approx(bb.crb_theta / 9.0, rel=1e-10)
    assert math.sqrt(bb.mcrb_theta) == pytest.approx(
        math.sqrt(bb.crb_theta) / 3.0, rel=1e-10)


def test_mcrb_closed_degenerate_denominator():
    # coherent geometry, SMR 0 dB, destructive phase 2*pi/3: exact cancellation
    sc = scene_from_ratios(GEOM, 0.0, 0.0, 10.0, 0.0, 2.0 * math.pi / 3.0)
    with pytest.raises(DegenerateBoundError) as err:
        mcrb_theta_closed(sc)
    assert err.value.denominator < err.value.threshold


def test_mcrb_phase_rotation_invariance():
    sc = scene_from_ratios(GEOM, 0.0, np.deg2rad(1.5), 12.0, 6.0, 0.4)
    ref = mcrb_theta_closed(sc, search=TIGHT)
    rot = cmath.exp(0.9j)
    sc2 = MultipathScene(geom=GEOM, theta=sc.theta, psi=sc.psi,
                         alpha_d=sc.alpha_d * rot, alpha_i=sc.alpha_i * rot,
                         sigma_w2=sc.sigma_w2)
    bb2 = mcrb_theta_closed(sc2, search=TIGHT)
    assert bb2.m_theta_theta == pytest.approx(ref.m_theta_theta, rel=1e-12)
    # the bias part carries the theta_A search tolerance
    assert bb2.mcrb_theta == pytest.approx(ref.mcrb_theta, rel=1e-6)
    _, s1 = mcrb_sandwich(sc, search=TIGHT)
    _, s2 = mcrb_sandwich(sc2, search=TIGHT)
    assert s2.m_theta_theta == pytest.approx(s1.m_theta_theta, rel=1e-12)


def test_mcrb_periodic_and_continuous_in_phase():
    base = 0.9
    sc0 = scene_from_ratios(GEOM, 0.0, np.deg2rad(1.0), 10.0, 5.0, base)
    m0 = mcrb_theta_closed(sc0, search=TIGHT).m_theta_theta
    sc_per = scene_from_ratios(GEOM, 0.0, np.deg2rad(1.0), 10.0, 5.0,
                               base + 2 * math.pi)
    assert mcrb_theta_closed(sc_per, search=TIGHT).m_theta_theta == \
        pytest.approx(m0, rel=1e-12)
    sc_eps = scene_from_ratios(GEOM, 0.0, np.deg2rad(1.0), 10.0, 5.0,
                               base + 1e-7)
    assert mcrb_theta_closed(sc_eps, search=TIGHT).m_theta_theta == \
        pytest.approx(m0, rel=1e-5)


def test_sandwich_diagonal_reduction():
    sc = MultipathScene(geom=GEOM, theta=0.05, psi=0.4, alpha_d=0.8 + 0.1j,
                        alpha_i=0.0, sigma_w2=0.5, k_pulses=3, e_p=1.7)
    m, bb = mcrb_sandwich(sc)
    assert bb.m_theta_theta == pytest.approx(crb_theta(sc), rel=1e-12)
    j = fim(sc, 1.0, 1.0)
    np.testing.assert_allclose(m[2:, :2], 0.0, atol=1e-15)
    # rows 1,2 reduce to the inverse amplitude information
    assert m[0, 0] == pytest.approx(1.0 / j[0, 0], rel=1e-12)


def test_sandwich_coherent_ninth():
    sc = scene_from_ratios(GEOM, 0.0, 0.0, 10.0, 0.0, 0.0)
    _, bb = mcrb_sandwich(sc, search=TIGHT)
    assert bb.m_theta_theta == pytest.approx(bb.crb_theta / 9.0, rel=1e-10)


def test_sandwich_vs_closed_fig2_comparison_recorded():
    # the closed form drops the DOA/amplitude coupling feedback; on
    # this preset the gap is ~0.6% (recorded, see also the self-test log)
    sc = fig2_scene()
    closed = mcrb_theta_closed(sc, search=TIGHT)
    _, sand = mcrb_sandwich(sc, search=TIGHT)
    dev = abs(closed.m_theta_theta - sand.m_theta_theta) / sand.m_theta_theta
    assert 1e-4 < dev < 0.05
    assert closed.m_theta_theta < sand.m_theta_theta


def test_sandwich_conditioning_error():
    sc = fig2_scene()
    with pytest.raises(ConditioningError) as err:
        mcrb_sandwich(sc, cond_threshold=1.0)
    assert err.value.condition > 1.0


def test_xi_vector_ordering():
    xi = XiVector(alpha_re=1.0, alpha_im=2.0, tau_d=3.0, omega_dd=4.0, theta=5.0)
    np.testing.assert_array_equal(xi.as_array(), [1, 2, 3, 4, 5])
