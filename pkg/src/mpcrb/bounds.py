"""Estimation error bounds for the target DOA under ignored multipath.

Two routes to the misspecified bound are provided and kept independent on
purpose: a closed-form expression for the DOA diagonal element, and a
numerical sandwich built from the full 5x5 curvature matrix (parameter
ordering ``[Re alpha_d, Im alpha_d, tau_d, omega_Dd, theta]``).  The
conventional FIM/CRB for the matched (multipath-free) model lives here too.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .arrays import (ArrayGeometry, SteeringSet, e_adot, mimo_matrices,
                     steering, virtual_hpbw)
from .scene import MultipathScene, delta_phi, smr, snr

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class BoundsError(Exception):
    """Base class for bound-evaluation failures."""


class SingularInformationError(BoundsError):
    """The array carries no angle information (E_Adot = 0)."""


class DegenerateBoundError(BoundsError):
    """Closed-form denominator too close to zero: bound numerically invalid."""

    def __init__(self, message: str, denominator: float, threshold: float):
        super().__init__(message)
        self.denominator = denominator
        self.threshold = threshold


class ConditioningError(BoundsError):
    """Curvature matrix too ill-conditioned to invert reliably."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


@dataclass(frozen=True)
class XiVector:
    """Unknown-parameter vector; field order is the fixed row/column order."""

    alpha_re: float
    alpha_im: float
    tau_d: float
    omega_dd: float
    theta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha_re, self.alpha_im, self.tau_d,
                         self.omega_dd, self.theta])


@dataclass(frozen=True)
class ZetaSet:
    """Reduced curvature-matrix entries.

    zeta1/zeta2 are the delay/Doppler diagonal factors (|alpha_d|^2 F/E_p,
    folded to 1.0 by default since neither appears in the DOA closed form);
    zeta3 is the DOA curvature; zeta4/zeta5 couple the amplitude rows to the
    Doppler and DOA rows.
    """

    zeta1: float
    zeta2: float
    zeta3: float
    zeta4: complex
    zeta5: complex

    def __post_init__(self):
        if self.zeta1 <= 0.0 or self.zeta2 <= 0.0:
            raise ValueError("zeta1 and zeta2 must be positive")


@dataclass(frozen=True)
class BoundBreakdown:
    """CRB, covariance term, pseudo-true angle, bias term and their sum (rad^2)."""

    crb_theta: float
    m_theta_theta: float
    theta_a: float
    b_theta_theta: float
    mcrb_theta: float


@dataclass(frozen=True)
class SearchConfig:
    """Grid-then-golden-section argmax settings for the pseudo-true angle."""

    span: tuple[float, float] = (-math.pi / 3, math.pi / 3)
    coarse_step: float | None = None   # None: virtual-array beamwidth / 20
    refine_tol: float = 1e-7

    def __post_init__(self):
        lo, hi = self.span
        if not (-math.pi / 2 < lo < hi < math.pi / 2):
            raise ValueError("span must be an interval inside (-pi/2, pi/2)")
        if self.coarse_step is not None and self.coarse_step <= 0.0:
            raise ValueError("coarse_step must be positive")
        if self.refine_tol <= 0.0:
            raise ValueError("refine_tol must be positive")


def _scene_matrices(scene: MultipathScene):
    s_t = steering(scene.geom, scene.theta)
    s_r = steering(scene.geom, scene.psi)
    A_d, A_i, dA_d, ddA_d = mimo_matrices(s_t, s_r)
    return A_d, A_i, dA_d, ddA_d, e_adot(s_t)


def fim(scene: MultipathScene, f_tau: float = 1.0, f_omega: float = 1.0) -> np.ndarray:
    """Conventional 5x5 FIM of the matched model, diagonal under orthogonal
    waveforms and centered arrays: (2K/sigma^2) * diag(E_p, E_p,
    |a|^2 F_tau, |a|^2 F_omega, E_p |a|^2 E_Adot)."""
    if f_tau <= 0.0 or f_omega <= 0.0:
        raise ValueError("f_tau and f_omega must be positive")
    s_t = steering(scene.geom, scene.theta)
    e_dot = e_adot(s_t)
    if e_dot <= 0.0:
        raise SingularInformationError(
            "single-element arrays carry no DOA information (E_Adot = 0)")
    a2 = abs(scene.alpha_d) ** 2
    k = scene.k_pulses
    ep = scene.e_p
    pref = 2.0 * k / scene.sigma_w2
    return np.diag(pref * np.array([ep, ep, a2 * f_tau, a2 * f_omega, ep * a2 * e_dot]))


def crb_theta(scene: MultipathScene) -> float:
    """Matched-model DOA bound 1/(2*SNR*K*E_p*E_Adot), rad^2."""
    s_t = steering(scene.geom, scene.theta)
    e_dot = e_adot(s_t)
    if e_dot <= 0.0:
        raise SingularInformationError(
            "single-element arrays carry no DOA information (E_Adot = 0)")
    return 1.0 / (2.0 * snr(scene) * scene.k_pulses * scene.e_p * e_dot)


def zeta_set(scene: MultipathScene, f_tau: float | None = None,
             f_omega: float | None = None) -> ZetaSet:
    """Reduced curvature entries for the scene.

    With ``f_tau``/``f_omega`` omitted, zeta1 = zeta2 = 1 (the delay/Doppler
    information scalars are out of scope and cancel from the DOA element for
    symmetric geometries); otherwise zeta = |alpha_d|^2 * F / E_p.
    """
    A_d, A_i, dA_d, ddA_d, e_dot = _scene_matrices(scene)
    ad, ai = scene.alpha_d, scene.alpha_i
    a2 = abs(ad) ** 2
    z1 = 1.0 if f_tau is None else a2 * f_tau / scene.e_p
    z2 = 1.0 if f_omega is None else a2 * f_omega / scene.e_p
    t2 = np.trace(ddA_d.conj().T @ A_i)
    z3 = a2 * e_dot - (np.conj(ad) * ai * t2).real
    z4 = ai * np.trace(A_d.conj().T @ A_i)          # slow-time scale folded to 1
    z5 = ai * np.trace(dA_d.conj().T @ A_i)
    return ZetaSet(zeta1=float(z1), zeta2=float(z2), zeta3=float(z3),
                   zeta4=complex(z4), zeta5=complex(z5))


def cd_matrix(zetas: ZetaSet, scale: float = 1.0) -> np.ndarray:
    """Assemble the symmetric 5x5 curvature matrix Re{Z} times ``scale``.

    ``scale`` is the physical prefactor 2*K*E_p/sigma_w2; the matrix layout
    couples the amplitude rows to Doppler through zeta4 and to DOA through
    zeta5, with diag(1, 1, zeta1, zeta2, zeta3).
    """
    z4, z5 = zetas.zeta4, zetas.zeta5
    z = np.array([
        [1.0, 0.0, 0.0, z4.imag, -z5.real],
        [0.0, 1.0, 0.0, -z4.real, -z5.imag],
        [0.0, 0.0, zetas.zeta1, 0.0, 0.0],
        [z4.imag, -z4.real, 0.0, zetas.zeta2, 0.0],
        [-z5.real, -z5.imag, 0.0, 0.0, zetas.zeta3],
    ])
    return scale * z


@lru_cache(maxsize=32)
def _steering_grid(geom_key: tuple, lo: float, hi: float, n: int):
    tx = np.asarray(geom_key[0])
    rx = np.asarray(geom_key[1])
    angles = np.linspace(lo, hi, n)
    s = np.sin(angles)
    a_r = np.exp(2j * np.pi * np.outer(rx, s)) / np.sqrt(rx.size)
    a_t = np.exp(2j * np.pi * np.outer(tx, s)) / np.sqrt(tx.size)
    return angles, a_r, a_t


def _correlations(geom: ArrayGeometry, a_r_grid, a_t_grid, angle: float):
    s = steering(geom, angle)
    return a_r_grid.conj().T @ s.a_r, a_t_grid.conj().T @ s.a_t


def _resolve_search(geom: ArrayGeometry, search: SearchConfig | None) -> SearchConfig:
    if search is None:
        search = SearchConfig()
    if search.coarse_step is None:
        step = virtual_hpbw(geom) / 20.0
        search = SearchConfig(span=search.span, coarse_step=step,
                              refine_tol=search.refine_tol)
    return search


def _golden_max(fun, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def _argmax_grid_then_golden(geom: ArrayGeometry, weights_fun, scalar_fun,
                             search: SearchConfig, prefer: float) -> float:
    """Maximize a projection objective: coarse grid, ties toward ``prefer``,
    then golden-section refinement around the winning cell."""
    lo, hi = search.span
    n = max(2, int(math.ceil((hi - lo) / search.coarse_step)) + 1)
    angles, a_r_grid, a_t_grid = _steering_grid(geom.key(), lo, hi, n)
    vals = weights_fun(a_r_grid, a_t_grid, angles)
    vmax = vals.max()
    ties = np.flatnonzero(vals >= vmax * (1.0 - 1e-12))
    best = ties[np.argmin(np.abs(angles[ties] - prefer))]
    step = angles[1] - angles[0]
    bracket_lo = max(lo, angles[best] - step)
    bracket_hi = min(hi, angles[best] + step)
    return _golden_max(scalar_fun, bracket_lo, bracket_hi, search.refine_tol)


def _projection_terms(geom: ArrayGeometry, theta: float, psi: float,
                      a_r_grid, a_t_grid):
    cr_t, ct_t = _correlations(geom, a_r_grid, a_t_grid, theta)
    cr_p, ct_p = _correlations(geom, a_r_grid, a_t_grid, psi)
    c_d = cr_t * ct_t
    c_i = cr_p * ct_t + cr_t * ct_p
    return c_d, c_i


def _scalar_projection_terms(geom: ArrayGeometry, st: SteeringSet,
                             sp: SteeringSet, angle: float):
    s = steering(geom, angle)
    cr_t = np.vdot(s.a_r, st.a_r)
    ct_t = np.vdot(s.a_t, st.a_t)
    cr_p = np.vdot(s.a_r, sp.a_r)
    ct_p = np.vdot(s.a_t, sp.a_t)
    return cr_t * ct_t, cr_p * ct_t + cr_t * ct_p


def theta_a(scene: MultipathScene, search: SearchConfig | None = None) -> float:
    """Pseudo-true DOA: argmax of the projection of the true compressed mean
    onto the assumed (direct-only) steering matrix, amplitude concentrated.

    Deterministic grid-then-golden-section argmax; coarse ties are broken
    toward the true theta.
    """
    search = _resolve_search(scene.geom, search)
    lo, hi = search.span
    if not (lo <= scene.theta <= hi):
        raise ValueError("search span must contain the true theta")
    ad, ai = scene.alpha_d, scene.alpha_i
    st = steering(scene.geom, scene.theta)
    sp = steering(scene.geom, scene.psi)

    def grid_vals(a_r_grid, a_t_grid, angles):
        c_d, c_i = _projection_terms(scene.geom, scene.theta, scene.psi,
                                     a_r_grid, a_t_grid)
        return np.abs(ad * c_d + ai * c_i) ** 2

    def scalar_val(angle):
        c_d, c_i = _scalar_projection_terms(scene.geom, st, sp, angle)
        return abs(ad * c_d + ai * c_i) ** 2

    return _argmax_grid_then_golden(scene.geom, grid_vals, scalar_val,
                                    search, scene.theta)


def theta_a_paper_form(scene: MultipathScene,
                       search: SearchConfig | None = None) -> float:
    """Pseudo-true DOA with the indirect term weighted by alpha_i/(alpha_d+alpha_i).

    Kept as a secondary definition for comparison against :func:`theta_a`;
    undefined when alpha_d + alpha_i ~ 0.
    """
    search = _resolve_search(scene.geom, search)
    lo, hi = search.span
    if not (lo <= scene.theta <= hi):
        raise ValueError("search span must contain the true theta")
    ad, ai = scene.alpha_d, scene.alpha_i
    denom = ad + ai
    if abs(denom) < 1e-12 * (abs(ad) + abs(ai)):
        raise ValueError("weight alpha_i/(alpha_d + alpha_i) undefined: "
                         "alpha_d + alpha_i ~ 0")
    w = ai / denom
    st = steering(scene.geom, scene.theta)
    sp = steering(scene.geom, scene.psi)

    def grid_vals(a_r_grid, a_t_grid, angles):
        c_d, c_i = _projection_terms(scene.geom, scene.theta, scene.psi,
                                     a_r_grid, a_t_grid)
        return np.abs(c_d + w * c_i) ** 2

    def scalar_val(angle):
        c_d, c_i = _scalar_projection_terms(scene.geom, st, sp, angle)
        return abs(c_d + w * c_i) ** 2

    return _argmax_grid_then_golden(scene.geom, grid_vals, scalar_val,
                                    search, scene.theta)


def mcrb_theta_closed(scene: MultipathScene, search: SearchConfig | None = None,
                      eps_den_factor: float = 1e-9) -> BoundBreakdown:
    """Closed-form misspecified bound on the target DOA.

    M component: CRB(theta) * E_Adot*(|tr(dA_d^H A_i)|^2 + SMR*E_Adot) /
    (Re{tr(ddA_d^H A_i) e^{-j dphi}} - sqrt(SMR)*E_Adot)^2.  The bias
    component is (theta - theta_A)^2 with theta_A from :func:`theta_a`.
    For alpha_i = 0 the infinite-SMR limit is taken analytically.
    """
    crb = crb_theta(scene)
    if scene.alpha_i == 0:
        return BoundBreakdown(crb_theta=crb, m_theta_theta=crb,
                              theta_a=scene.theta, b_theta_theta=0.0,
                              mcrb_theta=crb)
    _, A_i, dA_d, ddA_d, e_dot = _scene_matrices(scene)
    smr_v = smr(scene)
    dphi = delta_phi(scene)
    t1 = np.trace(dA_d.conj().T @ A_i)
    t2 = np.trace(ddA_d.conj().T @ A_i)
    den_base = (t2 * cmath.exp(-1j * dphi)).real - math.sqrt(smr_v) * e_dot
    den = den_base * den_base
    threshold = eps_den_factor * smr_v * e_dot * e_dot
    if den < threshold:
        raise DegenerateBoundError(
            "near-destructive paths: closed-form denominator below threshold",
            denominator=den, threshold=threshold)
    m = crb * e_dot * (abs(t1) ** 2 + smr_v * e_dot) / den
    th_a = theta_a(scene, search)
    b = (scene.theta - th_a) ** 2
    return BoundBreakdown(crb_theta=crb, m_theta_theta=m, theta_a=th_a,
                          b_theta_theta=b, mcrb_theta=m + b)


def mcrb_sandwich(scene: MultipathScene, f_tau: float | None = None,
                  f_omega: float | None = None,
                  search: SearchConfig | None = None,
                  cond_threshold: float = 1e12):
    """Numerical sandwich C_D^{-1} J C_D^{-1} and its DOA breakdown.

    Returns ``(m_matrix, breakdown)`` where ``m_matrix`` is the full 5x5
    covariance term and the breakdown's M component is its (theta, theta)
    element.  This is the oracle the closed form is compared against.
    """
    zetas = zeta_set(scene, f_tau, f_omega)
    scale = 2.0 * scene.k_pulses * scene.e_p / scene.sigma_w2
    z = cd_matrix(zetas, scale=1.0)
    cond = float(np.linalg.cond(z))
    if not np.isfinite(cond) or cond > cond_threshold:
        raise ConditioningError(
            f"curvature matrix condition {cond:.3e} exceeds {cond_threshold:.1e}",
            condition=cond)
    a2 = abs(scene.alpha_d) ** 2
    s_t = steering(scene.geom, scene.theta)
    e_dot = e_adot(s_t)
    if e_dot <= 0.0:
        raise SingularInformationError(
            "single-element arrays carry no DOA information (E_Adot = 0)")
    j_diag = np.array([1.0, 1.0, zetas.zeta1, zetas.zeta2, a2 * e_dot])
    z_inv = np.linalg.inv(z)
    m_matrix = (z_inv * j_diag) @ z_inv / scale
    m_tt = float(m_matrix[4, 4])
    crb = crb_theta(scene)
    if scene.alpha_i == 0:
        th_a, b = scene.theta, 0.0
    else:
        th_a = theta_a(scene, search)
        b = (scene.theta - th_a) ** 2
    breakdown = BoundBreakdown(crb_theta=crb, m_theta_theta=m_tt, theta_a=th_a,
                               b_theta_theta=b, mcrb_theta=m_tt + b)
    return m_matrix, breakdown
