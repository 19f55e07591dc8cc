"""Automotive ground-multipath scene: geometry, reflection physics, range sweep.

Maps a radar height / road-surface description to a
:class:`~mpcrb.scene.MultipathScene` per range: image-path length and angle,
vertical-polarization reflection coefficient, two-way free-space amplitude
loss normalized at a reference range, and the same-range-Doppler-cell check
that gates the closed-form bound.

Sign convention: the geometric grazing angle from the road is positive; the
reflector enters the array model at negative elevation (below broadside),
so the stored scene angle is its negation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .arrays import ArrayGeometry
from .bounds import (BoundBreakdown, DegenerateBoundError, SearchConfig,
                     mcrb_theta_closed)
from .scene import (MultipathScene, PathGeometryInputs, delta_phi,
                    path_coefficients, smr, snr)


@dataclass(frozen=True)
class GroundScenario:
    """Flat-road multipath scenario evaluated over a range grid."""

    h_r: float                      # radar height above the road, m
    wavelength: float               # carrier wavelength, m
    eps_r: float                    # road relative dielectric constant
    gamma_cond: float               # road conductivity, S/m
    range_grid: np.ndarray          # target ranges, m, strictly increasing
    geom: ArrayGeometry             # vertical array
    theta: float = 0.0              # target elevation DOA (flat road: 0)
    gamma_t: complex = 1.0 + 0.0j   # target reflection coefficient
    v: float = 10.0                 # relative radial velocity, m/s
    r_res: float = 0.5              # range resolution, m
    v_res: float = 0.05             # velocity resolution, m/s
    k_pulses: int = 256
    e_p: float = 1.0
    snr_ref_db: float = 20.0        # SNR at the reference range
    r_ref: float = 50.0             # reference range for the r^-2 amplitude law, m

    def __post_init__(self):
        grid = np.atleast_1d(np.asarray(self.range_grid, dtype=float)).copy()
        if grid.size < 1 or np.any(grid <= 0.0) or np.any(np.diff(grid) <= 0.0):
            raise ValueError("range_grid must be positive and strictly increasing")
        grid.flags.writeable = False
        object.__setattr__(self, "range_grid", grid)
        if self.h_r <= 0.0 or self.wavelength <= 0.0 or self.r_ref <= 0.0:
            raise ValueError("h_r, wavelength and r_ref must be positive")
        if self.eps_r < 1.0 or self.gamma_cond < 0.0:
            raise ValueError("require eps_r >= 1 and gamma_cond >= 0")


@dataclass(frozen=True)
class RangePoint:
    """Everything derived for one target range."""

    r_d: float
    r_i: float
    psi: float                      # reflector DOA in the array frame (negative)
    gamma_r: complex
    smr_db: float
    delta_phi: float
    snr_db: float
    same_cell: bool
    scene: MultipathScene
    bound: BoundBreakdown | None    # None when out of model or degenerate
    degenerate: bool = False


def indirect_geometry(r_d: float, theta: float, h_r: float) -> tuple[float, float]:
    """Image-path length and angle for a target at (r_d, theta).

    Returns ``(r_i, psi)`` with psi negative (below broadside); the grazing
    angle at the specular point is ``-psi``.
    """
    if r_d <= 0.0 or h_r <= 0.0:
        raise ValueError("require r_d > 0 and h_r > 0")
    r_i = math.sqrt((r_d * math.cos(theta)) ** 2
                    + (r_d * math.sin(theta) + 2.0 * h_r) ** 2)
    psi = math.acos(min(1.0, r_d * math.cos(theta) / r_i))
    return r_i, -psi


def reflection_coefficient(psi: float, eps_r: float, gamma_cond: float,
                           wavelength: float) -> complex:
    """Vertical-polarization surface reflection coefficient at grazing angle psi.

    Uses eps = eps_r - j*60*lambda*gamma and the principal complex square
    root; tends to -1 as psi -> 0 (the surface acts as a mirror).
    """
    if not (0.0 < psi <= math.pi / 2):
        raise ValueError("grazing angle must lie in (0, pi/2]")
    eps = complex(eps_r, -60.0 * wavelength * gamma_cond)
    root = cmath.sqrt(eps - math.cos(psi) ** 2)
    return (eps * math.sin(psi) - root) / (eps * math.sin(psi) + root)


def range_point(scn: GroundScenario, r_d: float,
                search: SearchConfig | None = None,
                geom: ArrayGeometry | None = None) -> RangePoint:
    """Evaluate geometry, path physics and (when in-cell) the bound at one range."""
    geom = scn.geom if geom is None else geom
    r_i, psi = indirect_geometry(r_d, scn.theta, scn.h_r)
    grazing = -psi
    gamma_r = reflection_coefficient(grazing, scn.eps_r, scn.gamma_cond,
                                     scn.wavelength)
    alpha_0d = (scn.r_ref / r_d) ** 2
    alpha_0i = (scn.r_ref / r_i) ** 2
    alpha_d, alpha_i = path_coefficients(PathGeometryInputs(
        gamma_t=scn.gamma_t, gamma_r=gamma_r, alpha_0d=alpha_0d,
        alpha_0i=alpha_0i, r_d=r_d, r_i=r_i, wavelength=scn.wavelength))
    sigma_w2 = abs(scn.gamma_t) ** 2 / (10.0 ** (scn.snr_ref_db / 10.0))
    scene = MultipathScene(geom=geom, theta=scn.theta, psi=psi,
                           alpha_d=alpha_d, alpha_i=alpha_i,
                           k_pulses=scn.k_pulses, e_p=scn.e_p,
                           sigma_w2=sigma_w2)
    same_cell = ((r_i - r_d) < scn.r_res
                 and scn.v * (1.0 - math.cos(grazing)) < scn.v_res)
    bound = None
    degenerate = False
    if same_cell:
        try:
            bound = mcrb_theta_closed(scene, search=search)
        except DegenerateBoundError:
            degenerate = True
    smr_v = smr(scene)
    return RangePoint(
        r_d=r_d, r_i=r_i, psi=psi, gamma_r=gamma_r,
        smr_db=10.0 * math.log10(smr_v) if math.isfinite(smr_v) else math.inf,
        delta_phi=delta_phi(scene),
        snr_db=10.0 * math.log10(snr(scene)),
        same_cell=same_cell, scene=scene, bound=bound, degenerate=degenerate)


def range_sweep(scn: GroundScenario,
                geoms: Mapping[str, ArrayGeometry] | None = None,
                search: SearchConfig | None = None,
                ) -> dict[str, list[RangePoint]]:
    """Evaluate every grid range for one or more array configurations.

    Path physics per range is shared; the bound is re-evaluated per geometry.
    Output lists follow the range grid order.
    """
    if geoms is None:
        geoms = {"default": scn.geom}
    out: dict[str, list[RangePoint]] = {}
    for name, geom in geoms.items():
        out[name] = [range_point(scn, float(r), search=search, geom=geom)
                     for r in scn.range_grid]
    return out


def with_geometry(scn: GroundScenario, geom: ArrayGeometry) -> GroundScenario:
    return replace(scn, geom=geom)
