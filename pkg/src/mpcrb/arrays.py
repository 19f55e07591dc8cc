"""Colocated transmit/receive array geometry, steering vectors and beampatterns.

Element positions are stored in units of wavelength along a single array
axis, so no carrier frequency appears here.  Arrays are re-centered at
construction (zero-mean positions); that symmetry is what makes the
steering vector orthogonal to its own angular derivative, which the bound
expressions rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


def _as_centered_positions(positions, label: str) -> np.ndarray:
    pos = np.atleast_1d(np.asarray(positions, dtype=float)).copy()
    if pos.ndim != 1 or pos.size < 1:
        raise ValueError(f"{label}: need a non-empty 1-D position list")
    if not np.all(np.isfinite(pos)):
        raise ValueError(f"{label}: positions must be finite")
    pos -= pos.mean()
    pos.flags.writeable = False
    return pos


@dataclass(frozen=True)
class ArrayGeometry:
    """Transmit/receive element positions along the array axis, in wavelengths.

    Positions are re-centered to zero mean at construction.
    """

    tx_positions: np.ndarray
    rx_positions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tx_positions",
                           _as_centered_positions(self.tx_positions, "tx_positions"))
        object.__setattr__(self, "rx_positions",
                           _as_centered_positions(self.rx_positions, "rx_positions"))

    @property
    def m_t(self) -> int:
        return self.tx_positions.size

    @property
    def m_r(self) -> int:
        return self.rx_positions.size

    def key(self) -> tuple:
        """Hashable identity used for caching steering grids."""
        return (tuple(self.tx_positions), tuple(self.rx_positions))


@dataclass(frozen=True)
class SteeringSet:
    """Normalized steering vectors and their angular derivatives at one angle."""

    a_r: np.ndarray
    a_t: np.ndarray
    da_r: np.ndarray
    da_t: np.ndarray
    dda_r: np.ndarray = field(repr=False, default=None)
    dda_t: np.ndarray = field(repr=False, default=None)


def standard_virtual_ula(m_t: int, m_r: int) -> ArrayGeometry:
    """Geometry whose virtual array is a half-wavelength ULA of m_t*m_r elements.

    The receive array is a half-wavelength ULA of ``m_r`` elements; the
    transmit array is a sparse ULA of ``m_t`` elements whose spacing equals
    the receive aperture extent (m_r/2 wavelengths).
    """
    if m_t < 1 or m_r < 1:
        raise ValueError("element counts must be at least 1")
    rx = (np.arange(m_r) - (m_r - 1) / 2.0) * 0.5
    tx = (np.arange(m_t) - (m_t - 1) / 2.0) * (m_r / 2.0)
    return ArrayGeometry(tx_positions=tx, rx_positions=rx)


def virtual_positions(geom: ArrayGeometry) -> np.ndarray:
    """All pairwise sums of transmit and receive positions, sorted."""
    return np.sort((geom.tx_positions[:, None] + geom.rx_positions[None, :]).ravel())


def _steer_one(positions: np.ndarray, theta: float):
    m = positions.size
    phase = TWO_PI * positions * np.sin(theta)
    a = np.exp(1j * phase) / np.sqrt(m)
    slope = 1j * TWO_PI * positions * np.cos(theta)
    da = slope * a
    dda = (slope * slope - 1j * TWO_PI * positions * np.sin(theta)) * a
    return a, da, dda


def steering(geom: ArrayGeometry, theta: float) -> SteeringSet:
    """Steering vectors at ``theta`` (radians from broadside) with derivatives.

    Element m of a is exp(j*2*pi*p_m*sin(theta))/sqrt(M); first and second
    angular derivatives are analytic.
    """
    if not abs(theta) < np.pi / 2:
        raise ValueError("theta must satisfy |theta| < pi/2")
    a_r, da_r, dda_r = _steer_one(geom.rx_positions, theta)
    a_t, da_t, dda_t = _steer_one(geom.tx_positions, theta)
    return SteeringSet(a_r=a_r, a_t=a_t, da_r=da_r, da_t=da_t, dda_r=dda_r, dda_t=dda_t)


def mimo_matrices(s_target: SteeringSet, s_reflect: SteeringSet):
    """MIMO steering matrices for the direct and two-ray indirect returns.

    Returns ``(A_d, A_i, dA_d, ddA_d)`` where ``A_d = a_r(theta) a_t(theta)^T``,
    ``A_i = a_r(psi) a_t(theta)^T + a_r(theta) a_t(psi)^T`` and the derivative
    matrices are with respect to the target angle.
    """
    a_r, a_t = s_target.a_r, s_target.a_t
    da_r, da_t = s_target.da_r, s_target.da_t
    dda_r, dda_t = s_target.dda_r, s_target.dda_t
    A_d = np.outer(a_r, a_t)
    A_i = np.outer(s_reflect.a_r, a_t) + np.outer(a_r, s_reflect.a_t)
    dA_d = np.outer(da_r, a_t) + np.outer(a_r, da_t)
    ddA_d = np.outer(dda_r, a_t) + 2.0 * np.outer(da_r, da_t) + np.outer(a_r, dda_t)
    return A_d, A_i, dA_d, ddA_d


def e_adot(s: SteeringSet) -> float:
    """Array information scalar: squared norm of both steering derivatives."""
    return float(np.sum(np.abs(s.da_r) ** 2) + np.sum(np.abs(s.da_t) ** 2))


def beampattern(geom: ArrayGeometry, steer: float, grid) -> tuple[np.ndarray, np.ndarray]:
    """Transmit and receive array gains in dB over ``grid`` for one steering angle.

    gain(phi) = 20*log10 |a^H(steer) a(phi)| per array; 0 dB at phi == steer.
    """
    grid = np.asarray(grid, dtype=float)
    s0 = steering(geom, steer)
    gains = []
    for pos, a0 in ((geom.tx_positions, s0.a_t), (geom.rx_positions, s0.a_r)):
        m = pos.size
        a_grid = np.exp(1j * TWO_PI * np.outer(pos, np.sin(grid))) / np.sqrt(m)
        g = np.abs(a0.conj() @ a_grid)
        gains.append(20.0 * np.log10(np.maximum(g, 1e-300)))
    return gains[0], gains[1]


def virtual_hpbw(geom: ArrayGeometry) -> float:
    """Half-power beamwidth of the virtual array, radians, at broadside.

    Uses the N*d-equivalent aperture of the virtual array (extent scaled by
    n/(n-1)), which reproduces 0.886/(N*d) for uniform virtual ULAs.
    """
    vpos = virtual_positions(geom)
    n = vpos.size
    extent = float(vpos[-1] - vpos[0])
    if n < 2 or extent <= 0.0:
        raise ValueError("beamwidth undefined for a single-element virtual array")
    return 0.886 / (extent * n / (n - 1))
