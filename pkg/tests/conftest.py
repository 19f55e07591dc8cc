"""Shared oracles for the test suite.

These deliberately re-derive quantities from raw element positions (plain
loops / explicit outer products) so they stay independent of the package's
own linear-algebra paths.
"""

import numpy as np


def raw_steering(positions, theta):
    m = len(positions)
    return np.exp(2j * np.pi * np.asarray(positions) * np.sin(theta)) / np.sqrt(m)


def fd_steering_derivative(positions, theta, h=1e-6):
    ap = raw_steering(positions, theta + h)
    am = raw_steering(positions, theta - h)
    return (ap - am) / (2.0 * h)


def raw_mimo(geom, theta, psi):
    """Direct/indirect steering matrices from raw positions only."""
    ar_t = raw_steering(geom.rx_positions, theta)
    at_t = raw_steering(geom.tx_positions, theta)
    ar_p = raw_steering(geom.rx_positions, psi)
    at_p = raw_steering(geom.tx_positions, psi)
    a_d = np.outer(ar_t, at_t)
    a_i = np.outer(ar_p, at_t) + np.outer(ar_t, at_p)
    return a_d, a_i


def projection_objective(geom, scene_mean, angle):
    """|tr(A^H(angle) M)|^2 evaluated directly from raw steering vectors."""
    a_r = raw_steering(geom.rx_positions, angle)
    a_t = raw_steering(geom.tx_positions, angle)
    return abs(np.vdot(np.outer(a_r, a_t), scene_mean)) ** 2


def dense_grid_argmax(geom, scene_mean, lo, hi, step):
    grid = np.arange(lo, hi + step / 2, step)
    vals = np.array([projection_objective(geom, scene_mean, a) for a in grid])
    return grid[int(np.argmax(vals))]
