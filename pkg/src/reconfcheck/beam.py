"""Beam stiffness matrices for inter-modular and module-ground connections.

The canonical pair (K11, K12) describes a beam whose local z axis points
from the lower node q to the upper node p; K11 multiplies the upper node's
own displacements and K12 the lower node's. Any other orientation is
obtained by the block rotation ``Rh K Rh^T``.

Local frame convention for a beam with axis direction d (from q to p):

    +z : identity            -z : 180 deg about x
    +x : +90 deg about y     -x : -90 deg about y
    +y : -90 deg about x     -y : +90 deg about x

Reversing the direction always amounts to a 180 deg turn about a
transverse local axis, which makes ``K12_qp == K12_pq.T``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .domain import DIRECTIONS, Configuration, NotAdjacent, Params

_ROTATIONS = {
    (0, 0, 1): np.eye(3),
    (0, 0, -1): np.diag([1.0, -1.0, -1.0]),
    (1, 0, 0): np.array([[0.0, 0, 1], [0, 1, 0], [-1, 0, 0]]),
    (-1, 0, 0): np.array([[0.0, 0, -1], [0, 1, 0], [1, 0, 0]]),
    (0, 1, 0): np.array([[1.0, 0, 0], [0, 0, 1], [0, -1, 0]]),
    (0, -1, 0): np.array([[1.0, 0, 0], [0, 0, -1], [0, 1, 0]]),
}


@lru_cache(maxsize=None)
def canonical_stiffness(params: Params) -> tuple[np.ndarray, np.ndarray]:
    """Return (K11, K12) for a vertical beam, scaled by E/L^3."""
    E, L, A = params.elastic_modulus, params.edge_length, params.cross_area
    Ix, Iy, J = params.inertia_x, params.inertia_y, params.torsion_scaled
    k11 = np.array([
        [12 * Ix, 0, 0, 0, -6 * Ix * L, 0],
        [0, 12 * Iy, 0, 6 * Iy * L, 0, 0],
        [0, 0, A * L**2, 0, 0, 0],
        [0, 6 * Iy * L, 0, 4 * Iy * L**2, 0, 0],
        [-6 * Ix * L, 0, 0, 0, 4 * Ix * L**2, 0],
        [0, 0, 0, 0, 0, J * L**2],
    ])
    k12 = np.array([
        [-12 * Ix, 0, 0, 0, -6 * Ix * L, 0],
        [0, -12 * Iy, 0, 6 * Iy * L, 0, 0],
        [0, 0, -A * L**2, 0, 0, 0],
        [0, -6 * Iy * L, 0, 2 * Iy * L**2, 0, 0],
        [6 * Ix * L, 0, 0, 0, 2 * Ix * L**2, 0],
        [0, 0, 0, 0, 0, -J * L**2],
    ])
    scale = E / L**3
    k11 = scale * k11
    k12 = scale * k12
    k11.flags.writeable = False
    k12.flags.writeable = False
    return k11, k12


def axis_rotation(direction) -> np.ndarray:
    """3x3 rotation taking local coordinates to global ones, local z -> direction."""
    key = tuple(int(c) for c in direction)
    try:
        return _ROTATIONS[key]
    except KeyError:
        raise NotAdjacent(f"not a lattice direction: {direction}") from None


def block_rotation(r: np.ndarray) -> np.ndarray:
    rh = np.zeros((6, 6))
    rh[:3, :3] = r
    rh[3:, 3:] = r
    return rh


def rotation_for(config: Configuration, p: int, q: int) -> np.ndarray:
    """6x6 block rotation of the beam joining p and q (local z from q to p)."""
    return block_rotation(axis_rotation(config.direction(p, q)))


def ground_rotation(facet_direction: str) -> np.ndarray:
    """Block rotation of a support beam; the support sits on local -z."""
    n = DIRECTIONS[facet_direction]
    return block_rotation(axis_rotation(tuple(-c for c in n)))


@lru_cache(maxsize=None)
def _oriented(params: Params, direction: tuple[int, int, int]):
    rh = block_rotation(axis_rotation(direction))
    k11, k12 = canonical_stiffness(params)
    a = rh @ k11 @ rh.T
    b = rh @ k12 @ rh.T
    a.flags.writeable = False
    b.flags.writeable = False
    return a, b


def oriented_stiffness(params: Params, direction) -> tuple[np.ndarray, np.ndarray]:
    """(K11, K12) rotated so that the beam axis (q -> p) lies along ``direction``."""
    return _oriented(params, tuple(int(c) for c in direction))


def rotated_stiffness(config: Configuration, p: int, q: int, params: Params | None = None):
    return oriented_stiffness(params or config.params, config.direction(p, q))


def equilibrium_residual(u_p, neighbor_states, load) -> np.ndarray:
    """Sum over connections of ``K11 u_p + K12 u_q`` minus the external load.

    ``neighbor_states`` holds ``(q, u_q, K11_pq, K12_pq)`` for every
    connection of p; ground beams are passed with ``u_q = 0``.
    """
    r = -np.asarray(load, dtype=float)
    for _, u_q, k11, k12 in neighbor_states:
        r = r + k11 @ u_p + k12 @ u_q
    return r
