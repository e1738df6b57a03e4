"""Regularized predictor-corrector for module-support contact.

All quantities here live in the support-aligned frame: local z points from
the support into the module, so a compressive normal force has f_z < 0.
The support face sits at local z = -L/2 relative to the module node.

The corrected wrench is a piecewise linear, positively homogeneous function
of the trial wrench: ``F = C(state) F_tr`` with a constant 6x6 correction
matrix per branch. Hence the tangent ``C K11`` is exact and ``F = tangent u``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beam import canonical_stiffness, ground_rotation
from .domain import Params

FX, FY, FZ, MX, MY, MZ = range(6)

SEPARATION = "separation"
CONTACT = "contact"
STABLE = "stable"
TILT_POS = "tilting+"
TILT_NEG = "tilting-"


@dataclass(frozen=True)
class ContactState:
    normal: str = CONTACT
    tilt_x: str = STABLE
    tilt_y: str = STABLE
    phi_x: float = 0.0
    phi_y: float = 0.0
    f_z: float = 0.0

    @property
    def key(self) -> tuple[str, str, str]:
        """Classification only, without the trial margins."""
        return (self.normal, self.tilt_x, self.tilt_y)

    @property
    def in_contact(self) -> bool:
        return self.normal == CONTACT

    @property
    def is_stable(self) -> bool:
        return self.key == (CONTACT, STABLE, STABLE)

    def active_corners(self, edge_length: float):
        """Active corner points on the support face, in local (x, y).

        Returns the string ``"stable"`` for a full-facet contact, otherwise a
        tuple of 0, 1 or 2 points.
        """
        if self.normal == SEPARATION:
            return ()
        h = edge_length / 2
        if self.is_stable:
            return STABLE
        # tilting about y with sign s pivots on the edge x = +s h;
        # tilting about x with sign s pivots on the edge y = -s h
        if self.tilt_x == STABLE:
            x = h if self.tilt_y == TILT_POS else -h
            return ((x, -h), (x, h))
        if self.tilt_y == STABLE:
            y = -h if self.tilt_x == TILT_POS else h
            return ((-h, y), (h, y))
        x = h if self.tilt_y == TILT_POS else -h
        y = -h if self.tilt_x == TILT_POS else h
        return ((x, y),)


@dataclass(frozen=True)
class ContactResult:
    corrected_force: np.ndarray
    tangent: np.ndarray
    state: ContactState


def trial_force(u_p, facet_direction: str, params: Params) -> np.ndarray:
    """Linear-beam trial wrench ``K11 Rh^T u_p`` in the support frame."""
    rh = ground_rotation(facet_direction)
    k11, _ = canonical_stiffness(params)
    return k11 @ (rh.T @ np.asarray(u_p, dtype=float))


def correction_matrix(trial, params: Params, gamma: float) -> tuple[np.ndarray, ContactState]:
    """Branch classification of a trial wrench and its linear correction map."""
    t = np.asarray(trial, dtype=float)
    h = params.edge_length / 2
    fx, fy, fz, mx, my = t[FX], t[FY], t[FZ], t[MX], t[MY]
    mhat_x = mx - fy * h
    mhat_y = my + fx * h
    phi_x = abs(mhat_x) + fz * h
    phi_y = abs(mhat_y) + fz * h
    if fz > 0:
        state = ContactState(SEPARATION, STABLE, STABLE, phi_x, phi_y, fz)
        return gamma * np.eye(6), state
    c = np.eye(6)
    gbar = 1.0 - gamma
    tilt_x = tilt_y = STABLE
    if phi_x > 0:
        s = 1.0 if mhat_x > 0 else -1.0
        tilt_x = TILT_POS if s > 0 else TILT_NEG
        c[MX] = 0.0
        c[MX, MX] = gamma
        c[MX, FY] = gbar * h
        c[MX, FZ] = -gbar * h * s
    if phi_y > 0:
        s = 1.0 if mhat_y > 0 else -1.0
        tilt_y = TILT_POS if s > 0 else TILT_NEG
        c[MY] = 0.0
        c[MY, MY] = gamma
        c[MY, FX] = -gbar * h
        c[MY, FZ] = -gbar * h * s
    return c, ContactState(CONTACT, tilt_x, tilt_y, phi_x, phi_y, fz)


def correct(trial, params: Params, gamma: float = 1e-4) -> ContactResult:
    """Corrected wrench, tangent (d F / d u, support frame) and branch state."""
    c, state = correction_matrix(trial, params, gamma)
    k11, _ = canonical_stiffness(params)
    return ContactResult(c @ np.asarray(trial, dtype=float), c @ k11, state)


def support_response(u_p, facet_direction: str, params: Params, gamma: float = 1e-4):
    """Global-frame corrected force, tangent and state of one support beam."""
    rh = ground_rotation(facet_direction)
    k11, _ = canonical_stiffness(params)
    u_loc = rh.T @ np.asarray(u_p, dtype=float)
    c, state = correction_matrix(k11 @ u_loc, params, gamma)
    tangent_loc = c @ k11
    tangent = rh @ tangent_loc @ rh.T
    return tangent @ u_p, tangent, state


def contact_tangent(u_p, facet_direction: str, params: Params, gamma: float = 1e-4) -> np.ndarray:
    """Global-frame tangent of the corrected support force w.r.t. u_p."""
    return support_response(u_p, facet_direction, params, gamma)[1]


def exact_complementarity_check(u, force, params: Params, tol: float = 1e-9, gamma: float = 1e-4) -> bool:
    """Check the rigid contact laws up to elastic and gamma-regularization slack.

    ``u`` and ``force`` are in the support frame. Normal law: f_z <= 0,
    u_z >= 0, f_z u_z = 0. Tilting laws: Phi <= 0 and Phi tau = 0 about
    both facet axes. Slack terms: elastic penetration ``|f_z| / k_axial``,
    the separated residual force ``gamma k_axial u_z``, the elastic rotation
    allowed under a stable facet, and ``gamma Phi_tr`` left by the tilting
    branch.
    """
    u = np.asarray(u, dtype=float)
    f = np.asarray(force, dtype=float)
    h = params.edge_length / 2
    k_ax = params.axial_stiffness
    fz, uz = f[FZ], u[FZ]
    if fz > gamma * k_ax * max(uz, 0.0) + tol:
        return False
    if uz < -abs(fz) / k_ax - tol:
        return False
    if abs(fz * uz) > fz * fz / k_ax + gamma * k_ax * uz * uz + tol:
        return False
    k11, _ = canonical_stiffness(params)
    trial = k11 @ u
    E = params.elastic_modulus
    for m_i, f_i, sign, tau_i, inertia in (
        (MX, FY, -1.0, u[MX], params.inertia_y),
        (MY, FX, 1.0, u[MY], params.inertia_x),
    ):
        mhat = f[m_i] + sign * f[f_i] * h
        phi = abs(mhat) + fz * h
        phi_tr = abs(trial[m_i] + sign * trial[f_i] * h) + trial[FZ] * h
        slack = gamma * max(phi_tr, 0.0)
        if phi > slack * (1 + 1e-9) + tol:
            return False
        elastic_tau = abs(fz) * h * params.edge_length / (E * inertia)
        if abs(phi * tau_i) > abs(phi) * elastic_tau + slack * abs(tau_i) + tol:
            return False
    return True
