"""Wigner rotations of a massive spin-1/2 particle under a pure boost.

Velocities are *celerities* (proper velocities): a boost of magnitude ``v``
has ``gamma = sqrt(1 + v^2)`` and ``beta * gamma = v``, and the particle
momentum enters as ``p~ = |p| / m``.  Only with this reading are the closed
forms in :func:`wigner_exact` exact, which :func:`lorentz_oracle` confirms.

Rotation vectors follow the spin convention ``exp(+i phi phi_hat . J)``.  The
corresponding active rotation of spatial vectors is by ``phi`` about
``-phi_hat``, so the oracle negates the axis it extracts from the 4x4
composition before comparing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEGENERATE_ANGLE = 1e-12
ORACLE_TOL = 1e-9


@dataclass(frozen=True)
class BoostVector:
    direction: tuple
    magnitude: float

    def __post_init__(self):
        object.__setattr__(self, "direction", _unit_tuple(self.direction))
        if not 0.0 <= self.magnitude < 1.0:
            raise ValueError(f"boost magnitude must lie in [0, 1), got {self.magnitude!r}")

    @property
    def vector(self) -> np.ndarray:
        return self.magnitude * np.asarray(self.direction)


@dataclass(frozen=True)
class MomentumVector:
    direction: tuple
    magnitude_over_mass: float

    def __post_init__(self):
        object.__setattr__(self, "direction", _unit_tuple(self.direction))
        if not (self.magnitude_over_mass >= 0.0 and np.isfinite(self.magnitude_over_mass)):
            raise ValueError(f"p/m must be finite and >= 0, got {self.magnitude_over_mass!r}")

    @property
    def vector(self) -> np.ndarray:
        return self.magnitude_over_mass * np.asarray(self.direction)


@dataclass(frozen=True)
class WignerRotation:
    """Rotation by ``angle`` about ``axis`` in the ``exp(+i phi.J)`` convention.

    ``degenerate`` marks a vanishing angle; ``axis`` is then ``z`` by convention.
    """

    angle: float
    axis: tuple
    degenerate: bool = False

    @property
    def vector(self) -> np.ndarray:
        return self.angle * np.asarray(self.axis)


def _unit_tuple(v) -> tuple:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,) or abs(np.linalg.norm(a) - 1.0) > 1e-9:
        raise ValueError(f"direction must be a unit 3-vector, got {v!r}")
    return tuple(float(c) for c in a)


def rapidity_factor(v):
    """``F(v) = v / (1 + sqrt(1 + v^2))``."""
    v = np.asarray(v, dtype=float)
    return v / (1.0 + np.sqrt(1.0 + v * v))


def exact_terms(vhat, v, phat, pt):
    """Closed-form ``(cos phi, sin phi * phi_hat)``; all arguments broadcast.

    ``vhat``/``phat`` have shape ``(..., 3)``; ``v``/``pt`` are scalars or arrays
    matching the leading shape.
    """
    vhat = np.asarray(vhat, dtype=float)
    phat = np.asarray(phat, dtype=float)
    v = np.asarray(v, dtype=float)
    pt = np.asarray(pt, dtype=float)
    c = np.sum(vhat * phat, axis=-1)
    gv = np.sqrt(v * v + 1.0)
    gp = np.sqrt(pt * pt + 1.0)
    vp = v * pt
    den = 1.0 + gv * gp + vp * c
    km = (gv - 1.0) * (gp - 1.0)
    cos_phi = (gv + gp + vp * c + km * c * c) / den
    sin_axis = ((vp + km * c) / den)[..., None] * np.cross(vhat, phat)
    return cos_phi, sin_axis


def second_order_terms(vhat, v, phat, pt):
    """``(cos phi, sin phi * phi_hat)`` expanded to second order in ``p~``."""
    vhat = np.asarray(vhat, dtype=float)
    phat = np.asarray(phat, dtype=float)
    x = rapidity_factor(v) * np.asarray(pt, dtype=float)
    c = np.sum(vhat * phat, axis=-1)
    cos_phi = 1.0 - 0.5 * x * x * (1.0 - c * c)
    sin_axis = (x - 0.5 * x * x * c)[..., None] * np.cross(vhat, phat)
    return cos_phi, sin_axis


def _to_rotation(cos_phi: float, sin_axis) -> WignerRotation:
    s = np.asarray(sin_axis, dtype=float)
    norm = float(np.linalg.norm(s))
    angle = float(np.arctan2(norm, cos_phi))
    if angle < DEGENERATE_ANGLE or norm == 0.0:
        return WignerRotation(angle, (0.0, 0.0, 1.0), True)
    return WignerRotation(angle, tuple(s / norm))


def wigner_exact(v: BoostVector, p: MomentumVector) -> WignerRotation:
    if v.magnitude == 0.0 or p.magnitude_over_mass == 0.0:
        return WignerRotation(0.0, (0.0, 0.0, 1.0), True)
    cos_phi, sin_axis = exact_terms(v.direction, v.magnitude, p.direction, p.magnitude_over_mass)
    return _to_rotation(float(cos_phi), sin_axis)


def wigner_second_order(v: BoostVector, p: MomentumVector) -> tuple[float, np.ndarray]:
    cos_phi, sin_axis = second_order_terms(v.direction, v.magnitude, p.direction,
                                           p.magnitude_over_mass)
    return float(cos_phi), sin_axis


def boost_matrix(celerity) -> np.ndarray:
    """4x4 pure boost taking the rest frame to proper velocity ``celerity``."""
    u = np.asarray(celerity, dtype=float)
    gamma = np.sqrt(1.0 + u @ u)
    lam = np.eye(4)
    lam[0, 0] = gamma
    lam[0, 1:] = u
    lam[1:, 0] = u
    n2 = u @ u
    if n2 > 0.0:
        lam[1:, 1:] += (gamma - 1.0) * np.outer(u, u) / n2
    return lam


def lorentz_oracle(v: BoostVector, p: MomentumVector) -> WignerRotation:
    """Wigner rotation from explicit 4x4 composition ``L(Lp)^-1 L(v) L(p)``."""
    lv = boost_matrix(v.vector)
    p4 = np.concatenate([[np.sqrt(1.0 + p.magnitude_over_mass**2)], p.vector])
    moved = lv @ p4
    w = boost_matrix(-moved[1:]) @ lv @ boost_matrix(p.vector)
    residue = max(abs(w[0, 0] - 1.0), np.max(np.abs(w[0, 1:])), np.max(np.abs(w[1:, 0])))
    rot = w[1:, 1:]
    residue = max(residue, np.max(np.abs(rot.T @ rot - np.eye(3))))
    if residue > ORACLE_TOL:
        raise ArithmeticError(f"boost composition is not a rotation (residue {residue:.3e})")
    # active rotation by angle about n; the spin convention uses axis -n
    sin_n = 0.5 * np.array([rot[2, 1] - rot[1, 2], rot[0, 2] - rot[2, 0], rot[1, 0] - rot[0, 1]])
    cos_a = 0.5 * (np.trace(rot) - 1.0)
    return _to_rotation(cos_a, -sin_n)
