"""Spin-1/2 linear algebra.

States are plain ``(2, 2)`` complex numpy arrays.  Rotations use the
convention ``U(n, a) = cos(a/2) I + i sin(a/2) n.sigma = exp(+i a n.J)`` with
``J = sigma / 2``.  Conjugating by ``U(n, a)`` turns the Bloch vector by ``-a``
about ``n`` (equivalently by ``+a`` about ``-n``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)

HERMITIAN_TOL = 1e-9
UNIT_TOL = 1e-9


def as_state(rho, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate and symmetrize a density matrix.

    The anti-Hermitian residue, trace defect and negative eigenvalues must all
    be below ``tol``; the returned matrix is ``(rho + rho^dagger) / 2``.
    """
    m = np.asarray(rho, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"qubit state must be 2x2, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("qubit state has non-finite entries")
    residue = np.max(np.abs(m - m.conj().T))
    if residue > tol:
        raise ValueError(f"matrix is not Hermitian (residue {residue:.3e})")
    h = 0.5 * (m + m.conj().T)
    tr = np.trace(h).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"trace is {tr!r}, expected 1")
    lo = np.linalg.eigvalsh(h)[0]
    if lo < -tol:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {lo:.3e})")
    return h


def ket_to_state(ket) -> np.ndarray:
    psi = np.asarray(ket, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def unit_vector(v, tol: float = UNIT_TOL) -> np.ndarray:
    """Return ``v`` as a float array after checking it has unit norm."""
    n = np.asarray(v, dtype=float)
    if n.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {n.shape}")
    norm = np.linalg.norm(n)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"axis must be a unit vector, |axis| = {norm!r}")
    return n


def dot_sigma(n) -> np.ndarray:
    """``n . sigma`` for one vector or a stack of shape ``(..., 3)``."""
    return np.tensordot(np.asarray(n), PAULI, axes=([-1], [0]))


def to_bloch(rho) -> np.ndarray:
    m = np.asarray(rho, dtype=complex)
    return np.einsum("jab,...ba->...j", PAULI, m).real


def from_bloch(r, tol: float = UNIT_TOL) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValueError(f"Bloch vector must have 3 components, got shape {r.shape}")
    norm = np.linalg.norm(r)
    if norm > 1.0 + tol:
        raise ValueError(f"Bloch vector outside the unit ball (|r| = {norm!r})")
    return 0.5 * (IDENTITY + dot_sigma(r))


def su2(axis, angle) -> np.ndarray:
    """``cos(angle/2) I + i sin(angle/2) axis.sigma``; broadcasts over stacks."""
    axis = np.asarray(axis, dtype=float)
    angle = np.asarray(angle, dtype=float)
    c = np.cos(0.5 * angle)[..., None, None]
    s = np.sin(0.5 * angle)[..., None, None]
    return c * IDENTITY + 1j * s * dot_sigma(axis)


def su2_conjugate(rho, axis, angle: float) -> np.ndarray:
    n = unit_vector(axis)
    u = su2(n, angle)
    return u @ np.asarray(rho, dtype=complex) @ u.conj().T


def pauli_conjugate_sum(rho, weights) -> np.ndarray:
    """``sum_j w_j sigma_j rho sigma_j``."""
    w = np.asarray(weights, dtype=float)
    m = np.asarray(rho, dtype=complex)
    return np.einsum("j,jab,bc,jcd->ad", w, PAULI, m, PAULI)


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def purity(rho) -> float:
    m = np.asarray(rho)
    return float(np.trace(m @ m).real)


def trace_distance(rho, sigma) -> float:
    """``||rho - sigma||_1 / 2`` for Hermitian arguments."""
    d = np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex)
    d = 0.5 * (d + d.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(d))))


@dataclass(frozen=True)
class EncodingSpec:
    """Encoding axis ``E = (sin t cos f, sin t sin f, cos t)`` and message ``lam``."""

    theta_E: float
    phi_E: float
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.theta_E <= np.pi:
            raise ValueError(f"theta_E must lie in [0, pi], got {self.theta_E!r}")
        if not 0.0 <= self.phi_E < 2 * np.pi:
            raise ValueError(f"phi_E must lie in [0, 2 pi), got {self.phi_E!r}")
        if not np.isfinite(self.lam):
            raise ValueError("lambda must be finite")

    @property
    def axis(self) -> np.ndarray:
        st = np.sin(self.theta_E)
        return np.array([st * np.cos(self.phi_E), st * np.sin(self.phi_E), np.cos(self.theta_E)])


def encode_spin(spec: EncodingSpec) -> np.ndarray:
    """Pure state ``exp(-i lam E.J)|0>`` as a density matrix."""
    u = su2(spec.axis, -spec.lam)
    return ket_to_state(u @ KET_0)
