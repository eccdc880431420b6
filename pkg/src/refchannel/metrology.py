"""Fidelity and quantum Fisher information for qubit state families."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import distributions as dist
from .qubit import dot_sigma, purity, to_bloch

PSD_TOL = 1e-9
# determinants below this are roundoff on a pure state; sqrt(det) would
# otherwise turn 1e-17 of noise into 1e-9 of fidelity error
DET_FLOOR = 1e-15
DEFAULT_EPSILON = 1e-4

StateFamily = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class QfiEstimate:
    value: float
    epsilon_used: float
    method: str
    error: float | None = None
    flag: str | None = None


def psd_sqrt(m) -> np.ndarray:
    """Square root of a Hermitian PSD matrix, clamping negative eigenvalues to 0."""
    h = np.asarray(m, dtype=complex)
    vals, vecs = np.linalg.eigh(0.5 * (h + h.conj().T))
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def _det_psd(rho) -> float:
    h = np.asarray(rho, dtype=complex)
    if h.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {h.shape}")
    lo = np.linalg.eigvalsh(0.5 * (h + h.conj().T))[0]
    if lo < -PSD_TOL:
        raise ValueError(f"state is not positive semidefinite (min eigenvalue {lo:.3e})")
    det = float((h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]).real)
    return det if det > DET_FLOOR else 0.0


def uhlmann_fidelity(rho1, rho2) -> float:
    """``[Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))]^2``.

    For qubits the inner matrix has eigenvalues ``mu_+-`` with
    ``(sqrt(mu_+) + sqrt(mu_-))^2 = Tr(rho1 rho2) + 2 sqrt(det rho1 det rho2)``.
    """
    d1, d2 = _det_psd(rho1), _det_psd(rho2)
    overlap = float(np.trace(np.asarray(rho1) @ np.asarray(rho2)).real)
    return float(np.clip(overlap + 2.0 * np.sqrt(d1 * d2), 0.0, 1.0))


def _fd_value(family: StateFamily, lam: float, eps: float) -> float:
    fid = uhlmann_fidelity(family(lam), family(lam + eps))
    return 8.0 * (1.0 - np.sqrt(fid)) / (eps * eps)


def qfi_finite_difference(family: StateFamily, lam: float,
                          epsilon: float = DEFAULT_EPSILON) -> QfiEstimate:
    """QFI from the fidelity between neighbouring states.

    The attached error is the Richardson estimate ``|Q(eps) - Q(eps/2)| * 4/3``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    coarse = _fd_value(family, lam, epsilon)
    fine = _fd_value(family, lam, 0.5 * epsilon)
    return QfiEstimate(coarse, epsilon, "finite-difference", error=abs(coarse - fine) * 4.0 / 3.0)


def qfi_unitary_pure(generator_axis, psi) -> float:
    """``4 (<K^2> - <K>^2)`` with ``K = n.sigma / 2`` for a pure state."""
    rho = np.asarray(psi, dtype=complex)
    if abs(purity(rho) - 1.0) > PSD_TOL:
        raise ValueError("qfi_unitary_pure needs a pure state")
    k = 0.5 * dot_sigma(np.asarray(generator_axis, dtype=float))
    mean = np.trace(rho @ k).real
    second = np.trace(rho @ k @ k).real
    return float(4.0 * (second - mean * mean))


def qfi_rotation_closed(kappa: float, theta_E: float) -> float:
    """``sin^2(theta_E) (1 - 4 G(kappa)/kappa)^2``."""
    shrink = 1.0 - 4.0 * dist.g_over_kappa(kappa)
    return float(np.sin(theta_E) ** 2 * shrink * shrink)


@dataclass(frozen=True)
class BoostQfiLimits:
    """Closed-form QFIs of the limit channels for encoding about ``x``.

    The ``rho1`` value is given in two readings, with ``H(kappa_v)/kappa_v``
    and with ``H(kappa_p)/kappa_p``; the ``rho1`` channel itself depends only
    on ``kappa_p``, and the validation suite decides numerically.
    """

    rho0: float
    rho1_kappa_v: float
    rho1_kappa_p: float
    rho2: float


def qfi_boost_limits(t1: float, t2: float, kappa_v: float, kappa_p: float) -> BoostQfiLimits:
    del t1  # rho0 is a first-order rotation: QFI is 1 whatever the angle
    return BoostQfiLimits(
        rho0=1.0,
        rho1_kappa_v=(1.0 - t2 / 6.0 * (1.0 + dist.h_over_kappa(kappa_v))) ** 2,
        rho1_kappa_p=(1.0 - t2 / 6.0 * (1.0 + dist.h_over_kappa(kappa_p))) ** 2,
        rho2=(1.0 - 2.0 * t2 / 9.0) ** 2,
    )


def qfi_bloch_exact(family: StateFamily, lam: float, step: float = 1e-5) -> QfiEstimate:
    """``|r'|^2 + (r.r')^2 / (1 - |r|^2)`` with ``r'`` from central differences.

    Within ``1e-8`` of the sphere the pure-state value ``|r'|^2`` is used and
    the estimate is flagged if the radial derivative is non-zero.
    """
    r = to_bloch(family(lam))
    dr = (to_bloch(family(lam + step)) - to_bloch(family(lam - step))) / (2.0 * step)
    speed2 = float(dr @ dr)
    radial = float(r @ dr)
    gap = 1.0 - float(r @ r)
    if gap < 1e-8:
        flag = "pure-branch" if abs(radial) > 1e-6 else None
        return QfiEstimate(speed2, step, "bloch-exact", flag=flag)
    return QfiEstimate(speed2 + radial * radial / gap, step, "bloch-exact")
