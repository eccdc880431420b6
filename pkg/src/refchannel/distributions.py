"""Special functions, directional densities and their samplers.

Covers the von Mises-Fisher densities on S^3 (rotations) and S^2 (boost and
momentum directions), the bump weight on the boost magnitude, the mean
resultant lengths ``G`` and ``H``, and the velocity/momentum moment integrals
``T_n`` that set the strength of the boost channel.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special, stats

from .wigner import rapidity_factor

SMALL_KAPPA = 1e-4
MAX_BESSEL_ORDER = 10
MAX_REJECTION_ATTEMPTS = 1_000_000
P0_WARN = 0.3


class BumpUnderflowError(ArithmeticError):
    """The bump normalisation ``N(delta)`` is below the smallest positive double."""


class SamplerError(RuntimeError):
    pass


# -- quadrature ---------------------------------------------------------------


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, n: int):
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on ``[a, b]``."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def integrate_doubling(f, a: float, b: float, n: int = 64, tol: float = 1e-12,
                       max_nodes: int = 8192, relative: bool = False) -> float:
    """Gauss-Legendre with the node count doubled until two estimates agree.

    ``f`` must accept an array of abscissae.  Raises ``ArithmeticError`` when
    ``max_nodes`` is reached without convergence.
    """
    x, w = gauss_legendre(a, b, n)
    prev = float(np.dot(w, f(x)))
    while n < max_nodes:
        n *= 2
        x, w = gauss_legendre(a, b, n)
        cur = float(np.dot(w, f(x)))
        scale = abs(cur) if relative else 1.0
        if abs(cur - prev) <= tol * scale:
            return cur
        prev = cur
    raise ArithmeticError(f"quadrature did not converge with {max_nodes} nodes")


# -- Bessel functions and mean resultant lengths ------------------------------


def bessel_i(order: int, x: float) -> float:
    """Modified Bessel function of the first kind ``I_order(x)`` for ``x >= 0``."""
    if int(order) != order or not 0 <= order <= MAX_BESSEL_ORDER:
        raise ValueError(f"order must be an integer in [0, {MAX_BESSEL_ORDER}], got {order!r}")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x!r}")
    return float(special.iv(int(order), x))


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not (kappa >= 0.0 and math.isfinite(kappa)):
        raise ValueError(f"concentration must be finite and >= 0, got {kappa!r}")
    return kappa


def g_over_kappa(kappa: float) -> float:
    """``G(kappa) / kappa`` with ``G = I_2 / I_1``; equals 1/4 at ``kappa = 0``."""
    kappa = _check_kappa(kappa)
    if kappa < SMALL_KAPPA:
        # I2/I1 = k/4 - k^3/96 + O(k^5)
        return 0.25 - kappa * kappa / 96.0
    return float(special.ive(2, kappa) / special.ive(1, kappa)) / kappa


def mean_resultant_G(kappa: float) -> float:
    """Mean resultant length of the vMF distribution on S^3, ``I_2(k) / I_1(k)``."""
    kappa = _check_kappa(kappa)
    return kappa * g_over_kappa(kappa)


def h_over_kappa(kappa: float) -> float:
    """``H(kappa) / kappa``; equals 1/3 at ``kappa = 0``.

    Below ``kappa = 1`` the continued fraction
    ``1 / (3 + k^2 / (5 + k^2 / (7 + ...)))`` avoids the cancellation in
    ``coth(k) - 1/k``.
    """
    kappa = _check_kappa(kappa)
    if kappa < 1.0:
        k2 = kappa * kappa
        tail = 0.0
        for odd in range(41, 1, -2):
            tail = k2 / (odd + tail)
        return tail / k2 if kappa > 0 else 1.0 / 3.0
    return (1.0 / math.tanh(kappa) - 1.0 / kappa) / kappa


def mean_resultant_H(kappa: float) -> float:
    """Mean resultant length on S^2: ``coth(k) - 1/k``."""
    kappa = _check_kappa(kappa)
    return kappa * h_over_kappa(kappa)


# -- parameter records --------------------------------------------------------


@dataclass(frozen=True)
class VmfS3Params:
    kappa: float

    def __post_init__(self):
        _check_kappa(self.kappa)


@dataclass(frozen=True)
class VmfS2Params:
    mu: tuple
    kappa: float

    def __post_init__(self):
        _check_kappa(self.kappa)
        mu = np.asarray(self.mu, dtype=float)
        if mu.shape != (3,) or abs(np.linalg.norm(mu) - 1.0) > 1e-9:
            raise ValueError(f"mean direction must be a unit 3-vector, got {self.mu!r}")
        object.__setattr__(self, "mu", tuple(float(c) for c in mu))


@dataclass(frozen=True)
class BumpParams:
    delta: float

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"bump width must be finite and > 0, got {self.delta!r}")


@dataclass(frozen=True)
class MomentumSpec:
    p0_over_m: float
    kappa_p: float

    def __post_init__(self):
        if not (self.p0_over_m >= 0 and math.isfinite(self.p0_over_m)):
            raise ValueError(f"p0/m must be finite and >= 0, got {self.p0_over_m!r}")
        _check_kappa(self.kappa_p)
        if self.p0_over_m > P0_WARN:
            warnings.warn(f"p0/m = {self.p0_over_m} is outside the slow-particle regime",
                          stacklevel=3)


# -- densities ----------------------------------------------------------------


def vmf_s3_density(psi, theta, phi, params: VmfS3Params):
    """vMF density on S^3 centred on the identity, w.r.t. ``sin^2 psi sin theta``.

    ``kappa / (4 pi^2 I_1(kappa)) exp(kappa cos psi)``; independent of the
    axis angles ``theta`` and ``phi``.
    """
    k = params.kappa
    psi = np.asarray(psi, dtype=float)
    shape = np.broadcast(psi, np.asarray(theta), np.asarray(phi)).shape
    if k == 0.0:
        return np.full(shape, 1.0 / (2 * np.pi**2))
    # scaled Bessel keeps large kappa finite
    norm = k / (4 * np.pi**2 * special.ive(1, k))
    return np.broadcast_to(norm * np.exp(k * (np.cos(psi) - 1.0)), shape)


def vmf_s2_density(direction, params: VmfS2Params):
    """Normalised vMF density on S^2 w.r.t. the area element ``sin theta dtheta dphi``.

    Uses ``kappa / (4 pi sinh kappa) exp(kappa mu.n)``; ``direction`` may be a
    stack of unit vectors with shape ``(..., 3)``.
    """
    n = np.asarray(direction, dtype=float)
    if np.any(np.abs(np.linalg.norm(n, axis=-1) - 1.0) > 1e-9):
        raise ValueError("direction must be a unit vector")
    k = params.kappa
    if k == 0.0:
        return np.full(n.shape[:-1], 1.0 / (4 * np.pi))
    cos_t = n @ np.asarray(params.mu)
    # kappa / (4 pi sinh kappa) e^{kappa c} = kappa e^{kappa (c - 1)} / (2 pi (1 - e^{-2 kappa}))
    return k * np.exp(k * (cos_t - 1.0)) / (-2 * np.pi * np.expm1(-2 * k))


# -- samplers -----------------------------------------------------------------


def _orthonormal_frame(mu):
    mu = np.asarray(mu, dtype=float)
    trial = np.array([1.0, 0.0, 0.0]) if abs(mu[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = trial - (trial @ mu) * mu
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(mu, e1)


def _sphere_draws(mu, kappa: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` vMF draws on the sphere containing ``mu``; uniform at ``kappa = 0``."""
    if kappa == 0.0:
        return stats.uniform_direction(len(mu)).rvs(size, random_state=rng).reshape(size, -1)
    return stats.vonmises_fisher(mu, kappa).rvs(size, random_state=rng).reshape(size, -1)


def sample_vmf_s2(params: VmfS2Params, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Draw ``size`` unit vectors, shape ``(size, 3)``."""
    return _sphere_draws(np.asarray(params.mu), params.kappa, rng, size)


def sample_vmf_s3(params: VmfS3Params, rng: np.random.Generator, size: int = 1):
    """Draw hyperspherical coordinates ``(psi, theta, phi)``, arrays of length ``size``.

    The density ``exp(kappa cos psi)`` is the vMF on S^3 about the quaternion
    ``(1, 0, 0, 0)``; draws are converted with the inverse of
    :func:`quaternion_from_hyperspherical`.
    """
    q = _sphere_draws(np.array([1.0, 0.0, 0.0, 0.0]), params.kappa, rng, size)
    sin_psi = np.linalg.norm(q[:, 1:], axis=1)
    psi = np.arctan2(sin_psi, q[:, 0])
    cos_theta = np.divide(q[:, 1], sin_psi, out=np.ones(size), where=sin_psi > 0)
    theta = np.arccos(np.clip(cos_theta, -1.0, 1.0))
    phi = np.mod(np.arctan2(q[:, 3], q[:, 2]), 2 * np.pi)
    return psi, theta, phi


def _fill(out, filled, accepted, barren, proposed, what):
    """Copy accepted draws into ``out``; count proposals since the last acceptance."""
    take = min(accepted.size, out.size - filled)
    out[filled:filled + take] = accepted[:take]
    barren = barren + proposed if take == 0 else 0
    if barren >= MAX_REJECTION_ATTEMPTS:
        raise SamplerError(f"{what}: {barren} consecutive rejections")
    return filled + take, barren


def quaternion_from_hyperspherical(psi, theta, phi) -> np.ndarray:
    """Cartesian point ``(cos psi, sin psi * axis)`` on S^3, shape ``(..., 4)``."""
    psi, theta, phi = np.broadcast_arrays(psi, theta, phi)
    sp = np.sin(psi)
    st = np.sin(theta)
    return np.stack([np.cos(psi), sp * np.cos(theta), sp * st * np.cos(phi),
                     sp * st * np.sin(phi)], axis=-1)


def sample_bump(params: BumpParams, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Draw speeds in ``[0, 1)`` with density proportional to the bump weight.

    Narrow bumps use a half-normal envelope ``exp(-v^2 / delta^2)``, wide ones a
    uniform envelope; both dominate ``exp(-v^2 / (delta^2 (1 - v^2)))``.
    """
    d = params.delta
    out = np.empty(size)
    filled = 0
    barren = 0
    while filled < size:
        batch = max(64, 2 * (size - filled))
        if d < 1.0:
            v = np.abs(rng.normal(0.0, d / math.sqrt(2.0), batch))
            v = v[v < 1.0]
            ratio = np.exp(-(v**4) / (d * d * (1.0 - v * v)))
            keep = v[rng.random(v.size) < ratio]
        else:
            v = rng.random(batch)
            keep = v[rng.random(batch) < _bump_scaled(v, d)]
        filled, barren = _fill(out, filled, keep, barren, batch, f"bump sampler at delta={d}")
    return out


# -- bump normalisation and moment integrals ------------------------------------


def _bump_scaled(v, delta: float):
    """``exp(-1/(delta^2 (1 - v^2))) * exp(1/delta^2)``, zero at ``v >= 1``."""
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    inside = v < 1.0
    vi = v[inside]
    out[inside] = np.exp(-vi * vi / (delta * delta * (1.0 - vi * vi)))
    return out


def _bump_support(delta: float) -> float:
    """Upper limit in ``u = artanh(v)`` beyond which the scaled weight, times
    the Jacobian ``sech^2 u``, is below double precision."""
    # exp(-sinh^2(u) / delta^2) < e^-745 once sinh u > delta sqrt(745)
    return min(math.asinh(delta * math.sqrt(745.0)), 20.0)


def _scaled_integral(g, delta: float) -> float:
    """``int_0^1 g(v) exp(-v^2 / (delta^2 (1 - v^2))) dv`` after ``v = tanh u``.

    With this substitution the weight becomes ``exp(-sinh^2(u)/delta^2)
    sech^2(u)``, smooth on the whole range, so wide bumps whose drop-off sits
    within ``1/delta^2`` of ``v = 1`` are resolved without special nodes.
    """

    def integrand(u):
        v = np.tanh(u)
        return g(v) * np.exp(-np.sinh(u) ** 2 / (delta * delta)) / np.cosh(u) ** 2

    return integrate_doubling(integrand, 0.0, _bump_support(delta), tol=1e-13, relative=True)


def bump_log_norm(delta: float) -> float:
    """``log N(delta)``; finite for every ``delta > 0``."""
    BumpParams(delta)
    return -1.0 / (delta * delta) + math.log(_scaled_integral(lambda v: 1.0, delta))


def bump_norm(delta: float) -> float:
    """``N(delta) = int_0^1 exp(-1/(delta^2 (1 - v^2))) dv``."""
    log_n = bump_log_norm(delta)
    value = math.exp(log_n)
    if value < np.finfo(float).tiny:
        raise BumpUnderflowError(f"N(delta) = exp({log_n:.1f}) underflows for delta={delta}")
    return value


def bump_density(v, params: BumpParams):
    """Normalised speed density ``h_2(v)`` on ``[0, 1)``."""
    d = params.delta
    return _bump_scaled(v, d) / _scaled_integral(lambda x: 1.0, d)


def t_velocity(n: int, params: BumpParams) -> float:
    """``T^(v)_n = int_0^1 v^2 F(v)^n h_2(v) dv`` for ``n`` in {1, 2}."""
    if n not in (1, 2):
        raise ValueError(f"moment order must be 1 or 2, got {n!r}")
    bump_norm(params.delta)  # propagates the underflow flag
    d = params.delta
    num = _scaled_integral(lambda v: v * v * rapidity_factor(v) ** n, d)
    return num / _scaled_integral(lambda v: 1.0, d)


def t_momentum(n: int, spec: MomentumSpec) -> float:
    """``T^(p)_n = (p0/m)^n`` for the delta-peaked momentum magnitude."""
    if n not in (1, 2):
        raise ValueError(f"moment order must be 1 or 2, got {n!r}")
    return spec.p0_over_m ** n
