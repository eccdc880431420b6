"""Twirl channels for rotations and boosts, their limits, and CP checks.

Every channel here is a linear map on 2x2 complex matrices; inputs are not
required to be states, so the maps can be fed the matrix units when building
Choi matrices.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import distributions as dist
from .qubit import IDENTITY, PAULI, commutator, dot_sigma, pauli_conjugate_sum, trace_distance
from .wigner import exact_terms, rapidity_factor, second_order_terms

SIGMA_Y = PAULI[1]
REFINE_TOL = 1e-6
MC_CHUNK = 1 << 16

LEVI_CIVITA = np.zeros((3, 3, 3))
for _a, _b, _c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_a, _b, _c] = 1.0
    LEVI_CIVITA[_a, _c, _b] = -1.0


class QuadratureResolutionError(ArithmeticError):
    """Successive grid refinements of the boost twirl disagree."""


@dataclass(frozen=True)
class ChannelCoefficients:
    c1: float
    c2: float
    C1: float
    C2: float
    C3: float

    @property
    def trace_sum(self) -> float:
        return self.c1 + self.C1 + self.C2 + self.C3

    def as_tuple(self) -> tuple:
        return (self.c1, self.c2, self.C1, self.C2, self.C3)


@dataclass(frozen=True)
class ScenarioParams:
    kappa_rot: float = 1.0
    kappa_v: float = 1.0
    delta: float = 1.0
    kappa_p: float = 1.0
    p0_over_m: float = 0.01

    def __post_init__(self):
        for name in ("kappa_rot", "kappa_v", "kappa_p"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"delta must be finite and > 0, got {self.delta!r}")
        if not (math.isfinite(self.p0_over_m) and self.p0_over_m >= 0):
            raise ValueError(f"p0_over_m must be finite and >= 0, got {self.p0_over_m!r}")
        if self.p0_over_m > dist.P0_WARN:
            warnings.warn(f"p0_over_m = {self.p0_over_m} is outside the slow-particle regime",
                          stacklevel=3)

    def t_moments(self) -> tuple[float, float]:
        """``(T_1, T_2)`` with ``T_n = (p0/m)^n T^(v)_n``."""
        bump = dist.BumpParams(self.delta)
        return tuple(self.p0_over_m**n * dist.t_velocity(n, bump) for n in (1, 2))


# -- rotations ------------------------------------------------------------------


def rotation_twirl_closed(rho, kappa: float) -> np.ndarray:
    """vMF-weighted twirl over SU(2): a depolarising channel.

    Each Pauli error carries weight ``G(kappa)/kappa``, so Bloch vectors shrink
    by ``1 - 4 G(kappa)/kappa``.
    """
    g = dist.g_over_kappa(kappa)
    m = np.asarray(rho, dtype=complex)
    return (1.0 - 3.0 * g) * m + g * pauli_conjugate_sum(m, (1.0, 1.0, 1.0))


def hyperspherical_unitaries(psi, theta, phi) -> np.ndarray:
    """Unitaries ``x0 I + i (x1, x2, x3).sigma`` for points on S^3."""
    x = dist.quaternion_from_hyperspherical(psi, theta, phi)
    return x[..., 0, None, None] * IDENTITY + 1j * dot_sigma(x[..., 1:])


def _mc_chunk(rho, kappa, seed, index, size):
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    u = hyperspherical_unitaries(*dist.sample_vmf_s3(dist.VmfS3Params(kappa), rng, size))
    out = u @ rho @ np.conj(np.swapaxes(u, -1, -2))
    bloch = np.einsum("jab,nba->nj", PAULI, out).real
    return out.sum(axis=0), (bloch**2).sum(axis=0), bloch.sum(axis=0)


def rotation_twirl_mc(rho, kappa: float, n_samples: int, seed: int = 0, *,
                      workers: int | None = None, return_stderr: bool = False):
    """Monte Carlo estimate of the rotation twirl from vMF samples on S^3.

    Chunk ``i`` draws from ``SeedSequence([seed, i])`` with fixed chunk
    boundaries, so the estimate does not depend on ``workers``.  With
    ``return_stderr`` the per-component standard error of the output Bloch
    vector is returned as well.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    m = np.asarray(rho, dtype=complex)
    sizes = [min(MC_CHUNK, n_samples - start) for start in range(0, n_samples, MC_CHUNK)]
    jobs = [(m, kappa, seed, i, s) for i, s in enumerate(sizes)]
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _mc_chunk(*job), jobs))
    else:
        parts = [_mc_chunk(*job) for job in jobs]
    total = np.zeros((2, 2), dtype=complex)
    sq = np.zeros(3)
    lin = np.zeros(3)
    for acc, acc_sq, acc_lin in parts:
        total += acc
        sq += acc_sq
        lin += acc_lin
    mean = total / n_samples
    if not return_stderr:
        return mean
    var = np.clip(sq / n_samples - (lin / n_samples) ** 2, 0.0, None)
    return mean, np.sqrt(var / max(n_samples - 1, 1))


# -- boosts ---------------------------------------------------------------------


def boost_coefficients(params: ScenarioParams) -> ChannelCoefficients:
    t1, t2 = params.t_moments()
    hv = dist.mean_resultant_H(params.kappa_v)
    hp = dist.mean_resultant_H(params.kappa_p)
    a = dist.h_over_kappa(params.kappa_v)
    b = dist.h_over_kappa(params.kappa_p)
    q = 0.25 * t2
    return ChannelCoefficients(
        c1=1.0 + q * (a + b - 3.0 * a * b - 1.0),
        c2=0.5 * t1 * hv * hp,
        C1=q * b * (1.0 - a),
        C2=q * (5.0 * a * b - 2.0 * a - 2.0 * b + 1.0),
        C3=q * a * (1.0 - b),
    )


def boost_twirl_apply(rho, coeffs: ChannelCoefficients) -> np.ndarray:
    """``c1 rho + i c2 [sigma_y, rho] + sum_j C_j sigma_j rho sigma_j``."""
    m = np.asarray(rho, dtype=complex)
    return (coeffs.c1 * m + 1j * coeffs.c2 * commutator(SIGMA_Y, m)
            + pauli_conjugate_sum(m, (coeffs.C1, coeffs.C2, coeffs.C3)))


@dataclass(frozen=True)
class BoostGrid:
    """Quadrature resolution: Gauss-Legendre in speed and in ``cos theta`` of
    each direction sphere, uniform points in each azimuth."""

    n_v: int = 64
    n_cos: int = 48
    n_phi: int = 48

    def refined(self) -> "BoostGrid":
        return BoostGrid(2 * self.n_v, 2 * self.n_cos, 2 * self.n_phi)


EXACT_GRID = BoostGrid(48, 20, 20)

# boost directions centre on z, momentum directions on x
BOOST_MEAN = (0.0, 0.0, 1.0)
MOMENTUM_MEAN = (1.0, 0.0, 0.0)


def sphere_rule(mu, kappa: float, n_cos: int, n_phi: int):
    """Directions and vMF-weighted quadrature weights on S^2, polar axis ``mu``.

    Raises :class:`QuadratureResolutionError` when the weights do not sum to 1
    within ``REFINE_TOL``, i.e. the grid cannot resolve the concentration.
    """
    ct, wt = dist.gauss_legendre(-1.0, 1.0, n_cos)
    az = 2 * np.pi * np.arange(n_phi) / n_phi
    e1, e2 = dist._orthonormal_frame(np.asarray(mu, dtype=float))
    st = np.sqrt(1.0 - ct * ct)
    dirs = (ct[:, None, None] * np.asarray(mu)
            + (st[:, None] * np.cos(az))[..., None] * e1
            + (st[:, None] * np.sin(az))[..., None] * e2).reshape(-1, 3)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    weights = np.repeat(wt, n_phi) * (2 * np.pi / n_phi)
    weights = weights * dist.vmf_s2_density(dirs, dist.VmfS2Params(mu, kappa))
    mass = float(weights.sum())
    if abs(mass - 1.0) > REFINE_TOL:
        raise QuadratureResolutionError(
            f"{n_cos} polar nodes resolve only {mass:.6g} of the vMF mass at kappa={kappa}")
    return dirs, weights


def speed_rule(delta: float, n_v: int):
    """Speeds and weights ``v^2 h_2(v)`` with ``h_2`` normalised on the same nodes."""
    v, w = dist.gauss_legendre(0.0, 1.0, n_v)
    bump = dist._bump_scaled(v, delta)
    return v, w * v * v * bump / np.dot(w, bump)


def _assemble(rho, a0, a1, a2) -> np.ndarray:
    """``rho + a0 rho + (i/2)[a1.sigma, rho] + sum_ab a2_ab sigma_a rho sigma_b``."""
    m = np.asarray(rho, dtype=complex)
    out = (1.0 + a0) * m + 0.5j * commutator(dot_sigma(a1), m)
    return out + np.einsum("ab,aij,jk,bkl->il", a2, PAULI, m, PAULI)


def _integrand_sums(cos_phi, sin_axis, weights):
    """Weighted sums of the twirl integrand minus the identity term.

    With ``s = sin phi * phi_hat`` the conjugation by ``exp(i phi.J)`` is
    ``(1 + cos)/2 rho + (i/2)[s.sigma, rho] + (1 - cos)/(2|s|^2) (s.sigma) rho (s.sigma)``.
    """
    cos_phi, weights = np.broadcast_arrays(cos_phi, weights)
    cos_phi, weights = cos_phi.ravel(), weights.ravel()
    sin_axis = sin_axis.reshape(-1, 3)
    s2 = np.sum(sin_axis * sin_axis, axis=-1)
    half_vers = 0.5 * (1.0 - cos_phi)
    q = np.divide(half_vers, s2, out=np.zeros_like(s2), where=s2 > 0.0)
    a0 = -np.sum(weights * half_vers)
    a1 = weights @ sin_axis
    a2 = np.einsum("n,ni,nj->ij", weights * q, sin_axis, sin_axis)
    return a0, a1, a2


def _pointwise_twirl(rho, params: ScenarioParams, grid: BoostGrid, kinematics) -> np.ndarray:
    vdirs, vw = sphere_rule(BOOST_MEAN, params.kappa_v, grid.n_cos, grid.n_phi)
    pdirs, pw = sphere_rule(MOMENTUM_MEAN, params.kappa_p, grid.n_cos, grid.n_phi)
    speeds, sw = speed_rule(params.delta, grid.n_v)
    a0, a1, a2 = 0.0, np.zeros(3), np.zeros((3, 3))
    rows = max(1, (1 << 17) // len(pdirs))
    for speed, s_weight in zip(speeds, sw):
        for start in range(0, len(vdirs), rows):
            vd = vdirs[start:start + rows, None, :]
            weights = s_weight * vw[start:start + rows, None] * pw[None, :]
            cos_phi, sin_axis = kinematics(vd, speed, pdirs[None, :, :], params.p0_over_m)
            b0, b1, b2 = _integrand_sums(cos_phi, sin_axis, weights)
            a0, a1, a2 = a0 + b0, a1 + b1, a2 + b2
    return _assemble(rho, a0, a1, a2)


def _factorized_twirl(rho, params: ScenarioParams, grid: BoostGrid) -> np.ndarray:
    """Second-order twirl on the full product grid, summed through moments.

    With ``x = F(v) p~``, ``w = v_hat x p_hat`` and ``c = v_hat . p_hat`` the
    expanded integrand minus ``rho`` is
    ``x (i/2)[w.sigma, rho] + x^2 (-|w|^2 rho/4 - (i/4) c [w.sigma, rho]
    + (w.sigma) rho (w.sigma) / 4)``, which is quadratic in each direction, so
    the product-grid sum reduces exactly to per-sphere first and second moments.
    """
    vdirs, vw = sphere_rule(BOOST_MEAN, params.kappa_v, grid.n_cos, grid.n_phi)
    pdirs, pw = sphere_rule(MOMENTUM_MEAN, params.kappa_p, grid.n_cos, grid.n_phi)
    speeds, sw = speed_rule(params.delta, grid.n_v)
    f = rapidity_factor(speeds)
    x1 = params.p0_over_m * np.dot(sw, f)
    x2 = params.p0_over_m**2 * np.dot(sw, f * f)
    mv1, mp1 = vw @ vdirs, pw @ pdirs
    mv2 = np.einsum("n,ni,nj->ij", vw, vdirs, vdirs)
    mp2 = np.einsum("n,ni,nj->ij", pw, pdirs, pdirs)
    w1 = np.cross(mv1, mp1)
    ww = np.einsum("akl,bmn,km,ln->ab", LEVI_CIVITA, LEVI_CIVITA, mv2, mp2)
    cw = np.einsum("alm,kl,km->a", LEVI_CIVITA, mv2, mp2)
    a0 = -0.25 * x2 * np.trace(ww)
    a1 = x1 * w1 - 0.5 * x2 * cw
    return _assemble(rho, a0, a1, 0.25 * x2 * ww)


def boost_twirl_numeric(rho, params: ScenarioParams, resolution: BoostGrid | None = None, *,
                        kinematics: str = "second-order", refine: bool = True) -> np.ndarray:
    """Brute-force boost twirl over speed, boost direction and momentum direction.

    The momentum magnitude is fixed at ``p0/m``.  The zeroth-order term carries
    unit weight and every correction is weighted by ``v^2 h_2(v)``, the
    bookkeeping under which the coefficient channel is derived.
    ``kinematics="exact"`` substitutes the closed-form Wigner rotation and is
    evaluated pointwise on the full grid (default :data:`EXACT_GRID`).

    With ``refine`` the result is compared against a grid with every count
    doubled; a trace-distance disagreement above ``1e-6`` raises
    :class:`QuadratureResolutionError`.
    """
    if kinematics == "second-order":
        grid = resolution or BoostGrid()
        run = lambda g: _factorized_twirl(rho, params, g)  # noqa: E731
    elif kinematics == "second-order-pointwise":
        grid = resolution or EXACT_GRID
        run = lambda g: _pointwise_twirl(rho, params, g, second_order_terms)  # noqa: E731
    elif kinematics == "exact":
        grid = resolution or EXACT_GRID
        run = lambda g: _pointwise_twirl(rho, params, g, exact_terms)  # noqa: E731
    else:
        raise ValueError(f"unknown kinematics {kinematics!r}")
    out = run(grid)
    if refine:
        gap = trace_distance(out, run(grid.refined()))
        if gap > REFINE_TOL:
            raise QuadratureResolutionError(
                f"boost twirl changes by {gap:.3e} under refinement of {grid}")
    return out


# -- limit channels ---------------------------------------------------------------


def limit_state_rho0(rho, t1: float) -> np.ndarray:
    """First-order map ``rho + i (t1/2)[sigma_y, rho]``; a rotation only to O(t1)."""
    m = np.asarray(rho, dtype=complex)
    return m + 0.5j * t1 * commutator(SIGMA_Y, m)


def limit_state_rho1(rho, t2: float, kappa_p: float) -> np.ndarray:
    """Boost direction unknown (``kappa_v -> 0``).

    ``(1 - t2/6) rho + (t2/12)[2b s1 rho s1 + (1 - b)(s2 rho s2 + s3 rho s3)]``
    with ``b = H(kappa_p)/kappa_p``, the limit of the coefficient channel.
    """
    b = dist.h_over_kappa(kappa_p)
    m = np.asarray(rho, dtype=complex)
    w = (t2 / 12.0) * np.array([2.0 * b, 1.0 - b, 1.0 - b])
    return (1.0 - t2 / 6.0) * m + pauli_conjugate_sum(m, w)


def limit_state_rho2(rho, t2: float) -> np.ndarray:
    """Depolarising limit ``(1 - t2/6) rho + (t2/18) sum_j sigma_j rho sigma_j``."""
    m = np.asarray(rho, dtype=complex)
    return (1.0 - t2 / 6.0) * m + pauli_conjugate_sum(m, (t2 / 18.0,) * 3)


# -- composition ------------------------------------------------------------------


def full_pipeline(rho, params: ScenarioParams, coeffs: ChannelCoefficients | None = None):
    """Boost twirl followed by the rotation twirl, matching ``R(psi) L(v)``."""
    coeffs = coeffs or boost_coefficients(params)
    return rotation_twirl_closed(boost_twirl_apply(rho, coeffs), params.kappa_rot)


def full_pipeline_reversed(rho, params: ScenarioParams) -> np.ndarray:
    """Rotation twirl first; only for order-sensitivity studies."""
    twirled = rotation_twirl_closed(rho, params.kappa_rot)
    return boost_twirl_apply(twirled, boost_coefficients(params))


# -- complete positivity ------------------------------------------------------------


def choi_matrix(channel) -> np.ndarray:
    """``sum_ij |i><j| (x) channel(|i><j|)`` as a 4x4 matrix."""
    choi = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            unit = np.zeros((2, 2), dtype=complex)
            unit[i, j] = 1.0
            choi += np.kron(unit, np.asarray(channel(unit), dtype=complex))
    return choi


@dataclass(frozen=True)
class CPReport:
    min_eigenvalue: float
    passed: bool
    eigenvalues: tuple


def choi_cp_check(channel, tolerance: float = 1e-12) -> CPReport:
    choi = choi_matrix(channel)
    eig = np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))
    return CPReport(float(eig[0]), bool(eig[0] >= -tolerance), tuple(float(e) for e in eig))
