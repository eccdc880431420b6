"""Sweeps and the oracle validation suite behind the command-line interface.

Each ``cmd_*`` function takes a :class:`RunConfig` and returns a
:class:`Table`; I/O and exit codes live in :mod:`refchannel.cli`.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channels as ch
from . import distributions as dist
from .metrology import qfi_boost_limits, qfi_finite_difference, qfi_rotation_closed
from .qubit import EncodingSpec, encode_spin, su2_conjugate, to_bloch, trace_distance
from .wigner import (BoostVector, MomentumVector, exact_terms, lorentz_oracle,
                     second_order_terms, wigner_exact)

COMMANDS = ("qfi-surface", "t2-curve", "channel", "validate")

DEFAULT_GRIDS = {
    "qfi-surface": {"kappa": (1e-3, 1e3, 40), "theta_e": (0.0, math.pi, 40)},
    "t2-curve": {"delta": (0.1, 5.0, 50)},
    "channel": {},
    "validate": {},
}
LOG_AXES = {"kappa"}
AXES = {"kappa", "theta_e", "delta", "lambda"}


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass
class RunConfig:
    command: str = "validate"
    kappa: float = 1.0
    kappa_v: float = 1.0
    kappa_p: float = 1.0
    delta: float = 1.0
    p0_over_m: tuple = (0.01,)
    theta_e: float = math.pi / 2
    lam: float = 0.0
    epsilon: float = 1e-4
    samples: int = 1_000_000
    seed: int = 0
    grids: dict = field(default_factory=dict)
    output: str | None = None
    workers: int = 1
    perturb: float = 0.0

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"command: unknown command {self.command!r}")
        for name in ("kappa", "kappa_v", "kappa_p", "delta", "theta_e", "lam", "epsilon",
                     "perturb"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigError(f"{name}: must be finite, got {value!r}")
        for name in ("kappa", "kappa_v", "kappa_p"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name}: must be >= 0")
        if self.delta <= 0:
            raise ConfigError("delta: must be > 0")
        if not self.p0_over_m or any(not (math.isfinite(p) and p >= 0) for p in self.p0_over_m):
            raise ConfigError(f"p0_over_m: must be finite and >= 0, got {self.p0_over_m!r}")
        if not 0 <= self.theta_e <= math.pi:
            raise ConfigError("theta_e: must lie in [0, pi]")
        if self.epsilon <= 0:
            raise ConfigError("epsilon: must be > 0")
        if self.samples < 1:
            raise ConfigError("samples: must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed: must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ConfigError("workers: must be >= 1")
        for axis, (start, stop, count) in self.grids.items():
            if axis not in AXES:
                raise ConfigError(f"grid: unknown axis {axis!r}")
            if count < 2:
                raise ConfigError(f"grid: axis {axis!r} needs at least 2 points")
            if not (math.isfinite(start) and math.isfinite(stop)):
                raise ConfigError(f"grid: axis {axis!r} bounds must be finite")
            if axis in LOG_AXES and min(start, stop) <= 0:
                raise ConfigError(f"grid: axis {axis!r} is log-spaced and needs positive bounds")
        return self

    def axis(self, name: str) -> np.ndarray:
        start, stop, count = self.grids.get(name) or DEFAULT_GRIDS[self.command][name]
        if name in LOG_AXES:
            return np.geomspace(start, stop, int(count))
        return np.linspace(start, stop, int(count))

    def scenario(self, p0_over_m: float | None = None) -> ch.ScenarioParams:
        return ch.ScenarioParams(self.kappa, self.kappa_v, self.delta, self.kappa_p,
                                 self.p0_over_m[0] if p0_over_m is None else p0_over_m)


@dataclass
class Table:
    header: list
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        lines = [",".join(self.header)]
        lines.extend(",".join(format_cell(c) for c in row) for row in self.rows)
        return "\n".join(lines) + "\n"


def format_cell(value) -> str:
    """Shortest text that parses back to the same value."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _map(fn, items, workers: int):
    """Ordered map; results come back in input order whatever the worker count."""
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# -- sweeps -----------------------------------------------------------------------


def cmd_qfi_surface(cfg: RunConfig) -> Table:
    kappas = cfg.axis("kappa")
    thetas = cfg.axis("theta_e")

    def cell(args):
        kappa, theta = args
        family = lambda lam: ch.rotation_twirl_closed(  # noqa: E731
            encode_spin(EncodingSpec(theta, 0.0, lam)), kappa)
        numeric = qfi_finite_difference(family, cfg.lam, cfg.epsilon).value
        return [kappa, theta, qfi_rotation_closed(kappa, theta), numeric]

    cells = [(k, t) for k in kappas for t in thetas]
    return Table(["kappa", "theta_E", "qfi_closed", "qfi_numeric"], _map(cell, cells, cfg.workers))


def t2_value(delta: float, p0_over_m: float) -> tuple[float, str]:
    try:
        return p0_over_m**2 * dist.t_velocity(2, dist.BumpParams(delta)), "ok"
    except dist.BumpUnderflowError:
        return float("nan"), "underflow"


def cmd_t2_curve(cfg: RunConfig) -> Table:
    cells = [(d, p) for p in cfg.p0_over_m for d in cfg.axis("delta")]
    rows = _map(lambda c: [c[0], c[1], *t2_value(*c)], cells, cfg.workers)
    return Table(["delta", "p0_over_m", "T2", "status"], rows)


def cmd_channel(cfg: RunConfig) -> Table:
    params = cfg.scenario()
    coeffs = ch.boost_coefficients(params)
    lams = cfg.axis("lambda") if "lambda" in cfg.grids else [cfg.lam]
    rows = []
    for lam in lams:
        rho = encode_spin(EncodingSpec(cfg.theta_e, 0.0, float(lam)))
        out = ch.full_pipeline(rho, params, coeffs)
        rows.append([lam, *to_bloch(rho), *to_bloch(out), *coeffs.as_tuple(), coeffs.trace_sum])
    header = ["lambda", "r_in_x", "r_in_y", "r_in_z", "r_out_x", "r_out_y", "r_out_z",
              "c1", "c2", "C1", "C2", "C3", "trace_sum"]
    return Table(header, rows)


# -- validation suite -----------------------------------------------------------------

ROTATION_KAPPAS = (0.5, 2.0, 10.0)
BOOST_GRID_KAPPAS = (0.5, 2.0, 8.0)
BOOST_GRID_DELTAS = (0.5, 1.0, 2.0)
SMALLNESS_DELTAS = (0.1, 0.5, 1.0, 2.0, 5.0)
SMALLNESS_KAPPA_P = (1e-8, 0.5, 2.0, 8.0)
RHO1_T2 = 0.3
RHO1_KAPPA_P = 5.0
TINY = 1e-8
HUGE = 1e8


def reference_states(seed: int, count: int = 6) -> list:
    """Fixed probe states: the poles plus seeded random pure and mixed states."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    states = [encode_spin(EncodingSpec(0.0, 0.0, 0.0)), encode_spin(EncodingSpec(math.pi / 2, 0.0, 1.0))]
    for k in range(count):
        r = rng.normal(size=3)
        r *= (1.0 if k % 2 == 0 else rng.random()) / np.linalg.norm(r)
        states.append(0.5 * (np.eye(2) + np.einsum("j,jab->ab", r, ch.PAULI)))
    return states


def _perturbed(coeffs: ch.ChannelCoefficients, amount: float) -> ch.ChannelCoefficients:
    if amount == 0.0:
        return coeffs
    return ch.ChannelCoefficients(coeffs.c1, coeffs.c2 + amount, coeffs.C1, coeffs.C2, coeffs.C3)


def boost_grid_params(p0_over_m: float) -> list:
    return [ch.ScenarioParams(1.0, kv, d, kp, p0_over_m)
            for kv in BOOST_GRID_KAPPAS for kp in BOOST_GRID_KAPPAS for d in BOOST_GRID_DELTAS]


def boost_grid_discrepancy(p0_over_m: float, perturb: float = 0.0, workers: int = 1) -> float:
    """Largest trace distance between numeric twirl and coefficient channel on the grid."""
    rho = encode_spin(EncodingSpec(1.1, 0.7, 0.4))

    def cell(params):
        numeric = ch.boost_twirl_numeric(rho, params)
        closed = ch.boost_twirl_apply(rho, _perturbed(ch.boost_coefficients(params), perturb))
        return trace_distance(numeric, closed)

    return max(_map(cell, boost_grid_params(p0_over_m), workers))


def wigner_oracle_discrepancy(seed: int, count: int = 1000) -> float:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    worst = 0.0
    for _ in range(count):
        vd, pd = rng.normal(size=(2, 3))
        v = BoostVector(tuple(vd / np.linalg.norm(vd)), float(rng.random()))
        p = MomentumVector(tuple(pd / np.linalg.norm(pd)), float(2.0 * rng.random()))
        worst = max(worst, float(np.max(np.abs(wigner_exact(v, p).vector
                                               - lorentz_oracle(v, p).vector))))
    return worst


def expansion_error(pt: float, v: float = 0.5) -> float:
    """Distance between exact and second-order ``(cos phi, sin phi phi_hat)``,
    perpendicular boost and momentum."""
    vhat, phat = np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])
    c_ex, s_ex = exact_terms(vhat, v, phat, pt)
    c_2, s_2 = second_order_terms(vhat, v, phat, pt)
    return float(abs(c_ex - c_2) + np.linalg.norm(s_ex - s_2))


def exact_twirl_gap(p0_over_m: float, grid: ch.BoostGrid = ch.BoostGrid(32, 16, 16)) -> float:
    rho = encode_spin(EncodingSpec(1.1, 0.7, 0.4))
    params = ch.ScenarioParams(1.0, 1.0, 1.0, 2.0, p0_over_m)
    exact = ch.boost_twirl_numeric(rho, params, grid, kinematics="exact", refine=False)
    return trace_distance(exact, ch.boost_twirl_apply(rho, ch.boost_coefficients(params)))


def limit_gaps(params: ch.ScenarioParams, states) -> dict:
    """Distances between coefficient channels in the limits and the limit states."""
    base = dict(kappa_rot=params.kappa_rot, delta=params.delta, p0_over_m=params.p0_over_m)
    t1, t2 = params.t_moments()
    both_small = ch.boost_coefficients(ch.ScenarioParams(kappa_v=TINY, kappa_p=TINY, **base))
    v_small = ch.boost_coefficients(ch.ScenarioParams(kappa_v=TINY, kappa_p=params.kappa_p, **base))
    both_large = ch.boost_coefficients(ch.ScenarioParams(kappa_v=HUGE, kappa_p=HUGE, **base))
    pattern = (1.0 - t2 / 4.0, t1 / 2.0, 0.0, t2 / 4.0, 0.0)
    return {
        "rho2": max(trace_distance(ch.boost_twirl_apply(s, both_small), ch.limit_state_rho2(s, t2))
                    for s in states),
        "rho1": max(trace_distance(ch.boost_twirl_apply(s, v_small),
                                   ch.limit_state_rho1(s, t2, params.kappa_p)) for s in states),
        "rho0_pattern": max(abs(a - b) for a, b in zip(both_large.as_tuple(), pattern)),
    }


def rho0_error_ratio() -> float:
    rho = encode_spin(EncodingSpec(1.1, 0.7, 0.4))
    err = [trace_distance(ch.limit_state_rho0(rho, t), su2_conjugate(rho, (0.0, 1.0, 0.0), t))
           for t in (0.01, 0.02)]
    return err[1] / err[0]


def rho1_qfi_readings(epsilon: float = 1e-4, t2: float = RHO1_T2,
                      kappa_p: float = RHO1_KAPPA_P) -> tuple[float, float, float]:
    """Numeric QFI of the ``rho1`` family for encoding about ``x`` and the two
    closed-form readings ``(numeric, with H(kappa_v), with H(kappa_p))``."""
    family = lambda lam: ch.limit_state_rho1(  # noqa: E731
        encode_spin(EncodingSpec(math.pi / 2, 0.0, lam)), t2, kappa_p)
    numeric = qfi_finite_difference(family, 0.3, epsilon).value
    limits = qfi_boost_limits(0.0, t2, TINY, kappa_p)
    return numeric, limits.rho1_kappa_v, limits.rho1_kappa_p


def coefficient_cp_floor(p0_over_m: float) -> float:
    """Smallest Choi eigenvalue of the coefficient channel over the boost grid."""
    return min(ch.choi_cp_check(lambda m, c=ch.boost_coefficients(p): ch.boost_twirl_apply(m, c))
               .min_eigenvalue for p in boost_grid_params(p0_over_m))


def smallness_gap(p0_over_m: float, states) -> float:
    """Largest trace distance between input and boost-twirled output with the
    boost direction unknown (``kappa_v -> 0``)."""
    worst = 0.0
    for delta in SMALLNESS_DELTAS:
        for kp in SMALLNESS_KAPPA_P:
            params = ch.ScenarioParams(1.0, TINY, delta, kp, p0_over_m)
            for s in states:
                worst = max(worst, trace_distance(ch.boost_twirl_numeric(s, params), s))
    return worst


def cmd_validate(cfg: RunConfig) -> Table:
    rows = []

    def check(check_id, observed, expected, tolerance, passed=None):
        if passed is None:
            passed = abs(observed - expected) <= tolerance
        rows.append([check_id, float(observed), float(expected), float(tolerance),
                     "pass" if passed else "fail"])

    p0 = cfg.p0_over_m[0]
    states = reference_states(cfg.seed)

    probe = encode_spin(EncodingSpec(1.1, 0.7, 0.4))
    for kappa in ROTATION_KAPPAS:
        mc, stderr = ch.rotation_twirl_mc(probe, kappa, cfg.samples, cfg.seed,
                                          workers=cfg.workers, return_stderr=True)
        # trace distance is half the Bloch-vector distance
        check(f"rotation_mc_kappa_{kappa:g}", trace_distance(mc, ch.rotation_twirl_closed(probe, kappa)),
              0.0, 1.5 * float(np.linalg.norm(stderr)))

    check("boost_numeric_vs_coefficients",
          boost_grid_discrepancy(p0, cfg.perturb, cfg.workers), 0.0, 1e-6)
    check("wigner_exact_vs_lorentz_oracle", wigner_oracle_discrepancy(cfg.seed), 0.0, 1e-9)
    check("wigner_second_order_error_ratio", expansion_error(0.02) / expansion_error(0.01), 8.0, 2.0)
    check("boost_exact_kinematics_gap_ratio", exact_twirl_gap(2 * p0) / exact_twirl_gap(p0), 8.0, 2.0)

    gaps = limit_gaps(ch.ScenarioParams(1.0, cfg.kappa_v, cfg.delta, cfg.kappa_p, p0), states)
    check("limit_rho2_depolarizing", gaps["rho2"], 0.0, 1e-7)
    check("limit_rho1_kappa_v_small", gaps["rho1"], 0.0, 1e-8)
    check("limit_rho0_pattern", gaps["rho0_pattern"], 0.0, 1e-7)
    check("rho0_first_order_error_ratio", rho0_error_ratio(), 4.0, 0.5)

    numeric, with_v, with_p = rho1_qfi_readings(cfg.epsilon)
    match_v = abs(numeric - with_v) <= 1e-6
    match_p = abs(numeric - with_p) <= 1e-6
    rows.append(["rho1_qfi_reading_H_kappa_v", numeric, with_v, 1e-6, "info"])
    rows.append(["rho1_qfi_reading_H_kappa_p", numeric, with_p, 1e-6, "info"])
    winner = "H_kappa_p" if match_p and not match_v else "H_kappa_v" if match_v and not match_p \
        else "undecided"
    check(f"rho1_qfi_verdict_{winner}", numeric, with_p if match_p else with_v, 1e-6,
          passed=match_p != match_v)

    rot_floor = min(ch.choi_cp_check(lambda m, k=k: ch.rotation_twirl_closed(m, k)).min_eigenvalue
                    for k in (1e-3, 0.5, 2.0, 10.0, 1e3))
    check("cp_rotation_min_choi_eigenvalue", rot_floor, 0.0, 1e-12, passed=rot_floor >= -1e-12)
    rho2_floor = min(ch.choi_cp_check(lambda m, t=t: ch.limit_state_rho2(m, t)).min_eigenvalue
                     for t in np.linspace(0.0, 1.0, 11))
    check("cp_rho2_min_choi_eigenvalue", rho2_floor, 0.0, 1e-12, passed=rho2_floor >= -1e-12)
    coeff_floor = coefficient_cp_floor(p0)
    check("cp_coefficient_min_choi_eigenvalue", coeff_floor, 0.0, 10 * p0**4,
          passed=coeff_floor >= -10 * p0**4)

    check("boost_noise_second_order_smallness", smallness_gap(p0, states), 0.0, 2 * p0**2,
          passed=smallness_gap(p0, states) < 2 * p0**2)
    return Table(["check_id", "observed", "expected", "tolerance", "pass"], rows)


def run(cfg: RunConfig) -> Table:
    return {
        "qfi-surface": cmd_qfi_surface,
        "t2-curve": cmd_t2_curve,
        "channel": cmd_channel,
        "validate": cmd_validate,
    }[cfg.validate().command](cfg)


def failed_checks(table: Table) -> list:
    return [row[0] for row in table.rows if row[-1] == "fail"]
