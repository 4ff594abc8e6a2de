"""Black-box maximization of Bell-type inequalities over measurement angles.

The twelve spherical angles (azimuthal in [0, pi], polar in [0, 2pi] per
vector) are ascended with L-BFGS-B from a deterministic set of starts:
caller-supplied warm starts, closed-form settings at the state's best-fit
gGHZ angle, then a scrambled Sobol sequence. The objective and its
analytic gradient are evaluated on precomputed Pauli correlation tensors
of the state, so a single evaluation costs a handful of small einsums.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from . import closedform
from .bellcore import (
    BellInequality,
    MeasurementSettings,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    evaluate,
)
from .errors import ConvergenceError, DomainError
from .qstate import DensityMatrix3Q, PureState3Q, fidelity_opt_gghz, to_density

__all__ = [
    "OptimizerConfig",
    "OptimizationReport",
    "maximize",
    "p_min_numeric",
    "maximize_on_reconstruction",
    "config_from_mapping",
    "report_to_json",
]

_PAULIS = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])
_ID2 = np.eye(2, dtype=complex)
_BOUNDS = [(0.0, np.pi), (0.0, 2.0 * np.pi)] * 6


@dataclass(frozen=True)
class OptimizerConfig:
    multistart_count: int = 64
    max_iterations: int = 2000
    value_tolerance: float = 1e-9
    angle_tolerance: float = 1e-8
    seed: int = 0
    # Monte Carlo resampling of reconstructed states re-runs the full
    # maximization per sample when True; False keeps the base-run settings.
    reoptimize_per_sample: bool = True

    def __post_init__(self):
        if self.multistart_count <= 0 or self.max_iterations <= 0:
            raise DomainError("multistart_count and max_iterations must be positive")
        if not (0.0 < self.value_tolerance < 1.0) or not (0.0 < self.angle_tolerance < 1.0):
            raise DomainError("tolerances must lie in (0, 1)")
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class OptimizationReport:
    value: float
    settings: MeasurementSettings
    starts_converged: int
    best_start_index: int
    evaluations: int


def config_from_mapping(doc: dict) -> OptimizerConfig:
    """Build a config from a parsed JSON/TOML mapping (unknown keys rejected)."""
    allowed = set(OptimizerConfig.__dataclass_fields__)
    unknown = set(doc) - allowed
    if unknown:
        raise DomainError(f"unknown optimizer config keys: {sorted(unknown)}")
    return OptimizerConfig(**doc)


def report_to_json(report: OptimizationReport) -> str:
    doc = {
        "value": report.value,
        "settings": {
            name: [v.x, v.y, v.z]
            for name, v in zip(("a0", "a1", "b0", "b1", "c0", "c1"), report.settings.vectors())
        },
        "starts_converged": report.starts_converged,
        "best_start_index": report.best_start_index,
        "evaluations": report.evaluations,
    }
    return json.dumps(doc, indent=2)


class _CorrelationModel:
    """Pauli correlation tensors of a state plus one inequality's coefficients."""

    def __init__(self, rho: DensityMatrix3Q, ineq: BellInequality):
        R = rho.entries.reshape(2, 2, 2, 2, 2, 2)  # (a,b,c,a',b',c')
        P = _PAULIS  # P[p, row, col]
        self.g3 = np.einsum("abcdef,pda,qeb,rfc->pqr", R, P, P, P).real
        self.g2ab = np.einsum("abcdef,pda,qeb,fc->pq", R, P, P, _ID2).real
        self.g2ac = np.einsum("abcdef,pda,eb,rfc->pr", R, P, _ID2, P).real
        self.g2bc = np.einsum("abcdef,da,qeb,rfc->qr", R, _ID2, P, P).real
        self.g1a = np.einsum("abcdef,pda,eb,fc->p", R, P, _ID2, _ID2).real
        self.g1b = np.einsum("abcdef,da,qeb,fc->q", R, _ID2, P, _ID2).real
        self.g1c = np.einsum("abcdef,da,eb,rfc->r", R, _ID2, _ID2, P).real

        self.scale = float(ineq.normalization)
        self.c3 = np.zeros((2, 2, 2))
        self.c2 = {"ab": np.zeros((2, 2)), "ac": np.zeros((2, 2)), "bc": np.zeros((2, 2))}
        self.c1 = {"a": np.zeros(2), "b": np.zeros(2), "c": np.zeros(2)}
        for term, coeff in ineq.terms:
            co = float(coeff)
            present = tuple(x is not None for x in (term.a, term.b, term.c))
            if present == (True, True, True):
                self.c3[term.a, term.b, term.c] += co
            elif present == (True, True, False):
                self.c2["ab"][term.a, term.b] += co
            elif present == (True, False, True):
                self.c2["ac"][term.a, term.c] += co
            elif present == (False, True, True):
                self.c2["bc"][term.b, term.c] += co
            elif present == (True, False, False):
                self.c1["a"][term.a] += co
            elif present == (False, True, False):
                self.c1["b"][term.b] += co
            else:
                self.c1["c"][term.c] += co

    def value_and_grad(self, angles: np.ndarray) -> tuple[float, np.ndarray]:
        az, pol = angles[0::2], angles[1::2]
        saz, caz = np.sin(az), np.cos(az)
        spol, cpol = np.sin(pol), np.cos(pol)
        V = np.stack([saz * cpol, saz * spol, caz], axis=1)  # (6, 3)
        dVaz = np.stack([caz * cpol, caz * spol, -saz], axis=1)
        dVpol = np.stack([-saz * spol, saz * cpol, np.zeros(6)], axis=1)
        A, B, C = V[0:2], V[2:4], V[4:6]
        gV = np.zeros((6, 3))

        ta = np.einsum("pqr,jq,kr->jkp", self.g3, B, C)
        tb = np.einsum("pqr,ip,kr->ikq", self.g3, A, C)
        tc = np.einsum("pqr,ip,jq->ijr", self.g3, A, B)
        val = np.einsum("ijk,ip,jkp->", self.c3, A, ta)
        gV[0:2] += np.einsum("ijk,jkp->ip", self.c3, ta)
        gV[2:4] += np.einsum("ijk,ikq->jq", self.c3, tb)
        gV[4:6] += np.einsum("ijk,ijr->kr", self.c3, tc)

        for key, (X, Y, xs, ys) in {
            "ab": (A, B, slice(0, 2), slice(2, 4)),
            "ac": (A, C, slice(0, 2), slice(4, 6)),
            "bc": (B, C, slice(2, 4), slice(4, 6)),
        }.items():
            M, co = (self.g2ab if key == "ab" else self.g2ac if key == "ac" else self.g2bc), self.c2[key]
            val += np.einsum("ij,ip,pq,jq->", co, X, M, Y)
            gV[xs] += co @ (Y @ M.T)
            gV[ys] += co.T @ (X @ M)

        val += self.c1["a"] @ (A @ self.g1a) + self.c1["b"] @ (B @ self.g1b) + self.c1["c"] @ (C @ self.g1c)
        gV[0:2] += np.outer(self.c1["a"], self.g1a)
        gV[2:4] += np.outer(self.c1["b"], self.g1b)
        gV[4:6] += np.outer(self.c1["c"], self.g1c)

        grad = np.empty(12)
        grad[0::2] = np.einsum("mp,mp->m", gV, dVaz)
        grad[1::2] = np.einsum("mp,mp->m", gV, dVpol)
        return self.scale * val, self.scale * grad


def _family_warm_starts(rho: DensityMatrix3Q, ineq: BellInequality) -> list[MeasurementSettings]:
    theta_opt, _ = fidelity_opt_gghz(rho)
    try:
        if ineq.name == "I96":
            return [closedform.i96_optimal_settings(theta_opt)]
        if ineq.name == "I99":
            return [closedform.i99_optimal_settings(theta_opt)]
        if ineq.name == "I185":
            return [closedform.i185_optimal_settings_gghz(theta_opt)]
        if ineq.name == "I10":
            return [closedform.i10_optimal_settings(max(theta_opt, 1e-4))]
    except ConvergenceError:
        pass
    return []


def maximize(
    rho: DensityMatrix3Q,
    ineq: BellInequality,
    cfg: OptimizerConfig | None = None,
    warm_starts: tuple[MeasurementSettings, ...] = (),
) -> OptimizationReport:
    """Best normalized inequality value over all measurement settings.

    Deterministic for a fixed seed; ties between starts resolve to the
    lowest start index. Raises ConvergenceError (with the best report
    attached) if no start converges.
    """
    cfg = cfg or OptimizerConfig()
    model = _CorrelationModel(rho, ineq)

    starts = [np.asarray(w.spherical(), dtype=float) for w in warm_starts]
    starts += [s.spherical() for s in _family_warm_starts(rho, ineq)]
    n_random = max(cfg.multistart_count - len(starts), 0)
    if n_random:
        sob = qmc.Sobol(d=12, scramble=True, seed=cfg.seed)
        # power-of-two draw keeps Sobol balanced; the prefix is what matters
        u = sob.random(1 << int(np.ceil(np.log2(n_random))))[:n_random]
        lo = np.array([b[0] for b in _BOUNDS])
        hi = np.array([b[1] for b in _BOUNDS])
        starts += list(lo + u * (hi - lo))

    def negobj(x):
        v, g = model.value_and_grad(x)
        return -v, -g

    best_val = -np.inf
    best_x = None
    best_idx = -1
    converged = 0
    evaluations = 0
    options = {
        "maxiter": cfg.max_iterations,
        "ftol": cfg.value_tolerance * 1e-2,
        "gtol": cfg.angle_tolerance * 0.1,
    }
    lo = np.array([b[0] for b in _BOUNDS])
    hi = np.array([b[1] for b in _BOUNDS])
    for idx, x0 in enumerate(starts):
        x0 = np.clip(x0, lo, hi)
        v0, g0 = model.value_and_grad(x0)
        evaluations += 1
        if np.linalg.norm(g0) < 1e-14 and idx >= len(warm_starts):
            # degenerate gradient (pole plateau or an exact stationary
            # point): keep the original value as a candidate, retry the
            # ascent from a perturbed point
            if v0 > best_val:
                best_val, best_x, best_idx = v0, x0.copy(), idx
            sub = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(idx,)))
            x0 = np.clip(x0 + sub.normal(0.0, 1e-3, size=12), lo, hi)
        res = minimize(negobj, x0, jac=True, method="L-BFGS-B", bounds=_BOUNDS, options=options)
        evaluations += int(res.nfev)
        if res.success:
            converged += 1
        if -res.fun > best_val:
            best_val = -res.fun
            best_x = res.x
            best_idx = idx

    settings = MeasurementSettings.from_spherical(best_x)
    report = OptimizationReport(
        value=evaluate(rho, ineq, settings),
        settings=settings,
        starts_converged=converged,
        best_start_index=best_idx,
        evaluations=evaluations,
    )
    if converged == 0:
        raise ConvergenceError(f"no start converged maximizing {ineq.name}", best=report)
    return report


def p_min_numeric(
    psi: PureState3Q,
    ineqs: list[BellInequality],
    cfg: OptimizerConfig | None = None,
) -> tuple[float, str]:
    """Threshold visibility 1/max_i I_i^max(psi) and the achieving inequality.

    Ties break by list order. A best value below 1 means no white-noise
    mixture violates any of the inequalities; the threshold is then capped
    at 1 (p > 1 is unsatisfiable).
    """
    if not ineqs:
        raise DomainError("need at least one inequality")
    rho = to_density(psi)
    best_val, best_name = -np.inf, None
    for ineq in ineqs:
        rep = maximize(rho, ineq, cfg)
        if rep.value > best_val + 1e-12:
            best_val, best_name = rep.value, ineq.name
    return min(1.0, 1.0 / best_val), best_name


def maximize_on_reconstruction(
    rho: DensityMatrix3Q, cfg: OptimizerConfig | None = None
) -> dict[str, OptimizationReport]:
    """Maximize all four bundled inequalities for one (reconstructed) state."""
    from .bellcore import builtin

    return {name: maximize(rho, builtin(name), cfg) for name in ("I10", "I96", "I99", "I185")}
