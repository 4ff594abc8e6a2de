"""Synthetic quantum state tomography with maximum-likelihood reconstruction.

The default measurement set is the three Pauli bases per qubit (27 setting
triples, 216 projector outcomes), which over-determines the 64 real
parameters of the density matrix. Reconstruction uses the diluted R-rho-R
fixed-point iteration: PSD-preserving and likelihood-monotone, with the
dilution factor halved whenever a full step would decrease the likelihood.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bellcore import BlochVector
from .errors import DomainError, IdentifiabilityError
from .expsim import CountsRecord, SettingTriple, _projectors, born_probabilities, simulate_counts
from .qstate import (
    DensityMatrix3Q,
    f_max_bound,
    fidelity_opt_gghz,
    purity,
    tri_negativity,
)

__all__ = [
    "TomographySet",
    "ReconstructionResult",
    "StateReport",
    "pauli_set",
    "completeness_rank",
    "simulate_tomography",
    "exact_counts",
    "reconstruct_ml",
    "state_report",
]

_AXES = {
    "x": BlochVector(1.0, 0.0, 0.0),
    "y": BlochVector(0.0, 1.0, 0.0),
    "z": BlochVector(0.0, 0.0, 1.0),
}


@dataclass(frozen=True)
class TomographySet:
    """An informationally complete list of setting triples.

    Construction verifies that the induced linear map from Hermitian
    matrices to outcome probabilities has full rank 64.
    """

    triples: tuple[SettingTriple, ...]

    def __post_init__(self):
        if _stack_rank(_projector_stack(self.triples)) < 64:
            raise IdentifiabilityError(
                "setting triples are not informationally complete (rank < 64)"
            )


@lru_cache(maxsize=1)
def pauli_set() -> TomographySet:
    """All 27 combinations of x, y, z measurement axes."""
    triples = tuple(
        SettingTriple(a=_AXES[i], b=_AXES[j], c=_AXES[k])
        for i, j, k in itertools.product("xyz", repeat=3)
    )
    return TomographySet(triples=triples)


def _projector_stack(triples) -> np.ndarray:
    return np.concatenate([_projectors(t) for t in triples], axis=0)


def _stack_rank(stack: np.ndarray) -> int:
    # split real/imaginary parts: the probability map is real-linear on
    # the 64-dimensional space of Hermitian matrices
    rows = np.concatenate([stack.real.reshape(len(stack), -1),
                           stack.imag.reshape(len(stack), -1)], axis=1)
    return int(np.linalg.matrix_rank(rows, tol=1e-10))


def completeness_rank(triples) -> int:
    """Rank of the linear map from Hermitian matrices to outcome probabilities."""
    if isinstance(triples, TomographySet):
        triples = triples.triples
    return _stack_rank(_projector_stack(triples))


def simulate_tomography(
    rho: DensityMatrix3Q, tset: TomographySet, exposure: float, seed: int
) -> list[CountsRecord]:
    """One Poisson CountsRecord per setting triple, on seed substreams."""
    out = []
    for idx, triple in enumerate(tset.triples):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(idx,)))
        out.append(simulate_counts(rho, triple, exposure, rng))
    return out


def exact_counts(rho: DensityMatrix3Q, tset: TomographySet, exposure: float) -> list[CountsRecord]:
    """Expected (non-integer) counts: exposure times the Born probabilities."""
    return [
        CountsRecord(counts=exposure * born_probabilities(rho, t), setting=t, exposure=exposure)
        for t in tset.triples
    ]


@dataclass(frozen=True)
class ReconstructionResult:
    rho: DensityMatrix3Q
    iterations: int
    log_likelihood: float
    converged: bool


def _log_likelihood(freqs: np.ndarray, probs: np.ndarray) -> float:
    mask = freqs > 0
    return float(np.sum(freqs[mask] * np.log(np.maximum(probs[mask], 1e-300))))


def _trace_distance(m1: np.ndarray, m2: np.ndarray) -> float:
    ev = np.linalg.eigvalsh(m1 - m2)
    return 0.5 * float(np.sum(np.abs(ev)))


def reconstruct_ml(
    data: list[CountsRecord], max_iterations: int = 5000, tolerance: float = 1e-8
) -> ReconstructionResult:
    """Likelihood ascent from the maximally mixed state.

    Stops when the trace-distance step falls below `tolerance` or at the
    iteration cap; a capped run is returned with converged=False, never
    silently. Rank-deficient data raises IdentifiabilityError.
    """
    if not data:
        raise IdentifiabilityError("no tomography records")
    stack = _projector_stack([rec.setting for rec in data])
    freqs = np.concatenate([rec.counts for rec in data])
    if _stack_rank(stack) < 64:
        raise IdentifiabilityError("tomography data does not determine the state (rank < 64)")

    n_total = float(np.sum(freqs))
    if n_total <= 0:
        raise IdentifiabilityError("tomography data has no events")
    rho = np.eye(8, dtype=complex) / 8.0
    probs = np.einsum("kij,ji->k", stack, rho).real
    loglik = _log_likelihood(freqs, probs)
    eps = np.inf  # full R rho R steps until the first stagnation
    converged = False
    iterations = 0

    for iterations in range(1, max_iterations + 1):
        weights = np.where(freqs > 0, freqs / np.maximum(probs, 1e-300), 0.0) / n_total
        R = np.einsum("k,kij->ij", weights, stack)
        while True:
            G = R if np.isinf(eps) else (np.eye(8) + eps * R) / (1.0 + eps)
            cand = G @ rho @ G.conj().T
            cand = (cand + cand.conj().T) / 2.0
            cand /= np.trace(cand).real
            cand_probs = np.einsum("kij,ji->k", stack, cand).real
            cand_loglik = _log_likelihood(freqs, cand_probs)
            if cand_loglik >= loglik - 1e-12:
                break
            eps = 1.0 if np.isinf(eps) else eps * 0.5  # dilute on stagnation
            if eps < 1e-8:
                cand, cand_probs, cand_loglik = rho, probs, loglik
                break
        step = _trace_distance(cand, rho)
        rho, probs, loglik = cand, cand_probs, cand_loglik
        if step < tolerance:
            converged = True
            break

    # clip eigenvalue noise at the -1e-9 PSD tolerance
    result_rho = DensityMatrix3Q((rho + rho.conj().T) / 2.0)
    return ReconstructionResult(
        rho=result_rho, iterations=iterations, log_likelihood=loglik, converged=converged
    )


@dataclass(frozen=True)
class StateReport:
    """The five per-state summary columns of the characterization table."""

    theta_opt: float
    fidelity: float
    purity: float
    fidelity_max: float
    tri_negativity: float


def state_report(result: ReconstructionResult) -> StateReport:
    """Assemble (theta_opt, F, P, F_max, N_tri) for a converged reconstruction."""
    if not result.converged:
        raise DomainError("state_report requires a converged reconstruction")
    theta_opt, f = fidelity_opt_gghz(result.rho)
    p = purity(result.rho)
    return StateReport(
        theta_opt=theta_opt,
        fidelity=f,
        purity=p,
        fidelity_max=f_max_bound(p),
        tri_negativity=tri_negativity(result.rho),
    )
