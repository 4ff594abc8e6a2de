"""Synthetic measurement pipeline: Born probabilities, Poissonian
coincidence counts, parity estimators for one-, two- and three-party
correlators, and Monte Carlo error bars.

Counts index convention, fixed everywhere: outcome index = 4*sA + 2*sB + sC
where s = 0 for the "+" (outcome +1) detector and 1 for "-". So index 0 is
f+++, index 1 is f++-, ..., index 7 is f---.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .bellcore import BellInequality, BlochVector, CorrelatorTerm, MeasurementSettings, observable
from .errors import DomainError, EstimationError
from .qstate import DensityMatrix3Q

__all__ = [
    "SettingTriple",
    "CountsRecord",
    "ExperimentRun",
    "born_probabilities",
    "simulate_counts",
    "corr3",
    "corr2",
    "corr1",
    "corr_error",
    "estimate_theta",
    "measure_inequality",
    "measure_inequality_exact",
    "monte_carlo_errors",
    "run_to_json",
    "run_from_json",
    "records_to_json",
    "records_from_json",
    "export_correlators_csv",
]

_ID2 = np.eye(2, dtype=complex)

# outcome-sign table: _SIGNS[party, index] = +-1
_BITS = np.array([[(i >> 2) & 1, (i >> 1) & 1, i & 1] for i in range(8)])
_SIGNS = 1.0 - 2.0 * _BITS.T  # shape (3, 8)

_PAIRS = {"AB": (0, 1), "AC": (0, 2), "BC": (1, 2)}
_PARTIES = {"A": 0, "B": 1, "C": 2}


@dataclass(frozen=True)
class SettingTriple:
    """One measurement direction per party."""

    a: BlochVector
    b: BlochVector
    c: BlochVector

    def vectors(self) -> tuple[BlochVector, BlochVector, BlochVector]:
        return (self.a, self.b, self.c)


@dataclass(frozen=True)
class CountsRecord:
    """Eight coincidence counts for one setting triple.

    Poisson sampling yields integers; exact-expectation mode stores the
    real-valued expected counts instead, which the estimators accept.
    """

    counts: np.ndarray
    setting: SettingTriple
    exposure: float

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=float).reshape(8)
        if np.any(c < 0):
            raise DomainError("counts must be nonnegative")
        if self.exposure <= 0:
            raise DomainError("exposure must be positive")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)


@dataclass(frozen=True)
class ExperimentRun:
    """Counts for every setting combination one inequality needs."""

    records: dict
    inequality: str
    seed: int


def _projectors(s: SettingTriple) -> np.ndarray:
    """The 8 joint projectors, index order as in the module docstring."""
    per_party = []
    for v in s.vectors():
        o = observable(v)
        per_party.append(((_ID2 + o) / 2.0, (_ID2 - o) / 2.0))
    out = np.empty((8, 8, 8), dtype=complex)
    for idx in range(8):
        sa, sb, sc = _BITS[idx]
        out[idx] = np.kron(np.kron(per_party[0][sa], per_party[1][sb]), per_party[2][sc])
    return out


def born_probabilities(rho: DensityMatrix3Q, s: SettingTriple) -> np.ndarray:
    """Probabilities of the 8 joint outcomes; clipped at 0, sum 1."""
    projectors = _projectors(s)
    probs = np.einsum("kij,ji->k", projectors, rho.entries).real
    probs = np.maximum(probs, 0.0)
    return probs


def simulate_counts(rho: DensityMatrix3Q, s: SettingTriple, exposure: float, seed) -> CountsRecord:
    """Independent Poisson(exposure * probability) draw per outcome."""
    if exposure <= 0:
        raise DomainError("exposure must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    lam = exposure * born_probabilities(rho, s)
    counts = rng.poisson(lam).astype(float)
    return CountsRecord(counts=counts, setting=s, exposure=exposure)


def _parity_signs(parties: tuple[int, ...]) -> np.ndarray:
    signs = np.ones(8)
    for p in parties:
        signs = signs * _SIGNS[p]
    return signs


def _parity_estimate(counts: np.ndarray, parties: tuple[int, ...]) -> float:
    total = float(np.sum(counts))
    if total <= 0:
        raise EstimationError("correlator undefined: all counts are zero")
    signs = _parity_signs(parties)
    return float(np.sum(signs * counts) / total)


def corr3(rec: CountsRecord) -> float:
    """(S+ - S-)/(S+ + S-) over the three-party outcome parity."""
    return _parity_estimate(rec.counts, (0, 1, 2))


def corr2(rec: CountsRecord, pair: str) -> float:
    """Two-party correlator, marginalizing the remaining party."""
    if pair not in _PAIRS:
        raise DomainError(f"pair must be one of {sorted(_PAIRS)}")
    return _parity_estimate(rec.counts, _PAIRS[pair])


def corr1(rec: CountsRecord, party: str) -> float:
    """Single-party sign average."""
    if party not in _PARTIES:
        raise DomainError(f"party must be one of {sorted(_PARTIES)}")
    return _parity_estimate(rec.counts, (_PARTIES[party],))


def corr_error(rec: CountsRecord, parties: tuple[int, ...]) -> float:
    """Poisson-propagated standard error of a parity estimator."""
    total = float(np.sum(rec.counts))
    if total <= 0:
        raise EstimationError("correlator undefined: all counts are zero")
    signs = _parity_signs(parties)
    est = float(np.sum(signs * rec.counts) / total)
    var = float(np.sum(rec.counts * (signs - est) ** 2)) / total**2
    return float(np.sqrt(max(var, 0.0)))


def estimate_theta(f000: float, f111: float) -> float:
    """arctan(sqrt(f111/f000)) from the two z-basis coincidence rates.

    f000 = 0 with events in f111 sits at the pi/2 boundary of the gGHZ
    family and is returned as such; no events at all is an error.
    """
    if f000 < 0 or f111 < 0:
        raise DomainError("counts must be nonnegative")
    if f000 == 0:
        if f111 == 0:
            raise EstimationError("theta undefined: both f000 and f111 are zero")
        return float(np.pi / 2)
    return float(np.arctan(np.sqrt(f111 / f000)))


def _term_parties(term: CorrelatorTerm) -> tuple[int, ...]:
    return tuple(p for p, idx in enumerate((term.a, term.b, term.c)) if idx is not None)


def _term_combo(term: CorrelatorTerm) -> tuple[int, int, int]:
    # marginal terms read off the record whose absent settings default to 0
    return (term.a or 0, term.b or 0, term.c or 0)


def required_combos(ineq: BellInequality) -> list[tuple[int, int, int]]:
    """Distinct setting combinations needed to estimate every term."""
    return sorted({_term_combo(term) for term, _ in ineq.terms})


def _value_from_counts(ineq: BellInequality, counts_by_combo: dict) -> float:
    total = 0.0
    for term, coeff in ineq.terms:
        combo = _term_combo(term)
        if combo not in counts_by_combo:
            raise EstimationError(f"no record for setting combination {combo}")
        est = _parity_estimate(counts_by_combo[combo], _term_parties(term))
        total += float(coeff) * est
    return float(ineq.normalization) * total


def measure_inequality(
    rho: DensityMatrix3Q,
    ineq: BellInequality,
    settings: MeasurementSettings,
    exposure: float,
    seed: int,
) -> tuple[float, ExperimentRun]:
    """Simulate counts for each required setting combination and assemble
    the inequality value from the parity estimators.

    Combinations are simulated on independent seed substreams in sorted
    order, so the result is reproducible record by record.
    """
    combos = required_combos(ineq)
    records = {}
    for idx, combo in enumerate(combos):
        triple = SettingTriple(
            a=settings.party_vector(0, combo[0]),
            b=settings.party_vector(1, combo[1]),
            c=settings.party_vector(2, combo[2]),
        )
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(idx,)))
        records[combo] = simulate_counts(rho, triple, exposure, rng)
    value = _value_from_counts(ineq, {k: r.counts for k, r in records.items()})
    return value, ExperimentRun(records=records, inequality=ineq.name, seed=seed)


def measure_inequality_exact(
    rho: DensityMatrix3Q,
    ineq: BellInequality,
    settings: MeasurementSettings,
    exposure: float,
) -> tuple[float, ExperimentRun]:
    """Sampling-free variant: records hold the expected counts.

    The assembled value equals the quantum expectation of the inequality
    at these settings up to floating-point roundoff.
    """
    combos = required_combos(ineq)
    records = {}
    for combo in combos:
        triple = SettingTriple(
            a=settings.party_vector(0, combo[0]),
            b=settings.party_vector(1, combo[1]),
            c=settings.party_vector(2, combo[2]),
        )
        counts = exposure * born_probabilities(rho, triple)
        records[combo] = CountsRecord(counts=counts, setting=triple, exposure=exposure)
    value = _value_from_counts(ineq, {k: r.counts for k, r in records.items()})
    return value, ExperimentRun(records=records, inequality=ineq.name, seed=-1)


def monte_carlo_errors(
    run: ExperimentRun, ineq: BellInequality, resamples: int, seed: int
) -> tuple[float, float]:
    """Poisson-resample every count and recompute the inequality value.

    Returns the sample mean and standard deviation over `resamples`
    recomputations; deterministic per seed.
    """
    if resamples < 2:
        raise DomainError("resamples must be at least 2")
    rng = np.random.default_rng(seed)
    base = {combo: rec.counts for combo, rec in run.records.items()}
    values = np.empty(resamples)
    for r in range(resamples):
        resampled = {combo: rng.poisson(c).astype(float) for combo, c in base.items()}
        values[r] = _value_from_counts(ineq, resampled)
    return float(np.mean(values)), float(np.std(values, ddof=1))


# --- serialization ------------------------------------------------------


def _record_doc(rec: CountsRecord) -> dict:
    return {
        "exposure": rec.exposure,
        "a": [rec.setting.a.x, rec.setting.a.y, rec.setting.a.z],
        "b": [rec.setting.b.x, rec.setting.b.y, rec.setting.b.z],
        "c": [rec.setting.c.x, rec.setting.c.y, rec.setting.c.z],
        "counts": [float(x) for x in rec.counts],
    }


def _record_from_doc(doc: dict) -> CountsRecord:
    triple = SettingTriple(
        a=BlochVector(*doc["a"]), b=BlochVector(*doc["b"]), c=BlochVector(*doc["c"])
    )
    return CountsRecord(counts=np.array(doc["counts"]), setting=triple, exposure=doc["exposure"])


def records_to_json(records: list[CountsRecord]) -> str:
    """Serialize a plain list of counts records (e.g. tomography data)."""
    return json.dumps({"records": [_record_doc(r) for r in records]}, indent=2)


def records_from_json(text: str) -> list[CountsRecord]:
    return [_record_from_doc(d) for d in json.loads(text)["records"]]


def run_to_json(run: ExperimentRun) -> str:
    doc = {
        "inequality": run.inequality,
        "seed": run.seed,
        "records": [
            {"combo": list(combo)} | _record_doc(rec)
            for combo, rec in sorted(run.records.items())
        ],
    }
    return json.dumps(doc, indent=2)


def run_from_json(text: str) -> ExperimentRun:
    doc = json.loads(text)
    records = {tuple(item["combo"]): _record_from_doc(item) for item in doc["records"]}
    return ExperimentRun(records=records, inequality=doc["inequality"], seed=doc["seed"])


def export_correlators_csv(run: ExperimentRun, ineq: BellInequality, path) -> None:
    """Per-term correlator estimates with Poisson-propagated errors."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["term_a", "term_b", "term_c", "combo", "estimate", "stderr"])
        for term, _ in ineq.terms:
            combo = _term_combo(term)
            rec = run.records[combo]
            parties = _term_parties(term)
            est = _parity_estimate(rec.counts, parties)
            err = corr_error(rec, parties)
            w.writerow([
                term.a if term.a is not None else "",
                term.b if term.b is not None else "",
                term.c if term.c is not None else "",
                "".join(str(i) for i in combo),
                f"{est:.6g}",
                f"{err:.6g}",
            ])
