"""Two-setting dichotomic tripartite Bell-type inequalities.

An inequality is a sparse table of rational coefficients over one-, two-
and three-party correlator terms, together with a rational normalization
chosen so the local-hidden-variable bound is exactly 1. The four tables
used throughout (I10, I96, I99, I185) ship as JSON fixtures under
``tribell/data`` and are revalidated by exhaustive strategy enumeration on
load.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

import numpy as np

from .errors import DomainError
from .qstate import DensityMatrix3Q

__all__ = [
    "BlochVector",
    "MeasurementSettings",
    "CorrelatorTerm",
    "BellInequality",
    "observable",
    "correlator",
    "evaluate",
    "builtin",
    "lhv_bound",
    "inequality_to_json",
    "inequality_from_json",
    "load_inequality",
]

BUILTIN_NAMES = ("I10", "I96", "I99", "I185")

_UNIT_TOL = 1e-10

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_ID2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class BlochVector:
    """Unit vector on the Bloch sphere."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        n2 = self.x * self.x + self.y * self.y + self.z * self.z
        if abs(n2 - 1.0) > _UNIT_TOL:
            raise DomainError(f"Bloch vector norm^2 = {n2} is not 1 within {_UNIT_TOL}")

    @classmethod
    def from_spherical(cls, azimuthal: float, polar: float) -> "BlochVector":
        """Vector (sin t cos p, sin t sin p, cos t) for azimuthal t, polar p."""
        st = np.sin(azimuthal)
        return cls(float(st * np.cos(polar)), float(st * np.sin(polar)), float(np.cos(azimuthal)))

    def spherical(self) -> tuple[float, float]:
        """(azimuthal in [0, pi], polar in [0, 2pi)) of this vector."""
        az = float(np.arccos(np.clip(self.z, -1.0, 1.0)))
        pol = float(np.arctan2(self.y, self.x)) % (2.0 * np.pi)
        return az, pol

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class MeasurementSettings:
    """Two Bloch vectors per party: the six measurement directions."""

    a0: BlochVector
    a1: BlochVector
    b0: BlochVector
    b1: BlochVector
    c0: BlochVector
    c1: BlochVector

    @classmethod
    def from_spherical(cls, angles) -> "MeasurementSettings":
        """Build from 12 angles (az_a0, pol_a0, az_a1, ..., pol_c1)."""
        angles = np.asarray(angles, dtype=float).reshape(12)
        vecs = [BlochVector.from_spherical(angles[2 * i], angles[2 * i + 1]) for i in range(6)]
        return cls(*vecs)

    def spherical(self) -> np.ndarray:
        """The 12 spherical angles, in declaration order."""
        out = []
        for v in self.vectors():
            out.extend(v.spherical())
        return np.array(out)

    def vectors(self) -> tuple[BlochVector, ...]:
        return (self.a0, self.a1, self.b0, self.b1, self.c0, self.c1)

    def party_vector(self, party: int, index: int) -> BlochVector:
        return self.vectors()[2 * party + index]

    def as_array(self) -> np.ndarray:
        """6x3 array of Bloch vectors in order a0, a1, b0, b1, c0, c1."""
        return np.array([v.as_array() for v in self.vectors()])


@dataclass(frozen=True)
class CorrelatorTerm:
    """Per-party setting index, None where the party is traced out."""

    a: int | None
    b: int | None
    c: int | None

    def __post_init__(self):
        if self.a is None and self.b is None and self.c is None:
            raise DomainError("correlator term must involve at least one party")
        for idx in (self.a, self.b, self.c):
            if idx is not None and idx not in (0, 1):
                raise DomainError(f"setting index {idx!r} not in (0, 1)")


@dataclass(frozen=True)
class BellInequality:
    """Coefficient table with normalization; LHV bound fixed at 1.

    Construction enumerates all 64 deterministic strategies and rejects
    tables whose normalized classical maximum is not 1; this pins down the
    transcription of every bundled inequality.
    """

    name: str
    terms: tuple[tuple[CorrelatorTerm, Fraction], ...]
    normalization: Fraction
    classical_bound: float = 1.0

    def __post_init__(self):
        if not self.terms:
            raise DomainError("coefficient map is empty")
        if self.normalization <= 0:
            raise DomainError("normalization must be positive")
        seen = set()
        for term, _ in self.terms:
            if term in seen:
                raise DomainError(f"duplicate term {term}")
            seen.add(term)
        bound = lhv_bound(self, _validate=False)
        if abs(bound - self.classical_bound) > 1e-12:
            raise DomainError(
                f"{self.name}: LHV bound {bound!r} != {self.classical_bound} after normalization"
            )

    def coefficients(self) -> dict[CorrelatorTerm, Fraction]:
        return dict(self.terms)


def observable(v: BlochVector) -> np.ndarray:
    """2x2 Hermitian v . sigma with eigenvalues +-1."""
    return v.x * SIGMA_X + v.y * SIGMA_Y + v.z * SIGMA_Z


def _term_operator(settings: MeasurementSettings, term: CorrelatorTerm) -> np.ndarray:
    ops = []
    for party, idx in enumerate((term.a, term.b, term.c)):
        if idx is None:
            ops.append(_ID2)
        else:
            ops.append(observable(settings.party_vector(party, idx)))
    return np.kron(np.kron(ops[0], ops[1]), ops[2])


def correlator(rho: DensityMatrix3Q, settings: MeasurementSettings, term: CorrelatorTerm) -> float:
    """Tr[rho (O_A x O_B x O_C)] with identity on absent parties."""
    val = np.trace(rho.entries @ _term_operator(settings, term))
    return float(val.real)


def evaluate(rho: DensityMatrix3Q, ineq: BellInequality, settings: MeasurementSettings) -> float:
    """Normalized inequality value; > 1 witnesses the inequality's class."""
    total = 0.0
    for term, coeff in ineq.terms:
        total += float(coeff) * correlator(rho, settings, term)
    return float(ineq.normalization) * total


def lhv_bound(ineq: BellInequality, _validate: bool = True) -> float:
    """Maximum of the normalized expression over the 64 deterministic strategies."""
    best = -np.inf
    for bits in itertools.product((1.0, -1.0), repeat=6):
        total = 0.0
        for term, coeff in ineq.terms:
            v = float(coeff)
            if term.a is not None:
                v *= bits[term.a]
            if term.b is not None:
                v *= bits[2 + term.b]
            if term.c is not None:
                v *= bits[4 + term.c]
            total += v
        best = max(best, total)
    return float(ineq.normalization) * best


# --- JSON schema --------------------------------------------------------
# {"name": str, "normalization": [num, den],
#  "terms": [{"a": null|0|1, "b": null|0|1, "c": null|0|1, "coeff": [num, den]}]}


def inequality_from_json(text: str) -> BellInequality:
    doc = json.loads(text)
    try:
        name = doc["name"]
        norm = Fraction(doc["normalization"][0], doc["normalization"][1])
        terms = tuple(
            (CorrelatorTerm(t["a"], t["b"], t["c"]), Fraction(t["coeff"][0], t["coeff"][1]))
            for t in doc["terms"]
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise DomainError(f"malformed inequality document: {exc}") from exc
    return BellInequality(name=name, terms=terms, normalization=norm)


def inequality_to_json(ineq: BellInequality) -> str:
    doc = {
        "name": ineq.name,
        "normalization": [ineq.normalization.numerator, ineq.normalization.denominator],
        "terms": [
            {
                "a": term.a,
                "b": term.b,
                "c": term.c,
                "coeff": [coeff.numerator, coeff.denominator],
            }
            for term, coeff in ineq.terms
        ],
    }
    return json.dumps(doc, indent=2)


def load_inequality(path) -> BellInequality:
    """Load and revalidate a coefficient table from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        return inequality_from_json(fh.read())


_BUILTIN_CACHE: dict[str, BellInequality] = {}


def builtin(name: str) -> BellInequality:
    """One of the four bundled inequalities: I10, I96, I99, I185."""
    if name not in BUILTIN_NAMES:
        raise LookupError(f"unknown inequality {name!r}; choices: {', '.join(BUILTIN_NAMES)}")
    if name not in _BUILTIN_CACHE:
        text = resources.files("tribell.data").joinpath(f"{name.lower()}.json").read_text()
        _BUILTIN_CACHE[name] = inequality_from_json(text)
    return _BUILTIN_CACHE[name]
