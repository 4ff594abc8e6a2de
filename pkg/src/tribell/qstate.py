"""Three-qubit states and state functionals.

Basis and party order are fixed throughout the package: kets are indexed
|000>, |001>, ..., |111> with parties A (x) B (x) C and |0> = (1, 0).
All values are immutable after construction and every operation is a pure
function.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "PureState3Q",
    "DensityMatrix3Q",
    "Bipartition",
    "make_gghz",
    "make_phi",
    "make_ms",
    "to_density",
    "depolarize",
    "fidelity",
    "fidelity_opt_gghz",
    "purity",
    "f_max_bound",
    "partial_transpose",
    "tri_negativity",
    "n_tri_model",
    "three_tangle",
    "pure_to_json",
    "pure_from_json",
    "density_to_json",
    "density_from_json",
]

_NORM_TOL = 1e-12
_HERM_TOL = 1e-10
_TRACE_TOL = 1e-10


class Bipartition(enum.Enum):
    """One qubit split off against the remaining pair."""

    A_BC = "A|BC"
    B_AC = "B|AC"
    C_AB = "C|AB"


@dataclass(frozen=True)
class PureState3Q:
    """Pure three-qubit state as 8 complex amplitudes.

    amplitudes[i] multiplies the computational ket whose binary expansion
    of i is (bit A, bit B, bit C).
    """

    amplitudes: np.ndarray
    label: str | None = None

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(8)
        norm = float(np.sum(np.abs(amp) ** 2))
        if abs(norm - 1.0) > _NORM_TOL:
            raise DomainError(f"state norm {norm!r} differs from 1 beyond {_NORM_TOL}")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)


@dataclass(frozen=True)
class DensityMatrix3Q:
    """8x8 density matrix; Hermitian, unit trace, PSD up to `tolerance`."""

    entries: np.ndarray
    tolerance: float = 1e-9

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex).reshape(8, 8)
        if self.tolerance < 0:
            raise DomainError("tolerance must be nonnegative")
        if np.max(np.abs(m - m.conj().T)) > _HERM_TOL:
            raise DomainError("matrix is not Hermitian within 1e-10")
        if abs(np.trace(m).real - 1.0) > _TRACE_TOL or abs(np.trace(m).imag) > _TRACE_TOL:
            raise DomainError("trace differs from 1 beyond 1e-10")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < -self.tolerance:
            raise DomainError(f"minimum eigenvalue {lo} below -{self.tolerance}")
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)


def make_gghz(theta: float) -> PureState3Q:
    """Generalized GHZ state cos(theta)|000> + sin(theta)|111>, theta in [0, pi/4]."""
    if not (0.0 <= theta <= np.pi / 4 + 1e-15):
        raise DomainError(f"theta={theta} outside [0, pi/4]")
    amp = np.zeros(8, dtype=complex)
    amp[0] = np.cos(theta)
    amp[7] = np.sin(theta)
    return PureState3Q(amp, label=f"gGHZ(theta={theta:.6g})")


def make_phi(theta: float, xi: float, omega: float) -> PureState3Q:
    """Three-parameter GHZ-class state.

    cos(theta)|000> + sin(theta)|1>(cos(xi)|0>+sin(xi)|1>)(cos(omega)|0>+sin(omega)|1>);
    the product structure makes it normalized for any angles.
    """
    for name, v in (("theta", theta), ("xi", xi), ("omega", omega)):
        if not np.isfinite(v):
            raise DomainError(f"{name} is not finite")
    amp = np.zeros(8, dtype=complex)
    amp[0] = np.cos(theta)
    st = np.sin(theta)
    amp[4] = st * np.cos(xi) * np.cos(omega)  # |100>
    amp[5] = st * np.cos(xi) * np.sin(omega)  # |101>
    amp[6] = st * np.sin(xi) * np.cos(omega)  # |110>
    amp[7] = st * np.sin(xi) * np.sin(omega)  # |111>
    return PureState3Q(amp, label=f"Phi({theta:.6g},{xi:.6g},{omega:.6g})")


def make_ms(omega: float) -> PureState3Q:
    """Maximal-slice state, omega in [0, pi/2]."""
    if not (0.0 <= omega <= np.pi / 2 + 1e-15):
        raise DomainError(f"omega={omega} outside [0, pi/2]")
    st = make_phi(np.pi / 4, np.pi / 2, omega)
    return PureState3Q(st.amplitudes, label=f"MS(omega={omega:.6g})")


def to_density(psi: PureState3Q) -> DensityMatrix3Q:
    """Projector |psi><psi| as a density matrix."""
    a = psi.amplitudes
    return DensityMatrix3Q(np.outer(a, a.conj()))


def depolarize(psi: PureState3Q, p: float) -> DensityMatrix3Q:
    """White-noise mixture p|psi><psi| + (1-p)/8 * identity."""
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"p={p} outside [0, 1]")
    a = psi.amplitudes
    m = p * np.outer(a, a.conj()) + (1.0 - p) / 8.0 * np.eye(8)
    return DensityMatrix3Q(m)


def fidelity(rho: DensityMatrix3Q, psi: PureState3Q) -> float:
    """<psi|rho|psi>, guaranteed real for valid inputs."""
    a = psi.amplitudes
    val = a.conj() @ rho.entries @ a
    return float(val.real)


def _gghz_fidelity_curve(rho: DensityMatrix3Q):
    # <G(t)|rho|G(t)> = r00 cos^2 t + r77 sin^2 t + 2 Re(r07) sin t cos t
    r00 = rho.entries[0, 0].real
    r77 = rho.entries[7, 7].real
    r07 = rho.entries[0, 7].real

    def f(t):
        c, s = np.cos(t), np.sin(t)
        return r00 * c * c + r77 * s * s + 2.0 * r07 * s * c

    return f


def fidelity_opt_gghz(rho: DensityMatrix3Q) -> tuple[float, float]:
    """Maximize <G(theta)|rho|G(theta)> over theta in [0, pi/4].

    Returns (theta_opt, F). A 1000-point grid scan brackets the maximum and
    golden-section refines it to 1e-8 in theta; ties resolve to the
    smallest theta.
    """
    f = _gghz_fidelity_curve(rho)
    grid = np.linspace(0.0, np.pi / 4, 1000)
    vals = f(grid)
    i = int(np.argmax(vals))  # first index on ties -> smallest theta
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > 1e-8:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    theta = 0.5 * (a + b)
    # flat or left-decreasing objective: report the smallest argmax
    if f(0.0) >= f(theta) - 1e-15:
        theta = 0.0
    return float(theta), float(f(theta))


def purity(rho: DensityMatrix3Q) -> float:
    """Tr(rho^2)."""
    m = rho.entries
    return float(np.sum(m * m.conj().T).real)


def f_max_bound(P: float) -> float:
    """Upper bound (1 + sqrt(56P - 7))/8 on fidelity at measured purity P."""
    if P < 1.0 / 8.0:
        raise DomainError(f"purity {P} below 1/8 (negative radicand)")
    return (1.0 + np.sqrt(56.0 * P - 7.0)) / 8.0


_CUT_AXIS = {Bipartition.A_BC: 0, Bipartition.B_AC: 1, Bipartition.C_AB: 2}


def partial_transpose(rho: DensityMatrix3Q, cut: Bipartition) -> np.ndarray:
    """Transpose on the single-qubit factor named by the cut."""
    axis = _CUT_AXIS[cut]
    t = rho.entries.reshape(2, 2, 2, 2, 2, 2)  # (a, b, c, a', b', c')
    t = np.swapaxes(t, axis, axis + 3)
    return t.reshape(8, 8)


def _negativity(rho: DensityMatrix3Q, cut: Bipartition) -> float:
    # trace-norm convention ||rho^G||_1 - 1 (see module notes on the factor of 2)
    ev = np.linalg.eigvalsh(partial_transpose(rho, cut))
    ev = np.where(ev > -1e-9, np.maximum(ev, 0.0), ev)  # clip arithmetic noise
    return float(np.sum(np.abs(ev)) - 1.0)


def tri_negativity(rho: DensityMatrix3Q) -> float:
    """Geometric mean of the three bipartition negativities.

    Each bipartition negativity is ||rho^Gamma||_1 - 1. The factor-of-2
    variant (||.||-1)/2 appears in parts of the literature; the convention
    here is the one consistent with N_tri = 1 for the pure GHZ state and
    with n_tri_model.
    """
    ns = [max(_negativity(rho, cut), 0.0) for cut in Bipartition]
    return float(np.cbrt(ns[0] * ns[1] * ns[2]))


def n_tri_model(theta: float, P: float) -> float:
    """Closed-form tripartite negativity of a depolarized gGHZ state.

    (1/8)[-1 + q(1+4 sin 2theta) + |1 - q(1+4 sin 2theta)|] with
    q = sqrt((8P-1)/7) the visibility inferred from purity P.
    """
    if not (0.0 <= theta <= np.pi / 4 + 1e-15):
        raise DomainError(f"theta={theta} outside [0, pi/4]")
    if not (1.0 / 8.0 <= P <= 1.0 + 1e-12):
        raise DomainError(f"purity {P} outside [1/8, 1]")
    q = np.sqrt((8.0 * P - 1.0) / 7.0)
    x = q * (1.0 + 4.0 * np.sin(2.0 * theta))
    return float((-1.0 + x + abs(1.0 - x)) / 8.0)


def three_tangle(which: str, angle: float) -> float:
    """Three-tangle of the gGHZ (sin^2 2theta) or MS (sin^2 omega) family."""
    if which == "gGHZ":
        if not (0.0 <= angle <= np.pi / 4 + 1e-15):
            raise DomainError(f"theta={angle} outside [0, pi/4]")
        return float(np.sin(2.0 * angle) ** 2)
    if which == "MS":
        if not (0.0 <= angle <= np.pi / 2 + 1e-15):
            raise DomainError(f"omega={angle} outside [0, pi/2]")
        return float(np.sin(angle) ** 2)
    raise DomainError(f"unknown state family {which!r}")


# --- JSON serialization ------------------------------------------------
# Pure states: 8 [re, im] pairs. Density matrices: 64 [re, im] pairs,
# row-major. IEEE doubles throughout.


def _pairs(z: np.ndarray) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in z.ravel()]


def _unpairs(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs])


def pure_to_json(psi: PureState3Q) -> str:
    doc = {"amplitudes": _pairs(psi.amplitudes)}
    if psi.label is not None:
        doc["label"] = psi.label
    return json.dumps(doc)


def pure_from_json(text: str) -> PureState3Q:
    doc = json.loads(text)
    return PureState3Q(_unpairs(doc["amplitudes"]), label=doc.get("label"))


def density_to_json(rho: DensityMatrix3Q) -> str:
    return json.dumps({"entries": _pairs(rho.entries)})


def density_from_json(text: str) -> DensityMatrix3Q:
    doc = json.loads(text)
    return DensityMatrix3Q(_unpairs(doc["entries"]).reshape(8, 8))
