import numpy as np
import pytest

from tribell import bellcore, optimizer, qstate


def random_density(rng) -> qstate.DensityMatrix3Q:
    """Full-rank random valid density matrix (Wishart construction)."""
    g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    m = g @ g.conj().T
    return qstate.DensityMatrix3Q(m / np.trace(m).real)


def random_settings(rng) -> bellcore.MeasurementSettings:
    az = rng.uniform(0.0, np.pi, size=6)
    pol = rng.uniform(0.0, 2.0 * np.pi, size=6)
    angles = np.empty(12)
    angles[0::2], angles[1::2] = az, pol
    return bellcore.MeasurementSettings.from_spherical(angles)


@pytest.fixture(scope="session")
def builtins():
    return [bellcore.builtin(n) for n in bellcore.BUILTIN_NAMES]


@pytest.fixture(scope="session")
def fast_cfg():
    # 16 Sobol starts on top of the closed-form warm start are ample for
    # the smooth objectives here and keep the suite quick
    return optimizer.OptimizerConfig(multistart_count=16, seed=1234)
