import numpy as np
import pytest

from mixedssl.types import Dataset, OutcomeKind, standardize


def standardized_design(n, p, seed=0):
    rng = np.random.default_rng(seed)
    x, _, _ = standardize(rng.standard_normal((n, p)))
    return x


def mixed_dataset(n=60, p=8, q_c=1, q_b=1, seed=0, b_scale=2.0, sparsity=0.3):
    """Small mixed-outcome dataset simulated from the latent model itself."""
    rng = np.random.default_rng(seed)
    q = q_c + q_b
    x = standardized_design(n, p, seed=seed + 1)
    b = np.zeros((p, q))
    mask = rng.random((p, q)) < sparsity
    b[mask] = rng.uniform(-b_scale, b_scale, mask.sum())
    z = x @ b + rng.standard_normal((n, q))
    kinds = [OutcomeKind.CONTINUOUS] * q_c + [OutcomeKind.BINARY] * q_b
    y = z.copy()
    for k in range(q_c, q):
        y[:, k] = (z[:, k] >= 0).astype(float)
    ds = Dataset.from_raw(x, y, kinds)
    return ds, b


@pytest.fixture
def rng():
    return np.random.default_rng(123)
