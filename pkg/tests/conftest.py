import numpy as np
import pytest

import trom


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def heat_setup():
    """Small two-parameter heat model with a coarse grid and its snapshots."""
    box = trom.ParameterBox(bounds=((0.01, 0.5), (0.0, 0.9)))
    family = trom.build_heat_model(8, 8, box)
    grid = trom.CartesianGrid.uniform(box, (4, 3))
    phi = trom.generate_snapshots(family, grid, 0.2, 10)
    return {"box": box, "family": family, "grid": grid, "phi": phi,
            "dt": 0.2, "n_steps": 10}


def decaying_tensor(rng, dims, base=0.3):
    """Sum of rank-one terms with geometrically decaying weights; gives a
    spectrum spanning many decades so accuracy-mode truncation is exercised."""
    t = np.zeros(dims)
    for r in range(min(dims) * 2):
        vecs = [rng.standard_normal(d) for d in dims]
        vecs = [v / np.linalg.norm(v) for v in vecs]
        term = vecs[0]
        for v in vecs[1:]:
            term = np.multiply.outer(term, v)
        t += (base**r) * term
    return trom.DenseTensor(t)
