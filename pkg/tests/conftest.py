import hypothesis
import numpy as np
import pytest

from splpo import Instance, generate_instance

hypothesis.settings.register_profile(
    "solver", deadline=None, max_examples=25, derandomize=True
)
hypothesis.settings.load_profile("solver")


@pytest.fixture
def toy() -> Instance:
    """Two customers, two sites; optimum 8 at open={2} (1-based)."""
    return Instance(
        f=np.array([3.0, 1.0]),
        c=np.array([[2.0, 5.0], [4.0, 2.0]]),
        p=np.array([[1, 2], [2, 1]]),
        name="toy",
    )


def random_instance(seed: int, m_max: int = 10, n_max: int = 10) -> Instance:
    """Seeded small instance with dimensions derived from the seed."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, m_max + 1))
    n = int(rng.integers(2, n_max + 1))
    return generate_instance(m, n, seed, name=f"rand{seed}")
