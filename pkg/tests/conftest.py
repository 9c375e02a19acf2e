import numpy as np
import pytest

from fvaelab.datasets import Factor, FactorSpec, ImageDataset


@pytest.fixture
def tiny_dataset():
    """Four 6x6 images over a 2x2 grid of factors."""
    spec = FactorSpec((Factor("a", (0.0, 1.0)), Factor("b", (0.0, 1.0))))
    labels = spec.grid()
    images = np.zeros((4, 6, 6), dtype=np.uint8)
    for i, (a, b) in enumerate(labels):
        images[i, 1 + 2 * a : 3 + 2 * a, 1 + 2 * b : 3 + 2 * b] = 1
    return ImageDataset(images, labels, spec)
