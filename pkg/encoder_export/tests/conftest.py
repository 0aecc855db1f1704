import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def image_folder(tmp_path):
    """8 small synthetic images across 2 class folders."""
    rng = np.random.default_rng(0)
    root = tmp_path / "dataset"
    for cls in ("cats", "dogs"):
        (root / cls).mkdir(parents=True)
        for i in range(4):
            arr = rng.integers(0, 256, size=(40, 40, 3), dtype=np.uint8)
            Image.fromarray(arr).save(root / cls / f"img_{i}.png")
    return root
