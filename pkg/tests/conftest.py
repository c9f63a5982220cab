"""Shared corpus builders for pipeline-level tests."""

import numpy as np

from morphloc.mask_io import save_mask


def make_gt_corpus(directory, n=50, size=64, seed=7, authentic_every=5):
    """Write a seeded ground-truth mask corpus.

    Every ``authentic_every``-th mask is blank (an authentic image);
    the rest contain one or two filled rectangles. Returns the list of
    stems in write order.
    """
    rng = np.random.default_rng(seed)
    stems = []
    for i in range(n):
        mask = np.zeros((size, size), dtype=bool)
        if i % authentic_every != authentic_every - 1:
            for _ in range(int(rng.integers(1, 3))):
                h = int(rng.integers(12, 28))
                w = int(rng.integers(12, 28))
                y = int(rng.integers(0, size - h + 1))
                x = int(rng.integers(0, size - w + 1))
                mask[y : y + h, x : x + w] = True
        stem = f"img_{i:03d}"
        save_mask(mask, directory / f"{stem}.png")
        stems.append(stem)
    return stems
