"""Deterministic, splittable random number streams.

All stochastic code in the package draws from a DeterministicRng so that a
single 64-bit seed pins down every pipeline output. Substreams are derived
from (seed, stream path) via numpy's SeedSequence, so two substreams with
different ids are statistically independent yet reproducible.
"""

from __future__ import annotations

import numpy as np


class DeterministicRng:
    """A seeded RNG that can be split into independent named substreams."""

    def __init__(self, seed: int, _path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._path = _path
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=self.seed, spawn_key=_path))
        )

    def substream(self, stream_id: int) -> "DeterministicRng":
        """Derive an independent stream; same (seed, path, id) -> same stream."""
        return DeterministicRng(self.seed, self._path + (int(stream_id),))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    # Thin passthroughs for the handful of draws the package needs.
    def integers(self, *args, **kwargs):
        return self._gen.integers(*args, **kwargs)

    def random(self, *args, **kwargs):
        return self._gen.random(*args, **kwargs)

    def normal(self, *args, **kwargs):
        return self._gen.normal(*args, **kwargs)

    def choice(self, *args, **kwargs):
        return self._gen.choice(*args, **kwargs)

    def permutation(self, *args, **kwargs):
        return self._gen.permutation(*args, **kwargs)

    def shuffle(self, *args, **kwargs):
        return self._gen.shuffle(*args, **kwargs)
