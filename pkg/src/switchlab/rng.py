"""Counter-based random streams.

Every replica / sweep point derives its own Philox stream from the
master seed and its indices, so results are reproducible independently
of scheduling or worker count.
"""

from __future__ import annotations

from numpy.random import Generator, Philox, SeedSequence


def make_rng(seed: int, *stream: int) -> Generator:
    """Generator for the sub-stream ``stream`` of master ``seed``."""
    ss = SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return Generator(Philox(ss))
