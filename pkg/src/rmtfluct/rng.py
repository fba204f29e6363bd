"""Counter-based random streams.

Every draw is a function of ``(seed, stream, draw index)``: the pair
``(seed, stream)`` is the Philox key and the draw index is its counter.
Sample ``i`` of an experiment always uses stream ``base + i``, so results do
not depend on how samples are distributed over workers.
"""
from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def generator(seed: int, stream: int, substream: int = 0) -> np.random.Generator:
    """Independent, reproducible generator for one ``(seed, stream)`` pair.

    ``substream`` starts the counter in a disjoint block; it is used for
    resampling after a numerical failure and for auxiliary draws such as
    thinning.
    """
    key = np.array([int(seed) & _MASK64, int(stream) & _MASK64], dtype=np.uint64)
    counter = np.array([0, 0, 0, int(substream) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def case_stream_base(case_id: str) -> int:
    """Stream offset of a named verification case.

    The CRC32 of the case id fills the upper 32 bits, leaving 2^32 sample
    streams per case.
    """
    return zlib.crc32(case_id.encode("utf-8")) << 32
