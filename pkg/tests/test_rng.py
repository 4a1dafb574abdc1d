from __future__ import annotations

import time

from rwesens.rng import parallel_map, substream


def test_substream_depends_only_on_keys():
    a = substream(7, "boot", 3).random(5)
    b = substream(7, "boot", 3).random(5)
    c = substream(7, "boot", 4).random(5)
    assert (a == b).all()
    assert not (a == c).all()


def test_parallel_map_preserves_order():
    def slow(i):
        time.sleep(0.002 * (5 - i % 5))
        return substream(1, "x", i).random()

    assert parallel_map(slow, list(range(20)), threads=4) == parallel_map(slow, list(range(20)), threads=1)
