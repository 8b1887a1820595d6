import struct

import numpy as np
import pytest

from boundary_reps.cache import HEADER, MAGIC, GramCache
from boundary_reps.kernels import gram_matrix
from boundary_reps.words import GroupContext

R2 = GroupContext(2)


def test_roundtrip_and_hit(tmp_path):
    cache = GramCache(tmp_path)
    cold = gram_matrix(R2, 0.25, 2, cache=cache)
    warm = gram_matrix(R2, 0.25, 2, cache=cache)
    assert (cache.misses, cache.hits) == (1, 1)
    assert np.array_equal(cold.entries, warm.entries)
    assert cold.entries.tobytes() == warm.entries.tobytes()


def test_header_layout(tmp_path):
    cache = GramCache(tmp_path)
    gram_matrix(R2, 0.3, 2, cache=cache)
    raw = cache.path(R2, 0.3, 2).read_bytes()
    magic, r, k, t, dim = HEADER.unpack_from(raw, 0)
    assert (magic, r, k, t, dim) == (MAGIC, 2, 2, 0.3, 12)
    data = np.frombuffer(raw[HEADER.size: HEADER.size + 8 * 144], dtype="<f8").reshape(12, 12)
    assert np.array_equal(data, gram_matrix(R2, 0.3, 2).entries)


def test_keys_do_not_collide(tmp_path):
    cache = GramCache(tmp_path)
    names = {cache.path(GroupContext(2, eps), t, k).name
             for eps in (1.0, 0.5) for t in (0.25, 0.25 + 1e-16, 0.3) for k in (1, 2)}
    assert len(names) == 12


@pytest.mark.parametrize("damage", ["truncate", "flip_data", "bad_magic", "wrong_t"])
def test_corrupt_entries_are_evicted(tmp_path, damage):
    cache = GramCache(tmp_path)
    good = gram_matrix(R2, 0.25, 2, cache=cache).entries
    p = cache.path(R2, 0.25, 2)
    raw = bytearray(p.read_bytes())
    if damage == "truncate":
        raw = raw[:-20]
    elif damage == "flip_data":
        raw[HEADER.size + 5] ^= 0xFF
    elif damage == "bad_magic":
        raw[0:1] = b"X"
    else:
        struct.pack_into("<d", raw, 24, 0.5)
    p.write_bytes(bytes(raw))
    again = gram_matrix(R2, 0.25, 2, cache=cache).entries
    assert cache.evictions == 1
    assert np.array_equal(again, good)
    assert gram_matrix(R2, 0.25, 2, cache=cache).entries.tobytes() == good.tobytes()
    assert cache.hits == 1


def test_no_temp_files_left(tmp_path):
    cache = GramCache(tmp_path)
    for k in (1, 2, 3):
        gram_matrix(R2, 0.2, k, cache=cache)
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]
