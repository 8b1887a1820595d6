"""On-disk cache for Gram matrices.

File layout (little endian)::

    magic   8 bytes  b"BRGRAM\\x00\\x01"
    r       int64
    k       int64
    t       float64 (IEEE-754)
    dim     int64
    data    dim * dim float64, row-major
    crc32   uint32 of the data block

Entries are keyed by (r, epsilon, t, k); floats enter the file name through
``float.hex`` so distinct parameters never collide.  A file whose header,
size or checksum does not match is deleted and reported as a miss.  Writes go
to a temporary file in the same directory followed by an atomic rename.
"""

from __future__ import annotations

import logging
import os
import struct
import tempfile
import zlib
from pathlib import Path

import numpy as np

from .words import GroupContext

log = logging.getLogger(__name__)

MAGIC = b"BRGRAM\x00\x01"
HEADER = struct.Struct("<8sqqdq")
TRAILER = struct.Struct("<I")


class GramCache:
    def __init__(self, directory):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0
        self.evictions = 0

    def path(self, ctx: GroupContext, t: float, k: int) -> Path:
        name = f"gram_r{ctx.rank}_e{float(ctx.epsilon).hex()}_t{float(t).hex()}_k{k}.bin"
        return self.dir / name

    def load(self, ctx: GroupContext, t: float, k: int):
        p = self.path(ctx, t, k)
        try:
            raw = p.read_bytes()
        except FileNotFoundError:
            self.misses += 1
            return None
        dim = ctx.level_size(k)
        expected = HEADER.size + 8 * dim * dim + TRAILER.size
        ok = len(raw) == expected
        if ok:
            magic, r, kk, tt, d = HEADER.unpack_from(raw, 0)
            ok = magic == MAGIC and r == ctx.rank and kk == k and tt == float(t) and d == dim
        if ok:
            data = raw[HEADER.size: HEADER.size + 8 * dim * dim]
            (crc,) = TRAILER.unpack_from(raw, HEADER.size + 8 * dim * dim)
            ok = crc == zlib.crc32(data)
        if not ok:
            log.warning("evicting corrupt cache entry %s", p)
            p.unlink()
            self.evictions += 1
            self.misses += 1
            return None
        self.hits += 1
        return np.frombuffer(data, dtype="<f8").reshape(dim, dim).copy()

    def store(self, ctx: GroupContext, t: float, k: int, G: np.ndarray):
        G = np.ascontiguousarray(G, dtype="<f8")
        dim = G.shape[0]
        data = G.tobytes()
        blob = HEADER.pack(MAGIC, ctx.rank, k, float(t), dim) + data + TRAILER.pack(zlib.crc32(data))
        p = self.path(ctx, t, k)
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=self.dir)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(blob)
            os.replace(tmp, p)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return p
