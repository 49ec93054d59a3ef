"""Counter-based random number streams.

All randomness in the toolkit flows from a single master seed.  Streams are
derived with the Philox counter-based generator keyed by (master seed, stream
id, item id), so results do not depend on execution order or worker count.
"""

import hashlib

import numpy as np


def _mix(*parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(str(p).encode())
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "little")


def stream(master_seed: int, *ids) -> np.random.Generator:
    """Independent generator for the sub-stream identified by ``ids``."""
    key = np.array([np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF), np.uint64(_mix(*ids))])
    return np.random.Generator(np.random.Philox(key=key))
