"""Deterministic random substreams.

Every random consumer draws from a generator derived from the triple
``(seed, module, replica)``: the UTF-8 string ``f"{seed}:{module}:{replica}"``
is hashed with SHA-256 and the first 16 bytes (big endian) seed a
:class:`numpy.random.SeedSequence`, which drives a PCG64 generator. Results
are therefore independent of worker count and scheduling order.
"""
import hashlib

import numpy as np


def substream_entropy(seed, module, replica=0):
    digest = hashlib.sha256(f"{int(seed)}:{module}:{int(replica)}".encode()).digest()
    return int.from_bytes(digest[:16], "big")


def substream(seed, module, replica=0):
    """Generator for one (seed, module, replica) substream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(substream_entropy(seed, module, replica))))
