"""Counter-based random streams.

Every random draw in the package comes from a Philox generator whose key is
derived from ``(seed, tag)`` and whose counter holds up to two integers
(typically a step index and a replica index).  Streams therefore never
depend on the order in which work is scheduled.
"""

import hashlib

import numpy as np


def stream_key(seed, tag):
    """Return the two-word Philox key for ``(seed, tag)``."""
    digest = hashlib.blake2b(f"{int(seed)}/{tag}".encode(), digest_size=16).digest()
    return np.frombuffer(digest, dtype=np.uint64).copy()


def generator(seed, tag, *counter):
    """Generator for the stream ``(seed, tag)`` positioned at ``counter``.

    The counter words occupy the two high words of the Philox counter, so
    draws made from one generator never run into the block of another.
    """
    if len(counter) > 2:
        raise ValueError("at most two counter words are supported")
    words = [0, 0] + [int(c) for c in counter] + [0] * (2 - len(counter))
    bitgen = np.random.Philox(key=stream_key(seed, tag), counter=np.array(words, dtype=np.uint64))
    return np.random.Generator(bitgen)
