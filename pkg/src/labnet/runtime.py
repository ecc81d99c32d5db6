"""Process-level runtime tuning for CPU training.

Torch on CPU frees large activation buffers back to the OS on every step,
which makes training page-fault bound on small machines. Raising the glibc
mmap and trim thresholds keeps those blocks on the heap so their pages stay
warm across steps. No-op on platforms without glibc mallopt.
"""

from __future__ import annotations

import ctypes

_M_TRIM_THRESHOLD = -1
_M_MMAP_THRESHOLD = -3

_tuned = False


def tune_allocator() -> bool:
    """Idempotent; returns True when the tuning could be applied."""
    global _tuned
    if _tuned:
        return True
    try:
        libc = ctypes.CDLL("libc.so.6")
        libc.mallopt(_M_MMAP_THRESHOLD, 1 << 30)
        libc.mallopt(_M_TRIM_THRESHOLD, 1 << 30)
    except (OSError, AttributeError):
        return False
    _tuned = True
    return True
