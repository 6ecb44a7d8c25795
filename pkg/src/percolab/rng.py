"""Counter-based random streams.

Every random decision in the package is a pure function of a 64-bit key and
an integer counter, so a placement's uniform variate does not depend on the
order in which a traversal happens to ask for it. Keys for individual
realizations are derived from ``(master_seed, realization_index)``; serial,
threaded and lazily evaluated runs therefore see identical configurations.

The mixing function is the SplitMix64 finalizer applied twice with distinct
offsets, which passes the usual avalanche tests and is cheap inside numba.
"""

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_OFFSET = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_MASK24 = np.uint64(0xFFFFFF)
_S24 = np.uint64(24)
_S48 = np.uint64(48)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

U64_MASK = (1 << 64) - 1


@nb.njit(nb.uint64(nb.uint64), cache=True, nogil=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(nb.uint64(nb.uint64, nb.uint64), cache=True, nogil=True)
def stream_key(master_seed, index):
    """Key of stream ``index`` under ``master_seed``."""
    return mix64(mix64(master_seed + _GOLDEN) ^ (index * _GOLDEN + _OFFSET))


@nb.njit(nb.float64(nb.uint64, nb.int64, nb.int64, nb.int64), cache=True, nogil=True)
def placement_uniform(key, x, y, orientation):
    """Uniform variate in [0, 1) attached to placement ``(x, y, orientation)``.

    Coordinates must lie in ``[0, 2**24)``.
    """
    counter = (
        (np.uint64(x) & _MASK24)
        | ((np.uint64(y) & _MASK24) << _S24)
        | (np.uint64(orientation) << _S48)
    )
    h = mix64(key ^ mix64(counter + _GOLDEN))
    return float(h >> _S11) * _INV53


def as_seed(seed) -> np.uint64:
    """Coerce a Python integer (possibly negative or > 2**64) to a uint64 seed."""
    return np.uint64(int(seed) & U64_MASK)


def realization_key(master_seed, index) -> np.uint64:
    return stream_key(as_seed(master_seed), as_seed(index))


def derive_seed(master_seed, *path) -> int:
    """Child seed for a labelled sub-run (bisection step, grid point, ...)."""
    s = as_seed(master_seed)
    for label in path:
        s = stream_key(s, as_seed(label))
    return int(s)
