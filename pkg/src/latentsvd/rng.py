"""Deterministic pseudo-random streams for reproducible tensor generation.

Every random quantity in this package (synthetic latents, perturbations,
weight initialisation, epoch shuffles) is drawn from one pinned algorithm so
that a seed fully determines the bytes of every output artifact:

* Bit stream: SplitMix64 evaluated counter-style.  Draw ``i`` (0-based) uses
  ``state = (seed + (i + 1) * 0x9E3779B97F4A7C15) mod 2^64`` followed by the
  finaliser ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
  z *= 0x94D049BB133111EB; z ^= z >> 31``.
* Uniforms: top 53 bits, ``u = (z >> 11) * 2**-53`` giving float64 in [0, 1).
* Normals: Box-Muller on consecutive uniform pairs ``(u_{2j}, u_{2j+1})``.
  The radius term uses ``u' = ((z >> 11) + 1) * 2**-53`` (range (0, 1]) so the
  logarithm is always finite::

      n_{2j}   = sqrt(-2 ln u'_{2j}) * cos(2 pi u_{2j+1})
      n_{2j+1} = sqrt(-2 ln u'_{2j}) * sin(2 pi u_{2j+1})

Counter-based evaluation means a draw of ``count`` values starting at
``offset`` is a pure function of ``(seed, offset, count)`` and can be
vectorised without carrying generator state.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = 2.0 ** -53


def _mix(z):
    """SplitMix64 finaliser on a uint64 array (wrapping arithmetic)."""
    z = z.copy()
    with np.errstate(over="ignore"):
        z ^= z >> np.uint64(30)
        z *= _MIX1
        z ^= z >> np.uint64(27)
        z *= _MIX2
        z ^= z >> np.uint64(31)
    return z


def _raw(seed, count, offset=0):
    """uint64 outputs for counter positions offset .. offset+count-1."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    idx = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _GOLDEN
    return _mix(state)


def uniforms(seed, count, offset=0):
    """float64 uniforms in [0, 1) from the pinned SplitMix64 stream."""
    return (_raw(seed, count, offset) >> np.uint64(11)).astype(np.float64) * _U53


def standard_normals(seed, count, offset=0):
    """float64 standard normals via Box-Muller on the pinned stream.

    ``offset`` is in units of underlying uniform draws and must be even so
    pairs stay aligned across calls.
    """
    if offset % 2 != 0:
        raise ValueError("offset must be even for normal draws")
    pairs = (count + 1) // 2
    bits = _raw(seed, 2 * pairs, offset)
    u_radius = ((bits[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _U53
    u_angle = (bits[1::2] >> np.uint64(11)).astype(np.float64) * _U53
    r = np.sqrt(-2.0 * np.log(u_radius))
    theta = 2.0 * np.pi * u_angle
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:count]


def derive_seed(seed, *indices):
    """Fold integer indices into ``seed`` to name a decorrelated substream."""
    z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    for k in indices:
        with np.errstate(over="ignore"):
            z = _mix(np.asarray([(z + _GOLDEN) ^ np.uint64(int(k) & 0xFFFFFFFFFFFFFFFF)]))[0]
    return int(z)


class NormalStream:
    """Sequential normal draws from one seed, consuming uniforms pairwise.

    Each ``draw(n)`` consumes ``2 * ceil(n / 2)`` uniforms (an odd draw
    discards the second normal of its last pair), so the stream position is a
    pure function of the sequence of draw sizes.
    """

    def __init__(self, seed):
        self.seed = int(seed)
        self.offset = 0

    def draw(self, count):
        out = standard_normals(self.seed, count, self.offset)
        self.offset += 2 * ((count + 1) // 2)
        return out


def permutation(seed, n):
    """Deterministic permutation of range(n): argsort of n pinned uniforms."""
    return np.argsort(uniforms(seed, n), kind="stable")
