"""Log-polar storage format for complex amplitudes.

An amplitude ``c`` is stored as three unsigned integer fields ``(e, f, a)`` of
``E``, ``F`` and ``A`` bits::

    c ~ exp(-(e + f / 2**F) + 2j*pi * a / 2**A)

so ``e`` and ``f`` together hold the negated natural log of the modulus on a
grid of step ``2**-F`` and ``a`` holds the phase on a grid of step
``2*pi / 2**A``.  The all-ones word is reserved for underflow and decodes to 0.

All arithmetic happens in double precision; this module only converts between
``complex128`` and packed integer words.  The array functions (``quantize``,
``dequantize``) are the workhorses, the scalar ``encode``/``decode`` pair is a
convenience on top of them.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import BinaryIO, NamedTuple

import numpy as np

__all__ = [
    "CodecError",
    "InvalidAmplitudeError",
    "AmplitudeRangeError",
    "FormatSpec",
    "PackedTriplet",
    "RoundingMode",
    "DETERMINISTIC",
    "ErrorSample",
    "min_modulus",
    "quantize",
    "dequantize",
    "encode",
    "decode",
    "round_trip_error",
    "round_trip_errors",
    "pack",
    "unpack",
    "is_underflow",
    "word_dtype",
    "save_words",
    "load_words",
    "MAGIC",
]

TWO_PI = 2.0 * math.pi
# Tolerated modulus overshoot from upstream double arithmetic.
OVERSHOOT = 2.0**-40
MAGIC = b"LQS1"


class CodecError(ValueError):
    """Base class for conversion errors."""


class InvalidAmplitudeError(CodecError):
    """Raised for NaN or infinite amplitudes."""


class AmplitudeRangeError(CodecError):
    """Raised when an amplitude modulus exceeds 1 by more than ``2**-40``."""


@dataclass(frozen=True)
class FormatSpec:
    """Bit widths ``(E, F, A)`` of the integer exponent, fraction and phase."""

    E: int
    F: int
    A: int

    def __post_init__(self):
        for name in ("E", "F", "A"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {value!r}")
        if not 1 <= self.E <= 8:
            raise ValueError(f"E must be in [1, 8], got {self.E}")
        if self.F < 0:
            raise ValueError(f"F must be >= 0, got {self.F}")
        if self.A < 2:
            raise ValueError(f"A must be >= 2, got {self.A}")
        if self.bits > 64:
            raise ValueError(f"E+F+A must be <= 64, got {self.bits}")

    @classmethod
    def parse(cls, text: str) -> "FormatSpec":
        """Build from ``"E,F,A"``."""
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 3:
            raise ValueError(f"expected 'E,F,A', got {text!r}")
        return cls(*(int(p) for p in parts))

    @property
    def bits(self) -> int:
        return self.E + self.F + self.A

    @property
    def mu(self) -> float:
        return min_modulus(self)

    @property
    def log_step(self) -> float:
        """Spacing of the log-modulus grid."""
        return 2.0**-self.F

    @property
    def phase_step(self) -> float:
        """Spacing of the phase grid in radians."""
        return TWO_PI * 2.0**-self.A

    @property
    def log_halfwidth(self) -> float:
        return 2.0 ** (-self.F - 1)

    @property
    def phase_halfwidth(self) -> float:
        return math.pi * 2.0**-self.A

    @property
    def max_log_index(self) -> int:
        """Largest value of ``e * 2**F + f``."""
        return (1 << (self.E + self.F)) - 1

    @property
    def underflow_word(self) -> int:
        return (1 << self.bits) - 1

    @property
    def nbytes(self) -> int:
        """Bytes per word in the file format."""
        return (self.bits + 7) // 8

    def __str__(self):
        return f"{self.E},{self.F},{self.A}"


class PackedTriplet(NamedTuple):
    e: int
    f: int
    a: int


@dataclass(frozen=True)
class RoundingMode:
    """Which stochastic jitters to apply before nearest-integer rounding.

    ``modulus_jitter`` multiplies by ``exp(delta)`` with ``delta`` uniform on
    one log-grid step; ``phase_jitter`` rotates by a uniform angle spanning one
    phase-grid step.  Both off is plain deterministic rounding.
    """

    modulus_jitter: bool = False
    phase_jitter: bool = False

    @property
    def deterministic(self) -> bool:
        return not (self.modulus_jitter or self.phase_jitter)


DETERMINISTIC = RoundingMode()


class ErrorSample(NamedTuple):
    eps: float
    gamma: float


def min_modulus(spec: FormatSpec) -> float:
    """Smallest nonzero modulus ``exp(-2**E + 2**-F)``."""
    return math.exp(-(2.0**spec.E) + 2.0**-spec.F)


def word_dtype(spec: FormatSpec) -> np.dtype:
    """Smallest unsigned numpy dtype holding one word."""
    for dt in (np.uint8, np.uint16, np.uint32, np.uint64):
        if spec.bits <= np.dtype(dt).itemsize * 8:
            return np.dtype(dt)
    raise AssertionError("unreachable: bits <= 64")


def _round_half_away(x: np.ndarray) -> np.ndarray:
    # inputs are non-negative here, so half-away == floor(x + 1/2)
    return np.floor(x + 0.5)


def pack(e, f, a, spec: FormatSpec):
    """Combine fields into words laid out ``e|f|a`` from the most significant bit."""
    e = np.asarray(e, dtype=np.uint64)
    f = np.asarray(f, dtype=np.uint64)
    a = np.asarray(a, dtype=np.uint64)
    words = (e << np.uint64(spec.F + spec.A)) | (f << np.uint64(spec.A)) | a
    return words.astype(word_dtype(spec))


def unpack(words, spec: FormatSpec):
    """Split words into ``(e, f, a)`` uint64 arrays."""
    w = np.asarray(words).astype(np.uint64)
    a = w & np.uint64((1 << spec.A) - 1)
    f = (w >> np.uint64(spec.A)) & np.uint64((1 << spec.F) - 1)
    e = w >> np.uint64(spec.F + spec.A)
    return e, f, a


def is_underflow(words, spec: FormatSpec) -> np.ndarray:
    return np.asarray(words) == np.asarray(spec.underflow_word).astype(word_dtype(spec))


def quantize(
    values,
    spec: FormatSpec,
    mode: RoundingMode = DETERMINISTIC,
    rng: np.random.Generator | None = None,
    *,
    clamp: bool = False,
) -> np.ndarray:
    """Convert complex amplitudes to packed words.

    With ``clamp=False`` a modulus above ``1 + 2**-40`` raises
    :class:`AmplitudeRangeError`; with ``clamp=True`` it is silently mapped to
    modulus 1 (used by the simulator, where norm drift is expected).
    """
    c = np.asarray(values, dtype=np.complex128)
    if not np.all(np.isfinite(c)):
        raise InvalidAmplitudeError("amplitudes must be finite")
    r = np.abs(c)
    if not clamp and np.any(r > 1.0 + OVERSHOOT):
        worst = float(r.max())
        raise AmplitudeRangeError(f"modulus {worst!r} exceeds 1 + 2**-40")
    if not mode.deterministic and rng is None:
        raise ValueError("a random generator is required for stochastic rounding")

    scale = float(1 << spec.F)
    with np.errstate(divide="ignore"):
        neglog = -np.log(r)
    if mode.modulus_jitter:
        h = spec.log_halfwidth
        neglog = neglog - rng.uniform(-h, h, size=c.shape)
    scaled = np.maximum(neglog * scale, 0.0)
    nmax = spec.max_log_index
    # ulp guard so decode(mu) is not classed as underflow
    under = ~(scaled <= nmax * (1.0 + 8.0 * np.finfo(float).eps))
    n = np.minimum(_round_half_away(np.where(under, 0.0, scaled)), nmax).astype(np.uint64)

    theta = np.mod(np.angle(c), TWO_PI)
    if mode.phase_jitter:
        h = spec.phase_halfwidth
        theta = theta + rng.uniform(-h, h, size=c.shape)
        theta = np.mod(theta, TWO_PI)
    a = _round_half_away(theta * ((1 << spec.A) / TWO_PI)).astype(np.uint64)
    a &= np.uint64((1 << spec.A) - 1)

    e = n >> np.uint64(spec.F)
    f = n & np.uint64((1 << spec.F) - 1)
    words = pack(e, f, a, spec)
    uw = word_dtype(spec).type(spec.underflow_word)
    # a legitimate amplitude that rounds onto the reserved word moves down one phase step
    words = np.where(words == uw, uw - word_dtype(spec).type(1), words)
    words = np.where(under, uw, words)
    return words.astype(word_dtype(spec))


def dequantize(words, spec: FormatSpec) -> np.ndarray:
    """Decode packed words to ``complex128``; the underflow word gives exactly 0."""
    w = np.asarray(words)
    e, f, a = unpack(w, spec)
    logmod = -(e.astype(np.float64) + f.astype(np.float64) / float(1 << spec.F))
    phase = a.astype(np.float64) * (TWO_PI / float(1 << spec.A))
    out = np.exp(logmod) * (np.cos(phase) + 1j * np.sin(phase))
    return np.where(is_underflow(w, spec), 0.0 + 0.0j, out)


def _check_triplet(t, spec: FormatSpec) -> PackedTriplet:
    e, f, a = (int(x) for x in t)
    if not (0 <= e < 1 << spec.E and 0 <= f < 1 << spec.F and 0 <= a < 1 << spec.A):
        raise ValueError(f"triplet {tuple(t)} is out of range for spec ({spec})")
    return PackedTriplet(e, f, a)


def encode(
    c: complex,
    spec: FormatSpec,
    mode: RoundingMode = DETERMINISTIC,
    rng: np.random.Generator | None = None,
) -> PackedTriplet:
    """Encode one amplitude.

    >>> encode(1 + 0j, FormatSpec(4, 5, 7))
    PackedTriplet(e=0, f=0, a=0)
    """
    word = quantize(np.array([c]), spec, mode, rng)[0]
    e, f, a = unpack(word, spec)
    return PackedTriplet(int(e), int(f), int(a))


def decode(t, spec: FormatSpec) -> complex:
    t = _check_triplet(t, spec)
    return complex(dequantize(pack(t.e, t.f, t.a, spec), spec))


def round_trip_errors(c, spec, mode=DETERMINISTIC, rng=None):
    """Vectorised log-modulus and phase errors of a conversion.

    Returns ``(eps, gamma, underflow)``; entries flagged as underflow carry NaN.
    ``gamma`` is wrapped to ``[-pi, pi)``.
    """
    c = np.asarray(c, dtype=np.complex128)
    words = quantize(c, spec, mode, rng)
    under = is_underflow(words, spec)
    e, f, a = unpack(words, spec)
    logt = -(e.astype(np.float64) + f.astype(np.float64) / float(1 << spec.F))
    phaset = a.astype(np.float64) * (TWO_PI / float(1 << spec.A))
    with np.errstate(divide="ignore"):
        logc = np.log(np.abs(c))
    eps = logt - np.minimum(logc, 0.0)
    gamma = np.mod(phaset - np.angle(c) + math.pi, TWO_PI) - math.pi
    eps = np.where(under, np.nan, eps)
    gamma = np.where(under, np.nan, gamma)
    return eps, gamma, under


def round_trip_error(c: complex, spec, mode=DETERMINISTIC, rng=None) -> ErrorSample | None:
    """Conversion error of one amplitude, or ``None`` if it underflows."""
    eps, gamma, under = round_trip_errors(np.array([c]), spec, mode, rng)
    if under[0]:
        return None
    return ErrorSample(float(eps[0]), float(gamma[0]))


# -- file format -------------------------------------------------------------

_HEADER = struct.Struct("<4sBBBB")


def save_words(fh: BinaryIO, words, spec: FormatSpec, q: int) -> None:
    """Write ``LQS1`` header then ``2**q`` little-endian words of ``ceil(B/8)`` bytes."""
    w = np.asarray(words, dtype=np.uint64)
    if w.shape != (1 << q,):
        raise ValueError(f"expected {1 << q} words, got shape {w.shape}")
    fh.write(_HEADER.pack(MAGIC, q, spec.E, spec.F, spec.A))
    raw = w.astype("<u8").view(np.uint8).reshape(-1, 8)[:, : spec.nbytes]
    fh.write(np.ascontiguousarray(raw).tobytes())


def load_words(fh: BinaryIO):
    """Read a file written by :func:`save_words`; returns ``(words, spec, q)``."""
    head = fh.read(_HEADER.size)
    if len(head) != _HEADER.size:
        raise CodecError("truncated header")
    magic, q, E, F, A = _HEADER.unpack(head)
    if magic != MAGIC:
        raise CodecError(f"bad magic {magic!r}")
    spec = FormatSpec(E, F, A)
    n = 1 << q
    body = fh.read(n * spec.nbytes)
    if len(body) != n * spec.nbytes:
        raise CodecError("truncated word array")
    raw = np.zeros((n, 8), dtype=np.uint8)
    raw[:, : spec.nbytes] = np.frombuffer(body, dtype=np.uint8).reshape(n, spec.nbytes)
    words = raw.reshape(-1).view("<u8").astype(word_dtype(spec))
    return words, spec, q
