"""Input checks shared by the estimator API.

``sklearn.utils.check_array`` refuses complex input, hence these.
"""

from __future__ import annotations

import numpy as np

from .codec import FormatSpec, InvalidAmplitudeError


def check_amplitudes(X, *, ensure_2d: bool = True, normalized: bool = False, atol: float = 1e-6) -> np.ndarray:
    """Return ``X`` as a ``complex128`` array of shape ``(n_states, 2**q)``.

    A 1-d input is one state.  With ``normalized=True`` each row's squared norm
    must be within ``atol`` of 1.
    """
    arr = np.asarray(X)
    if arr.dtype == object:
        raise TypeError("amplitudes must be numeric")
    arr = arr.astype(np.complex128, copy=False)
    if arr.ndim == 1 and ensure_2d:
        arr = arr[np.newaxis, :]
    if arr.ndim not in (1, 2):
        raise ValueError(f"expected a 1-d or 2-d array, got {arr.ndim} dimensions")
    n = arr.shape[-1]
    if n < 2 or n & (n - 1):
        raise ValueError(f"state length must be a power of two >= 2, got {n}")
    if not np.all(np.isfinite(arr)):
        raise InvalidAmplitudeError("amplitudes must be finite")
    if normalized:
        norms = np.sum(np.abs(arr) ** 2, axis=-1)
        bad = np.abs(norms - 1.0) > atol
        if np.any(bad):
            raise ValueError(f"state not normalized: norm^2 = {float(np.atleast_1d(norms)[np.argmax(bad)])!r}")
    return arr


def n_qubits_of(X: np.ndarray) -> int:
    return int(X.shape[-1]).bit_length() - 1


def check_spec(spec) -> FormatSpec:
    """Accept a FormatSpec, an ``(E, F, A)`` sequence or an ``"E,F,A"`` string."""
    if isinstance(spec, FormatSpec):
        return spec
    if isinstance(spec, str):
        return FormatSpec.parse(spec)
    E, F, A = spec
    return FormatSpec(int(E), int(F), int(A))


def check_words(W, spec: FormatSpec) -> np.ndarray:
    arr = np.asarray(W)
    if not np.issubdtype(arr.dtype, np.integer):
        raise TypeError(f"packed words must be integers, got {arr.dtype}")
    if np.any(arr < 0) or np.any(arr.astype(np.uint64) > np.uint64(spec.underflow_word)):
        raise ValueError(f"words out of range for a {spec.bits}-bit format")
    return arr
