"""State-vector simulation on log-polar packed amplitudes.

Lossy gates (H, U3, phase rotations that are not whole phase steps) decode the
amplitudes they touch, do the update in double precision and re-encode.
Permutation gates and phase rotations by whole multiples of ``2 pi / 2**A``
work on the packed words directly and are bit-exact.

A :class:`ReferenceState` runs the same gates in plain ``complex128`` and is the
yardstick for measured errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .codec import (
    DETERMINISTIC,
    FormatSpec,
    RoundingMode,
    dequantize,
    is_underflow,
    load_words,
    quantize,
    save_words,
    word_dtype,
)
from .error_model import exact_phase_steps, gate_phase, gate_weight
from .gates import Gate

__all__ = [
    "PackedState",
    "ReferenceState",
    "RunReport",
    "SimulationError",
    "distance_squared",
    "norm_squared",
    "run",
    "stable_sum",
]

NORM_TOLERANCE = 1e-6


class SimulationError(ValueError):
    pass


def stable_sum(values) -> float:
    """Correctly rounded sum; independent of ordering and partitioning."""
    return math.fsum(np.asarray(values, dtype=np.float64).ravel().tolist())


def norm_squared_of(amplitudes) -> float:
    a = np.asarray(amplitudes)
    return stable_sum(a.real**2 + a.imag**2)


def _pair_indices(q: int, target: int, controls: tuple[int, ...] = ()):
    """Indices with the target bit 0 (and every control bit 1), plus their partners."""
    fixed = sorted((target,) + tuple(controls))
    i = np.arange(1 << (q - len(fixed)), dtype=np.int64)
    for pos in fixed:
        i = ((i >> pos) << (pos + 1)) | (i & ((1 << pos) - 1))
    for c in controls:
        i |= 1 << c
    return i, i | (1 << target)


def _swap_indices(q: int, p: int, r: int, controls: tuple[int, ...] = ()):
    """Indices with bit p = 1, bit r = 0 and their partners with the bits exchanged."""
    i0, _ = _pair_indices(q, r, controls + (p,))
    return i0, (i0 & ~(1 << p)) | (1 << r)


def _check_qubits(gate: Gate, q: int) -> None:
    bad = [x for x in gate.qubits if x >= q]
    if bad:
        raise SimulationError(f"qubit index {bad[0]} out of range for a {q}-qubit state")


class ReferenceState:
    """Double-precision state vector."""

    def __init__(self, amplitudes):
        amps = np.array(amplitudes, dtype=np.complex128)
        n = amps.shape[0]
        if amps.ndim != 1 or n < 2 or n & (n - 1):
            raise SimulationError("state length must be a power of two >= 2")
        self.q = n.bit_length() - 1
        self.amplitudes = amps

    @classmethod
    def basis(cls, q: int, index: int = 0) -> "ReferenceState":
        amps = np.zeros(1 << q, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    def copy(self) -> "ReferenceState":
        return ReferenceState(self.amplitudes)

    def norm_squared(self) -> float:
        return norm_squared_of(self.amplitudes)

    def normalize(self) -> None:
        self.amplitudes /= math.sqrt(self.norm_squared())

    def apply(self, gate: Gate) -> None:
        _check_qubits(gate, self.q)
        amps = self.amplitudes
        kind = gate.kind
        if kind == "SWAP":
            i, j = _swap_indices(self.q, *gate.targets, gate.controls)
            amps[i], amps[j] = amps[j], amps[i].copy()
            return
        i0, i1 = _pair_indices(self.q, gate.targets[0], gate.controls)
        if kind in ("X", "CNOT", "TOFF"):
            amps[i0], amps[i1] = amps[i1], amps[i0].copy()
        elif kind in ("Z", "CZ"):
            amps[i1] = -amps[i1]
        elif kind in ("CP", "ROOTZ"):
            amps[i1] *= np.exp(1j * gate.phase)
        else:
            m = gate.matrix()
            a0, a1 = amps[i0], amps[i1]
            amps[i0] = m[0, 0] * a0 + m[0, 1] * a1
            amps[i1] = m[1, 0] * a0 + m[1, 1] * a1

    def run(self, circuit: Iterable[Gate]) -> "ReferenceState":
        for g in circuit:
            self.apply(g)
        return self


class PackedState:
    """``2**q`` amplitudes stored as packed log-polar words.

    ``mode.modulus_jitter`` applies stochastic modulus rounding on every lossy
    re-encode; ``mode.phase_jitter`` applies stochastic phase rounding after
    phase rotations the format cannot represent exactly.  Random draws come
    from a counter-based stream keyed by ``(seed, pass number)`` and are laid
    out by amplitude index, so results do not depend on how work is split.
    """

    def __init__(
        self,
        q: int,
        spec: FormatSpec,
        words,
        mode: RoundingMode = DETERMINISTIC,
        seed: int = 0,
    ):
        words = np.asarray(words)
        if words.shape != (1 << q,):
            raise SimulationError(f"expected {1 << q} words, got shape {words.shape}")
        self.q = q
        self.spec = spec
        self.words = words.astype(word_dtype(spec))
        self.mode = mode
        self.seed = int(seed)
        self.effective_g = 0.0
        self._passes = 0

    # -- construction ----------------------------------------------------------

    @classmethod
    def from_amplitudes(cls, amplitudes, spec, mode=DETERMINISTIC, seed=0) -> "PackedState":
        """Encode a normalized state (one conversion)."""
        amps = np.asarray(amplitudes, dtype=np.complex128)
        n = amps.shape[0]
        if amps.ndim != 1 or n < 2 or n & (n - 1):
            raise SimulationError("state length must be a power of two >= 2")
        nrm = norm_squared_of(amps)
        if abs(nrm - 1.0) > NORM_TOLERANCE:
            raise SimulationError(f"initial state is not normalized (norm^2 = {nrm!r})")
        state = cls(n.bit_length() - 1, spec, np.zeros(n, dtype=np.uint64), mode, seed)
        state.words = quantize(amps, spec, mode, state._rng() if not mode.deterministic else None, clamp=True)
        return state

    @classmethod
    def basis(cls, q, spec, index=0, mode=DETERMINISTIC, seed=0) -> "PackedState":
        words = np.full(1 << q, spec.underflow_word, dtype=word_dtype(spec))
        words[index] = 0
        return cls(q, spec, words, mode, seed)

    def copy(self) -> "PackedState":
        other = PackedState(self.q, self.spec, self.words.copy(), self.mode, self.seed)
        other.effective_g = self.effective_g
        other._passes = self._passes
        return other

    # -- helpers ---------------------------------------------------------------

    def _rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence([self.seed, self._passes])
        self._passes += 1
        return np.random.Generator(np.random.Philox(ss))

    def _encode(self, values, mode: RoundingMode):
        rng = None if mode.deterministic else self._rng()
        return quantize(values, self.spec, mode, rng, clamp=True)

    def _add_phase_steps(self, idx, steps: int) -> None:
        if steps % (1 << self.spec.A) == 0:
            return
        spec = self.spec
        dt = self.words.dtype.type
        w = self.words[idx]
        under = is_underflow(w, spec)
        amask = dt((1 << spec.A) - 1)
        a = (w & amask).astype(np.int64)
        a = (a + steps) & ((1 << spec.A) - 1)
        new = (w & ~amask) | a.astype(self.words.dtype)
        uw = dt(spec.underflow_word)
        new = np.where(new == uw, uw - dt(1), new)
        self.words[idx] = np.where(under, w, new)

    def amplitudes(self) -> np.ndarray:
        return dequantize(self.words, self.spec)

    # -- gates -----------------------------------------------------------------

    def apply(self, gate: Gate) -> "PackedState":
        """Apply one gate in place and add its lossy weight to ``effective_g``."""
        _check_qubits(gate, self.q)
        spec = self.spec
        kind = gate.kind
        words = self.words
        if kind == "SWAP":
            i, j = _swap_indices(self.q, *gate.targets, gate.controls)
            words[i], words[j] = words[j], words[i].copy()
        else:
            i0, i1 = _pair_indices(self.q, gate.targets[0], gate.controls)
            quarter = 1 << (spec.A - 2)
            if kind in ("X", "CNOT", "TOFF"):
                words[i0], words[i1] = words[i1], words[i0].copy()
            elif kind == "Y":
                w0 = words[i0].copy()
                words[i0] = words[i1]
                words[i1] = w0
                self._add_phase_steps(i0, 3 * quarter)  # -i * old |1>
                self._add_phase_steps(i1, quarter)  # +i * old |0>
            elif kind in ("Z", "CZ"):
                self._add_phase_steps(i1, 2 * quarter)
            elif kind in ("CP", "ROOTZ"):
                steps = exact_phase_steps(gate_phase(gate), spec.A)
                if steps is not None:
                    self._add_phase_steps(i1, steps)
                else:
                    vals = dequantize(words[i1], spec) * np.exp(1j * gate.phase)
                    words[i1] = self._encode(vals, self.mode)
            else:
                m = gate.matrix()
                a0 = dequantize(words[i0], spec)
                a1 = dequantize(words[i1], spec)
                mode = RoundingMode(modulus_jitter=self.mode.modulus_jitter)
                new0 = m[0, 0] * a0 + m[0, 1] * a1
                new1 = m[1, 0] * a0 + m[1, 1] * a1
                words[i0] = self._encode(new0, mode)
                words[i1] = self._encode(new1, mode)
        self.effective_g += gate_weight(gate, spec)
        return self

    def run(self, circuit: Iterable[Gate]) -> "PackedState":
        for g in circuit:
            self.apply(g)
        return self

    # -- normalization ---------------------------------------------------------

    def norm_squared(self) -> float:
        return norm_squared_of(self.amplitudes())

    def renormalize(self) -> "PackedState":
        """Divide by the norm, re-encoding with stochastic modulus rounding.

        Phases are re-encoded deterministically, which leaves them unchanged.
        """
        nrm = self.norm_squared()
        if nrm == 0.0:
            raise SimulationError("cannot renormalize a state with zero norm")
        live = ~is_underflow(self.words, self.spec)
        vals = dequantize(self.words[live], self.spec) / math.sqrt(nrm)
        self.words[live] = self._encode(vals, RoundingMode(modulus_jitter=True))
        return self

    def maybe_renormalize(self, threshold: float | None = None) -> bool:
        """Renormalize when ``|norm^2 - 1|`` exceeds ``threshold`` (default ``2**-F``)."""
        eta = self.spec.log_step if threshold is None else threshold
        if eta <= 0:
            raise ValueError("threshold must be > 0")
        if abs(self.norm_squared() - 1.0) > eta:
            self.renormalize()
            return True
        return False

    def phase_jitter_pass(self, affected=None) -> "PackedState":
        """Re-round phases of the selected amplitudes with a uniform sub-step rotation.

        ``affected`` is a boolean mask, an index array, or a callable taking the
        index array and returning a mask; ``None`` selects every amplitude.
        """
        n = 1 << self.q
        if affected is None:
            idx = np.arange(n)
        elif callable(affected):
            idx = np.flatnonzero(np.asarray(affected(np.arange(n)), dtype=bool))
        else:
            sel = np.asarray(affected)
            idx = np.flatnonzero(sel) if sel.dtype == bool else sel.astype(np.int64)
        vals = dequantize(self.words[idx], self.spec)
        self.words[idx] = self._encode(vals, RoundingMode(phase_jitter=True))
        return self

    # -- persistence -----------------------------------------------------------

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            save_words(fh, self.words, self.spec, self.q)

    @classmethod
    def load(cls, path, mode=DETERMINISTIC, seed=0) -> "PackedState":
        with open(path, "rb") as fh:
            words, spec, q = load_words(fh)
        return cls(q, spec, words, mode, seed)


def norm_squared(state) -> float:
    return state.norm_squared()


def distance_squared(state: PackedState, reference) -> float:
    """``||decoded - reference||**2`` with exactly rounded summation."""
    ref = reference.amplitudes if isinstance(reference, ReferenceState) else np.asarray(reference)
    if ref.shape != (1 << state.q,):
        raise SimulationError(f"dimension mismatch: {1 << state.q} vs {ref.shape[0]}")
    return norm_squared_of(state.amplitudes() - ref)


@dataclass
class RunReport:
    effective_g: list[float] = field(default_factory=list)
    norm_sq: list[float] = field(default_factory=list)
    sigma_sq: list[float] = field(default_factory=list)
    renormalized_at: list[int] = field(default_factory=list)

    @property
    def final_effective_g(self) -> float:
        return self.effective_g[-1] if self.effective_g else 0.0

    @property
    def final_sigma_sq(self) -> float | None:
        return self.sigma_sq[-1] if self.sigma_sq else None


def run(
    state: PackedState,
    circuit: Iterable[Gate],
    reference: ReferenceState | None = None,
    *,
    renormalize: bool = False,
    norm_threshold: float | None = None,
    trace: bool = True,
) -> RunReport:
    """Apply ``circuit`` to ``state`` (and ``reference``, if given) gate by gate.

    Index 0 of every trace is the state before the first gate.  With
    ``renormalize=True`` :meth:`PackedState.maybe_renormalize` runs after each
    gate at ``norm_threshold``.
    """
    report = RunReport()

    def record():
        if not trace:
            return
        report.effective_g.append(state.effective_g)
        report.norm_sq.append(state.norm_squared())
        if reference is not None:
            report.sigma_sq.append(distance_squared(state, reference))

    if reference is not None and reference.q != state.q:
        raise SimulationError("reference and packed state have different qubit counts")
    record()
    for n, gate in enumerate(circuit, 1):
        state.apply(gate)
        if reference is not None:
            reference.apply(gate)
        if renormalize and state.maybe_renormalize(norm_threshold):
            report.renormalized_at.append(n)
        record()
    if not trace:
        report.effective_g.append(state.effective_g)
        if reference is not None:
            report.sigma_sq.append(distance_squared(state, reference))
    return report
