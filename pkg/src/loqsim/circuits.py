"""Seeded generators for benchmark circuits and initial states."""

from __future__ import annotations

import math

import numpy as np

from .gates import Circuit, Gate

__all__ = [
    "random_signs",
    "random_cycles",
    "inverse",
    "qft",
    "aqft",
    "aqft_cutoff",
    "root_z_chain",
    "plane_wave_state",
    "random_sphere_state",
    "basis_state",
    "true_error",
]

_U3_ANGLES = (math.pi / 2, math.pi / 4, math.pi / 4)


def random_signs(seed: int, k: int) -> tuple[int, int, int]:
    """Signs for the three U3 angles of gate ``k``.

    One Philox-4x64 block with key ``seed`` at counter ``k``; bits 0, 1, 2 of
    the first output word pick the signs of theta, lambda and phi (set bit
    means negative).
    """
    word = int(np.random.Philox(counter=k, key=seed).random_raw())
    return tuple(-1 if (word >> b) & 1 else 1 for b in range(3))


def random_cycles(q: int, C: int, seed: int) -> Circuit:
    """``C`` cycles of U3 rotations with random signs chained by CNOTs.

    Cycle ``i`` visits qubits ``r = 0..q-1`` in order, applying
    ``U3(r, +-pi/2, +-pi/4, +-pi/4)`` with signs from gate number ``q*i + r``,
    then ``CNOT(r, (r+1) mod q)``.
    """
    if q < 2:
        raise ValueError("random cycles need at least two qubits")
    if C < 0:
        raise ValueError("cycle count must be >= 0")
    circ = Circuit(q)
    for i in range(C):
        for r in range(q):
            s = random_signs(seed, q * i + r)
            circ.append(Gate.u3(r, *(sg * ang for sg, ang in zip(s, _U3_ANGLES))))
            circ.append(Gate.cnot(r, (r + 1) % q))
    return circ


def inverse(circuit: Circuit) -> Circuit:
    """Gates in reverse order, each inverted; U3(t, l, p) becomes U3(-t, -p, -l)."""
    return circuit.inverse()


def _qft_gates(q: int, cutoff: int | None) -> Circuit:
    circ = Circuit(q)
    # the first qubit of the textbook construction is the most significant bit
    for p in range(q):
        target = q - 1 - p
        circ.append(Gate.h(target))
        for p2 in range(p + 1, q):
            m = p2 - p
            if cutoff is not None and m > cutoff:
                continue
            circ.append(Gate.cp(q - 1 - p2, target, m))
    for j in range(q // 2):
        circ.append(Gate.swap(j, q - 1 - j))
    return circ


def qft(q: int) -> Circuit:
    """Quantum Fourier transform: H and controlled phases pi/2**m, then bit reversal."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return _qft_gates(q, None)


def aqft_cutoff(q: int) -> int:
    """Largest kept phase exponent, ``floor(3 + log2 q)``."""
    return int(math.floor(3 + math.log2(q)))


def aqft(q: int) -> Circuit:
    """QFT keeping only controlled phases with ``m <= floor(3 + log2 q)``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return _qft_gates(q, aqft_cutoff(q))


def root_z_chain(q: int, W: int, count: int, qubit: int = 0) -> Circuit:
    """``count`` phase rotations by ``pi / W`` on one qubit."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return Circuit(q, [Gate.root_z(qubit, W)] * count)


def basis_state(q: int, index: int = 0) -> np.ndarray:
    if not 0 <= index < 1 << q:
        raise ValueError(f"basis index {index} out of range for {q} qubits")
    amps = np.zeros(1 << q, dtype=np.complex128)
    amps[index] = 1.0
    return amps


def plane_wave_state(q: int, x0: int) -> np.ndarray:
    """``exp(-2 pi i k x0 / N) / sqrt(N)``; the QFT maps it to ``|x0>``."""
    n = 1 << q
    if not 0 <= x0 < n:
        raise ValueError(f"x0={x0} out of range [0, {n})")
    k = np.arange(n, dtype=np.int64)
    # reduce k*x0 mod N in integers before scaling, keeps phases exact
    frac = ((k * x0) % n).astype(np.float64) / n
    return np.exp(-2j * math.pi * frac) / math.sqrt(n)


def random_sphere_state(q: int, seed: int) -> np.ndarray:
    """Gaussian real and imaginary parts, normalized: uniform on the unit sphere."""
    rng = np.random.Generator(np.random.Philox(seed))
    n = 1 << q
    amps = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return amps / math.sqrt(math.fsum((amps.real**2 + amps.imag**2).tolist()))


def true_error(final, x0: int) -> float:
    """``|c_x0 - 1|**2 + sum_{k != x0} |c_k|**2`` of a packed or plain state."""
    amps = final.amplitudes() if hasattr(final, "amplitudes") and callable(final.amplitudes) else np.asarray(final)
    if not 0 <= x0 < amps.shape[0]:
        raise ValueError(f"x0={x0} out of range")
    diff = amps.copy()
    diff[x0] -= 1.0
    return math.fsum((diff.real**2 + diff.imag**2).tolist())
