"""Closed-form rounding-error budget for log-polar state vectors.

Two regimes are modelled.  In the *random* regime the per-amplitude rounding
errors of a maximally entangled state are independent and unbiased, so the
squared error of ``G`` conversions adds up linearly.  In the *biased* regime
every conversion is assumed to hit its worst case with the same sign and the
error norm grows linearly in ``G`` instead.

Gate budgets use nearest-integer rounding of the continuous bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .codec import FormatSpec

__all__ = [
    "ErrorBudget",
    "underflow_loss",
    "underflow_loss_of_mass",
    "conversion_error_random",
    "conversion_error_bound",
    "cumulative_error_random",
    "cumulative_error_biased",
    "max_gates",
    "optimal_triplet",
    "optimal_A_of_F",
    "fidelity_lower_bound",
    "gate_weight",
    "effective_gate_count",
    "error_budget",
    "UnknownGateError",
    "REGIMES",
]

REGIMES = ("random", "biased")
_SMALL_X = 1e-8


class UnknownGateError(ValueError):
    pass


def _check_regime(regime: str) -> None:
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")


def _underflow_mass(Q: int, spec: FormatSpec) -> float:
    """``N * mu**2``, the worst-case probability lost to underflow."""
    # exp of the log keeps Q=50, E=8 from overflowing to inf*0
    return math.exp(Q * math.log(2.0) + 2.0 * (-(2.0**spec.E) + 2.0**-spec.F))


def _rounding_variance(spec: FormatSpec) -> float:
    """``2**-2F + 4 pi**2 2**-2A``: squared step sizes of both grids."""
    return 2.0 ** (-2 * spec.F) + 4.0 * math.pi**2 * 2.0 ** (-2 * spec.A)


def underflow_loss_of_mass(x: float) -> float:
    """``1 - (x + 1) exp(-x)`` as a function of ``x = N mu**2``.

    Below ``x = 1e-8`` the series ``x**2/2 - x**3/3`` is used; the closed form
    cancels catastrophically there.
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    if x < _SMALL_X:
        return x * x / 2.0 - x**3 / 3.0
    return -math.expm1(-x) - x * math.exp(-x)


def underflow_loss(Q: int, spec: FormatSpec) -> float:
    """Expected normalization mass lost to underflow for Porter-Thomas states."""
    if Q < 1:
        raise ValueError(f"Q must be >= 1, got {Q}")
    return underflow_loss_of_mass(_underflow_mass(Q, spec))


def conversion_error_random(Q: int, spec: FormatSpec) -> float:
    """Expected ``||T psi - psi||**2`` for one conversion of a random state."""
    phi = underflow_loss(Q, spec)
    return phi + (1.0 - phi) * _rounding_variance(spec) / 12.0


def conversion_error_bound(Q: int, spec: FormatSpec) -> float:
    """Worst-case ``||T psi - psi||**2`` for one conversion.

    Derived assuming ``A, F > 2``; for smaller widths the dropped higher-order
    terms are no longer negligible and the value is only indicative.
    """
    return _underflow_mass(Q, spec) + _rounding_variance(spec) / 4.0


def cumulative_error_random(G: float, Q: int, spec: FormatSpec) -> float:
    """Squared error after ``G`` effective lossy gates (random regime)."""
    if G < 0:
        raise ValueError("G must be >= 0")
    return conversion_error_random(Q, spec) * G


def cumulative_error_biased(G: float, Q: int, spec: FormatSpec) -> float:
    """Upper bound on the error *norm* (not squared) after ``G`` gates."""
    if G < 0:
        raise ValueError("G must be >= 0")
    return G * math.sqrt(conversion_error_bound(Q, spec))


def _round_nearest(x: float) -> int:
    return int(math.floor(x + 0.5))


def max_gates(sigma: float, Q: int, spec: FormatSpec, regime: str = "random") -> int:
    """Number of effective lossy gates before the error reaches ``sigma``.

    The random regime compares ``sigma**2`` against the linear variance model,
    the biased regime compares ``sigma`` against the linear norm bound.
    """
    _check_regime(regime)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if regime == "random":
        return _round_nearest(sigma**2 / conversion_error_random(Q, spec))
    return _round_nearest(sigma / math.sqrt(conversion_error_bound(Q, spec)))


def _candidates(B: int):
    for E in range(1, 9):
        for F in range(0, B + 1):
            A = B - E - F
            if A >= 2:
                yield E, F, A


def optimal_triplet(B: int, Q: int, regime: str = "random") -> FormatSpec:
    """Exhaustive search for the ``(E, F, A)`` with ``E+F+A = B`` minimising the
    conversion error of ``regime``.

    Ties go to the smallest ``E`` and then the smallest ``F``.
    """
    _check_regime(regime)
    if B < 3:
        raise ValueError(f"no valid triplet with B={B} bits (need at least 3)")
    cost = conversion_error_random if regime == "random" else conversion_error_bound
    best = None
    for E, F, A in _candidates(B):
        if E + F + A > 64:
            continue
        spec = FormatSpec(E, F, A)
        key = (cost(Q, spec), E, F)
        if best is None or key < best[0]:
            best = (key, spec)
    if best is None:
        raise ValueError(f"no valid triplet with B={B} bits")
    return best[1]


def optimal_A_of_F(F: float) -> tuple[float, tuple[int, int]]:
    """Continuous optimum ``A = F + log2(2 pi)`` and its two integer neighbours."""
    A = F + math.log2(2.0 * math.pi)
    return A, (math.floor(A), math.ceil(A))


def fidelity_lower_bound(sigma_sq: float) -> float:
    """``(1 - sigma**2 / 2)**2``, clamped to 0 past ``sigma**2 = 2``."""
    if sigma_sq < 0:
        raise ValueError("sigma_sq must be >= 0")
    if sigma_sq > 2:
        warnings.warn(f"sigma_sq={sigma_sq} > 2; fidelity bound clamped to 0", stacklevel=2)
        return 0.0
    return (1.0 - sigma_sq / 2.0) ** 2


# -- effective gate count ------------------------------------------------------

# error-free permutations and sign/quarter-phase flips
_EXACT_KINDS = {"X", "Y", "Z", "CNOT", "CZ", "SWAP", "TOFF"}
_FULL_KINDS = {"H", "U3"}


def exact_phase_steps(phase: Fraction, A: int) -> int | None:
    """Phase-field increment for a rotation of ``phase * pi`` radians, or None
    when it is not a whole number of ``2 pi / 2**A`` steps."""
    steps = phase * (1 << (A - 1))
    if steps.denominator != 1:
        return None
    return int(steps.numerator) % (1 << A)


def gate_phase(gate) -> Fraction | None:
    """Rotation applied by a diagonal phase gate as a fraction of pi."""
    sign = -1 if gate.adjoint else 1
    if gate.kind == "CP":
        return Fraction(sign, 1 << int(gate.params[0]))
    if gate.kind == "ROOTZ":
        return Fraction(sign, int(gate.params[0]))
    return None


def gate_weight(gate, spec: FormatSpec) -> float:
    """Fraction of amplitudes a gate sends through a lossy conversion.

    Error-free kinds weigh 0; H and U3 weigh 1; a phase rotation that is not a
    whole number of phase steps weighs 1/2; every control halves the weight.
    """
    kind = gate.kind
    if kind in _EXACT_KINDS:
        return 0.0
    if kind in _FULL_KINDS:
        return 0.5 ** len(gate.controls)
    if kind in ("CP", "ROOTZ"):
        if exact_phase_steps(gate_phase(gate), spec.A) is not None:
            return 0.0
        return 0.5 * 0.5 ** len(gate.controls)
    raise UnknownGateError(f"unknown gate kind {kind!r}")


def effective_gate_count(circuit: Iterable, spec: FormatSpec) -> float:
    """Sum of per-gate lossy fractions over a circuit."""
    unknown = sorted({g.kind for g in circuit if g.kind not in _EXACT_KINDS | _FULL_KINDS | {"CP", "ROOTZ"}})
    if unknown:
        raise UnknownGateError(f"unknown gate kinds: {', '.join(unknown)}")
    return math.fsum(gate_weight(g, spec) for g in circuit)


@dataclass(frozen=True)
class ErrorBudget:
    """Analytic error figures for one ``(Q, spec)`` pair at tolerance ``sigma``."""

    Q: int
    spec: FormatSpec
    sigma: float
    phi: float
    eps_c_sq: float
    eps_b_sq: float
    g_random: int
    g_biased: int

    @property
    def N(self) -> int:
        return 1 << self.Q

    def sigma_sq_of(self, G: float) -> float:
        return self.eps_c_sq * G

    @property
    def fidelity_bound(self) -> float:
        return fidelity_lower_bound(min(self.sigma**2, 2.0))


def error_budget(Q: int, spec: FormatSpec, sigma: float = 0.5) -> ErrorBudget:
    return ErrorBudget(
        Q=Q,
        spec=spec,
        sigma=sigma,
        phi=underflow_loss(Q, spec),
        eps_c_sq=conversion_error_random(Q, spec),
        eps_b_sq=conversion_error_bound(Q, spec),
        g_random=max_gates(sigma, Q, spec, "random"),
        g_biased=max_gates(sigma, Q, spec, "biased"),
    )
