"""Gates, circuits and the one-gate-per-line circuit text format.

Qubit ``r`` is bit ``r`` of the amplitude index (qubit 0 is least significant).

Text format, ``#`` starts a comment::

    H q
    X q | Y q | Z q
    CNOT c t
    CZ c t
    SWAP p q
    CP c t m          # phase pi / 2**m on |11>
    ROOTZ q W         # phase pi / W on |1>
    TOFF c1 c2 t
    U3 q theta lambda phi
    CH c t            # controlled Hadamard
    CU3 c t theta lambda phi

A ``DG`` suffix on ``CP``/``ROOTZ`` (``CPDG``, ``ROOTZDG``) gives the inverse
rotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = ["Gate", "Circuit", "GateError", "parse_circuit", "format_circuit", "u3_matrix"]

KINDS = ("H", "X", "Y", "Z", "CNOT", "CZ", "CP", "SWAP", "TOFF", "U3", "ROOTZ")
_PHASE_KINDS = ("CP", "ROOTZ")
_SELF_INVERSE = ("H", "X", "Y", "Z", "CNOT", "CZ", "SWAP", "TOFF")


class GateError(ValueError):
    pass


def u3_matrix(theta: float, lam: float, phi: float) -> np.ndarray:
    """General single-qubit rotation, columns act on |0> and |1>."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (lam + phi)) * c],
        ],
        dtype=np.complex128,
    )


_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2.0)


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    params: tuple = ()
    adjoint: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GateError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        qs = self.qubits
        if len(set(qs)) != len(qs):
            raise GateError(f"{self.kind}: repeated qubit in {qs}")
        if any(q < 0 for q in qs):
            raise GateError(f"{self.kind}: negative qubit index in {qs}")
        ntarget = 2 if self.kind == "SWAP" else 1
        if len(self.targets) != ntarget:
            raise GateError(f"{self.kind} takes {ntarget} target(s), got {self.targets}")
        need = {"CNOT": 1, "CZ": 1, "CP": 1, "TOFF": 2}.get(self.kind)
        if need is not None and len(self.controls) != need:
            raise GateError(f"{self.kind} takes {need} control(s), got {self.controls}")
        if self.kind == "CP":
            m = self.params[0]
            if int(m) != m or m < 0:
                raise GateError(f"CP exponent must be an integer >= 0, got {m}")
            object.__setattr__(self, "params", (int(m),))
        elif self.kind == "ROOTZ":
            w = self.params[0]
            if int(w) != w or w < 1:
                raise GateError(f"ROOTZ root must be an integer >= 1, got {w}")
            object.__setattr__(self, "params", (int(w),))
        elif self.kind == "U3":
            if len(self.params) != 3:
                raise GateError("U3 takes three angles (theta, lambda, phi)")
            object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        elif self.params:
            raise GateError(f"{self.kind} takes no parameters")
        if self.adjoint and self.kind not in _PHASE_KINDS:
            raise GateError(f"adjoint flag only applies to phase gates, not {self.kind}")

    # constructors matching the text format
    @classmethod
    def h(cls, q):
        return cls("H", (q,))

    @classmethod
    def x(cls, q):
        return cls("X", (q,))

    @classmethod
    def y(cls, q):
        return cls("Y", (q,))

    @classmethod
    def z(cls, q):
        return cls("Z", (q,))

    @classmethod
    def cnot(cls, c, t):
        return cls("CNOT", (t,), (c,))

    @classmethod
    def cz(cls, c, t):
        return cls("CZ", (t,), (c,))

    @classmethod
    def cp(cls, c, t, m, adjoint=False):
        return cls("CP", (t,), (c,), (m,), adjoint)

    @classmethod
    def swap(cls, p, q):
        return cls("SWAP", (p, q))

    @classmethod
    def toffoli(cls, c1, c2, t):
        return cls("TOFF", (t,), (c1, c2))

    @classmethod
    def u3(cls, q, theta, lam, phi):
        return cls("U3", (q,), (), (theta, lam, phi))

    @classmethod
    def root_z(cls, q, w, adjoint=False):
        return cls("ROOTZ", (q,), (), (w,), adjoint)

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    @property
    def phase(self) -> float | None:
        """Rotation angle of a diagonal phase gate in radians."""
        if self.kind == "CP":
            ang = math.pi / 2.0 ** self.params[0]
        elif self.kind == "ROOTZ":
            ang = math.pi / self.params[0]
        else:
            return None
        return -ang if self.adjoint else ang

    def matrix(self) -> np.ndarray | None:
        """2x2 matrix on the target for single-target kinds, else None."""
        if self.kind == "H":
            return _H
        if self.kind == "U3":
            return u3_matrix(*self.params)
        if self.kind in ("X", "CNOT", "TOFF"):
            return np.array([[0, 1], [1, 0]], dtype=np.complex128)
        if self.kind == "Y":
            return np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
        if self.kind in ("Z", "CZ"):
            return np.diag([1.0, -1.0]).astype(np.complex128)
        if self.kind in _PHASE_KINDS:
            return np.diag([1.0, np.exp(1j * self.phase)])
        return None

    def inverse(self) -> "Gate":
        if self.kind in _SELF_INVERSE:
            return self
        if self.kind in _PHASE_KINDS:
            return Gate(self.kind, self.targets, self.controls, self.params, not self.adjoint)
        theta, lam, phi = self.params
        return Gate("U3", self.targets, self.controls, (-theta, -phi, -lam))

    def to_text(self) -> str:
        dg = "DG" if self.adjoint else ""
        fmt = _fmt_angle
        if self.kind == "CP":
            return f"CP{dg} {self.controls[0]} {self.targets[0]} {self.params[0]}"
        if self.kind == "ROOTZ":
            base = f"ROOTZ{dg} {self.targets[0]} {self.params[0]}"
            return _controlled(base, self.controls)
        if self.kind == "U3":
            base = f"U3 {self.targets[0]} " + " ".join(fmt(p) for p in self.params)
            return _controlled(base, self.controls)
        if self.kind == "CNOT":
            return f"CNOT {self.controls[0]} {self.targets[0]}"
        if self.kind == "CZ":
            return f"CZ {self.controls[0]} {self.targets[0]}"
        if self.kind == "TOFF":
            return f"TOFF {self.controls[0]} {self.controls[1]} {self.targets[0]}"
        if self.kind == "SWAP":
            return f"SWAP {self.targets[0]} {self.targets[1]}"
        return _controlled(f"{self.kind} {self.targets[0]}", self.controls)


def _fmt_angle(x: float) -> str:
    # repr round-trips exactly; keeps circuit text byte-identical across platforms
    return repr(float(x))


def _controlled(base: str, controls: Sequence[int]) -> str:
    if not controls:
        return base
    if len(controls) > 1:
        raise GateError("text format supports at most one extra control")
    kind, rest = base.split(" ", 1)
    return f"C{kind} {controls[0]} {rest}"


@dataclass
class Circuit:
    """Ordered gate list on ``n_qubits`` qubits."""

    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise GateError("a circuit needs at least one qubit")
        for g in self.gates:
            self._check(g)

    def _check(self, gate: Gate) -> None:
        bad = [q for q in gate.qubits if q >= self.n_qubits]
        if bad:
            raise GateError(f"qubit index {bad[0]} out of range for {self.n_qubits} qubits in {gate.to_text()!r}")

    def append(self, gate: Gate) -> None:
        self._check(gate)
        self.gates.append(gate)

    def extend(self, gates: Iterable[Gate]) -> None:
        for g in gates:
            self.append(g)

    def __iter__(self) -> Iterator[Gate]:
        return iter(self.gates)

    def __len__(self) -> int:
        return len(self.gates)

    def __getitem__(self, i):
        return self.gates[i]

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise GateError("cannot concatenate circuits on different qubit counts")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)])

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def to_text(self) -> str:
        return format_circuit(self)


_ARITY = {
    "H": (1, 0), "X": (1, 0), "Y": (1, 0), "Z": (1, 0),
    "CNOT": (2, 0), "CZ": (2, 0), "SWAP": (2, 0), "TOFF": (3, 0),
    "CP": (2, 1), "CPDG": (2, 1), "ROOTZ": (1, 1), "ROOTZDG": (1, 1),
    "U3": (1, 3), "CH": (2, 0), "CU3": (2, 3),
}


def _parse_line(tokens: list[str], lineno: int) -> Gate:
    name = tokens[0].upper()
    if name not in _ARITY:
        raise GateError(f"line {lineno}: unknown gate {tokens[0]!r}")
    nq, npar = _ARITY[name]
    if len(tokens) != 1 + nq + npar:
        raise GateError(f"line {lineno}: {name} expects {nq} qubit(s) and {npar} parameter(s)")
    try:
        qs = [int(t) for t in tokens[1 : 1 + nq]]
        if name in ("CP", "CPDG", "ROOTZ", "ROOTZDG"):
            ps = [int(tokens[1 + nq])]
        else:
            ps = [float(t) for t in tokens[1 + nq :]]
    except ValueError as exc:
        raise GateError(f"line {lineno}: {exc}") from None
    if name == "CNOT":
        return Gate.cnot(*qs)
    if name == "CZ":
        return Gate.cz(*qs)
    if name == "SWAP":
        return Gate.swap(*qs)
    if name == "TOFF":
        return Gate.toffoli(*qs)
    if name in ("CP", "CPDG"):
        return Gate.cp(qs[0], qs[1], ps[0], adjoint=name.endswith("DG"))
    if name in ("ROOTZ", "ROOTZDG"):
        return Gate.root_z(qs[0], ps[0], adjoint=name.endswith("DG"))
    if name == "U3":
        return Gate.u3(qs[0], *ps)
    if name == "CH":
        return Gate("H", (qs[1],), (qs[0],))
    if name == "CU3":
        return Gate("U3", (qs[1],), (qs[0],), tuple(ps))
    return Gate(name, (qs[0],))


def parse_circuit(text: str, n_qubits: int | None = None) -> Circuit:
    """Parse circuit text; ``n_qubits`` defaults to the highest index used + 1."""
    gates = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            gates.append(_parse_line(line.split(), lineno))
        except GateError as exc:
            if str(exc).startswith("line "):
                raise
            raise GateError(f"line {lineno}: {exc}") from None
    if n_qubits is None:
        n_qubits = max((max(g.qubits) for g in gates), default=0) + 1
    return Circuit(n_qubits, gates)


def format_circuit(circuit: Circuit) -> str:
    return "".join(g.to_text() + "\n" for g in circuit)
