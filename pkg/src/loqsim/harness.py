"""Experiment drivers behind the ``loqsim`` command line.

Each experiment returns an :class:`ExperimentResult`: plot-ready rows plus a
summary dict of test statistics.  Everything is a pure function of the
:class:`ExperimentConfig`, so reruns are bit-identical.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import circuits as circ
from .codec import FormatSpec, RoundingMode, round_trip_errors
from .error_model import (
    REGIMES,
    conversion_error_bound,
    conversion_error_random,
    cumulative_error_random,
    max_gates,
    optimal_triplet,
)
from .simulator import PackedState, ReferenceState, run

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "EXPERIMENTS",
    "max_qubits",
    "resolve_specs",
    "tables",
    "budget",
    "sigma_vs_g",
    "roundtrip",
    "qft_test",
    "porter_thomas",
    "histograms",
    "rootz_stress",
    "run_experiment",
]

MAX_QUBITS_ENV = "LOQSIM_MAX_QUBITS"
DEFAULT_MAX_QUBITS = 24
# smallest qubit count tabulated for optimal triplets; see resolve_specs
TABLE_QUBITS = 20
QFT_SPECS = ((4, 5, 7), (4, 7, 8), (4, 9, 11), (4, 11, 13), (4, 13, 15))


def max_qubits() -> int:
    return int(os.environ.get(MAX_QUBITS_ENV, DEFAULT_MAX_QUBITS))


@dataclass
class ExperimentConfig:
    experiment: str
    qubits: int = 14
    bits: list[int] = field(default_factory=list)
    triplets: list[tuple[int, int, int]] = field(default_factory=list)
    cycles: int = 7
    seeds: list[int] = field(default_factory=lambda: [0])
    sigma: float = 0.5
    regime: str = "random"
    modulus_jitter: bool = False
    phase_jitter: bool | None = None
    norm_threshold: float | None = None
    qubit_list: list[int] = field(default_factory=list)
    table_qubits: int = TABLE_QUBITS
    approximate: bool = False
    exact: bool = False
    W: int | None = None
    count: int | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.experiment not in ("tables", "budget") and self.qubits > max_qubits():
            raise ValueError(
                f"{self.qubits} qubits exceeds the memory cap of {max_qubits()} "
                f"(set {MAX_QUBITS_ENV} to override)"
            )
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}")

    @property
    def mode(self) -> RoundingMode:
        # phase jitter defaults on only where unresolved phase gates are the subject
        default = self.experiment in ("qft_test",)
        pj = default if self.phase_jitter is None else self.phase_jitter
        return RoundingMode(self.modulus_jitter, pj)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[dict]
    summary: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {"config": asdict(self.config), "summary": self.summary, "rows": self.rows}


def resolve_specs(cfg: ExperimentConfig, default: Sequence[tuple[int, int, int]] = ()) -> list[FormatSpec]:
    """Explicit triplets win; otherwise each ``--bits`` value maps to its
    random-regime optimum at ``max(qubits, table_qubits)`` qubits."""
    if cfg.triplets:
        return [FormatSpec(*t) for t in cfg.triplets]
    if cfg.bits:
        qt = max(cfg.qubits, cfg.table_qubits)
        return [optimal_triplet(b, qt, "random") for b in cfg.bits]
    return [FormatSpec(*t) for t in default]


def _spec_cols(spec: FormatSpec) -> dict:
    return {"B": spec.bits, "E": spec.E, "F": spec.F, "A": spec.A}


def _map_seeds(fn: Callable, seeds: Sequence[int], jobs: int) -> list:
    if jobs <= 1 or len(seeds) <= 1:
        return [fn(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, seeds))


def _x0_for_seed(seed: int, q: int) -> int:
    return int(np.random.Generator(np.random.Philox(seed)).integers(1 << q))


# -- formula-only experiments ------------------------------------------------------


def tables(B_values: Sequence[int], Q_values: Sequence[int], regime: str = "random") -> list[dict]:
    cost = conversion_error_random if regime == "random" else conversion_error_bound
    rows = []
    for B in B_values:
        for Q in Q_values:
            spec = optimal_triplet(B, Q, regime)
            rows.append({"B": B, "Q": Q, "regime": regime, "E": spec.E, "F": spec.F, "A": spec.A, "eps": cost(Q, spec)})
    return rows


def budget(Q: int, sigma: float, B_values: Sequence[int]) -> list[dict]:
    rows = []
    for B in B_values:
        spec = optimal_triplet(B, Q, "random")
        rows.append(
            {
                "B": B,
                "E": spec.E,
                "F": spec.F,
                "A": spec.A,
                "eps_c_sq": conversion_error_random(Q, spec),
                "G_random": max_gates(sigma, Q, spec, "random"),
                "eps_b_sq": conversion_error_bound(Q, spec),
                "G_biased": max_gates(sigma, Q, spec, "biased"),
            }
        )
    return rows


# -- simulations --------------------------------------------------------------------


def _sigma_vs_g_one(seed: int, q: int, C: int, specs, mode, threshold) -> list[dict]:
    psi = circ.random_sphere_state(q, seed)
    circuit = circ.random_cycles(q, C, seed)
    rows = []
    for spec in specs:
        state = PackedState.from_amplitudes(psi, spec, mode, seed)
        ref = ReferenceState(psi)
        report = run(state, circuit, ref, renormalize=threshold is not None, norm_threshold=threshold)
        # one row per U3+CNOT pair, i.e. per unit of G
        for n in range(0, len(circuit) + 1, 2):
            G = report.effective_g[n]
            model = cumulative_error_random(G, q, spec)
            measured = report.sigma_sq[n]
            rows.append(
                {
                    "seed": seed,
                    **_spec_cols(spec),
                    "G": G,
                    "sigma_sq": measured,
                    "sigma_sq_model": model,
                    "ratio": measured / model if model > 0 else math.nan,
                    "norm_sq": report.norm_sq[n],
                }
            )
    return rows


def sigma_vs_g(cfg: ExperimentConfig) -> ExperimentResult:
    """Measured squared error against the linear model along random cycles
    started from a uniformly random state."""
    specs = resolve_specs(cfg, ((4, 5, 7), (4, 9, 11), (4, 13, 15)))
    fn = partial(_sigma_vs_g_one, q=cfg.qubits, C=cfg.cycles, specs=specs, mode=cfg.mode, threshold=cfg.norm_threshold)
    rows = [r for chunk in _map_seeds(fn, cfg.seeds, cfg.jobs) for r in chunk]
    rows.sort(key=lambda r: (r["seed"], r["B"], r["F"], r["G"]))
    return ExperimentResult(cfg, rows)


def _roundtrip_one(seed: int, q: int, C: int, specs, mode, exact: bool) -> list[dict]:
    x0 = _x0_for_seed(seed, q)
    forward = circ.random_cycles(q, C, seed)
    backward = circ.inverse(forward)
    rows = []
    for spec in specs:
        if exact:
            ref = ReferenceState.basis(q, x0).run(forward)
            ref.normalize()
            ref.run(backward)
            ref.normalize()
            actual = circ.true_error(ref.amplitudes, x0)
            G = 0.0
        else:
            state = PackedState.basis(q, spec, x0, mode, seed)
            state.run(forward)
            state.renormalize()
            state.run(backward)
            state.renormalize()
            actual = circ.true_error(state, x0)
            G = state.effective_g
        model = cumulative_error_random(G, q, spec)
        rows.append(
            {
                "seed": seed,
                **_spec_cols(spec),
                "x0": x0,
                "G": G,
                "sigma_sq_model": model,
                "sigma_sq_actual": actual,
                "ratio": actual / model if model > 0 else math.nan,
            }
        )
    return rows


def roundtrip(cfg: ExperimentConfig) -> ExperimentResult:
    """Start at ``|x0>``, run C cycles, renormalize, run the inverse, renormalize."""
    specs = resolve_specs(cfg) or [optimal_triplet(b, max(cfg.qubits, cfg.table_qubits)) for b in (16, 20, 24)]
    fn = partial(_roundtrip_one, q=cfg.qubits, C=cfg.cycles, specs=specs, mode=cfg.mode, exact=cfg.exact)
    rows = [r for chunk in _map_seeds(fn, cfg.seeds, cfg.jobs) for r in chunk]
    rows.sort(key=lambda r: (r["seed"], r["B"], r["F"]))
    return ExperimentResult(cfg, rows)


def _qft_one(seed: int, q: int, specs, mode, approximate: bool) -> list[dict]:
    x0 = _x0_for_seed(seed, q)
    psi = circ.plane_wave_state(q, x0)
    circuit = circ.aqft(q) if approximate else circ.qft(q)
    rows = []
    for spec in specs:
        state = PackedState.from_amplitudes(psi, spec, mode, seed)
        state.renormalize()
        state.run(circuit)
        state.renormalize()
        G = state.effective_g
        actual = circ.true_error(state, x0)
        model = cumulative_error_random(G, q, spec)
        rows.append(
            {
                "seed": seed,
                "q": q,
                **_spec_cols(spec),
                "x0": x0,
                "G": G,
                "hadamards": circuit.count("H"),
                "sigma_sq_model": model,
                "sigma_sq_actual": actual,
                "ratio": actual / model if model > 0 else math.nan,
            }
        )
    return rows


def qft_test(cfg: ExperimentConfig) -> ExperimentResult:
    """QFT of a plane wave, which should return the basis state ``|x0>``.

    Phase jitter is on unless the config turns it off explicitly.
    """
    specs = resolve_specs(cfg, QFT_SPECS)
    mode = cfg.mode
    rows = []
    for q in cfg.qubit_list or [cfg.qubits]:
        if q > max_qubits():
            raise ValueError(f"{q} qubits exceeds the memory cap of {max_qubits()}")
        fn = partial(_qft_one, q=q, specs=specs, mode=mode, approximate=cfg.approximate)
        rows.extend(r for chunk in _map_seeds(fn, cfg.seeds, cfg.jobs) for r in chunk)
    rows.sort(key=lambda r: (r["q"], r["seed"], r["B"], r["F"]))
    return ExperimentResult(cfg, rows)


def porter_thomas(cfg: ExperimentConfig, points: int = 200) -> ExperimentResult:
    """Complementary CDF of ``N p`` after C cycles from ``|0>`` against ``exp(-x)``.

    Without a triplet the run uses plain double precision.
    """
    q, N = cfg.qubits, 1 << cfg.qubits
    specs = resolve_specs(cfg)
    rows, summary = [], {}
    for seed in cfg.seeds:
        circuit = circ.random_cycles(q, cfg.cycles, seed)
        variants = [("double", None)] + [(str(s), s) for s in specs]
        for label, spec in variants:
            if spec is None:
                probs = np.abs(ReferenceState.basis(q).run(circuit).amplitudes) ** 2
            else:
                state = PackedState.basis(q, spec, 0, cfg.mode, seed).run(circuit)
                probs = np.abs(state.amplitudes()) ** 2
            x = np.sort(N * probs)
            ks = stats.kstest(x, "expon")
            summary[f"seed={seed} {label}"] = {"ks_statistic": float(ks.statistic), "p_value": float(ks.pvalue)}
            for xv in np.quantile(x, np.linspace(0, 1, points, endpoint=False)):
                emp = 1.0 - np.searchsorted(x, xv, side="right") / N
                rows.append({"seed": seed, "arithmetic": label, "x": float(xv), "ccdf": float(emp), "ccdf_model": math.exp(-xv)})
    return ExperimentResult(cfg, rows, summary)


def _binned(kind: str, seed: int, spec: FormatSpec, values, lo: float, hi: float, bins: int, cdf=None) -> list[dict]:
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    total = len(values)
    rows = []
    for c, a, b in zip(counts, edges[:-1], edges[1:]):
        expected = total * (cdf(b) - cdf(a)) if cdf else total / bins
        rows.append({"kind": kind, "seed": seed, **_spec_cols(spec), "bin_lo": float(a), "bin_hi": float(b), "count": int(c), "expected": expected})
    return rows


def histograms(cfg: ExperimentConfig, bins: int = 64) -> ExperimentResult:
    """Rounding-error histograms of one conversion of a random state, and the
    normalized cumulative error ``Re(exact - packed) / sigma`` after C cycles."""
    specs = resolve_specs(cfg, ((4, 9, 11),))
    q, N = cfg.qubits, 1 << cfg.qubits
    rows, summary = [], {}
    for seed in cfg.seeds:
        psi = circ.random_sphere_state(q, seed)
        for spec in specs:
            eps, gamma, under = round_trip_errors(psi, spec)
            eps, gamma = eps[~under], gamma[~under]
            rows += _binned("eps", seed, spec, eps, -spec.log_halfwidth, spec.log_halfwidth, bins)
            rows += _binned("gamma", seed, spec, gamma, -spec.phase_halfwidth, spec.phase_halfwidth, bins)
            chi_e = stats.chisquare(np.histogram(eps, bins, (-spec.log_halfwidth, spec.log_halfwidth))[0])
            chi_g = stats.chisquare(np.histogram(gamma, bins, (-spec.phase_halfwidth, spec.phase_halfwidth))[0])
            key = f"seed={seed} {spec}"
            summary[key] = {"eps_chi2_p": float(chi_e.pvalue), "gamma_chi2_p": float(chi_g.pvalue)}

            state = PackedState.from_amplitudes(psi, spec, cfg.mode, seed)
            ref = ReferenceState(psi)
            circuit = circ.random_cycles(q, cfg.cycles, seed)
            state.run(circuit)
            ref.run(circuit)
            # each real part carries half of the per-amplitude variance
            sig = math.sqrt(conversion_error_random(q, spec) * max(state.effective_g, 1.0) / (2 * N))
            z = (ref.amplitudes - state.amplitudes()).real / sig
            rows += _binned("cumulative_real", seed, spec, z, -5.0, 5.0, bins, stats.norm.cdf)
            ks = stats.kstest(z, "norm")
            summary[key].update({"G": state.effective_g, "cumulative_std_ratio": float(np.std(z)), "cumulative_ks_p": float(ks.pvalue)})
    return ExperimentResult(cfg, rows, summary)


def _rootz_one(seed: int, q: int, spec: FormatSpec, W: int, count: int, jitter: bool) -> dict:
    amps = np.zeros(1 << q, dtype=np.complex128)
    amps[0] = amps[1] = 1 / math.sqrt(2)
    state = PackedState.from_amplitudes(amps, spec, RoundingMode(phase_jitter=jitter), seed)
    a_start = int(state.words[1]) & ((1 << spec.A) - 1)
    state.run(circ.root_z_chain(q, W, count))
    a_end = int(state.words[1]) & ((1 << spec.A) - 1)
    steps = (a_end - a_start) % (1 << spec.A)
    return {
        "seed": seed,
        **_spec_cols(spec),
        "W": W,
        "count": count,
        "jitter": jitter,
        "phase_steps": steps,
        "phase": steps * spec.phase_step,
        "phase_expected": math.pi * count / W,
    }


def rootz_stress(cfg: ExperimentConfig) -> ExperimentResult:
    """``count`` rotations by ``pi/W`` on one qubit of ``(|0>+|1>)/sqrt(2)``;
    the exact result advances the phase of ``|1>`` by ``pi * count / W``."""
    spec = (resolve_specs(cfg) or [FormatSpec(4, 5, 7)])[0]
    W = cfg.W if cfg.W is not None else 1 << (spec.A + 2)
    count = cfg.count if cfg.count is not None else W
    q = max(cfg.qubits, 1)
    fn = partial(_rootz_one, q=q, spec=spec, W=W, count=count, jitter=cfg.mode.phase_jitter)
    rows = _map_seeds(fn, cfg.seeds, cfg.jobs)
    phases = np.array([r["phase"] for r in rows])
    se = float(phases.std(ddof=1) / math.sqrt(len(phases))) if len(phases) > 1 else 0.0
    expected = math.pi * count / W
    summary = {
        "mean_phase": float(phases.mean()),
        "standard_error": se,
        "expected_phase": expected,
        "z_score": float((phases.mean() - expected) / se) if se > 0 else (0.0 if phases.mean() == expected else math.inf),
    }
    return ExperimentResult(cfg, rows, summary)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    if cfg.experiment == "tables":
        B = cfg.bits or list(range(8, 41))
        Q = cfg.qubit_list or [20, 30, 40, 50]
        return ExperimentResult(cfg, tables(B, Q, cfg.regime))
    if cfg.experiment == "budget":
        B = cfg.bits or [8, 12, 16, 20, 24, 28, 32, 36, 40]
        return ExperimentResult(cfg, budget(cfg.qubits, cfg.sigma, B))
    return EXPERIMENTS[cfg.experiment](cfg)


EXPERIMENTS = {
    "sigma_vs_g": sigma_vs_g,
    "roundtrip": roundtrip,
    "qft_test": qft_test,
    "porter_thomas": porter_thomas,
    "histograms": histograms,
    "rootz_stress": rootz_stress,
}
