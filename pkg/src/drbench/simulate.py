"""Pauli-frame Monte Carlo simulation of benchmark circuits.

Errors are stochastic Paulis drawn after each ideal gate, plus optional
per-layer global depolarization and measurement bit flips.  The engine
propagates a running error frame through the remaining circuit instead of
touching state vectors: every layer maps the frame by its symplectic
matrix (signs are irrelevant to outcomes), new errors are XORed in, and a
shot succeeds when the frame's X support plus measurement flips vanish.
This accounts exactly for error cancellation and for errors the final
measurement cannot see.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .clifford import GateLabel, layer_to_clifford
from .device import ring_center_edges
from .protocols import BenchmarkCircuit

__all__ = [
    "ErrorModel",
    "Dataset",
    "DataRow",
    "simulate_circuit",
    "run_experiment",
    "layer_error_rate",
    "build_model_main_sim",
    "build_model_crosstalk5",
    "build_model_from_calibration",
    "build_model_layer_depolarizing",
]

GateKey = tuple[str, tuple[int, ...]]
RateEntry = tuple[int, float]


@dataclass(frozen=True)
class ErrorModel:
    """Stochastic Pauli noise attached to gate labels.

    ``gate_errors`` maps ("1Q", (q,)) or ("CNOT", (c, t)) to entries
    (qubit, p): with probability p, a uniformly random non-identity Pauli
    hits that qubit, independently per entry (entries on qubits away from
    the gate express crosstalk).  Labels without an entry are error free.
    ``meas_flip`` holds per-qubit readout bit-flip probabilities and
    ``layer_depol`` the probability, applied after every core layer, of
    XORing a uniformly random n-qubit Pauli into the frame.
    """

    n: int
    gate_errors: dict[GateKey, tuple[RateEntry, ...]] = field(default_factory=dict)
    meas_flip: tuple[float, ...] = ()
    layer_depol: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        flips = tuple(float(f) for f in self.meas_flip) or (0.0,) * self.n
        if len(flips) != self.n:
            raise ValueError(f"meas_flip must have {self.n} entries")
        if any(not 0.0 <= f <= 1.0 for f in flips):
            raise ValueError("measurement flip probabilities must be in [0, 1]")
        object.__setattr__(self, "meas_flip", flips)
        if not 0.0 <= self.layer_depol <= 1.0:
            raise ValueError("layer_depol must be in [0, 1]")
        clean: dict[GateKey, tuple[RateEntry, ...]] = {}
        for key, entries in self.gate_errors.items():
            kind, qubits = key
            qubits = tuple(int(q) for q in qubits)
            if kind not in ("1Q", "CNOT"):
                raise ValueError(f"unknown gate kind {kind!r}")
            if len(qubits) != (2 if kind == "CNOT" else 1):
                raise ValueError(f"bad qubit count for {kind} key {qubits}")
            if any(not 0 <= q < self.n for q in qubits):
                raise ValueError(f"gate key {qubits} out of range")
            checked = []
            for q, p in entries:
                q, p = int(q), float(p)
                if not 0 <= q < self.n:
                    raise ValueError(f"error entry qubit {q} out of range")
                if not 0.0 <= p <= 1.0:
                    raise ValueError("error probabilities must be in [0, 1]")
                checked.append((q, p))
            clean[(kind, qubits)] = tuple(checked)
        object.__setattr__(self, "gate_errors", clean)

    def rates_for(self, gate: GateLabel) -> tuple[RateEntry, ...]:
        kind = "CNOT" if gate.name == "CNOT" else "1Q"
        return self.gate_errors.get((kind, gate.qubits), ())


@dataclass(frozen=True)
class DataRow:
    circuit_id: str
    m: int
    target: str
    shots: int
    successes: int
    histogram: tuple[tuple[str, int], ...] | None = None

    def __post_init__(self):
        if not 0 <= self.successes <= self.shots:
            raise ValueError("successes must lie in [0, shots]")


@dataclass(frozen=True)
class Dataset:
    rows: tuple[DataRow, ...]
    provenance: dict = field(default_factory=dict)


def layer_error_rate(model: ErrorModel, gates, include_depol: bool = True) -> float:
    """Exact probability that a layer of gates leaves a net error.

    Convolves each qubit's {I, X, Y, Z} distribution over all error
    entries touching it, so two errors on one qubit may cancel.
    """
    n = model.n
    dists = [np.array([1.0, 0.0, 0.0, 0.0]) for _ in range(n)]
    for gate in gates:
        for q, p in model.rates_for(gate):
            err = np.array([1.0 - p, p / 3.0, p / 3.0, p / 3.0])
            old = dists[q]
            new = np.zeros(4)
            for a in range(4):
                for b in range(4):
                    new[a ^ b] += old[a] * err[b]
            dists[q] = new
    identity_prob = math.prod(float(d[0]) for d in dists)
    if include_depol and model.layer_depol > 0.0:
        lam = 1.0 - model.layer_depol
        identity_prob = lam * identity_prob + (1.0 - lam) * 0.25**n
    return 1.0 - identity_prob


def _inject_gate_errors(frame: np.ndarray, gates, model: ErrorModel, rng: np.random.Generator, n: int):
    shots = frame.shape[1]
    for gate in gates:
        for q, p in model.rates_for(gate):
            if p <= 0.0:
                continue
            mask = rng.random(shots) < p
            # k in 1..3 encodes Z, X, Y via (x, z) = (k >> 1, k & 1)
            k = rng.integers(1, 4, size=shots)
            frame[q] ^= np.where(mask, (k >> 1) & 1, 0).astype(np.uint8)
            frame[n + q] ^= np.where(mask, k & 1, 0).astype(np.uint8)


def simulate_circuit(
    circ: BenchmarkCircuit,
    model: ErrorModel,
    shots: int,
    rng: np.random.Generator,
    histogram: bool = False,
) -> tuple[int, tuple[tuple[str, int], ...] | None]:
    """Monte Carlo estimate of the circuit's success count over ``shots``.

    Returns (successes, top-64 outcome histogram or None).
    """
    n = circ.n
    if model.n != n:
        raise ValueError("model and circuit disagree on qubit count")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    frame = np.zeros((2 * n, shots), dtype=np.uint8)
    for segment, is_core in ((circ.prep, False), (circ.core, True), (circ.meas, False)):
        for layer in segment.layers:
            s = layer_to_clifford(layer, n).s
            frame = (s @ frame) % 2
            _inject_gate_errors(frame, layer, model, rng, n)
            if is_core and model.layer_depol > 0.0:
                mask = (rng.random(shots) < model.layer_depol).astype(np.uint8)
                frame ^= rng.integers(0, 2, size=(2 * n, shots), dtype=np.uint8) * mask
    flipped = frame[:n].copy()
    for q in range(n):
        f = model.meas_flip[q]
        if f > 0.0:
            flipped[q] ^= (rng.random(shots) < f).astype(np.uint8)
    successes = int(np.sum(~np.any(flipped, axis=0)))
    hist = None
    if histogram:
        weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
        measured = (circ.target_bits[:, None] ^ flipped).astype(np.int64)
        values = weights @ measured
        uniq, counts = np.unique(values, return_counts=True)
        order = np.lexsort((uniq, -counts))[:64]
        hist = tuple(
            (format(int(uniq[i]), f"0{n}b"), int(counts[i])) for i in order
        )
    return successes, hist


def run_experiment(
    circuits: list[BenchmarkCircuit],
    model: ErrorModel,
    rng: np.random.Generator,
    shots: int,
    histogram: bool = False,
    threads: int = 1,
    provenance: dict | None = None,
) -> Dataset:
    """Simulate every circuit with ``shots`` shots each.

    Circuit seeds are spawned from ``rng`` up front in list order, so the
    result is identical for any thread count.
    """
    children = rng.spawn(len(circuits)) if circuits else []

    def one(i: int) -> DataRow:
        successes, hist = simulate_circuit(circuits[i], model, shots, children[i], histogram)
        c = circuits[i]
        return DataRow(
            circuit_id=c.circuit_id,
            m=c.length,
            target="".join(str(b) for b in c.target),
            shots=shots,
            successes=successes,
            histogram=hist,
        )

    if threads > 1 and len(circuits) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = tuple(pool.map(one, range(len(circuits))))
    else:
        rows = tuple(one(i) for i in range(len(circuits)))
    return Dataset(rows=rows, provenance=dict(provenance or {}))


# ---------------------------------------------------------------------------
# Bundled models


def build_model_main_sim(n: int) -> ErrorModel:
    """All-to-all model: 0.25% per CNOT qubit, 0.05% per 1Q gate, perfect
    state prep and measurement."""
    errors: dict[GateKey, tuple[RateEntry, ...]] = {}
    for q in range(n):
        errors[("1Q", (q,))] = ((q, 0.0005),)
    for c in range(n):
        for t in range(n):
            if c != t:
                errors[("CNOT", (c, t))] = ((c, 0.0025), (t, 0.0025))
    return ErrorModel(n=n, gate_errors=errors)


def build_model_crosstalk5() -> ErrorModel:
    """The 5-qubit ring-plus-center model with CNOT crosstalk.

    Ring CNOTs carry 4% total error split evenly over their two qubits.
    Center CNOTs carry 4% on the center qubit plus crosstalk on all four
    ring qubits at rate 1-(0.92/0.96)^(1/4) each, for 8% total.  1Q gates
    are 0.1% and every qubit has a 2% readout flip.
    """
    ring_edges, center_edges = ring_center_edges(4)
    ring_rate = 1.0 - 0.96 ** 0.5
    spect_rate = 1.0 - (0.92 / 0.96) ** 0.25
    errors: dict[GateKey, tuple[RateEntry, ...]] = {}
    for q in range(5):
        errors[("1Q", (q,))] = ((q, 0.001),)
    for c, t in ring_edges:
        errors[("CNOT", (c, t))] = ((c, ring_rate), (t, ring_rate))
    for c, t in center_edges:
        center = c if c == 4 else t
        errors[("CNOT", (c, t))] = ((center, 0.04),) + tuple(
            (q, spect_rate) for q in range(4)
        )
    return ErrorModel(n=5, gate_errors=errors, meas_flip=(0.02,) * 5)


def build_model_from_calibration(
    n: int,
    one_qubit_rates: dict[int, float] | float,
    cnot_rates: dict[tuple[int, int], float] | None = None,
    readout_rates: dict[int, float] | float = 0.0,
) -> ErrorModel:
    """Crosstalk-free model from calibration-style total error rates.

    ``one_qubit_rates[q]`` is the total error probability of a 1Q gate on
    qubit q; ``cnot_rates[(c, t)]`` the total rate of that CNOT, split as
    1-sqrt(1-rate) per involved qubit so the pair reproduces the total.
    """
    if isinstance(one_qubit_rates, (int, float)):
        one_qubit_rates = {q: float(one_qubit_rates) for q in range(n)}
    if isinstance(readout_rates, (int, float)):
        readout_rates = {q: float(readout_rates) for q in range(n)}
    missing = [q for q in range(n) if q not in one_qubit_rates]
    if missing:
        raise ValueError(f"missing 1Q calibration for qubits {missing}")
    missing = [q for q in range(n) if q not in readout_rates]
    if missing:
        raise ValueError(f"missing readout calibration for qubits {missing}")
    errors: dict[GateKey, tuple[RateEntry, ...]] = {}
    for q in range(n):
        errors[("1Q", (q,))] = ((q, float(one_qubit_rates[q])),)
    for (c, t), rate in (cnot_rates or {}).items():
        per_qubit = 1.0 - math.sqrt(1.0 - float(rate))
        errors[("CNOT", (int(c), int(t)))] = ((int(c), per_qubit), (int(t), per_qubit))
    flips = tuple(float(readout_rates[q]) for q in range(n))
    return ErrorModel(n=n, gate_errors=errors, meas_flip=flips)


def build_model_layer_depolarizing(n: int, lam: float) -> ErrorModel:
    """Perfect gates and SPAM; after every core layer the state is
    replaced by the maximally mixed one with probability 1 - lam."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must be in [0, 1]")
    return ErrorModel(n=n, layer_depol=1.0 - lam)
