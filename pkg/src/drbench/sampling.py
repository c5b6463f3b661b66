"""Uniform sampling of symplectic matrices, Cliffords and stabilizer states,
plus the random-layer distributions used to drive benchmarking circuits.

Uniform symplectic sampling is index-based: the group of binary symplectic
matrices on 2n bits has order prod_{j=1..n} (4^j - 1) 2^(2j-1), and each
index below that order maps to a distinct element through a transvection
construction (map e1 to an arbitrary nonzero vector, fix the conjugate
basis vector with one more transvection, recurse on the direct summand).
Drawing the index uniformly therefore draws the element uniformly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .clifford import CliffordOp, GateLabel, Layer, StabilizerState, layer_to_clifford
from .device import DeviceSpec, pool_gate_names

__all__ = [
    "symplectic_group_order",
    "clifford_count",
    "stabilizer_state_count",
    "symplectic_from_index",
    "sample_symplectic_uniform",
    "sample_clifford_uniform",
    "sample_stabilizer_state_uniform",
    "SamplerSpec",
    "PCnotSampler",
    "CategorySampler",
    "PairingSampler",
    "sample_layer",
    "layer_probability",
    "cnot_placement_distribution",
    "SpreadReport",
    "estimate_error_spreading",
]


# ---------------------------------------------------------------------------
# Group sizes


def symplectic_group_order(n: int) -> int:
    order = 1
    for j in range(1, n + 1):
        order *= (4 ** j - 1) << (2 * j - 1)
    return order


def clifford_count(n: int) -> int:
    """Number of distinct (s, v) pairs: Cliffords modulo global phase."""
    return symplectic_group_order(n) * 4 ** n


def stabilizer_state_count(n: int) -> int:
    count = 2 ** n
    for k in range(1, n + 1):
        count *= 2 ** k + 1
    return count


# ---------------------------------------------------------------------------
# Index-based symplectic construction (interleaved x1 z1 x2 z2 ... packing)


def _sym_inner(u: np.ndarray, w: np.ndarray) -> int:
    return int(np.sum(u[0::2] * w[1::2]) + np.sum(u[1::2] * w[0::2])) % 2


def _transvect(h: np.ndarray, v: np.ndarray) -> np.ndarray:
    if _sym_inner(v, h):
        return v ^ h
    return v.copy()


def _int_bits(k: int, width: int) -> np.ndarray:
    return np.array([(k >> j) & 1 for j in range(width)], dtype=np.uint8)


def _find_transvections(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectors (h1, h2) with Z_h2(Z_h1(x)) = y for nonzero x, y.

    Zero h means the identity map.  Uses the fact that any two distinct
    nonzero 2-bit pairs have symplectic inner product 1.
    """
    nn = len(x)
    zero = np.zeros(nn, dtype=np.uint8)
    if np.array_equal(x, y):
        return zero, zero
    if _sym_inner(x, y) == 1:
        return (x ^ y), zero
    z = np.zeros(nn, dtype=np.uint8)
    for i in range(nn // 2):
        x0, x1 = int(x[2 * i]), int(x[2 * i + 1])
        y0, y1 = int(y[2 * i]), int(y[2 * i + 1])
        if (x0 | x1) and (y0 | y1):
            z[2 * i] = x0 ^ y0
            z[2 * i + 1] = x1 ^ y1
            if z[2 * i] == 0 and z[2 * i + 1] == 0:
                z[2 * i + 1] = 1
                if x0 != x1:
                    z[2 * i] = 1
            return (x ^ z), (y ^ z)
    for vec in (x, y):
        for i in range(nn // 2):
            v0, v1 = int(vec[2 * i]), int(vec[2 * i + 1])
            if v0 | v1:
                if v0 == v1:
                    z[2 * i + 1] = 1
                else:
                    z[2 * i] = v1
                    z[2 * i + 1] = v0
                break
    return (x ^ z), (y ^ z)


def _symplectic_interleaved(index: int, n: int) -> np.ndarray:
    nn = 2 * n
    s = (1 << nn) - 1
    k = (index % s) + 1
    index //= s
    f1 = _int_bits(k, nn)
    e1 = np.zeros(nn, dtype=np.uint8)
    e1[0] = 1
    t1, t2 = _find_transvections(e1, f1)
    bits = _int_bits(index % (1 << (nn - 1)), nn - 1)
    index >>= nn - 1
    eprime = e1.copy()
    eprime[2:nn] = bits[1 : nn - 1]
    h0 = _transvect(t2, _transvect(t1, eprime))
    if bits[0] == 1:
        f1 = np.zeros(nn, dtype=np.uint8)
    if n == 1:
        g = np.eye(2, dtype=np.uint8)
    else:
        g = np.zeros((nn, nn), dtype=np.uint8)
        g[:2, :2] = np.eye(2, dtype=np.uint8)
        g[2:, 2:] = _symplectic_interleaved(index, n - 1)
    for j in range(nn):
        row = _transvect(t1, g[j])
        row = _transvect(t2, row)
        row = _transvect(h0, row)
        row = _transvect(f1, row)
        g[j] = row
    return g


def symplectic_from_index(index: int, n: int) -> np.ndarray:
    """The index-th binary symplectic matrix in (x | z) packing.

    Bijective for 0 <= index < symplectic_group_order(n).
    """
    if not 0 <= index < symplectic_group_order(n):
        raise ValueError("index out of range")
    g = _symplectic_interleaved(int(index), n)
    perm = np.empty(2 * n, dtype=np.intp)
    for q in range(n):
        perm[2 * q] = q
        perm[2 * q + 1] = n + q
    s = np.zeros_like(g)
    s[np.ix_(perm, perm)] = g
    return s


def _uniform_below(bound: int, rng: np.random.Generator) -> int:
    nbits = bound.bit_length()
    nchunks = (nbits + 31) // 32
    mask = (1 << nbits) - 1
    while True:
        value = 0
        for _ in range(nchunks):
            value = (value << 32) | int(rng.integers(0, 1 << 32, dtype=np.uint64))
        value &= mask
        if value < bound:
            return value


def sample_symplectic_uniform(n: int, rng: np.random.Generator) -> np.ndarray:
    return symplectic_from_index(_uniform_below(symplectic_group_order(n), rng), n)


def sample_clifford_uniform(n: int, rng: np.random.Generator) -> CliffordOp:
    """Uniform over the 4^n * |Sp(2n, 2)| Cliffords modulo global phase."""
    s = sample_symplectic_uniform(n, rng)
    parity = np.einsum("ij,ij->j", s[:n].astype(np.int64), s[n:].astype(np.int64)) % 2
    v = parity + 2 * rng.integers(0, 2, size=2 * n, dtype=np.int64)
    return CliffordOp(n, s, v, validate=False)


def sample_stabilizer_state_uniform(n: int, rng: np.random.Generator) -> StabilizerState:
    """Uniform over all 2^n prod_k (2^k + 1) stabilizer states.

    The Clifford group acts transitively on stabilizer states with
    stabilizer subgroups of equal size, so pushing |0..0> through a
    uniform Clifford is uniform.
    """
    return StabilizerState.zero_state(n).apply(sample_clifford_uniform(n, rng))


# ---------------------------------------------------------------------------
# Layer samplers


@dataclass(frozen=True)
class SamplerSpec:
    """Base for layer-distribution descriptions; ``pool`` names the 1Q set."""

    pool: str = "C24"

    def __post_init__(self):
        pool_gate_names(self.pool)  # raises on unknown id


@dataclass(frozen=True)
class PCnotSampler(SamplerSpec):
    """With probability p_cnot the layer has one uniform CNOT (uniform over
    the device's directed edges) and independent uniform pool gates on all
    other qubits; otherwise pool gates on every qubit."""

    p_cnot: float = 0.0
    kind: str = "pcnot"

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 <= self.p_cnot <= 1.0:
            raise ValueError("p_cnot must be in [0, 1]")


@dataclass(frozen=True)
class CategorySampler(SamplerSpec):
    """Pick a layer category from ``probabilities``: category 0 is all-1Q,
    category k >= 1 places one uniform CNOT from ``edge_groups[k-1]``."""

    probabilities: tuple[float, ...] = (1.0,)
    edge_groups: tuple[tuple[tuple[int, int], ...], ...] = ()
    kind: str = "category"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        object.__setattr__(
            self,
            "edge_groups",
            tuple(tuple((int(a), int(b)) for a, b in grp) for grp in self.edge_groups),
        )
        if len(self.probabilities) != len(self.edge_groups) + 1:
            raise ValueError("need one probability per category (all-1Q first)")
        if any(p < 0 for p in self.probabilities) or abs(sum(self.probabilities) - 1.0) > 1e-9:
            raise ValueError("category probabilities must be nonnegative and sum to 1")
        if any(len(grp) == 0 for grp in self.edge_groups):
            raise ValueError("edge groups must be nonempty")


@dataclass(frozen=True)
class PairingSampler(SamplerSpec):
    """Draw a uniformly random pairing of the qubits; each pair becomes a
    CNOT with probability p_cnot (orientation uniform over the declared
    directed edges for that pair), everything else gets pool gates."""

    p_cnot: float = 0.0
    kind: str = "pairing"

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 <= self.p_cnot <= 1.0:
            raise ValueError("p_cnot must be in [0, 1]")


def _check_pool(spec: SamplerSpec, device: DeviceSpec) -> tuple[str, ...]:
    names = pool_gate_names(spec.pool)
    if not all(device.allows_one_qubit_gate(name) for name in names):
        raise ValueError(f"pool {spec.pool!r} not available on a {device.gate_set!r} device")
    return names


def _fill_one_qubit(qubits: Iterable[int], names: Sequence[str], rng: np.random.Generator) -> list[GateLabel]:
    return [GateLabel(names[int(rng.integers(len(names)))], (q,)) for q in sorted(qubits)]


def _canonical_layer(gates: Iterable[GateLabel]) -> Layer:
    return tuple(sorted(gates, key=lambda g: min(g.qubits)))


def sample_layer(spec: SamplerSpec, device: DeviceSpec, rng: np.random.Generator) -> Layer:
    """One layer from the sampler's distribution, gates sorted by qubit."""
    names = _check_pool(spec, device)
    n = device.n
    if isinstance(spec, PCnotSampler):
        if rng.random() < spec.p_cnot:
            if not device.edges:
                raise ValueError("p_cnot > 0 on a device without CNOT edges")
            c, t = device.edges[int(rng.integers(len(device.edges)))]
            rest = set(range(n)) - {c, t}
            return _canonical_layer([GateLabel("CNOT", (c, t))] + _fill_one_qubit(rest, names, rng))
        return _canonical_layer(_fill_one_qubit(range(n), names, rng))
    if isinstance(spec, CategorySampler):
        u = rng.random()
        acc = 0.0
        category = len(spec.probabilities) - 1
        for k, p in enumerate(spec.probabilities):
            acc += p
            if u < acc:
                category = k
                break
        if category == 0:
            return _canonical_layer(_fill_one_qubit(range(n), names, rng))
        group = spec.edge_groups[category - 1]
        c, t = group[int(rng.integers(len(group)))]
        if not device.has_edge(c, t):
            raise ValueError(f"category edge ({c}, {t}) not declared by the device")
        rest = set(range(n)) - {c, t}
        return _canonical_layer([GateLabel("CNOT", (c, t))] + _fill_one_qubit(rest, names, rng))
    if isinstance(spec, PairingSampler):
        perm = rng.permutation(n)
        pairs = sorted(
            (tuple(sorted((int(perm[2 * i]), int(perm[2 * i + 1])))) for i in range(n // 2)),
            key=lambda p: p[0],
        )
        leftover = int(perm[-1]) if n % 2 else None
        gates: list[GateLabel] = []
        for a, b in pairs:
            if rng.random() < spec.p_cnot:
                orients = device.orientations(a, b)
                if not orients:
                    raise ValueError(f"pair ({a}, {b}) drawn for a CNOT but no edge is declared")
                c, t = orients[int(rng.integers(len(orients)))]
                gates.append(GateLabel("CNOT", (c, t)))
            else:
                gates.extend(_fill_one_qubit((a, b), names, rng))
        if leftover is not None:
            gates.extend(_fill_one_qubit((leftover,), names, rng))
        return _canonical_layer(gates)
    raise TypeError(f"unknown sampler spec {type(spec).__name__}")


def _double_factorial(k: int) -> int:
    if k <= 0:
        return 1
    return k * _double_factorial(k - 2)


def _parse_layer(layer: Layer, n: int, names: Sequence[str]):
    """Split into (cnot qubit pairs, 1q names); None when not a pool layer."""
    cnots = []
    oneq = {}
    seen: set[int] = set()
    for g in layer:
        if any(q in seen for q in g.qubits):
            return None
        seen.update(g.qubits)
        if g.name == "CNOT":
            cnots.append(g.qubits)
        elif len(g.qubits) == 1 and g.name in names:
            oneq[g.qubits[0]] = g.name
        else:
            return None
    if len(seen) != n:
        return None
    return cnots, oneq


def layer_probability(spec: SamplerSpec, device: DeviceSpec, layer: Layer) -> float:
    """Exact probability of drawing ``layer`` from the sampler; 0 when
    unreachable."""
    names = _check_pool(spec, device)
    n = device.n
    g = len(names)
    parsed = _parse_layer(layer, n, names)
    if parsed is None:
        return 0.0
    cnots, oneq = parsed
    if isinstance(spec, PCnotSampler):
        if not cnots:
            return (1.0 - spec.p_cnot) * g ** -n
        if len(cnots) == 1 and device.has_edge(*cnots[0]):
            return spec.p_cnot / len(device.edges) * g ** -(n - 2)
        return 0.0
    if isinstance(spec, CategorySampler):
        if len(cnots) > 1:
            return 0.0
        if not cnots:
            return spec.probabilities[0] * g ** -n
        edge = cnots[0]
        total = 0.0
        for k, group in enumerate(spec.edge_groups):
            if edge in group and device.has_edge(*edge):
                total += spec.probabilities[k + 1] / len(group) * g ** -(n - 2)
        return total
    if isinstance(spec, PairingSampler):
        k = len(cnots)
        npairs = n // 2
        if k > npairs:
            return 0.0
        prob = 1.0
        for c, t in cnots:
            orients = device.orientations(c, t)
            if (c, t) not in orients:
                return 0.0
            prob *= spec.p_cnot / len(orients)
        r = n - 2 * k
        if n % 2 == 0:
            matchings = _double_factorial(r - 1) / _double_factorial(n - 1)
        else:
            matchings = (r * _double_factorial(r - 2)) / (n * _double_factorial(n - 2))
        return prob * matchings * (1.0 - spec.p_cnot) ** (npairs - k) * g ** -r
    raise TypeError(f"unknown sampler spec {type(spec).__name__}")


def _matchings(qubits: tuple[int, ...]):
    """All pairings of the listed qubits (one qubit left out when odd),
    each as a tuple of sorted pairs."""
    if len(qubits) <= 1:
        yield ()
        return
    first, rest = qubits[0], qubits[1:]
    if len(qubits) % 2 == 1:
        # the left-out qubit can be any of them
        for i in range(len(qubits)):
            remaining = qubits[:i] + qubits[i + 1 :]
            yield from _matchings(remaining)
        return
    for i, partner in enumerate(rest):
        remaining = rest[:i] + rest[i + 1 :]
        for sub in _matchings(remaining):
            yield ((first, partner),) + sub


def cnot_placement_distribution(spec: SamplerSpec, device: DeviceSpec) -> list[tuple[tuple[tuple[int, int], ...], float]]:
    """The distribution over CNOT placements (tuples of directed edges)
    induced by the sampler, marginalized over 1Q gate choices.

    Used for exact layer-averaged error rates: with per-qubit 1Q error
    rates, a layer's error probability depends only on where the CNOTs sit.
    """
    if isinstance(spec, PCnotSampler):
        out = [((), 1.0 - spec.p_cnot)]
        if spec.p_cnot > 0:
            if not device.edges:
                raise ValueError("p_cnot > 0 on a device without CNOT edges")
            out.extend((((c, t),), spec.p_cnot / len(device.edges)) for c, t in device.edges)
        return _merge_placements(out)
    if isinstance(spec, CategorySampler):
        out = [((), spec.probabilities[0])]
        for k, group in enumerate(spec.edge_groups):
            out.extend((((c, t),), spec.probabilities[k + 1] / len(group)) for c, t in group)
        return _merge_placements(out)
    if isinstance(spec, PairingSampler):
        n = device.n
        qubits = tuple(range(n))
        if n % 2 == 0:
            total_matchings = _double_factorial(n - 1)
        else:
            total_matchings = n * _double_factorial(n - 2)
        out = []
        count = 0
        for matching in _matchings(qubits):
            count += 1
            base = 1.0 / total_matchings
            # expand CNOT on/off and orientation per pair
            configs: list[tuple[tuple[tuple[int, int], ...], float]] = [((), base)]
            for a, b in matching:
                nxt = []
                for placed, p in configs:
                    nxt.append((placed, p * (1.0 - spec.p_cnot)))
                    if spec.p_cnot > 0:
                        orients = device.orientations(a, b)
                        if not orients:
                            raise ValueError(
                                f"pair ({a}, {b}) can be drawn for a CNOT but no edge is declared"
                            )
                        for e in orients:
                            nxt.append((placed + (e,), p * spec.p_cnot / len(orients)))
                configs = nxt
            out.extend(configs)
        assert count == total_matchings
        return _merge_placements(out)
    raise TypeError(f"unknown sampler spec {type(spec).__name__}")


def _merge_placements(items: list[tuple[tuple[tuple[int, int], ...], float]]):
    merged: dict[tuple[tuple[int, int], ...], float] = {}
    for placement, p in items:
        key = tuple(sorted(placement))
        merged[key] = merged.get(key, 0.0) + p
    return sorted(merged.items())


# ---------------------------------------------------------------------------
# Error-spreading diagnostics


@dataclass(frozen=True)
class SpreadReport:
    """How a seeded weight-1 error spreads under random layers.

    ``mean_weight[d]`` is the average Pauli weight after d layers and
    ``collision_rate`` is the probability that two independent trials end
    on the same Pauli, estimated over all trial pairs.
    """

    n: int
    depth: int
    trials: int
    mean_weight: tuple[float, ...]
    collision_rate: float


def estimate_error_spreading(
    spec: SamplerSpec | None,
    device: DeviceSpec,
    depth: int,
    trials: int,
    rng: np.random.Generator,
) -> SpreadReport:
    """Propagate random weight-1 Paulis through ``depth`` random layers.

    With ``spec=None`` each step conjugates by a fresh uniform n-qubit
    Clifford instead of a sampled layer; in that mode the final Paulis are
    uniform over the 4^n - 1 nonzero vectors, so the collision rate tends
    to 1 / (4^n - 1).
    """
    n = device.n
    weights = np.zeros((depth + 1, trials))
    finals: dict[bytes, int] = {}
    for t in range(trials):
        vec = np.zeros(2 * n, dtype=np.uint8)
        q = int(rng.integers(n))
        kind = int(rng.integers(3))  # 0 X, 1 Z, 2 Y
        if kind in (0, 2):
            vec[q] = 1
        if kind in (1, 2):
            vec[n + q] = 1
        weights[0, t] = 1
        for d in range(1, depth + 1):
            if spec is None:
                s = sample_symplectic_uniform(n, rng)
            else:
                s = layer_to_clifford(sample_layer(spec, device, rng), n).s
            vec = (s.astype(np.int64) @ vec) % 2
            vec = vec.astype(np.uint8)
            weights[d, t] = np.count_nonzero(vec[:n] | vec[n:])
        key = vec.tobytes()
        finals[key] = finals.get(key, 0) + 1
    pairs = trials * (trials - 1) // 2
    coll = sum(c * (c - 1) // 2 for c in finals.values()) / pairs if pairs else 0.0
    return SpreadReport(
        n=n,
        depth=depth,
        trials=trials,
        mean_weight=tuple(float(w) for w in weights.mean(axis=1)),
        collision_rate=float(coll),
    )
