"""Device descriptions: qubit count, directed CNOT connectivity, 1Q gate set.

CNOT availability is directional; an undirected link is present when either
orientation is declared.  The 1Q gate set is named by id: "HPI" allows the
gates I, H and P (phase), "C24" allows the full single-qubit Clifford group
as labels C0..C23 plus the aliases I, X, Y, Z, H, P.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

__all__ = [
    "DeviceSpec",
    "GATE_SET_IDS",
    "pool_gate_names",
    "all_to_all",
    "ring",
    "ring_with_center",
    "ring_center_edges",
]

GATE_SET_IDS = ("HPI", "C24")

_HPI_NAMES = ("I", "H", "P")
_C24_NAMES = tuple(f"C{k}" for k in range(24))
_C24_ALIASES = ("I", "X", "Y", "Z", "H", "P")


def pool_gate_names(gate_set: str) -> tuple[str, ...]:
    """The 1Q gate labels a sampler draws from, in their canonical order."""
    if gate_set == "HPI":
        return _HPI_NAMES
    if gate_set == "C24":
        return _C24_NAMES
    raise ValueError(f"unknown gate set {gate_set!r}")


@dataclass(frozen=True)
class DeviceSpec:
    """An n-qubit device with directed CNOT edges and a named 1Q gate set."""

    n: int
    edges: tuple[tuple[int, int], ...]
    gate_set: str = "C24"
    qubits: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("device needs at least one qubit")
        if self.gate_set not in GATE_SET_IDS:
            raise ValueError(f"gate_set must be one of {GATE_SET_IDS}, got {self.gate_set!r}")
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        object.__setattr__(self, "edges", edges)
        seen = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop edge ({a}, {b})")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge ({a}, {b}) out of range for n={self.n}")
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))
        if not self.qubits:
            object.__setattr__(self, "qubits", tuple(f"q{i}" for i in range(self.n)))
        elif len(self.qubits) != self.n:
            raise ValueError("qubit name count must equal n")

    def allows_one_qubit_gate(self, name: str) -> bool:
        if self.gate_set == "HPI":
            return name in _HPI_NAMES
        return name in _C24_NAMES or name in _C24_ALIASES

    def has_edge(self, control: int, target: int) -> bool:
        return (control, target) in self.edges

    def has_link(self, a: int, b: int) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def orientations(self, a: int, b: int) -> tuple[tuple[int, int], ...]:
        """Declared directed edges between the unordered pair {a, b}."""
        out = []
        if (a, b) in self.edges:
            out.append((a, b))
        if (b, a) in self.edges:
            out.append((b, a))
        return tuple(out)

    def neighbors(self, q: int) -> tuple[int, ...]:
        out = {b for a, b in self.edges if a == q} | {a for a, b in self.edges if b == q}
        return tuple(sorted(out))

    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        seen = {0}
        queue = deque([0])
        while queue:
            q = queue.popleft()
            for nb in self.neighbors(q):
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        return len(seen) == self.n

    def shortest_path(self, a: int, b: int) -> list[int]:
        """Qubit sequence from a to b along undirected links (BFS, ties to
        the lower-indexed neighbor)."""
        if a == b:
            return [a]
        prev: dict[int, int] = {a: a}
        queue = deque([a])
        while queue:
            q = queue.popleft()
            for nb in self.neighbors(q):
                if nb not in prev:
                    prev[nb] = q
                    if nb == b:
                        path = [b]
                        while path[-1] != a:
                            path.append(prev[path[-1]])
                        return path[::-1]
                    queue.append(nb)
        raise ValueError(f"no path between qubits {a} and {b}")

    def eccentricity_order(self) -> list[int]:
        """Qubits from most to least peripheral, ties by index."""
        eccs = []
        for q in range(self.n):
            dist = {q: 0}
            queue = deque([q])
            while queue:
                u = queue.popleft()
                for nb in self.neighbors(u):
                    if nb not in dist:
                        dist[nb] = dist[u] + 1
                        queue.append(nb)
            ecc = max(dist.values()) if len(dist) == self.n else self.n
            eccs.append((-(ecc), q))
        return [q for _, q in sorted(eccs)]


def all_to_all(n: int, gate_set: str = "C24") -> DeviceSpec:
    edges = tuple((a, b) for a in range(n) for b in range(n) if a != b)
    return DeviceSpec(n, edges, gate_set)


def ring(n: int, gate_set: str = "C24") -> DeviceSpec:
    """A directed ring: CNOT from each qubit to its successor only."""
    if n < 2:
        return DeviceSpec(n, (), gate_set)
    if n == 2:
        return DeviceSpec(n, ((0, 1),), gate_set)
    edges = tuple((i, (i + 1) % n) for i in range(n))
    return DeviceSpec(n, edges, gate_set)


def ring_center_edges(ring_size: int = 4) -> tuple[tuple[tuple[int, int], ...], tuple[tuple[int, int], ...]]:
    """(ring edges, center edges) for the ring-plus-central-qubit layout."""
    ring_edges = tuple((i, (i + 1) % ring_size) for i in range(ring_size))
    center = ring_size
    center_edges = tuple((center, i) for i in range(ring_size))
    return ring_edges, center_edges


def ring_with_center(ring_size: int = 4, gate_set: str = "HPI") -> DeviceSpec:
    """Qubits 0..ring_size-1 on a ring, plus a hub wired to each of them."""
    ring_edges, center_edges = ring_center_edges(ring_size)
    return DeviceSpec(ring_size + 1, ring_edges + center_edges, gate_set)
