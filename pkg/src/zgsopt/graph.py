"""Weighted undirected communication graphs and their Laplacian spectra."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConnectivityError, NumericalError, ValidationError


@dataclass(frozen=True, eq=False)
class Topology:
    """Symmetric nonnegative weight matrix with zero diagonal.

    Construct through :func:`build_topology` or :func:`from_adjacency`, which
    enforce symmetry and connectivity. The weight matrix is read-only.
    """

    n_agents: int
    weights: np.ndarray

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        i, j = np.nonzero(np.triu(self.weights, 1))
        return [(int(a), int(b), float(self.weights[a, b])) for a, b in zip(i, j)]

    @property
    def degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    @property
    def a_min(self) -> float:
        """Smallest nonzero edge weight."""
        w = self.weights[self.weights > 0]
        return float(w.min()) if w.size else 0.0

    @property
    def laplacian(self) -> np.ndarray:
        return np.diag(self.weights.sum(axis=1)) - self.weights

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return self.n_agents == other.n_agents and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash((self.n_agents, self.weights.tobytes()))


@dataclass(frozen=True)
class LaplacianSpectrum:
    laplacian: np.ndarray
    eigenvalues: np.ndarray
    lambda2: float
    lambdaN: float


def _is_connected(weights: np.ndarray) -> bool:
    n = weights.shape[0]
    if n <= 1:
        return True
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = [0]
    while frontier:
        k = frontier.pop()
        for j in np.nonzero(weights[k] > 0)[0]:
            if not seen[j]:
                seen[j] = True
                frontier.append(int(j))
    return bool(seen.all())


def _freeze(weights: np.ndarray) -> Topology:
    if not _is_connected(weights):
        raise ConnectivityError("graph induced by positive weights is not connected")
    weights = np.array(weights, dtype=float)
    weights.setflags(write=False)
    return Topology(n_agents=weights.shape[0], weights=weights)


def build_topology(n: int, edge_list: Iterable[Sequence]) -> Topology:
    """Assemble a connected undirected topology from ``(i, j[, weight])`` tuples.

    Weights default to 1. Self-loops, nonpositive weights, out-of-range
    indices and duplicate edges raise :class:`ValidationError`; a
    disconnected result raises :class:`ConnectivityError`.
    """
    if n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    w = np.zeros((n, n))
    for edge in edge_list:
        if len(edge) == 2:
            i, j = edge
            weight = 1.0
        elif len(edge) == 3:
            i, j, weight = edge
        else:
            raise ValidationError(f"edge must be (i, j) or (i, j, weight), got {edge!r}")
        i, j, weight = int(i), int(j), float(weight)
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationError(f"edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise ValidationError(f"self-loop at node {i}")
        if not weight > 0:
            raise ValidationError(f"edge ({i}, {j}) has nonpositive weight {weight}")
        if w[i, j] != 0:
            raise ValidationError(f"duplicate edge ({i}, {j})")
        w[i, j] = w[j, i] = weight
    return _freeze(w)


def from_adjacency(weights) -> Topology:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValidationError("adjacency must be a square matrix")
    if np.any(w < 0):
        raise ValidationError("adjacency has negative weights")
    if np.any(np.diag(w) != 0):
        raise ValidationError("adjacency must have a zero diagonal")
    if not np.array_equal(w, w.T):
        raise ValidationError("adjacency must be symmetric")
    return _freeze(w)


def ring(n: int, weight: float = 1.0) -> Topology:
    if n < 3:
        raise ValidationError("ring needs at least 3 nodes")
    return build_topology(n, [(k, (k + 1) % n, weight) for k in range(n)])


def path(n: int, weight: float = 1.0) -> Topology:
    return build_topology(n, [(k, k + 1, weight) for k in range(n - 1)])


def star(n: int, weight: float = 1.0) -> Topology:
    return build_topology(n, [(0, k, weight) for k in range(1, n)])


def complete(n: int, weight: float = 1.0) -> Topology:
    return build_topology(n, [(i, j, weight) for i in range(n) for j in range(i + 1, n)])


def random_connected(n: int, prob: float = 0.1, seed: int = 0, max_tries: int = 10_000) -> Topology:
    """Erdos-Renyi G(n, prob) with unit weights, redrawn until connected."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        upper = np.triu(rng.random((n, n)) < prob, 1)
        w = (upper | upper.T).astype(float)
        if _is_connected(w):
            return _freeze(w)
    raise ConnectivityError(f"no connected G({n}, {prob}) drawn in {max_tries} tries")


def named(kind: str, n: int, **kwargs) -> Topology:
    """Dispatch for the config-level generator names."""
    generators = {
        "ring": ring,
        "complete": complete,
        "path": path,
        "star": star,
        "random_connected": random_connected,
    }
    if kind not in generators:
        raise ValidationError(f"unknown graph generator {kind!r}; choose from {sorted(generators)}")
    return generators[kind](n, **kwargs)


def spectrum(topo: Topology) -> LaplacianSpectrum:
    """Laplacian and its full eigenvalue list via dense symmetric eigensolve."""
    lap = topo.laplacian
    try:
        eig = np.linalg.eigvalsh(lap)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Laplacian eigensolve did not converge: {exc}") from exc
    eig = np.sort(eig)
    # exact zero for the consensus mode; eigvalsh returns ~1e-16 noise there
    eig[0] = 0.0
    lambda2 = float(eig[1]) if eig.size > 1 else 0.0
    return LaplacianSpectrum(laplacian=lap, eigenvalues=eig, lambda2=lambda2, lambdaN=float(eig[-1]))


@dataclass(frozen=True)
class SwitchingSchedule:
    """Piecewise-constant topology signal; each segment holds until the next start."""

    segments: tuple[tuple[float, Topology], ...]

    def __post_init__(self):
        if not self.segments:
            raise ValidationError("schedule needs at least one segment")
        starts = [s for s, _ in self.segments]
        if starts[0] != 0:
            raise ValidationError("first segment must start at t = 0")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValidationError("segment start times must be strictly increasing")
        n = self.segments[0][1].n_agents
        if any(topo.n_agents != n for _, topo in self.segments):
            raise ValidationError("all segments must have the same number of agents")

    @classmethod
    def static(cls, topo: Topology) -> "SwitchingSchedule":
        return cls(((0.0, topo),))

    @classmethod
    def periodic(cls, topologies: Sequence[Topology], period: float, t_end: float) -> "SwitchingSchedule":
        """Cycle through ``topologies`` every ``period`` seconds up to ``t_end``."""
        if period <= 0:
            raise ValidationError("switching period must be positive")
        count = int(np.ceil(t_end / period)) if t_end > 0 else 1
        return cls(tuple((k * period, topologies[k % len(topologies)]) for k in range(max(count, 1))))

    @property
    def n_agents(self) -> int:
        return self.segments[0][1].n_agents

    @property
    def starts(self) -> list[float]:
        return [s for s, _ in self.segments]

    def topologies(self) -> list[Topology]:
        unique: list[Topology] = []
        for _, topo in self.segments:
            if topo not in unique:
                unique.append(topo)
        return unique

    @property
    def lambda2_min(self) -> float:
        return min(spectrum(t).lambda2 for t in self.topologies())

    @property
    def a_min(self) -> float:
        return min(t.a_min for t in self.topologies())


def topology_at(schedule: SwitchingSchedule, t: float) -> Topology:
    """Topology active at time ``t`` (right-continuous at switch instants)."""
    k = bisect.bisect_right(schedule.starts, t) - 1
    return schedule.segments[max(k, 0)][1]
