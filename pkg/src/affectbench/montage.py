"""Electrode montage geometry and channel adjacency.

A montage is a set of named 3-D sensor positions on the unit sphere.
Adjacency derives from geometry: two channels are neighbors when their
euclidean distance is below 1.25x the median nearest-neighbor distance,
which yields a connected, plausible graph for any reasonably uniform
layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyAdjacency, MissingMontage


@dataclass(frozen=True)
class Montage:
    names: tuple[str, ...]
    positions: np.ndarray  # (n_channels, 3)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.shape != (len(self.names), 3):
            raise ValueError("positions must be (n_channels, 3)")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_channels(self) -> int:
        return len(self.names)

    def index_of(self, names: tuple[str, ...]) -> np.ndarray:
        """Positions reordered to match ``names``; raises if any is missing."""
        lookup = {n: i for i, n in enumerate(self.names)}
        missing = [n for n in names if n not in lookup]
        if missing:
            raise MissingMontage(f"montage lacks positions for channels {missing}")
        return self.positions[[lookup[n] for n in names]]


def spherical_cap_montage(n_channels: int, prefix: str = "E") -> Montage:
    """Deterministic quasi-uniform layout on the upper spherical cap.

    Golden-angle spiral over z in [0.15, 0.95]; good enough stand-in for a
    real cap layout when only geometry (distances, neighborhoods) matters.
    """
    if n_channels < 1:
        raise ValueError("n_channels must be >= 1")
    golden = np.pi * (3.0 - np.sqrt(5.0))
    k = np.arange(n_channels)
    z = 0.95 - (0.80 * k / max(n_channels - 1, 1))
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    theta = golden * k
    pos = np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=1)
    names = tuple(f"{prefix}{i + 1:02d}" for i in range(n_channels))
    return Montage(names=names, positions=pos)


@dataclass(frozen=True)
class ElectrodeAdjacency:
    """Symmetric neighbor lists over channel indices (no self-loops)."""

    neighbors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        neigh = tuple(tuple(sorted(set(ns))) for ns in self.neighbors)
        for i, ns in enumerate(neigh):
            for j in ns:
                if j == i:
                    raise ValueError(f"self-loop at channel {i}")
                if not 0 <= j < len(neigh):
                    raise ValueError(f"neighbor index {j} out of range")
                if i not in neigh[j]:
                    raise ValueError(f"adjacency not symmetric: {i}->{j}")
        object.__setattr__(self, "neighbors", neigh)

    @property
    def n_channels(self) -> int:
        return len(self.neighbors)

    def connected_components(self, members: np.ndarray) -> list[list[int]]:
        """Connected components of the subgraph induced by ``members``.

        ``members`` is a boolean mask over channels; returns components as
        sorted index lists, in order of their smallest member.
        """
        if self.n_channels == 0:
            raise EmptyAdjacency("adjacency graph has no channels")
        member_set = set(np.flatnonzero(members).tolist())
        seen: set[int] = set()
        components = []
        for start in sorted(member_set):
            if start in seen:
                continue
            stack, comp = [start], []
            seen.add(start)
            while stack:
                node = stack.pop()
                comp.append(node)
                for nb in self.neighbors[node]:
                    if nb in member_set and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
            components.append(sorted(comp))
        return components


def adjacency_from_montage(montage: Montage, scale: float = 1.25) -> ElectrodeAdjacency:
    """Neighbors = pairs closer than ``scale`` x median nearest-neighbor distance."""
    pos = montage.positions
    n = pos.shape[0]
    if n == 0:
        raise EmptyAdjacency("montage has no channels")
    if n == 1:
        return ElectrodeAdjacency(neighbors=((),))
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    np.fill_diagonal(dist, np.inf)
    cutoff = scale * float(np.median(dist.min(axis=1)))
    neighbors = tuple(tuple(np.flatnonzero(dist[i] < cutoff).tolist()) for i in range(n))
    return ElectrodeAdjacency(neighbors=neighbors)
