"""Hierarchical sub-range tree and flat-gain beamforming vectors."""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .array_channel import AngleGrid


@dataclass(frozen=True)
class StagePlan:
    """Branching factors ``[K_1, ..., K_S]`` whose product equals N."""

    k_vector: tuple[int, ...]
    n_antennas: int

    def __init__(self, k_vector: Sequence[int], n_antennas: int):
        ks = tuple(int(k) for k in k_vector)
        if not ks:
            raise ValueError("k_vector must be non-empty")
        if any(k < 2 for k in ks):
            raise ValueError(f"every branching factor must be >= 2, got {list(ks)}")
        if math.prod(ks) != n_antennas:
            raise ValueError(
                f"product of k_vector {list(ks)} is {math.prod(ks)}, expected N={n_antennas}")
        object.__setattr__(self, "k_vector", ks)
        object.__setattr__(self, "n_antennas", int(n_antennas))

    @classmethod
    def uniform(cls, k: int, n_antennas: int) -> "StagePlan":
        stages = round(math.log(n_antennas, k))
        return cls([k] * stages, n_antennas)

    @property
    def n_stages(self) -> int:
        return len(self.k_vector)

    @property
    def total_measurements(self) -> int:
        """Cost of the fixed-rate scheme, ``sum K_s^2``."""
        return sum(k * k for k in self.k_vector)

    def subrange_size(self, stage: int) -> int:
        """Grid points per sub-range at ``stage`` (1-based; 0 is the root)."""
        return self.n_antennas // math.prod(self.k_vector[:stage])


@dataclass(frozen=True)
class SubRange:
    stage: int
    branch_path: tuple[int, ...]
    start: int
    size: int

    @property
    def grid_indices(self) -> range:
        return range(self.start, self.start + self.size)

    def __contains__(self, index: int) -> bool:
        return self.start <= index < self.start + self.size


def root_subrange(plan: StagePlan) -> SubRange:
    return SubRange(0, (), 0, plan.n_antennas)


@dataclass(frozen=True, eq=False)
class BeamVector:
    coefficients: np.ndarray
    subrange: SubRange
    gain_constant: float


def enumerate_subranges(plan: StagePlan, parent: SubRange | None = None) -> list[SubRange]:
    """Split ``parent`` (root if None) into ``K_{s+1}`` contiguous children, 1-based k."""
    if parent is None:
        parent = root_subrange(plan)
    if parent.stage >= plan.n_stages:
        raise ValueError(f"sub-range at stage {parent.stage} is already at the final stage")
    k = plan.k_vector[parent.stage]
    size = parent.size // k
    return [SubRange(parent.stage + 1, parent.branch_path + (j + 1,),
                     parent.start + j * size, size)
            for j in range(k)]


@functools.lru_cache(maxsize=16)
def _left_pinv(n: int) -> np.ndarray:
    """``(U U^H)^-1 U`` for the N-point grid."""
    u = AngleGrid(n).steering_matrix()
    gram = u @ u.conj().T
    if np.linalg.cond(gram) > 1e12:
        raise np.linalg.LinAlgError("steering Gram matrix is numerically singular")
    pinv = np.linalg.solve(gram, u)
    pinv.setflags(write=False)
    return pinv


def design_beam(subrange: SubRange, grid: AngleGrid) -> BeamVector:
    """Solve ``U^H f = z`` via the left pseudo-inverse and scale to unit norm.

    ``z`` equals the gain constant on the sub-range and zero elsewhere.
    """
    if subrange.size < 1:
        raise ValueError("empty sub-range")
    pinv = _left_pinv(grid.n_antennas)
    f = pinv[:, subrange.start:subrange.start + subrange.size].sum(axis=1)
    c = 1.0 / np.linalg.norm(f)
    return BeamVector(f * c, subrange, c)


class Codebook:
    """Lazily built cache of the beams reachable under a stage plan.

    Transmit and receive sides share the same beams.
    """

    def __init__(self, plan: StagePlan, grid: AngleGrid):
        if plan.n_antennas != grid.n_antennas:
            raise ValueError("plan and grid disagree on N")
        self.plan = plan
        self.grid = grid
        self._children: dict[tuple[int, ...], list[BeamVector]] = {}
        self._gains: dict[int, float] = {}

    @property
    def n_stages(self) -> int:
        return self.plan.n_stages

    def beams(self, parent: SubRange | None = None) -> list[BeamVector]:
        """The K beams that split ``parent`` (root if None)."""
        path = () if parent is None else parent.branch_path
        cached = self._children.get(path)
        if cached is None:
            if parent is None:
                parent = root_subrange(self.plan)
            cached = [design_beam(sr, self.grid)
                      for sr in enumerate_subranges(self.plan, parent)]
            stage = parent.stage + 1
            c = cached[0].gain_constant
            if any(abs(b.gain_constant - c) > 1e-9 for b in cached):
                raise AssertionError(f"unequal gain constants at stage {stage}")
            prev = self._gains.setdefault(stage, c)
            if abs(prev - c) > 1e-9:
                raise AssertionError(f"unequal gain constants at stage {stage}")
            self._children[path] = cached
        return cached

    def lookup(self, stage: int, branch_path: Sequence[int], k: int) -> BeamVector:
        """Beam ``k`` (1-based) under the ancestor chain ``branch_path`` of length stage-1."""
        path = tuple(branch_path)
        if len(path) != stage - 1:
            raise ValueError("branch_path length must equal stage - 1")
        parent = None
        for s in range(1, stage):
            parent = self.beams(parent)[path[s - 1] - 1].subrange
        return self.beams(parent)[k - 1]

    def gain_constant(self, stage: int) -> float:
        if stage not in self._gains:
            self.lookup(stage, (1,) * (stage - 1), 1)
        return self._gains[stage]

    def iter_beams(self) -> Iterator[BeamVector]:
        """Every reachable beam, depth-first in increasing grid order."""
        def walk(parent):
            for beam in self.beams(parent):
                yield beam
                if beam.subrange.stage < self.n_stages:
                    yield from walk(beam.subrange)
        yield from walk(None)


def build_codebook(plan: StagePlan, grid: AngleGrid, eager: bool = True) -> Codebook:
    cb = Codebook(plan, grid)
    if eager:
        for _ in cb.iter_beams():
            pass
    return cb


def export_beam_patterns(codebook: Codebook, path) -> int:
    """Write ``|u^H(eps_i) f|`` for every beam and grid index as long-format CSV.

    Returns the number of data rows written.
    """
    u = codebook.grid.steering_matrix()
    rows = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "branch_path", "k", "grid_index", "magnitude"])
        for beam in codebook.iter_beams():
            sr = beam.subrange
            response = np.abs(u.conj().T @ beam.coefficients)
            parent = "-".join(str(p) for p in sr.branch_path[:-1])
            for i, mag in enumerate(response):
                writer.writerow([sr.stage, parent, sr.branch_path[-1], i, f"{mag:.6g}"])
                rows += 1
    return rows
