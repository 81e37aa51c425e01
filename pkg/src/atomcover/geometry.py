"""Structure model and periodic k-nearest-neighbor search.

Conventions match pymatgen/ASE: rows of the cell matrix are lattice
vectors, Cartesian positions are in angstrom, ``r = s @ cell`` maps
fractional to Cartesian coordinates.

Neighbor queries replicate periodic images explicitly (out to
``ceil(search_radius / cell_height) + 1`` images per periodic direction)
and prune candidates with a k-d tree.  Minimum-image shortcuts are
deliberately avoided: they are wrong for cells smaller than the search
radius, which occur routinely in the datasets this package targets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import CellError, InputError

__all__ = [
    "Structure",
    "Dataset",
    "NeighborSet",
    "ReplicatedPoints",
    "replicate_for_search",
    "nearest_neighbors",
]

#: Cell determinants below this (in cubic angstrom) are treated as singular.
_SINGULAR_VOLUME = 1e-12

#: Sorted-distance slots beyond the last real neighbor hold this sentinel.
PADDING_DISTANCE = np.inf


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Structure:
    """One periodic or aperiodic collection of atoms.

    Parameters
    ----------
    cell : (3, 3) array
        Lattice vectors as rows, in angstrom.  May be all zeros for a
        fully aperiodic structure.
    pbc : (3,) bool array
        Periodic flags per lattice direction.
    positions : (N, 3) array
        Cartesian coordinates in angstrom.
    species : sequence of N chemical symbols
        Stored for bookkeeping and I/O; never enters any descriptor.
    forces : optional (N, 3) array
        Per-atom forces in eV/angstrom.
    energy : optional float
        Total energy in eV; carried through to reports only.
    info : dict
        Extra comment-line key/value pairs preserved for lossless
        round-trips through extended-XYZ files.
    """

    cell: np.ndarray
    pbc: np.ndarray
    positions: np.ndarray
    species: tuple[str, ...]
    forces: np.ndarray | None = None
    energy: float | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 3 or positions.shape[0] < 1:
            raise InputError(f"positions must be (N, 3) with N >= 1, got {positions.shape}")
        if not np.all(np.isfinite(positions)):
            raise InputError("positions contain non-finite values")
        cell = np.array(self.cell, dtype=float)
        if cell.shape != (3, 3):
            raise InputError(f"cell must be 3x3, got {cell.shape}")
        if not np.all(np.isfinite(cell)):
            raise InputError("cell contains non-finite values")
        pbc = np.array(self.pbc, dtype=bool)
        if pbc.shape != (3,):
            raise InputError(f"pbc must have 3 flags, got {pbc.shape}")
        if pbc.any() and abs(np.linalg.det(cell)) < _SINGULAR_VOLUME:
            raise CellError("cell is singular but periodic flags are set")
        species = tuple(str(s) for s in self.species)
        if len(species) != len(positions):
            raise InputError(
                f"species count {len(species)} does not match atom count {len(positions)}"
            )
        forces = self.forces
        if forces is not None:
            forces = np.array(forces, dtype=float)
            if forces.shape != positions.shape:
                raise InputError(
                    f"forces shape {forces.shape} does not match positions {positions.shape}"
                )
            object.__setattr__(self, "forces", _freeze(forces))
        object.__setattr__(self, "cell", _freeze(cell))
        object.__setattr__(self, "pbc", _freeze(pbc))
        object.__setattr__(self, "positions", _freeze(positions))
        object.__setattr__(self, "species", species)

    def __len__(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class Dataset:
    """Ordered collection of structures."""

    structures: tuple[Structure, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "structures", tuple(self.structures))

    def __len__(self) -> int:
        return len(self.structures)

    def __iter__(self):
        return iter(self.structures)

    def __getitem__(self, i: int) -> Structure:
        return self.structures[i]

    @property
    def n_environments(self) -> int:
        """Total atom count over all structures."""
        return sum(len(s) for s in self.structures)


@dataclass(frozen=True)
class NeighborSet:
    """Sorted neighbor shell of one atom.

    ``distances`` is ascending; entries past ``valid_count`` are padding
    (``inf`` distance) and contribute zero weight downstream.  Distinct
    periodic images of the same atom count as distinct neighbors; only
    the zero-distance self-image is excluded.
    """

    center_index: int
    distances: np.ndarray
    neighbor_positions: np.ndarray
    indices: np.ndarray
    valid_count: int


@dataclass(frozen=True)
class ReplicatedPoints:
    """Expanded point set with image bookkeeping.

    Entry order is fixed: image offsets in lexicographic order, atoms in
    structure order within each image.
    """

    positions: np.ndarray  # (M, 3)
    atom_indices: np.ndarray  # (M,)
    image_offsets: np.ndarray  # (M, 3) integer lattice offsets


def _wrap_positions(structure: Structure) -> np.ndarray:
    """Positions wrapped into the cell along periodic directions only."""
    if not structure.pbc.any():
        return structure.positions
    frac = structure.positions @ np.linalg.inv(structure.cell)
    frac = frac.copy()
    for axis in range(3):
        if structure.pbc[axis]:
            frac[:, axis] -= np.floor(frac[:, axis])
    return frac @ structure.cell


def _cell_heights(cell: np.ndarray) -> np.ndarray:
    """Perpendicular spacing between opposite cell faces, per direction."""
    volume = abs(np.linalg.det(cell))
    heights = np.empty(3)
    for axis in range(3):
        cross = np.cross(cell[(axis + 1) % 3], cell[(axis + 2) % 3])
        heights[axis] = volume / np.linalg.norm(cross)
    return heights


def replicate_for_search(structure: Structure, search_radius: float) -> ReplicatedPoints:
    """Replicate periodic images so that any point within ``search_radius``
    of the (wrapped) cell contents is present exactly once.
    """
    if search_radius <= 0:
        raise InputError(f"search_radius must be positive, got {search_radius}")
    base = _wrap_positions(structure)
    n = len(structure)
    if not structure.pbc.any():
        return ReplicatedPoints(
            positions=base,
            atom_indices=np.arange(n),
            image_offsets=np.zeros((n, 3), dtype=int),
        )
    heights = _cell_heights(structure.cell)
    reach = [
        int(np.ceil(search_radius / heights[axis])) + 1 if structure.pbc[axis] else 0
        for axis in range(3)
    ]
    offsets = np.array(
        list(
            itertools.product(
                range(-reach[0], reach[0] + 1),
                range(-reach[1], reach[1] + 1),
                range(-reach[2], reach[2] + 1),
            )
        ),
        dtype=int,
    )
    shifts = offsets.astype(float) @ structure.cell
    positions = (base[None, :, :] + shifts[:, None, :]).reshape(-1, 3)
    atom_indices = np.tile(np.arange(n), len(offsets))
    image_offsets = np.repeat(offsets, n, axis=0)
    return ReplicatedPoints(positions, atom_indices, image_offsets)


def nearest_neighbors(
    structure: Structure, k: int, search_radius: float
) -> list[NeighborSet]:
    """Find each atom's ``k`` nearest periodic images.

    The zero-distance self-image is excluded; other images of the same
    atom are valid neighbors.  Neighbors are sorted by distance, with
    exact ties broken by (atom index, image offset lexicographic) so the
    ordering is deterministic.  If fewer than ``k`` images exist in the
    replicated search volume the remaining slots are padded.
    """
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    rep = replicate_for_search(structure, search_radius)
    # Zero-offset image block holds the (wrapped) original atoms in order.
    zero_mask = np.all(rep.image_offsets == 0, axis=1)
    centers = rep.positions[zero_mask]

    tree = cKDTree(rep.positions)
    n_points = rep.positions.shape[0]
    k_query = min(k + 1, n_points)  # +1 covers the self-image
    query_dists, _ = tree.query(centers, k=k_query)
    query_dists = np.asarray(query_dists).reshape(len(centers), -1)
    upper = query_dists[:, -1] + 1e-8
    candidate_lists = tree.query_ball_point(centers, upper)

    out = []
    for i in range(len(structure)):
        cand = np.asarray(candidate_lists[i], dtype=int)
        atoms = rep.atom_indices[cand]
        offs = rep.image_offsets[cand]
        self_image = (atoms == i) & np.all(offs == 0, axis=1)
        cand, atoms, offs = cand[~self_image], atoms[~self_image], offs[~self_image]
        dists = np.linalg.norm(rep.positions[cand] - centers[i], axis=1)
        order = np.lexsort((offs[:, 2], offs[:, 1], offs[:, 0], atoms, dists))[:k]
        valid = len(order)
        distances = np.full(k, PADDING_DISTANCE)
        positions = np.full((k, 3), PADDING_DISTANCE)
        indices = np.full(k, -1, dtype=int)
        distances[:valid] = dists[order]
        positions[:valid] = rep.positions[cand[order]]
        indices[:valid] = atoms[order]
        out.append(
            NeighborSet(
                center_index=i,
                distances=_freeze(distances),
                neighbor_positions=_freeze(positions),
                indices=_freeze(indices),
                valid_count=valid,
            )
        )
    return out
