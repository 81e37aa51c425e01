"""Structure-level subsampling: random, k-means, mean-FPS, and greedy cover.

The first three work on per-structure mean descriptors (so a supercell
and its primitive cell look identical to them); the greedy
minimum-set-cover sampler works on the full per-atom rows and picks, at
every step, the structure whose environments are least covered by what
is already selected, balanced against the structure's own entropy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .descriptor import DescriptorParams, DescriptorSet
from .information import KernelParams, _neg_log_kernel_sums, per_structure_entropy
from .errors import InputError

__all__ = [
    "METHODS",
    "SamplerConfig",
    "StepDiagnostics",
    "CompressionResult",
    "sample_random",
    "structure_means",
    "sample_kmeans",
    "sample_fps",
    "sample_msc",
    "run_sampler",
]

METHODS = ("random", "kmeans", "fps", "msc")


@dataclass(frozen=True)
class SamplerConfig:
    """Which sampler to run and at what size.

    Exactly one of ``count`` and ``fraction`` must be given; a fraction
    maps to ``max(1, round(fraction * n))`` with half rounded away from
    zero.
    """

    method: str
    count: int | None = None
    fraction: float | None = None
    seed: int = 0
    kernel: KernelParams = field(default_factory=KernelParams)
    descriptor: DescriptorParams = field(default_factory=DescriptorParams)

    def __post_init__(self):
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if (self.count is None) == (self.fraction is None):
            raise InputError("exactly one of count and fraction must be set")
        if self.count is not None and self.count < 1:
            raise InputError(f"count must be >= 1, got {self.count}")
        if self.fraction is not None and not 0 < self.fraction <= 1:
            raise InputError(f"fraction must be in (0, 1], got {self.fraction}")

    def resolve_count(self, n_structures: int) -> int:
        if self.count is not None:
            if self.count > n_structures:
                raise InputError(
                    f"count {self.count} exceeds dataset size {n_structures}"
                )
            return self.count
        return max(1, int(np.floor(self.fraction * n_structures + 0.5)))


@dataclass(frozen=True)
class StepDiagnostics:
    """One greedy-cover step: who was picked and the score that won."""

    structure_index: int
    score: float
    max_delta_h: float | None
    structure_entropy: float


@dataclass(frozen=True)
class CompressionResult:
    selected: tuple[int, ...]
    per_step: tuple[StepDiagnostics, ...] | None = None

    def __post_init__(self):
        selected = tuple(int(i) for i in self.selected)
        if len(set(selected)) != len(selected):
            raise InputError("selected indices must be unique")
        object.__setattr__(self, "selected", selected)

    def __len__(self):
        return len(self.selected)


def _check_count(count: int, n: int) -> None:
    if not 1 <= count <= n:
        raise InputError(f"count must be in [1, {n}], got {count}")


def sample_random(n_structures: int, count: int, seed: int = 0) -> CompressionResult:
    """Uniform sample without replacement."""
    _check_count(count, n_structures)
    rng = np.random.default_rng(seed)
    picks = rng.choice(n_structures, size=count, replace=False)
    return CompressionResult(selected=tuple(int(i) for i in picks))


def structure_means(descs: DescriptorSet) -> np.ndarray:
    """Arithmetic mean descriptor of each structure, shape (n_structures, width)."""
    out = np.empty((descs.n_structures, descs.width))
    for i in range(descs.n_structures):
        out[i] = descs.rows_for(i).mean(axis=0)
    return out


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial centers by squared distance."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    idx = int(rng.integers(n))
    centers[0] = points[idx]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:  # all remaining distances zero (duplicate points)
            idx = int(rng.integers(n))
        centers[j] = points[idx]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))
    return centers


def _assign(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    p_sq = np.einsum("ij,ij->i", points, points)
    c_sq = np.einsum("ij,ij->i", centers, centers)
    d2 = p_sq[:, None] + c_sq[None, :] - 2.0 * (points @ centers.T)
    return np.argmin(d2, axis=1)


def sample_kmeans(
    descs: DescriptorSet, count: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-6
) -> CompressionResult:
    """Lloyd's k-means over structure means; one random member per cluster.

    Clusters that end up empty are refilled by splitting the largest
    cluster at its member farthest from the cluster center, so exactly
    ``count`` structures come back.
    """
    n = descs.n_structures
    _check_count(count, n)
    means = structure_means(descs)
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(means, count, rng)
    labels = _assign(means, centers)
    for _ in range(max_iter):
        new_centers = centers.copy()
        for c in range(count):
            members = np.flatnonzero(labels == c)
            if len(members):
                new_centers[c] = means[members].mean(axis=0)
        shift = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        labels = _assign(means, centers)
        if shift < tol:
            break
    counts = np.bincount(labels, minlength=count)
    while np.any(counts == 0):
        empty = int(np.argmin(counts))
        largest = int(np.argmax(counts))
        members = np.flatnonzero(labels == largest)
        far = ((means[members] - centers[largest]) ** 2).sum(axis=1)
        moved = members[int(np.argmax(far))]
        labels[moved] = empty
        centers[empty] = means[moved]
        counts[largest] -= 1
        counts[empty] += 1
    selected = []
    for c in range(count):
        members = np.flatnonzero(labels == c)
        selected.append(int(rng.choice(members)))
    return CompressionResult(selected=tuple(selected))


def sample_fps(descs: DescriptorSet, count: int, seed: int = 0) -> CompressionResult:
    """Farthest-point-style sampling over structure means.

    After a seed-random first pick, each step takes the candidate with
    the largest *sum* of Euclidean distances to everything already
    selected (not the more common max-min rule).  Ties go to the lowest
    index.
    """
    n = descs.n_structures
    _check_count(count, n)
    means = structure_means(descs)
    rng = np.random.default_rng(seed)
    first = int(rng.integers(n))
    selected = [first]
    taken = np.zeros(n, dtype=bool)
    taken[first] = True
    dist_sum = np.sqrt(((means - means[first]) ** 2).sum(axis=1))
    while len(selected) < count:
        scores = np.where(taken, -np.inf, dist_sum)
        pick = int(np.argmax(scores))
        selected.append(pick)
        taken[pick] = True
        dist_sum = dist_sum + np.sqrt(((means - means[pick]) ** 2).sum(axis=1))
    return CompressionResult(selected=tuple(selected))


def sample_msc(
    descs: DescriptorSet, count: int, kernel: KernelParams | None = None
) -> CompressionResult:
    """Greedy minimum-set-cover selection over per-atom environments.

    Starts from the structure with the highest own entropy, then
    repeatedly adds the structure maximizing

        max over its environments of delta_entropy(env | selected)
        + entropy(structure)

    i.e. the one contributing the least-covered environment, with the
    structure's own diversity as the tie-straightener.  Deterministic:
    no randomness, argmax ties break to the lowest structure index.
    """
    if kernel is None:
        kernel = KernelParams()
    n = descs.n_structures
    _check_count(count, n)
    own_entropy = per_structure_entropy(descs, kernel)

    first = int(np.argmax(own_entropy))
    selected = [first]
    steps = [
        StepDiagnostics(
            structure_index=first,
            score=float(own_entropy[first]),
            max_delta_h=None,
            structure_entropy=float(own_entropy[first]),
        )
    ]
    taken = np.zeros(n, dtype=bool)
    taken[first] = True
    starts = descs.offsets[:, 0]

    # log of the running kernel sum of every environment against the
    # selected environments; grows by one logaddexp per added structure.
    log_acc = -_neg_log_kernel_sums(descs.values, descs.rows_for(first), kernel.bandwidth)
    while len(selected) < count:
        env_dh = -log_acc
        per_structure_max = np.maximum.reduceat(env_dh, starts)
        scores = per_structure_max + own_entropy
        scores[taken] = -np.inf
        pick = int(np.argmax(scores))
        selected.append(pick)
        taken[pick] = True
        steps.append(
            StepDiagnostics(
                structure_index=pick,
                score=float(scores[pick]),
                max_delta_h=float(per_structure_max[pick]),
                structure_entropy=float(own_entropy[pick]),
            )
        )
        if len(selected) < count:
            block = -_neg_log_kernel_sums(
                descs.values, descs.rows_for(pick), kernel.bandwidth
            )
            log_acc = np.logaddexp(log_acc, block)
    return CompressionResult(selected=tuple(selected), per_step=tuple(steps))


def run_sampler(config: SamplerConfig, descs: DescriptorSet) -> CompressionResult:
    """Dispatch on ``config.method`` with the resolved target count."""
    count = config.resolve_count(descs.n_structures)
    if config.method == "random":
        return sample_random(descs.n_structures, count, config.seed)
    if config.method == "kmeans":
        return sample_kmeans(descs, count, config.seed)
    if config.method == "fps":
        return sample_fps(descs, count, config.seed)
    return sample_msc(descs, count, config.kernel)
