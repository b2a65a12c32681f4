"""Object pools and labeled/unlabeled/test partitions.

An :class:`ObjectPool` is an immutable block of feature rows with stable
integer ids and, optionally, ground-truth class labels.  A
:class:`PoolPartition` tracks which ids are labeled (``L``), queryable (``U``)
or reserved for testing, on top of one or more backing pools; it also stores
the label *assigned* to each labeled id, which may be an oracle label or a
pseudo-label and therefore can differ from the backing ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from alab.errors import ContractViolation

__all__ = [
    "ObjectPool",
    "PoolPartition",
    "SplitSchedule",
    "class_histogram",
    "make_splits",
    "move_to_labeled",
    "resample_matching_class_distribution",
    "split_ids",
]


def _as_ids(ids) -> np.ndarray:
    out = np.asarray(ids, dtype=np.int64)
    if out.ndim != 1:
        out = out.reshape(-1)
    return out


class ObjectPool:
    """Feature matrix with stable object ids and optional true labels.

    Features are float32 in [0, 1].  Pools are treated as immutable after
    construction; operations that need a subset build a new pool sharing no
    mutable state with this one.
    """

    __slots__ = ("features", "ids", "labels")

    def __init__(self, features, ids=None, labels=None, validate=True):
        self.features = np.ascontiguousarray(features, dtype=np.float32)
        if self.features.ndim != 2:
            raise ContractViolation("features must be a 2-d matrix")
        n = self.features.shape[0]
        self.ids = _as_ids(ids if ids is not None else np.arange(n))
        self.labels = None if labels is None else _as_ids(labels)
        if validate:
            self._validate()

    def _validate(self):
        n = len(self.features)
        if len(self.ids) != n:
            raise ContractViolation("ids must align with feature rows")
        if len(np.unique(self.ids)) != n:
            raise ContractViolation("object ids must be unique")
        if self.labels is not None:
            if len(self.labels) != n:
                raise ContractViolation("labels must align with feature rows")
            if n and self.labels.min() < 0:
                raise ContractViolation("labels must be non-negative class indices")
        if n:
            lo = float(self.features.min())
            hi = float(self.features.max())
            if lo < 0.0 or hi > 1.0:
                raise ContractViolation(
                    f"feature values must lie in [0, 1], got [{lo}, {hi}]"
                )

    def __len__(self) -> int:
        return len(self.features)

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def rows_for(self, ids) -> np.ndarray:
        """Row positions of ``ids`` (error on unknown ids)."""
        ids = _as_ids(ids)
        order = np.argsort(self.ids, kind="stable")
        pos = np.searchsorted(self.ids[order], ids)
        pos = np.clip(pos, 0, len(self.ids) - 1)
        rows = order[pos]
        if len(ids) and not np.array_equal(self.ids[rows], ids):
            missing = ids[self.ids[rows] != ids]
            raise ContractViolation(f"unknown object id(s): {missing[:5].tolist()}")
        return rows

    def subset(self, ids) -> "ObjectPool":
        rows = self.rows_for(ids)
        return ObjectPool(
            self.features[rows],
            ids=_as_ids(ids),
            labels=None if self.labels is None else self.labels[rows],
            validate=False,
        )

    def with_labels(self, labels) -> "ObjectPool":
        return ObjectPool(self.features, ids=self.ids, labels=labels, validate=False)


def class_histogram(labels, num_classes: int) -> np.ndarray:
    """Per-class counts of ``labels`` as an int64 vector of length num_classes."""
    labels = _as_ids(labels)
    if len(labels) and (labels.min() < 0 or labels.max() >= num_classes):
        raise ContractViolation("label outside [0, num_classes)")
    return np.bincount(labels, minlength=num_classes).astype(np.int64)


@dataclass
class SplitSchedule:
    """Staged release of the unlabeled pool: ``num_subsets`` i.i.d. subsets,
    the next one appended once a fraction ``release_fraction`` of everything
    introduced so far has been labeled."""

    num_subsets: int
    release_fraction: float
    subset_sizes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.num_subsets < 1:
            raise ContractViolation("num_subsets must be >= 1")
        if not 0.0 < self.release_fraction <= 1.0:
            raise ContractViolation("release_fraction must be in (0, 1]")


class PoolPartition:
    """Disjoint labeled/unlabeled/test id sets over shared backing pools.

    Invariants, preserved by every operation: the three id sets are pairwise
    disjoint, every id resolves to exactly one backing row, and every labeled
    id carries an assigned label.
    """

    def __init__(self, pools, labeled=(), unlabeled=(), test=()):
        if isinstance(pools, ObjectPool):
            pools = (pools,)
        self.pools: tuple[ObjectPool, ...] = tuple(pools)
        if not self.pools:
            raise ContractViolation("at least one backing pool is required")

        self._features = (
            self.pools[0].features
            if len(self.pools) == 1
            else np.concatenate([p.features for p in self.pools], axis=0)
        )
        self._all_ids = np.concatenate([p.ids for p in self.pools])
        self._truth = np.concatenate(
            [
                p.labels if p.labels is not None else np.full(len(p), -1, np.int64)
                for p in self.pools
            ]
        )
        if len(np.unique(self._all_ids)) != len(self._all_ids):
            raise ContractViolation("object ids must be unique across backing pools")
        self._order = np.argsort(self._all_ids, kind="stable")
        self._sorted_ids = self._all_ids[self._order]

        self._assigned = np.full(len(self._all_ids), -1, dtype=np.int64)
        self._L = _as_ids(labeled)
        self._U = np.sort(_as_ids(unlabeled))
        self._test = _as_ids(test)
        self.random_start_ids: np.ndarray | None = None

        self._check_disjoint()
        if len(self._L):
            truth = self.truth_labels_for(self._L)
            self._assigned[self.rows_for(self._L)] = truth

    @classmethod
    def for_active_learning(cls, train_pool: ObjectPool, test_pool: ObjectPool | None = None):
        """All train ids unlabeled, the whole test pool reserved for evaluation."""
        pools = (train_pool,) if test_pool is None else (train_pool, test_pool)
        test = () if test_pool is None else test_pool.ids
        return cls(pools, labeled=(), unlabeled=train_pool.ids, test=test)

    # -- id bookkeeping ------------------------------------------------------

    def _check_disjoint(self):
        for name, ids in (("L", self._L), ("U", self._U), ("test", self._test)):
            if len(np.unique(ids)) != len(ids):
                raise ContractViolation(f"duplicate ids in {name}")
            self.rows_for(ids)  # raises on unresolvable ids
        lu = np.intersect1d(self._L, self._U)
        lt = np.intersect1d(self._L, self._test)
        ut = np.intersect1d(self._U, self._test)
        if len(lu) or len(lt) or len(ut):
            raise ContractViolation("L, U and test must be pairwise disjoint")

    def rows_for(self, ids) -> np.ndarray:
        ids = _as_ids(ids)
        pos = np.searchsorted(self._sorted_ids, ids)
        pos = np.clip(pos, 0, len(self._sorted_ids) - 1)
        rows = self._order[pos]
        if len(ids) and not np.array_equal(self._all_ids[rows], ids):
            missing = ids[self._all_ids[rows] != ids]
            raise ContractViolation(f"unknown object id(s): {missing[:5].tolist()}")
        return rows

    @property
    def labeled_ids(self) -> np.ndarray:
        return self._L.copy()

    @property
    def unlabeled_ids(self) -> np.ndarray:
        return self._U.copy()

    @property
    def test_ids(self) -> np.ndarray:
        return self._test.copy()

    @property
    def labeled_count(self) -> int:
        return len(self._L)

    @property
    def unlabeled_count(self) -> int:
        return len(self._U)

    # -- data access ---------------------------------------------------------

    def features_for(self, ids) -> np.ndarray:
        return self._features[self.rows_for(ids)]

    def truth_labels_for(self, ids) -> np.ndarray:
        labels = self._truth[self.rows_for(ids)]
        if len(labels) and labels.min() < 0:
            raise ContractViolation("ground-truth label not available for some ids")
        return labels

    def assigned_labels_for(self, ids) -> np.ndarray:
        labels = self._assigned[self.rows_for(ids)]
        if len(labels) and labels.min() < 0:
            raise ContractViolation("id has no assigned label (not in L?)")
        return labels

    def labeled_pool(self) -> ObjectPool:
        """Pool over L with the *assigned* labels (oracle or pseudo)."""
        return ObjectPool(
            self.features_for(self._L),
            ids=self._L,
            labels=self.assigned_labels_for(self._L) if len(self._L) else np.empty(0, np.int64),
            validate=False,
        )

    def unlabeled_pool(self) -> ObjectPool:
        return ObjectPool(self.features_for(self._U), ids=self._U, validate=False)

    def test_pool(self) -> ObjectPool:
        return ObjectPool(
            self.features_for(self._test),
            ids=self._test,
            labels=self.truth_labels_for(self._test) if len(self._test) else np.empty(0, np.int64),
            validate=False,
        )

    # -- mutation (single sequential driver only) -----------------------------

    def withhold_unlabeled(self, ids) -> np.ndarray:
        """Remove ``ids`` from U (they stay resolvable, for later re-release)."""
        ids = _as_ids(ids)
        if len(np.setdiff1d(ids, self._U)):
            raise ContractViolation("can only withhold ids currently in U")
        self._U = np.setdiff1d(self._U, ids)
        return ids

    def add_unlabeled(self, ids):
        ids = _as_ids(ids)
        self.rows_for(ids)
        for name, existing in (("L", self._L), ("U", self._U), ("test", self._test)):
            if len(np.intersect1d(ids, existing)):
                raise ContractViolation(f"ids to add are already present in {name}")
        self._U = np.union1d(self._U, ids)

    def _move_to_labeled(self, batch: np.ndarray, labels: np.ndarray):
        self._assigned[self.rows_for(batch)] = labels
        self._L = np.concatenate([self._L, batch])
        self._U = np.setdiff1d(self._U, batch)

    def copy(self) -> "PoolPartition":
        """Independent partition sharing the immutable backing pools."""
        dup = object.__new__(PoolPartition)
        dup.pools = self.pools
        dup._features = self._features
        dup._all_ids = self._all_ids
        dup._truth = self._truth
        dup._order = self._order
        dup._sorted_ids = self._sorted_ids
        dup._assigned = self._assigned.copy()
        dup._L = self._L.copy()
        dup._U = self._U.copy()
        dup._test = self._test.copy()
        dup.random_start_ids = (
            None if self.random_start_ids is None else self.random_start_ids.copy()
        )
        return dup


def move_to_labeled(partition: PoolPartition, batch, labels=None) -> PoolPartition:
    """Move ``batch`` (a subset of U) into L, recording its labels.

    With ``labels=None`` the backing ground truth is assigned; pass explicit
    labels for oracle answers or pseudo-labels.  Mutates and returns the
    partition.
    """
    batch = _as_ids(batch)
    if len(np.unique(batch)) != len(batch):
        raise ContractViolation("batch contains duplicate ids")
    if len(np.setdiff1d(batch, partition.unlabeled_ids)):
        raise ContractViolation("batch must be a subset of the unlabeled set U")
    if len(batch) == 0:
        return partition
    if labels is None:
        labels = partition.truth_labels_for(batch)
    else:
        labels = _as_ids(labels)
        if len(labels) != len(batch):
            raise ContractViolation("labels must align with batch ids")
        if labels.min() < 0:
            raise ContractViolation("labels must be non-negative class indices")
    partition._move_to_labeled(batch, labels)
    return partition


def split_ids(ids, num_subsets: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Seeded shuffle then contiguous partition into near-equal id subsets."""
    ids = _as_ids(ids)
    if num_subsets < 1:
        raise ContractViolation("number of subsets must be >= 1")
    if num_subsets > len(ids):
        raise ContractViolation("more subsets than objects")
    shuffled = ids[rng.permutation(len(ids))]
    return [part.copy() for part in np.array_split(shuffled, num_subsets)]


def make_splits(pool: ObjectPool, num_subsets: int, seed) -> list[ObjectPool]:
    """Partition ``pool`` into ``num_subsets`` i.i.d. subsets (sizes differ by <= 1)."""
    from alab.seeding import stream

    rng = seed if isinstance(seed, np.random.Generator) else stream(seed)
    return [pool.subset(part) for part in split_ids(pool.ids, num_subsets, rng)]


def resample_matching_class_distribution(pool: ObjectPool, target_counts, seed) -> ObjectPool:
    """Uniform within-class subsample matching ``target_counts`` exactly."""
    from alab.seeding import stream

    if pool.labels is None:
        raise ContractViolation("resampling requires a labeled pool")
    target = np.asarray(target_counts, dtype=np.int64)
    if len(target) and target.min() < 0:
        raise ContractViolation("target counts must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed)
    chosen = []
    for cls, want in enumerate(target):
        cls_ids = pool.ids[pool.labels == cls]
        if want > len(cls_ids):
            raise ContractViolation(
                f"class {cls}: requested {int(want)} objects but only {len(cls_ids)} available"
            )
        if want:
            chosen.append(rng.choice(cls_ids, size=int(want), replace=False))
    ids = np.concatenate(chosen) if chosen else np.empty(0, np.int64)
    return pool.subset(ids)
