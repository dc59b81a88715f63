"""Lloyd's k-means with k-means++ seeding over feature matrices.

The fitted model is the discretizer of the pipeline: ``assign`` maps each
feature row to the id of its nearest centroid (squared Euclidean, ties to
the lowest centroid index), turning a feature matrix into a token
sequence.

Model file: magic ``ABPEKMNS``, u32 LE version (=1), u64 LE k, u64 LE dim,
then k*dim little-endian float32 centroid values, row-major.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError

KMEANS_MAGIC = b"ABPEKMNS"
KMEANS_VERSION = 1
_HEADER = struct.Struct("<8sIQQ")


def _as_features(features, dim: int | None = None) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError("features must be a non-empty 2-D matrix")
    if not np.isfinite(x).all():
        raise ValueError("features contain non-finite values")
    if dim is not None and x.shape[1] != dim:
        raise ValueError(f"feature dim {x.shape[1]} != model dim {dim}")
    return x


def _nearest(x: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per row: index of the nearest centroid and the squared distance to it."""
    n = x.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dists = np.empty(n, dtype=np.float64)
    # keep the (chunk, k, dim) broadcast under ~2M doubles
    step = max(1, 2_000_000 // max(1, centroids.shape[0] * centroids.shape[1]))
    for s in range(0, n, step):
        block = x[s : s + step]
        d = ((block[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        lab = np.argmin(d, axis=1)
        labels[s : s + step] = lab
        dists[s : s + step] = d[np.arange(d.shape[0]), lab]
    return labels, dists


def _plusplus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(0, n))]
    d2 = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total > 0.0:
            u = rng.random() * total
            j = min(int(np.searchsorted(np.cumsum(d2), u, side="right")), n - 1)
        else:
            # all remaining points coincide with a centroid; take the first unused
            taken = set(chosen)
            j = next(i for i in range(n) if i not in taken)
        chosen.append(j)
        d2 = np.minimum(d2, ((x - x[j]) ** 2).sum(axis=1))
    return x[chosen].copy()


def _update_centroids(
    x: np.ndarray, labels: np.ndarray, dists: np.ndarray, k: int
) -> np.ndarray:
    dim = x.shape[1]
    sums = np.zeros((k, dim), dtype=np.float64)
    np.add.at(sums, labels, x)
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    nonempty = counts > 0
    sums[nonempty] /= counts[nonempty, None]
    empty = np.flatnonzero(~nonempty)
    if empty.size:
        # deterministic repair: hand each empty cluster the next point that
        # is farthest from its currently assigned centroid
        order = np.argsort(-dists, kind="stable")
        for slot, ci in enumerate(empty):
            sums[ci] = x[order[slot]]
    return sums


@dataclass(eq=False)
class KMeansModel:
    """Centroids plus the fit diagnostics Lloyd's iterations produced."""

    centroids: np.ndarray
    inertia: float | None = None
    n_iter: int | None = None
    inertia_per_iter: tuple[float, ...] = field(default=(), repr=False)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    @classmethod
    def fit(
        cls,
        features,
        k: int,
        *,
        seed: int,
        max_iters: int = 100,
        tol: float = 1e-6,
    ) -> "KMeansModel":
        """Run k-means++ seeding then Lloyd's iterations.

        Iterates until the largest centroid shift is <= ``tol`` or
        ``max_iters`` is reached. Deterministic for a fixed seed.
        """
        x = _as_features(features)
        if k < 1:
            raise ValueError("k must be >= 1")
        if x.shape[0] < k:
            raise ValueError(f"need at least k={k} rows, got {x.shape[0]}")
        if max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if tol < 0:
            raise ValueError("tol must be >= 0")

        rng = np.random.default_rng(seed)
        centroids = _plusplus_init(x, k, rng)
        history: list[float] = []
        n_iter = 0
        for it in range(max_iters):
            labels, dists = _nearest(x, centroids)
            history.append(float(dists.sum()))
            updated = _update_centroids(x, labels, dists, k)
            shift = float(np.sqrt(((updated - centroids) ** 2).sum(axis=1)).max())
            centroids = updated
            n_iter = it + 1
            if shift <= tol:
                break
        _, dists = _nearest(x, centroids)
        history.append(float(dists.sum()))
        return cls(
            centroids=centroids,
            inertia=history[-1],
            n_iter=n_iter,
            inertia_per_iter=tuple(history),
        )

    def assign(self, features) -> list[int]:
        """Nearest-centroid id per feature row (ties to the lowest index)."""
        x = _as_features(features, dim=self.dim)
        labels, _ = _nearest(x, self.centroids)
        return [int(c) for c in labels]

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(KMEANS_MAGIC, KMEANS_VERSION, self.k, self.dim)
        return header + self.centroids.astype("<f4").tobytes()

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path: str) -> "KMeansModel":
        """Read a model file; centroids come back at float32 precision."""
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < _HEADER.size:
            raise FormatError(f"{path}: truncated model header")
        magic, version, k, dim = _HEADER.unpack_from(blob)
        if magic != KMEANS_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != KMEANS_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if k < 1 or dim < 1:
            raise FormatError(f"{path}: invalid shape {k}x{dim}")
        expected = _HEADER.size + 4 * k * dim
        if len(blob) != expected:
            raise FormatError(f"{path}: payload is {len(blob)} bytes, expected {expected}")
        values = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
        centroids = values.reshape(k, dim).astype(np.float64)
        if not np.isfinite(centroids).all():
            raise FormatError(f"{path}: non-finite centroid")
        return cls(centroids=centroids)
