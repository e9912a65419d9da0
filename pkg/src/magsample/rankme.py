"""Effective-rank profiling of embedding sets tagged with magnifications.

The rankme metric is the exponential of the Shannon entropy of the
normalized singular values of an N x K embedding matrix,

    p_k = sigma_k / sum(sigma) + epsilon,     rankme = exp(-sum p_k log p_k),

a smooth proxy for the matrix rank: it is 1 for rank-one embeddings and
min(N, K) when all singular values are equal. The epsilon term is added to
every p_k without renormalization; the resulting bias is tiny and, more
importantly, reproducible.

File formats owned by this module:

* embeddings CSV with header ``id,mpp,d0,d1,...,d{K-1}``;
* embeddings binary (``.mseb``): magic ``MSEB``, u16 version (1), u64 N,
  u32 K, then N records of (f64 mpp, K x f32 components), little-endian;
  ids are the row indices;
* ``rankme.csv`` output with header ``mpp,count,rankme``;
* ``similarity.csv`` output, a labeled square matrix whose first row and
  column hold the group mpps.
"""

from __future__ import annotations

import csv
import struct
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence, TextIO

import numpy as np

from .errors import DegenerateInputError, DomainError, FormatError, ParameterError

_EMB_MAGIC = b"MSEB"
_EMB_HEADER = struct.Struct("<4sHQI")
_EMB_VERSION = 1

DEFAULT_EPSILON = 1e-7
DEFAULT_GROUP_TOLERANCE = 1e-6


def _fmt(v: float) -> str:
    return repr(float(v))


class EmbeddingSet:
    """N embedding vectors, each tagged with the mpp it was extracted at."""

    def __init__(self, mpps, vectors, ids=None):
        vectors = np.asarray(vectors, dtype=float)
        mpps = np.asarray(mpps, dtype=float)
        if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
            raise DomainError("vectors must form a nonempty 2-D matrix")
        if mpps.shape != (vectors.shape[0],):
            raise DomainError("need exactly one mpp tag per embedding row")
        if not np.all(np.isfinite(vectors)):
            raise DomainError("embedding vectors contain non-finite values")
        if not np.all(np.isfinite(mpps)) or np.any(mpps <= 0):
            raise DomainError("mpp tags must be positive and finite")
        if ids is None:
            ids = [str(i) for i in range(vectors.shape[0])]
        else:
            ids = [str(i) for i in ids]
            if len(ids) != vectors.shape[0]:
                raise DomainError("need exactly one id per embedding row")
        self.ids = ids
        self.mpps = mpps
        self.vectors = vectors

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __repr__(self):
        return f"EmbeddingSet(n={self.n}, dim={self.dim})"


class GroupRankMe(NamedTuple):
    mpp: float
    count: int
    rankme: float


@dataclass(frozen=True)
class RankMeProfile:
    """Per-magnification rankme values, sorted by ascending mpp."""

    groups: list[GroupRankMe]
    epsilon: float

    @property
    def mpps(self) -> np.ndarray:
        return np.array([g.mpp for g in self.groups])

    @property
    def values(self) -> np.ndarray:
        return np.array([g.rankme for g in self.groups])


@dataclass(frozen=True)
class CentroidSimilarity:
    """Cosine similarities between per-magnification centroid vectors."""

    mpps: np.ndarray
    matrix: np.ndarray


def rankme(embeddings, epsilon: float = DEFAULT_EPSILON) -> float:
    """Effective rank of an embedding matrix (or EmbeddingSet)."""
    if isinstance(embeddings, EmbeddingSet):
        matrix = embeddings.vectors
    else:
        matrix = np.asarray(embeddings, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise DomainError("rankme needs a nonempty 2-D matrix")
    if not np.all(np.isfinite(matrix)):
        raise DomainError("rankme input contains non-finite values")
    if epsilon < 0:
        raise ParameterError(f"epsilon must be nonnegative, got {epsilon}")
    sigma = np.linalg.svd(matrix, compute_uv=False)
    total = sigma.sum()
    if total <= 0.0:
        raise DegenerateInputError("all singular values are zero")
    p = sigma / total + epsilon
    pos = p > 0.0
    h = float(-(p[pos] * np.log(p[pos])).sum())
    return float(np.exp(h))


def _group_slices(mpps: np.ndarray, tolerance: float):
    order = np.argsort(mpps, kind="stable")
    sorted_mpps = mpps[order]
    breaks = np.flatnonzero(np.diff(sorted_mpps) > tolerance) + 1
    for lo, hi in zip(
        np.concatenate(([0], breaks)), np.concatenate((breaks, [mpps.size]))
    ):
        yield order[lo:hi]


def rankme_profile(
    embeddings: EmbeddingSet,
    epsilon: float = DEFAULT_EPSILON,
    group_tolerance: float = DEFAULT_GROUP_TOLERANCE,
) -> RankMeProfile:
    """Rankme per magnification group; mpps within the tolerance share a group."""
    groups = []
    for rows in _group_slices(embeddings.mpps, group_tolerance):
        group_mpp = float(embeddings.mpps[rows].mean())
        if rows.size < 2:
            warnings.warn(
                f"magnification group at {group_mpp} has a single row; "
                "its rankme is trivially 1",
                RuntimeWarning,
                stacklevel=2,
            )
        groups.append(
            GroupRankMe(
                mpp=group_mpp,
                count=int(rows.size),
                rankme=rankme(embeddings.vectors[rows], epsilon),
            )
        )
    return RankMeProfile(groups=groups, epsilon=epsilon)


def centroid_similarity(
    embeddings: EmbeddingSet, group_tolerance: float = DEFAULT_GROUP_TOLERANCE
) -> CentroidSimilarity:
    """Cosine similarity matrix between per-group mean vectors."""
    mpps = []
    centroids = []
    for rows in _group_slices(embeddings.mpps, group_tolerance):
        c = embeddings.vectors[rows].mean(axis=0)
        norm = float(np.linalg.norm(c))
        if norm == 0.0:
            raise DegenerateInputError(
                f"group at mpp {float(embeddings.mpps[rows].mean())} has a zero centroid"
            )
        mpps.append(float(embeddings.mpps[rows].mean()))
        centroids.append(c / norm)
    cmat = np.vstack(centroids)
    sim = cmat @ cmat.T
    sim = 0.5 * (sim + sim.T)
    np.fill_diagonal(sim, 1.0)
    return CentroidSimilarity(mpps=np.array(mpps), matrix=sim)


def minmax_normalize_profiles(profiles: Sequence[RankMeProfile]) -> np.ndarray:
    """Min-max scale rankme values jointly across all (profile, mpp) cells."""
    if len(profiles) < 2:
        raise ParameterError("normalization needs at least two profiles")
    base = profiles[0].mpps
    for p in profiles[1:]:
        if p.mpps.shape != base.shape or not np.allclose(p.mpps, base, atol=1e-9):
            raise ParameterError("profiles must share an identical mpp grid")
    values = np.vstack([p.values for p in profiles])
    lo, hi = values.min(), values.max()
    if hi == lo:
        raise DegenerateInputError("all rankme values are equal; nothing to normalize")
    return (values - lo) / (hi - lo)


# -- I/O -----------------------------------------------------------------------


def read_embeddings_csv(path) -> EmbeddingSet:
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if (
            header is None
            or len(header) < 3
            or [h.strip() for h in header[:2]] != ["id", "mpp"]
            or [h.strip() for h in header[2:]] != [f"d{i}" for i in range(len(header) - 2)]
        ):
            raise FormatError("expected header 'id,mpp,d0,d1,...'", line=1)
        dim = len(header) - 2
        ids, mpps, rows = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim + 2:
                raise FormatError("wrong number of embedding columns", line=lineno)
            try:
                ids.append(row[0])
                mpps.append(float(row[1]))
                rows.append([float(v) for v in row[2:]])
            except ValueError:
                raise FormatError("non-numeric embedding entry", line=lineno) from None
    if not rows:
        raise FormatError("embedding file contains no rows")
    return EmbeddingSet(mpps=np.array(mpps), vectors=np.array(rows), ids=ids)


def read_embeddings_binary(path) -> EmbeddingSet:
    with open(path, "rb") as f:
        header = f.read(_EMB_HEADER.size)
        if len(header) != _EMB_HEADER.size:
            raise FormatError("truncated embedding header")
        magic, version, n, dim = _EMB_HEADER.unpack(header)
        if magic != _EMB_MAGIC:
            raise FormatError(f"bad embedding magic {magic!r}")
        if version != _EMB_VERSION:
            raise FormatError(f"unsupported embedding version {version}")
        payload = f.read()
    record = np.dtype([("mpp", "<f8"), ("vec", "<f4", (dim,))])
    if len(payload) != n * record.itemsize:
        raise FormatError(
            f"embedding payload is {len(payload)} bytes, expected {n * record.itemsize}"
        )
    records = np.frombuffer(payload, dtype=record, count=n)
    return EmbeddingSet(
        mpps=records["mpp"].astype(float),
        vectors=records["vec"].astype(float),
    )


def write_embeddings_binary(path, embeddings: EmbeddingSet):
    record = np.dtype([("mpp", "<f8"), ("vec", "<f4", (embeddings.dim,))])
    out = np.empty(embeddings.n, dtype=record)
    out["mpp"] = embeddings.mpps
    out["vec"] = embeddings.vectors.astype("<f4")
    with open(path, "wb") as f:
        f.write(_EMB_HEADER.pack(_EMB_MAGIC, _EMB_VERSION, embeddings.n, embeddings.dim))
        f.write(out.tobytes())


def load_embeddings(path) -> EmbeddingSet:
    """Read an embedding file, sniffing binary versus CSV from the magic."""
    with open(path, "rb") as f:
        magic = f.read(4)
    if magic == _EMB_MAGIC:
        return read_embeddings_binary(path)
    return read_embeddings_csv(path)


def write_rankme_csv(profile: RankMeProfile, f: TextIO):
    f.write("mpp,count,rankme\n")
    for g in profile.groups:
        f.write(f"{_fmt(g.mpp)},{g.count},{_fmt(g.rankme)}\n")


def write_similarity_csv(sim: CentroidSimilarity, f: TextIO):
    labels = [_fmt(m) for m in sim.mpps]
    f.write("mpp," + ",".join(labels) + "\n")
    for label, row in zip(labels, sim.matrix):
        f.write(label + "," + ",".join(_fmt(v) for v in row) + "\n")
