"""Random matrices, coordinate-projection norms and the sparse/flat sphere split.

Indices are 0-based throughout. A row subset ``I`` is represented as a
sorted ``int64`` array of distinct row numbers.

Binary matrix format (version 1, all integers little-endian)::

    magic    4 bytes   b"RMTM"
    version  uint16    1
    N        uint64
    m        uint64
    seed     uint64
    keylen   uint16    length of the distribution key in bytes
    key      keylen    UTF-8 distribution key, e.g. "student-t:nu=3.0"
    entries  N*m       float64, row-major
"""

from __future__ import annotations

import itertools
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from . import rng
from .distributions import DistributionSpec, as_spec, sample_entries
from .errors import (
    BadK,
    DecompositionFailed,
    DimensionError,
    IndexOutOfRange,
    InvalidParams,
    NotUnit,
    TooLarge,
    UnknownKind,
)

MAGIC = b"RMTM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHQQQH")
UNIT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MatrixSample:
    N: int
    m: int
    entries: np.ndarray
    spec: DistributionSpec
    seed: int

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.N, self.m


def sample_matrix(spec, N: int, m: int, seed: int) -> MatrixSample:
    """N x m matrix whose entry (i, j) is stream position i*m + j."""
    spec = as_spec(spec)
    if not (1 <= m <= N):
        raise DimensionError(f"need 1 <= m <= N, got N={N}, m={m}")
    seed = rng.check_seed(seed)
    entries = sample_entries(spec, N * m, seed).reshape(N, m)
    return MatrixSample(int(N), int(m), entries, spec, seed)


def save_matrix(sample: MatrixSample, path: Union[str, Path]) -> None:
    key = sample.spec.key.encode("utf-8")
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, sample.N, sample.m, sample.seed, len(key))
    data = np.ascontiguousarray(sample.entries, dtype="<f8").tobytes()
    Path(path).write_bytes(header + key + data)


def load_matrix(path: Union[str, Path]) -> MatrixSample:
    from .distributions import parse_spec

    raw = Path(path).read_bytes()
    magic, version, N, m, seed, keylen = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise InvalidParams(f"{path}: not an rmtlab matrix file")
    if version != FORMAT_VERSION:
        raise InvalidParams(f"{path}: unsupported format version {version}")
    off = _HEADER.size
    key = raw[off : off + keylen].decode("utf-8")
    off += keylen
    if len(raw) - off != 8 * N * m:
        raise InvalidParams(f"{path}: truncated payload")
    entries = np.frombuffer(raw, dtype="<f8", offset=off).astype(np.float64).reshape(N, m)
    return MatrixSample(N, m, entries, parse_spec(key), seed)


def _as_array(A) -> np.ndarray:
    return A.entries if isinstance(A, MatrixSample) else np.asarray(A, dtype=np.float64)


# --- trimming -----------------------------------------------------------------


def drop_count(eps: float, N: int) -> int:
    """Number of coordinates a kept set of size >= N - eps*N may omit: floor(eps*N).

    Evaluated as N - ceil(N - eps*N) so that products like 0.3*10 that land a
    hair below an integer are not floored away.
    """
    if not 0.0 <= eps <= 1.0:
        raise InvalidParams(f"eps must lie in [0, 1], got {eps}")
    if N < 1:
        raise InvalidParams(f"N must be >= 1, got {N}")
    keep = math.ceil(round(N - eps * N, 9))
    return N - keep


def _drop_order(x: np.ndarray) -> np.ndarray:
    # descending magnitude, ties by ascending index
    return np.argsort(-np.abs(x), kind="stable")


def trimmed_split(x, k: int) -> tuple[np.ndarray, np.ndarray]:
    """(kept, dropped) index arrays, each sorted, after removing the k largest |x_i|."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if not 0 <= k <= x.size:
        raise BadK(f"k must lie in [0, {x.size}], got {k}")
    order = _drop_order(x)
    return np.sort(order[k:]), np.sort(order[:k])


def trimmed_norm(x, k: int) -> float:
    """min over |I| >= len(x) - k of ||P_I x||.

    The minimum keeps the len(x) - k smallest magnitudes; the kept squares
    are summed with ``math.fsum`` so the value depends only on which
    coordinates are kept.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    kept, _ = trimmed_split(x, k)
    return math.sqrt(math.fsum(x[kept] ** 2))


def brute_force_trimmed_min(x, eps: float) -> float:
    """Enumerate every I with |I| >= n - eps*n and return min ||P_I x||."""
    x = np.asarray(x, dtype=np.float64).ravel()
    n = x.size
    if n > 20:
        raise TooLarge(f"brute force limited to len(x) <= 20, got {n}")
    if n == 0:
        return 0.0
    sq = x**2
    min_size = n - drop_count(eps, n)
    best = math.inf
    for size in range(min_size, n + 1):
        for subset in itertools.combinations(range(n), size):
            val = math.sqrt(math.fsum(sq[list(subset)]))
            if val < best:
                best = val
    return best


def index_set(indices, N: int) -> np.ndarray:
    idx = np.unique(np.asarray(indices, dtype=np.int64))
    if idx.size and (idx[0] < 0 or idx[-1] >= N):
        raise IndexOutOfRange(f"row indices must lie in [0, {N})")
    return idx


def row_projection(A, I) -> np.ndarray:
    """P_I A: rows outside I set to zero, shape unchanged."""
    a = _as_array(A)
    idx = index_set(I, a.shape[0])
    out = np.zeros_like(a)
    out[idx] = a[idx]
    return out


def _check_unit(y: np.ndarray) -> None:
    if abs(np.linalg.norm(y) - 1.0) > UNIT_TOL:
        raise NotUnit(f"expected a unit vector, got norm {np.linalg.norm(y)!r}")


def compute_Iy(A, y) -> np.ndarray:
    """Rows i with sum_j a_ij^2 y_j^2 <= 2."""
    a = _as_array(A)
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != a.shape[1]:
        raise DimensionError(f"y has length {y.size}, A has {a.shape[1]} columns")
    _check_unit(y)
    weights = (a * a) @ (y * y)
    return np.flatnonzero(weights <= 2.0)


@dataclass(frozen=True)
class SphereSplit:
    y1: np.ndarray
    y2: np.ndarray
    y3: np.ndarray
    J: np.ndarray
    r: float


def sphere_decompose(y) -> SphereSplit:
    """Split a unit y into a sparse part y1 and a flat unit part y2 (y3 = 0).

    J holds the floor(sqrt N) largest |y_j| (ties to lower index),
    r = sqrt(1 - ||y - P_J y||^2) and y1 = P_J y - r |J|^{-1/2} 1_J.
    Certified: y1 supported on J, ||y1|| <= 2, ||y2|| = 1 and
    ||y2||_inf <= 1/floor(N^{1/4}).
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    N = y.size
    if N < 16:
        raise DimensionError(f"sphere_decompose needs N >= 16, got {N}")
    _check_unit(y)
    size = math.isqrt(N)
    J = np.sort(_drop_order(y)[:size])
    outside = y.copy()
    outside[J] = 0.0
    r = math.sqrt(max(0.0, 1.0 - float(outside @ outside)))
    y1 = np.zeros(N)
    y1[J] = y[J] - r / math.sqrt(size)
    y2 = y - y1
    y3 = np.zeros(N)

    flat = 1.0 / _floor_root4(N)
    problems = []
    if np.count_nonzero(y1) > size:
        problems.append("y1 not sparse")
    if np.linalg.norm(y1) > 2.0 + 1e-12:
        problems.append(f"||y1|| = {np.linalg.norm(y1)} > 2")
    if abs(np.linalg.norm(y2) - 1.0) > 1e-10:
        problems.append(f"||y2|| = {np.linalg.norm(y2)} != 1")
    if np.max(np.abs(y2)) > flat + 1e-12:
        problems.append(f"||y2||_inf = {np.max(np.abs(y2))} > {flat}")
    if problems:
        raise DecompositionFailed("; ".join(problems))
    return SphereSplit(y1, y2, y3, J, r)


def _floor_root4(N: int) -> int:
    return math.isqrt(math.isqrt(N))


# --- lemma probes -------------------------------------------------------------

PROBE_KINDS = ("trim-bound", "iy-card", "vertex")
N_VERTICES = 1000


def lemma_probe(kind: str, spec, N: int, m: int, eps: float, trials: int, seed: int) -> float:
    """Monte Carlo probes of the single-vector, I_y-cardinality and cube-vertex estimates.

    ``trim-bound``: frequency of trimmed_norm(X, floor(eps N)) > sqrt(2 e N)
    for i.i.d. N-vectors X. ``iy-card``: frequency of |I_y| <= N - eps N for
    the flat unit vector y. ``vertex``: the largest observed value of
    trimmed_norm(A u, floor(eps N)) / sqrt(m N) over 1000 random sign vectors
    u in {-1, 1}^m per trial, maximised over trials.
    """
    spec = as_spec(spec)
    if kind not in PROBE_KINDS:
        raise UnknownKind(f"unknown probe kind {kind!r}; expected one of {PROBE_KINDS}")
    if trials < 1:
        raise InvalidParams("trials must be >= 1")
    k = drop_count(eps, N)

    if kind == "trim-bound":
        bound = math.sqrt(2.0 * math.e * N)
        hits = 0
        for t in range(trials):
            x = sample_entries(spec, N, rng.derive_seed(seed, t))
            hits += trimmed_norm(x, k) > bound
        return hits / trials

    if kind == "iy-card":
        y = np.full(m, 1.0 / math.sqrt(m))
        hits = 0
        for t in range(trials):
            A = sample_matrix(spec, N, m, rng.derive_seed(seed, t))
            hits += compute_Iy(A, y).size <= N - eps * N
        return hits / trials

    stat = 0.0
    for t in range(trials):
        tseed = rng.derive_seed(seed, t)
        a = sample_matrix(spec, N, m, tseed).entries
        signs = np.where(rng.uniforms(rng.derive_seed(tseed, 1), N_VERTICES * m) < 0.5, -1.0, 1.0)
        images = a @ signs.reshape(N_VERTICES, m).T
        for col in images.T:
            stat = max(stat, trimmed_norm(col, k) / math.sqrt(m * N))
    return stat
