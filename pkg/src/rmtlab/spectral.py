"""Singular values, empirical spectral distributions and the Marchenko-Pastur CDF."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import DimensionError, EigensolverError, InvalidParams
from .quadrature import adaptive_simpson

RESIDUAL_TOL = 1e-10
METHODS = ("gram", "svd", "jacobi")


def jacobi_eigh(G: np.ndarray, tol: float = 1e-14, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigensolver for a symmetric matrix.

    Sweeps over all (p, q) pairs in row order until the off-diagonal
    Frobenius mass is at most ``tol * ||G||_F``. Returns (eigenvalues
    ascending, eigenvectors as columns).
    """
    a = np.array(G, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError("jacobi_eigh needs a square matrix")
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0.0 or n == 1:
        return np.diag(a).copy(), v

    for _ in range(max_sweeps):
        upper = np.triu(a, 1)
        off = math.sqrt(2.0 * float(np.sum(upper * upper)))
        if off <= tol * scale:
            w = np.diag(a).copy()
            order = np.argsort(w, kind="stable")
            return w[order], v[:, order]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-150 * abs(diff):
                    t = apq / diff  # theta would overflow; t ~ 1 / (2 theta)
                else:
                    theta = diff / (2.0 * apq)
                    if abs(theta) > 1e150:
                        t = 0.5 / theta
                    else:
                        t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    raise EigensolverError(f"Jacobi did not converge in {max_sweeps} sweeps")


@dataclass(frozen=True)
class SpectralSummary:
    singular_values: np.ndarray
    N: int
    max_residual: float = 0.0

    @property
    def s1(self) -> float:
        return float(self.singular_values[0])

    @property
    def sm(self) -> float:
        return float(self.singular_values[-1])

    @property
    def scaled_s1(self) -> float:
        return self.s1 / math.sqrt(self.N)

    @property
    def scaled_sm(self) -> float:
        return self.sm / math.sqrt(self.N)


def _matrix(A) -> np.ndarray:
    a = getattr(A, "entries", A)
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    N, m = a.shape
    if not 1 <= m <= N:
        raise DimensionError(f"need N >= m >= 1, got {N} x {m}")
    return a


def gram_eigh(a: np.ndarray, method: str = "gram") -> tuple[np.ndarray, np.ndarray, float]:
    """Eigenpairs of A^T A (ascending) and the worst relative residual."""
    G = a.T @ a
    if method == "jacobi":
        w, V = jacobi_eigh(G)
    else:
        try:
            w, V = np.linalg.eigh(G)
        except np.linalg.LinAlgError as exc:
            raise EigensolverError(str(exc)) from exc
    norm = max(abs(w[0]), abs(w[-1]))
    if norm == 0.0:
        return w, V, 0.0
    resid = np.linalg.norm(G @ V - V * w, axis=0) / norm
    worst = float(resid.max())
    if worst > RESIDUAL_TOL:
        raise EigensolverError(f"eigenpair residual {worst:.3e} exceeds {RESIDUAL_TOL:g}")
    return w, V, worst


def singular_values(A, method: str = "gram") -> SpectralSummary:
    """Singular values in descending order.

    ``gram`` (default) and ``jacobi`` take square roots of the eigenvalues
    of A^T A, from LAPACK and from :func:`jacobi_eigh` respectively; ``svd``
    uses LAPACK's bidiagonalization directly.
    """
    a = _matrix(A)
    if method not in METHODS:
        raise InvalidParams(f"unknown method {method!r}")
    if method == "svd":
        s = np.linalg.svd(a, compute_uv=False)
        return SpectralSummary(s, a.shape[0], 0.0)
    w, _, resid = gram_eigh(a, method)
    s = np.sqrt(np.clip(w[::-1], 0.0, None))
    return SpectralSummary(s, a.shape[0], resid)


def smallest_right_singular_vector(a: np.ndarray) -> tuple[float, np.ndarray]:
    w, V, _ = gram_eigh(a)
    return math.sqrt(max(w[0], 0.0)), V[:, 0]


# --- empirical spectral distribution ---------------------------------------


@dataclass(frozen=True)
class EsdCurve:
    """Step CDF of the eigenvalues of (1/N) A^T A."""

    lambdas: np.ndarray  # ascending

    @property
    def m(self) -> int:
        return int(self.lambdas.size)

    def __call__(self, t):
        return np.searchsorted(self.lambdas, t, side="right") / self.m

    def left_limit(self, t):
        return np.searchsorted(self.lambdas, t, side="left") / self.m


def esd(A, N: Optional[int] = None) -> EsdCurve:
    a = _matrix(A)
    N = a.shape[0] if N is None else N
    s = singular_values(a).singular_values
    return EsdCurve(np.sort(s**2 / N))


# --- Marchenko-Pastur -------------------------------------------------------


def mp_edges(z: float) -> tuple[float, float]:
    if not 0.0 < z < 1.0:
        raise InvalidParams(f"aspect ratio z must lie strictly in (0, 1), got {z}")
    rz = math.sqrt(z)
    return (1.0 - rz) ** 2, (1.0 + rz) ** 2


def mp_cdf_array(ts, z: float, tol: float = 1e-10) -> np.ndarray:
    """F_MP at every point of ``ts``.

    With tau = r + (R - r) sin^2(phi) the density integrand becomes
    2 (R - r)^2 sin^2 cos^2 / tau, smooth on [0, pi/2]. Points are sorted
    and the integral is accumulated piece by piece between consecutive
    angles.
    """
    r, R = mp_edges(z)
    ts = np.asarray(ts, dtype=np.float64)
    flat = ts.ravel()
    width = R - r
    norm = 2.0 * math.pi * z

    def integrand(phi: float) -> float:
        sc = math.sin(phi) * math.cos(phi)
        return 2.0 * width * width * sc * sc / (r + width * math.sin(phi) ** 2)

    inside = (flat > r) & (flat < R)
    out = np.where(flat >= R, 1.0, 0.0)
    if np.any(inside):
        idx = np.flatnonzero(inside)
        phis = np.arcsin(np.sqrt((flat[idx] - r) / width))
        order = np.argsort(phis, kind="stable")
        piece_tol = tol * norm / (len(order) + 1)
        acc, prev = 0.0, 0.0
        vals = np.empty(len(order))
        for pos, j in enumerate(order):
            if phis[j] > prev:
                piece, _ = adaptive_simpson(integrand, prev, phis[j], piece_tol, initial_panels=2)
                acc += piece
                prev = phis[j]
            vals[pos] = acc
        out[idx[order]] = np.clip(vals / norm, 0.0, 1.0)
    return out.reshape(ts.shape)


def mp_cdf(t: float, z: float) -> float:
    return float(mp_cdf_array(np.array([t]), z)[0])


def ks_distance(curve: EsdCurve, z: float) -> float:
    """sup_t |F_emp(t) - F_MP(t)|, attained at a jump point or its left limit."""
    jumps = np.unique(curve.lambdas)
    F = mp_cdf_array(jumps, z)
    right = curve(jumps)
    left = curve.left_limit(jumps)
    return float(max(np.max(np.abs(right - F)), np.max(np.abs(left - F))))


def write_esd_csv(curve: EsdCurve, z: float, path: Union[str, Path]) -> int:
    """Write ``lambda,F_emp,F_mp`` rows sorted by lambda; returns the row count."""
    F = mp_cdf_array(curve.lambdas, z)
    emp = curve(curve.lambdas)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "F_emp", "F_mp"])
        for lam, fe, fm in zip(curve.lambdas, emp, F):
            w.writerow([repr(float(lam)), repr(float(fe)), repr(float(fm))])
    return int(curve.lambdas.size)
