"""Adaptive Simpson quadrature with a Richardson-corrected local error test."""

from __future__ import annotations

from typing import Callable

from .errors import QuadratureError

MAX_DEPTH = 60
MAX_INTERVALS = 200_000


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    initial_panels: int = 16,
) -> tuple[float, float]:
    """Integrate ``f`` over [a, b]; returns (value, absolute error estimate).

    The interval is first cut into ``initial_panels`` equal pieces so that
    narrow features are not skipped by the first three-point rule. Each
    panel then receives a share of ``tol`` proportional to its width.
    """
    if b == a:
        return 0.0, 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0

    total = 0.0
    err = 0.0
    width = (b - a) / initial_panels
    stack = []
    for p in range(initial_panels):
        lo = a + p * width
        hi = b if p == initial_panels - 1 else lo + width
        mid = 0.5 * (lo + hi)
        flo, fmid, fhi = f(lo), f(mid), f(hi)
        whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
        stack.append((lo, hi, flo, fmid, fhi, whole, tol / initial_panels, 0))

    n_done = 0
    while stack:
        lo, hi, flo, fmid, fhi, whole, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps or hi - lo <= 1e-14 * max(1.0, abs(mid)):
            total += left + right + delta / 15.0
            err += abs(delta) / 15.0
            n_done += 1
            continue
        if depth >= MAX_DEPTH or n_done + len(stack) > MAX_INTERVALS:
            raise QuadratureError(
                f"adaptive Simpson did not reach tol={tol:g} on [{a:g}, {b:g}]"
            )
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
    return sign * total, err
