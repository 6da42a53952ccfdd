"""Explicit inequalities, net cardinalities and N-thresholds, evaluated in log space.

The universal constants (Bernstein c, cubic-net C, single-vector c and C)
are not pinned down numerically; they enter as :class:`BoundConstants`.
The all-ones defaults are illustrative only.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

from .errors import InvalidParams

LIMIT = 2**62
TAIL_POINTS = 32


@dataclass(frozen=True)
class BoundConstants:
    c_bernstein: float = 1.0  # sub-Gaussian constant of the bounded weighted-sum tail
    C_cubicnet: float = 1.0  # exponent of the sup-norm net on the sphere
    c_31: float = 1.0  # single-vector trimmed norm: failure exponent
    C_31: float = 1.0  # single-vector trimmed norm: level
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("c_bernstein", "C_cubicnet", "c_31", "C_31"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidParams(f"{name} must be a positive finite number, got {v}")
        for name, v in self.extra.items():
            if not (v > 0 and math.isfinite(v)):
                raise InvalidParams(f"{name} must be a positive finite number, got {v}")

    @property
    def illustrative(self) -> bool:
        return (self.c_bernstein, self.C_cubicnet, self.c_31, self.C_31) == (1.0, 1.0, 1.0, 1.0)

    def w_36(self, eps: float) -> float:
        """Failure exponent of the symmetric sup bound: min(c_31 eps/6, C/2, 1/2)."""
        return min(self.c_31 * eps / 6.0, self.C_cubicnet / 2.0, 0.5)


def _logsumexp(xs) -> float:
    top = max(xs)
    if top == -math.inf:
        return -math.inf
    return top + math.log(math.fsum(math.exp(x - top) for x in xs))


def bernstein_tail(tau: float, M: float, c: float) -> float:
    """2 exp(-c tau^2 / M^2); a bound, so values above 1 are returned as is."""
    if tau < 0 or M <= 0 or c <= 0:
        raise InvalidParams("need tau >= 0, M > 0, c > 0")
    return 2.0 * math.exp(-c * tau * tau / (M * M))


NET_KINDS = ("ball", "cube-net", "sparse")


def log_net_cardinality(
    kind: str,
    n: Optional[int] = None,
    eps: Optional[float] = None,
    C: Optional[float] = None,
    N: Optional[int] = None,
) -> float:
    """Natural log of a net-size bound.

    ``ball``: an eps-net of the unit ball in R^n of size (3/eps)^n.
    ``cube-net``: an n^{-1/2} sup-norm net of a subset of the sphere, exp(C n).
    ``sparse``: the net of sqrt(N)-sparse vectors in 2B_2^N, (12 e N)^{sqrt N}.
    """
    if kind == "ball":
        if n is None or n < 1 or eps is None or not 0 < eps <= 1:
            raise InvalidParams("ball net needs n >= 1 and eps in (0, 1]")
        return n * math.log(3.0 / eps)
    if kind == "cube-net":
        if n is None or n < 1 or C is None or C <= 0:
            raise InvalidParams("cube-net needs n >= 1 and C > 0")
        return C * n
    if kind == "sparse":
        if N is None or N < 1:
            raise InvalidParams("sparse net needs N >= 1")
        return math.sqrt(N) * math.log(12.0 * math.e * N)
    raise InvalidParams(f"unknown net kind {kind!r}")


# --- root condition ----------------------------------------------------------


def _eps_rhs(eps: float) -> float:
    return eps * (1.0 + math.log(6.0 * math.e / eps))


def epsilon_for_eta(eta: float, M: float, c: float) -> float:
    """Largest eps in (0, 1] with c eta^2 / (2 M^2) >= eps (1 + ln(6e/eps)).

    The right side increases strictly on (0, 1] and vanishes at 0+, so the
    root is unique; bisection runs on log(eps) to relative width 1e-13.
    """
    if not (eta > 0 and M > 0 and c > 0):
        raise InvalidParams("need eta > 0, M > 0, c > 0")
    lhs = c * eta * eta / (2.0 * M * M)
    if _eps_rhs(1.0) <= lhs:
        return 1.0
    hi = 1.0
    lo = 0.5
    while _eps_rhs(lo) > lhs:
        hi, lo = lo, lo / 2.0
        if lo < 1e-300:
            raise InvalidParams(f"eta={eta}, M={M} give an eps below double range")
    while hi / lo - 1.0 > 1e-13:
        mid = math.sqrt(lo * hi)
        if _eps_rhs(mid) <= lhs:
            lo = mid
        else:
            hi = mid
    return lo


def epsilon_residual(eps: float, eta: float, M: float, c: float) -> float:
    """LHS - RHS of the root condition; >= 0 when eps satisfies it."""
    return c * eta * eta / (2.0 * M * M) - _eps_rhs(eps)


# --- thresholds --------------------------------------------------------------


@dataclass
class Threshold:
    label: str
    value: Optional[int]  # None = no threshold up to 2**62 ("overflow")
    distribution_dependent: bool = False
    note: str = ""

    @property
    def finite(self) -> bool:
        return self.value is not None

    def to_json(self):
        return {
            "label": self.label,
            "value": self.value if self.value is not None else "overflow",
            "distribution_dependent": self.distribution_dependent,
            "note": self.note,
        }


def _tail_points(N: int) -> list[int]:
    return sorted({min(LIMIT, round(N * 4.0 ** (j / (TAIL_POINTS - 1)))) for j in range(TAIL_POINTS)})


def find_threshold(cond: Callable[[int], bool], limit: int = LIMIT) -> Optional[int]:
    """Smallest T <= limit with cond(T), not cond(T - 1), and cond on 32
    geometric points of [T, 4T].

    Doubling locates a block whose right end satisfies the condition and
    the tail check; bisection then finds the crossing inside it. If the
    tail check fails past a crossing, the search resumes beyond the
    failing point. N = 0 counts as failing.
    """

    def tail_ok(N: int) -> bool:
        return all(cond(p) for p in _tail_points(N))

    start = 1
    while start <= limit:
        hi = start
        while not (cond(hi) and tail_ok(hi)):
            hi *= 2
            if hi > limit:
                if cond(limit) and tail_ok(limit):
                    hi = limit
                    break
                return None
        lo = hi // 2 if hi > start else start - 1
        while lo > 0 and cond(lo):
            hi, lo = lo, lo // 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if cond(mid):
                hi = mid
            else:
                lo = mid
        bad = [p for p in _tail_points(hi) if not cond(p)]
        if not bad:
            return hi
        start = max(bad) + 1
    return None


def lemma31_condition(N: int, eps: float) -> bool:
    """(e/4)^{eps N} + exp(-eps e N / 4) <= exp(-eps N / 3)."""
    x = eps * N
    return _logsumexp([x * math.log(math.e / 4.0), -x * math.e / 4.0]) <= -x / 3.0


def lemma31_threshold(eps: float) -> Threshold:
    if not 0 < eps <= 1:
        raise InvalidParams("eps must lie in (0, 1]")
    return Threshold("N_3.1", find_threshold(lambda N: lemma31_condition(N, eps)))


def lemma36_log_terms(N: int, eps: float, consts: BoundConstants) -> tuple[float, float]:
    """(log LHS, log RHS) of condition 3 of the symmetric sup bound."""
    lhs = _logsumexp(
        [
            log_net_cardinality("sparse", N=N) - consts.c_31 * eps * N / 3.0,
            -consts.C_cubicnet * N,
            -float(N),
        ]
    )
    return lhs, -consts.w_36(eps) * N


def lemma36_condition(N: int, eps: float, consts: BoundConstants) -> bool:
    lhs, rhs = lemma36_log_terms(N, eps, consts)
    return lhs <= rhs


def lemma36_threshold(eps: float, consts: BoundConstants) -> Threshold:
    """Smallest N from which (12eN)^{sqrt N} e^{-c eps N/3} + e^{-CN} + e^{-N} <= e^{-w N}."""
    if not 0 < eps <= 1:
        raise InvalidParams("eps must lie in (0, 1]")
    return Threshold("N_3.6[cond3]", find_threshold(lambda N: lemma36_condition(N, eps, consts)))


def lemma36_thresholds(
    eps: float,
    consts: BoundConstants,
    delta_34: Optional[float] = None,
    n_35: Optional[int] = None,
) -> list[Threshold]:
    """All three conditions defining the symmetric sup-bound threshold, plus their max.

    Conditions 1 and 2 need the distribution-dependent delta (flat-vector
    radius) and n (cube-vertex size); without them only condition 3 and
    the computable N_3.1(eps/3) are reported.
    """
    out = [lemma36_threshold(eps, consts)]
    n31 = lemma31_threshold(eps / 3.0)
    n31.label = "N_3.1(eps/3)"
    out.append(n31)
    dependent = False
    if delta_34 is not None:
        if not delta_34 > 0:
            raise InvalidParams("delta_34 must be positive")
        cond1 = lambda N: math.isqrt(math.isqrt(N)) * delta_34 >= 1.0  # noqa: E731
        out.append(Threshold("N_3.6[cond1]", find_threshold(cond1), True))
        dependent = True
    if n_35 is not None:
        out.append(Threshold("n_3.5", int(n_35), True, "user supplied"))
        dependent = True
    parts = [t.value for t in out]
    total = None if any(p is None for p in parts) else max(parts)
    note = "" if dependent else "lower bound: conditions 1-2 need distribution inputs"
    out.append(Threshold("N_3.6", total, dependent or delta_34 is None or n_35 is None, note))
    return out


def prop41_condition(N: int, eps: float) -> bool:
    """N - ceil(N - eps N) >= eps N / 2."""
    return N - math.ceil(N - eps * N) >= eps * N / 2.0


def prop41_threshold(eps: float) -> Threshold:
    return Threshold("N_4.1", find_threshold(lambda N: prop41_condition(N, eps)))


def prop38_threshold(n_36: Optional[int], w_36: float, dependent: bool) -> Threshold:
    """Smallest integer above N_3.6 with exp(w N / 2) >= 4/3."""
    if n_36 is None:
        return Threshold("N_3.8", None, dependent)
    cond = lambda N: N > n_36 and w_36 * N / 2.0 >= math.log(4.0 / 3.0)  # noqa: E731
    return Threshold("N_3.8", find_threshold(cond), dependent)


def theorem42_condition(N: int, floor_n: int, eps: float, w_38: float) -> bool:
    if N <= floor_n:
        return False
    return _logsumexp([-eps * N, -w_38 * N]) <= -min(eps / 2.0, w_38 / 2.0) * N


@dataclass
class Certificate:
    inputs: dict
    epsilon_41: float
    residual_41: float
    w_36: float
    w_38: float
    w_42: float
    thresholds: list
    log_cardinalities: list
    illustrative: bool
    log: list = field(default_factory=list)

    def threshold(self, label: str) -> Threshold:
        for t in self.thresholds:
            if t.label == label:
                return t
        raise KeyError(label)

    def to_json(self) -> dict:
        return {
            "inputs": self.inputs,
            "epsilon_41": self.epsilon_41,
            "residuals": {"epsilon_41": self.residual_41},
            "w": {"w_36": self.w_36, "w_38": self.w_38, "w_42": self.w_42},
            "thresholds": [t.to_json() for t in self.thresholds],
            "log_cardinalities": [{"label": k, "value": v} for k, v in self.log_cardinalities],
            "constants_illustrative": self.illustrative,
            "log": self.log,
        }

    def to_text(self) -> str:
        rows = [(k, repr(v)) for k, v in self.inputs.items() if k != "constants"]
        rows += [(k, repr(v)) for k, v in self.inputs["constants"].items()]
        rows += [
            ("epsilon_41", repr(self.epsilon_41)),
            ("residual(epsilon_41)", f"{self.residual_41:.3e}"),
            ("w_36", repr(self.w_36)),
            ("w_38", repr(self.w_38)),
            ("w_42", repr(self.w_42)),
        ]
        for t in self.thresholds:
            val = "overflow" if t.value is None else str(t.value)
            flag = "  [distribution-dependent]" if t.distribution_dependent else ""
            rows.append((t.label, val + flag))
        rows += [(f"log|{k}|", f"{v:.6g}") for k, v in self.log_cardinalities]
        width = max(len(k) for k, _ in rows)
        lines = [f"{k:<{width}}  {v}" for k, v in rows]
        if self.illustrative:
            lines.append("(constants are illustrative defaults, not derived values)")
        return "\n".join(lines)


def theorem42_certificate(
    eta: float,
    M: float,
    consts: BoundConstants = BoundConstants(),
    delta_34: Optional[float] = None,
    n_35: Optional[int] = None,
) -> Certificate:
    """Compose the coupled-truncation threshold chain.

    eps = epsilon_for_eta(eta, 2M, c) (the truncated entries are bounded by
    2M); the sup bound is applied at that eps; w_42 = min(eps/2, w_38/2).
    """
    if not (eta > 0 and M > 0):
        raise InvalidParams("need eta > 0 and M > 0")
    log = []
    eps = epsilon_for_eta(eta, 2.0 * M, consts.c_bernstein)
    resid = epsilon_residual(eps, eta, 2.0 * M, consts.c_bernstein)
    log.append(f"epsilon_41 = epsilon_for_eta(eta={eta!r}, 2M={2.0 * M!r}, c={consts.c_bernstein!r}) = {eps!r}")

    n41 = prop41_threshold(eps)
    log.append(f"N_4.1 = {n41.value}")
    ths36 = lemma36_thresholds(eps, consts, delta_34, n_35)
    n36 = ths36[-1]
    w36 = consts.w_36(eps)
    log.append(f"N_3.6 = {n36.value} (w_36 = {w36!r})")
    n38 = prop38_threshold(n36.value, w36, n36.distribution_dependent)
    w38 = w36 / 2.0
    log.append(f"N_3.8 = {n38.value} (w_38 = {w38!r})")

    dependent = n38.distribution_dependent
    if n41.value is None or n38.value is None:
        n42 = Threshold("N_4.2", None, dependent)
    else:
        floor_n = max(n41.value, n38.value)
        n42 = Threshold(
            "N_4.2",
            find_threshold(lambda N: theorem42_condition(N, floor_n, eps, w38)),
            dependent,
        )
    w42 = min(eps / 2.0, w38 / 2.0)
    log.append(f"N_4.2 = {n42.value} (w_42 = {w42!r})")

    cards = []
    if n42.value is not None:
        N = n42.value
        cards = [
            ("sparse net at N_4.2", log_net_cardinality("sparse", N=N)),
            ("cube net at N_4.2", log_net_cardinality("cube-net", n=N, C=consts.C_cubicnet)),
            ("kept sets at N_4.2", eps * N * math.log(2.0 * math.e / eps)),
        ]
    inputs = {
        "eta": eta,
        "M": M,
        "delta_34": delta_34,
        "n_35": n_35,
        "constants": {k: v for k, v in asdict(consts).items() if k != "extra"} | dict(consts.extra),
    }
    return Certificate(
        inputs=inputs,
        epsilon_41=eps,
        residual_41=resid,
        w_36=w36,
        w_38=w38,
        w_42=w42,
        thresholds=[n41, *ths36, n38, n42],
        log_cardinalities=cards,
        illustrative=consts.illustrative,
        log=log,
    )
