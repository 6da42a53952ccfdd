"""Standardized entry laws: sampling, moments, centered truncation.

Every registered law is emitted standardized, i.e. with mean 0 and
variance 1. A law is named by a text key::

    key   := kind [ ":" param ( "," param )* ]
    param := name "=" float

    gaussian
    rademacher
    uniform
    symmetric-pareto:alpha=2.5      alpha > 2
    student-t:nu=3.0                nu > 2
    two-point:p=0.3                 0 < p < 1

Parameters are written with ``repr(float)`` so that ``parse_spec(spec.key)``
reproduces the same DistributionSpec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from . import rng
from .errors import InvalidParams, NotFound
from .quadrature import adaptive_simpson

KINDS = ("gaussian", "rademacher", "uniform", "symmetric-pareto", "student-t", "two-point")
PARAM_NAMES = {
    "gaussian": (),
    "rademacher": (),
    "uniform": (),
    "symmetric-pareto": ("alpha",),
    "student-t": ("nu",),
    "two-point": ("p",),
}
CLOSED_FORM_KINDS = ("rademacher", "two-point", "uniform")
QUAD_TOL = 1e-10
MC_SAMPLES = 10**7


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    params: tuple[float, ...] = ()
    shift: float = field(init=False)
    scale: float = field(init=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParams(f"unknown distribution kind {self.kind!r}")
        params = tuple(float(p) for p in self.params)
        names = PARAM_NAMES[self.kind]
        if len(params) != len(names):
            raise InvalidParams(f"{self.kind} takes parameters {names}, got {params}")
        object.__setattr__(self, "params", params)

        shift, scale = 0.0, 1.0
        if self.kind == "uniform":
            scale = 1.0 / math.sqrt(3.0)
        elif self.kind == "symmetric-pareto":
            (alpha,) = params
            if not alpha > 2.0:
                raise InvalidParams(f"symmetric-pareto needs alpha > 2, got {alpha}")
            scale = math.sqrt(alpha / (alpha - 2.0))
        elif self.kind == "student-t":
            (nu,) = params
            if not nu > 2.0:
                raise InvalidParams(f"student-t needs nu > 2, got {nu}")
            scale = math.sqrt(nu / (nu - 2.0))
        elif self.kind == "two-point":
            (p,) = params
            if not 0.0 < p < 1.0:
                raise InvalidParams(f"two-point needs 0 < p < 1, got {p}")
            shift, scale = p, math.sqrt(p * (1.0 - p))
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "scale", scale)

    @property
    def key(self) -> str:
        names = PARAM_NAMES[self.kind]
        if not names:
            return self.kind
        body = ",".join(f"{n}={v!r}" for n, v in zip(names, self.params))
        return f"{self.kind}:{body}"

    def __str__(self) -> str:
        return self.key

    @property
    def symmetric(self) -> bool:
        return self.kind != "two-point" or self.params[0] == 0.5

    @property
    def support_bound(self) -> Optional[float]:
        """sup |xi| for bounded laws, None otherwise."""
        if self.kind == "rademacher":
            return 1.0
        if self.kind == "uniform":
            return math.sqrt(3.0)
        if self.kind == "two-point":
            return float(max(abs(v) for v, _ in self.atoms()))
        return None

    @property
    def fourth_moment_finite(self) -> bool:
        if self.kind == "symmetric-pareto":
            return self.params[0] > 4.0
        if self.kind == "student-t":
            return self.params[0] > 4.0
        return True

    def atoms(self) -> list[tuple[float, float]]:
        """(value, probability) pairs of a discrete law; empty for continuous ones."""
        if self.kind == "rademacher":
            return [(-1.0, 0.5), (1.0, 0.5)]
        if self.kind == "two-point":
            (p,) = self.params
            return [(math.sqrt((1.0 - p) / p), p), (-math.sqrt(p / (1.0 - p)), 1.0 - p)]
        return []


def parse_spec(key: str) -> DistributionSpec:
    key = key.strip()
    kind, _, rest = key.partition(":")
    kind = kind.strip()
    if kind not in KINDS:
        raise InvalidParams(f"unknown distribution kind {kind!r} in {key!r}")
    values = {}
    if rest.strip():
        for item in rest.split(","):
            name, eq, val = item.partition("=")
            if not eq:
                raise InvalidParams(f"malformed parameter {item!r} in {key!r}")
            try:
                values[name.strip()] = float(val)
            except ValueError:
                raise InvalidParams(f"parameter {item!r} is not a number") from None
    names = PARAM_NAMES[kind]
    if set(values) != set(names):
        raise InvalidParams(f"{kind} expects parameters {names}, got {tuple(values)}")
    return DistributionSpec(kind, tuple(values[n] for n in names))


def as_spec(spec) -> DistributionSpec:
    return spec if isinstance(spec, DistributionSpec) else parse_spec(str(spec))


@dataclass(frozen=True)
class MomentReport:
    mean: float
    variance: float
    fourth_moment: float
    method: str = "closed-form"
    abs_error: float = 0.0


def analytic_moments(spec: DistributionSpec) -> MomentReport:
    """Mean, variance and fourth moment of the standardized law.

    Computed from the raw law's moments and the standardization constants,
    so a wrong shift/scale shows up as a mean or variance off 0/1.
    """
    spec = as_spec(spec)
    s = spec.scale
    if spec.kind == "gaussian":
        raw_mean, raw_var, m4 = 0.0, 1.0, 3.0
    elif spec.kind == "rademacher":
        raw_mean, raw_var, m4 = 0.0, 1.0, 1.0
    elif spec.kind == "uniform":
        raw_mean, raw_var, m4 = 0.0, 1.0 / 3.0, (1.0 / 5.0) / s**4
    elif spec.kind == "symmetric-pareto":
        (a,) = spec.params
        raw_mean, raw_var = 0.0, a / (a - 2.0)
        m4 = (a / (a - 4.0)) / s**4 if a > 4.0 else math.inf
    elif spec.kind == "student-t":
        (nu,) = spec.params
        raw_mean, raw_var = 0.0, nu / (nu - 2.0)
        m4 = 3.0 * (nu - 2.0) / (nu - 4.0) if nu > 4.0 else math.inf
    else:  # two-point on {1, 0}
        (p,) = spec.params
        raw_mean, raw_var = p, p * (1.0 - p)
        m4 = (1.0 - p) ** 2 / p + p**2 / (1.0 - p)
    return MomentReport(
        mean=(raw_mean - spec.shift) / s,
        variance=raw_var / s**2,
        fourth_moment=m4,
    )


def _raw_quantile(spec: DistributionSpec, u: np.ndarray) -> np.ndarray:
    if spec.kind == "gaussian":
        return special.ndtri(u)
    if spec.kind == "rademacher":
        return np.where(u < 0.5, -1.0, 1.0)
    if spec.kind == "uniform":
        return 2.0 * u - 1.0
    if spec.kind == "symmetric-pareto":
        (alpha,) = spec.params
        w = 2.0 * np.minimum(u, 1.0 - u)
        return np.where(u < 0.5, -1.0, 1.0) * w ** (-1.0 / alpha)
    if spec.kind == "student-t":
        (nu,) = spec.params
        return special.stdtrit(nu, u)
    (p,) = spec.params
    return np.where(u < p, 1.0, 0.0)


def sample_entries(spec: DistributionSpec, count: int, seed: int, start: int = 0) -> np.ndarray:
    """Standardized variates at stream positions ``start .. start+count-1``.

    Each value is the inverse CDF of one counter-based uniform, so a value
    depends only on (spec, seed, position).
    """
    spec = as_spec(spec)
    if count < 0:
        raise InvalidParams(f"count must be >= 0, got {count}")
    u = rng.uniforms(seed, count, start)
    raw = _raw_quantile(spec, u)
    if spec.shift == 0.0 and spec.scale == 1.0:
        return np.asarray(raw, dtype=np.float64)
    return (raw - spec.shift) / spec.scale


@dataclass(frozen=True)
class TruncationReport:
    """Moments of the centered M-truncation and of its tail complement.

    ``trunc_second_moment`` is E(xi^2; |xi| <= M) from the body integral;
    ``tail_second_moment`` is computed from the upper tail independently
    whenever an analytic tail is available.
    """

    M: float
    mu_trunc: float
    var_trunc: float
    tail_second_moment: float
    trunc_second_moment: float
    method: str
    abs_error: float = 0.0
    n_samples: Optional[int] = None
    seed: Optional[int] = None
    spec_key: str = ""

    def identity_residual(self) -> float:
        return self.tail_second_moment - (1.0 - 2.0 * self.trunc_second_moment + self.var_trunc)


def _discrete_moments(spec: DistributionSpec, M: float) -> tuple[float, float, float]:
    mu = body2 = tail2 = 0.0
    for v, p in spec.atoms():
        if abs(v) <= M:
            mu += p * v
            body2 += p * v * v
        else:
            tail2 += p * v * v
    return mu, body2, tail2


def _student_tail2(nu: float, t: float) -> float:
    """E(T^2; |T| > t) for T ~ t_nu, via x^2 f_nu(x) = nu c_nu [k_{nu-2} - k_nu]."""
    p_nu = 2.0 * special.stdtr(nu, -t)
    p_lo = 2.0 * special.stdtr(nu - 2.0, -t * math.sqrt((nu - 2.0) / nu))
    return nu * ((nu - 1.0) / (nu - 2.0) * p_lo - p_nu)


def _continuous_moments(spec: DistributionSpec, M: float) -> tuple[float, float, float, float]:
    """(mu, body second moment, tail second moment, quadrature error) for symmetric laws."""
    tol = QUAD_TOL / 4.0
    if spec.kind == "gaussian":
        c = 1.0 / math.sqrt(2.0 * math.pi)
        upper = min(M, 40.0)
        body, err = adaptive_simpson(lambda x: x * x * c * math.exp(-0.5 * x * x), 0.0, upper, tol)
        body *= 2.0
        err *= 2.0
        tail2 = 2.0 * M * c * math.exp(-0.5 * M * M) + special.erfc(M / math.sqrt(2.0))
        return 0.0, body, tail2, err

    if spec.kind == "symmetric-pareto":
        (a,) = spec.params
        s = spec.scale
        x0 = 1.0 / s
        coef = a * s ** (-a)
        if M <= x0:
            body, err = 0.0, 0.0
        else:
            # integrand x^2 f(x) dx with x = e^u; f is the two-sided density
            body, err = adaptive_simpson(
                lambda u: coef * math.exp((2.0 - a) * u), math.log(x0), math.log(M), tol
            )
        tail2 = 1.0 if M < x0 else (s * M) ** (2.0 - a)
        return 0.0, body, tail2, err

    if spec.kind == "student-t":
        (nu,) = spec.params
        sig = spec.scale
        logc = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)
        c = math.exp(logc)

        def g(x: float) -> float:
            # two-sided: 2 x^2 f_xi(x), f_xi(x) = sig f_T(sig x)
            t = sig * x
            return 2.0 * x * x * sig * c * (1.0 + t * t / nu) ** (-(nu + 1) / 2)

        split = min(M, 1.0)
        body, err = adaptive_simpson(g, 0.0, split, tol)
        if M > 1.0:
            b2, e2 = adaptive_simpson(lambda u: g(math.exp(u)) * math.exp(u), 0.0, math.log(M), tol)
            body += b2
            err += e2
        tail2 = _student_tail2(nu, sig * M) / sig**2
        return 0.0, body, tail2, err

    raise InvalidParams(f"no density registered for {spec.kind}")


def _uniform_moments(M: float) -> tuple[float, float, float]:
    r3 = math.sqrt(3.0)
    c = min(M, r3)
    body2 = c**3 / (3.0 * r3)
    tail2 = (r3**3 - c**3) / (3.0 * r3)
    return 0.0, body2, tail2


def _monte_carlo_moments(spec, M, n_samples, seed) -> tuple[float, float, float, float]:
    x = sample_entries(spec, n_samples, seed)
    inside = np.abs(x) <= M
    xi = np.where(inside, x, 0.0)
    xo = np.where(inside, 0.0, x)
    mu = float(xi.mean())
    body2 = float((xi * xi).mean())
    tail2 = float((xo * xo).mean())
    stderr = float((xi * xi).std() / math.sqrt(n_samples))
    return mu, body2, tail2, stderr


def truncation_report(
    spec: DistributionSpec,
    M: float,
    method: Optional[str] = None,
    n_samples: int = MC_SAMPLES,
    seed: int = 0,
) -> TruncationReport:
    """Moments of xi_M = xi 1{|xi|<=M} - E(xi 1{|xi|<=M}) and theta_M = xi - xi_M.

    ``method=None`` picks closed form for discrete and uniform laws and
    quadrature for laws with a registered density; ``"monte-carlo"`` forces
    the sampling fallback (standard error reported in ``abs_error``).
    """
    spec = as_spec(spec)
    M = float(M)
    if not M > 0.0 or not math.isfinite(M):
        raise InvalidParams(f"truncation level must be a positive finite number, got {M}")
    n_used = seed_used = None
    if method == "monte-carlo":
        mu, body2, tail2, err = _monte_carlo_moments(spec, M, n_samples, seed)
        n_used, seed_used = n_samples, seed
        # the sample tail is E(xi^2; |xi|>M) - mu^2 only up to sampling error
    elif method not in (None, "closed-form", "quadrature"):
        raise InvalidParams(f"unknown method {method!r}")
    elif spec.kind in ("rademacher", "two-point"):
        mu, body2, tail2 = _discrete_moments(spec, M)
        err, method = 0.0, "closed-form"
    elif spec.kind == "uniform":
        mu, body2, tail2 = _uniform_moments(M)
        err, method = 0.0, "closed-form"
    else:
        mu, body2, tail2, err = _continuous_moments(spec, M)
        method = "quadrature"
    # E theta^2 = E(xi^2; |xi|>M) + 2 mu E(xi; |xi|>M) + mu^2, and E(xi; |xi|>M) = -mu
    return TruncationReport(
        M=M,
        mu_trunc=float(mu),
        var_trunc=float(body2 - mu * mu),
        tail_second_moment=float(tail2 - mu * mu),
        trunc_second_moment=float(body2),
        method=method,
        abs_error=float(err),
        n_samples=n_used,
        seed=seed_used,
        spec_key=spec.key,
    )


def apply_centered_truncation(values, report: TruncationReport) -> np.ndarray:
    """Entrywise xi -> xi 1{|xi| <= M} - mu_trunc; output lies in [-2M, 2M]."""
    x = np.asarray(values, dtype=np.float64)
    return np.where(np.abs(x) <= report.M, x, 0.0) - report.mu_trunc


def _truncation_ok(spec: DistributionSpec, M: float, eta: float) -> bool:
    rep = truncation_report(spec, M)
    return rep.var_trunc >= (1.0 - eta) ** 2 and rep.tail_second_moment <= eta**2


def choose_truncation_level(spec: DistributionSpec, eta: float, rel_tol: float = 1e-6) -> float:
    """Smallest M with Var(xi_M) >= (1-eta)^2 and E theta_M^2 <= eta^2.

    Discrete laws are checked at their atom magnitudes, which are the only
    places the conditions can switch. Continuous laws are bracketed by
    doubling from M = 1 and bisected to relative width ``rel_tol``.
    """
    spec = as_spec(spec)
    if not 0.0 < eta < 1.0:
        raise InvalidParams(f"eta must lie in (0, 1), got {eta}")
    ok = lambda M: _truncation_ok(spec, M, eta)  # noqa: E731

    atoms = spec.atoms()
    if atoms:
        for M in sorted({abs(v) for v, _ in atoms}):
            if ok(M):
                return M
        raise NotFound(f"no truncation level satisfies eta={eta} for {spec.key}")

    hi = 1.0
    if ok(hi):
        lo = 0.5
        while ok(lo):
            hi, lo = lo, lo / 2.0
            if lo < 1e-12:
                break
    else:
        lo = hi
        while not ok(hi):
            lo, hi = hi, hi * 2.0
            if hi > 1e9:
                raise NotFound(f"no M <= 1e9 satisfies eta={eta} for {spec.key}")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    if not ok(hi):
        raise NotFound(f"bisection result M={hi} failed re-verification for {spec.key}")
    return hi


def weighted_sum_tail_probe(
    spec: DistributionSpec,
    weights,
    eps: float,
    trials: int,
    seed: int,
    chunk_entries: int = 1 << 22,
) -> float:
    """Monte Carlo frequency of |sum_j t_j a_j| > eps over ``trials`` draws.

    Trial ``r`` uses stream positions ``r*n .. r*n+n-1``.
    """
    spec = as_spec(spec)
    t = np.asarray(weights, dtype=np.float64).ravel()
    if t.size == 0 or np.any(t < 0) or abs(math.fsum(t) - 1.0) > 1e-12:
        raise InvalidParams("bad-weights: weights must be nonnegative and sum to 1")
    if not eps > 0:
        raise InvalidParams(f"eps must be positive, got {eps}")
    if trials < 1:
        raise InvalidParams("trials must be >= 1")
    n = t.size
    rows = max(1, chunk_entries // n)
    hits = 0
    for r0 in range(0, trials, rows):
        r1 = min(trials, r0 + rows)
        a = sample_entries(spec, (r1 - r0) * n, seed, start=r0 * n).reshape(r1 - r0, n)
        hits += int(np.count_nonzero(np.abs(a @ t) > eps))
    return hits / trials
