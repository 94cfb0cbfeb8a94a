"""Closed-form and series evaluators for the radial alpha-stable process on Q_p.

All series are radial shell sums.  Two-sided sums are truncated once the
remaining terms are bounded (geometrically) below ``SERIES_ATOL``.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

from .coefficients import Coefficient, NormPower, StepFunction
from .padic import Ball, PAdicNumber, is_prime

SERIES_ATOL = 1e-15
_MAX_TERMS = 100_000


def _ppow(p: float, x: float) -> float:
    """p**x without OverflowError."""
    e = x * math.log(p)
    if e > 709.0:
        return math.inf
    if e < -745.0:
        return 0.0
    return math.exp(e)


def levy_constant(p: int, alpha: float) -> float:
    """K such that the jump kernel K ||y||^(-1-alpha) has exponent ||xi||^alpha."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return (p**alpha - 1) / (1 - p ** (-alpha - 1))


derive_levy_constant = levy_constant


@dataclass(frozen=True)
class RadialLevySpec:
    """Radial Levy process on Q_p.

    ``kind == "stable"`` uses the alpha-stable rates; ``kind == "general"``
    carries an arbitrary non-negative sequence a(m).  ``cap`` (if set) zeroes
    a(m) for m >= cap, which is the truncated sequence A(cap).
    """

    p: int
    kind: str = "stable"
    alpha: float | None = None
    a_func: Callable[[int], float] | None = field(default=None, compare=False)
    gamma: float | None = None
    cap: int | None = None

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.kind == "stable":
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("stable spec needs alpha > 0")
        elif self.kind == "general":
            if self.a_func is None:
                raise ValueError("general spec needs a(m)")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    @classmethod
    def stable(cls, p: int, alpha: float) -> RadialLevySpec:
        return cls(p=p, kind="stable", alpha=float(alpha))

    @classmethod
    def general(cls, p: int, a: Callable[[int], float], gamma: float = 1.0) -> RadialLevySpec:
        return cls(p=p, kind="general", a_func=a, gamma=gamma)

    def truncated(self, cap: int) -> RadialLevySpec:
        return RadialLevySpec(self.p, self.kind, self.alpha, self.a_func, self.gamma, cap)

    @property
    def K(self) -> float:
        if self.kind != "stable":
            raise ValueError("K is defined for stable specs only")
        return levy_constant(self.p, self.alpha)

    def a(self, m: int) -> float:
        if self.cap is not None and m >= self.cap:
            return 0.0
        if self.kind == "stable":
            p, al = self.p, self.alpha
            return (1 - 1 / p) / (1 - _ppow(p, -al - 1)) * _ppow(p, -al * m)
        return float(self.a_func(m))

    def require_stable(self, min_alpha: float | None = None):
        if self.kind != "stable":
            raise ValueError("operation needs a stable spec")
        if min_alpha is not None and not self.alpha > min_alpha:
            raise ValueError(f"operation needs alpha > {min_alpha}, got {self.alpha}")


# -- conditions on a(m) -------------------------------------------------------

@dataclass(frozen=True)
class ConditionReport:
    cond1: bool
    cond2: bool
    cond3: bool
    cond4: bool
    method: str
    notes: str = ""


def check_conditions(spec: RadialLevySpec, gamma: float, horizon: int = 200) -> ConditionReport:
    """Monotonicity, limits and the two summability conditions for a(m) at exponent gamma."""
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    if spec.kind == "stable":
        al = spec.alpha
        # a(m) p^(gamma m) ~ p^((gamma - alpha) m): the m -> -inf side needs gamma > alpha,
        # the m -> +inf side needs gamma < alpha unless the sequence is cut at cap.
        left = gamma > al
        right = spec.cap is not None or gamma < al
        return ConditionReport(True, True, left and right, left, "closed-form geometric")
    return _check_general(spec, gamma, horizon)


def _check_general(spec: RadialLevySpec, gamma: float, R: int) -> ConditionReport:
    p = spec.p
    ms = range(-R, R + 1)
    a = [spec.a(m) for m in ms]
    cond1 = all(x >= y - 1e-15 * max(abs(x), 1.0) for x, y in zip(a, a[1:]))

    def tail_ratio(i, j):
        # ratio of consecutive far-tail terms; 0/0 counts as a finished tail
        if a[j] == 0:
            return 0.0
        return a[j] / a[i] if a[i] else math.inf

    right_ratio = tail_ratio(-2, -1)
    left_ratio = tail_ratio(1, 0)
    cond2 = (a[-1] == 0 or right_ratio < 1) and (a[0] > 0)
    terms = [x * _ppow(p, gamma * m) for x, m in zip(a, ms)]

    def converges(t_far, t_near):
        return t_far == 0 or (t_near > 0 and t_far / t_near < 1)

    left_ok = converges(terms[0], terms[1])
    right_ok = converges(terms[-1], terms[-2])
    notes = f"partial sums over |m| <= {R}; tail ratios left={left_ratio:.3g} right={right_ratio:.3g}"
    return ConditionReport(cond1, cond2, left_ok and right_ok, left_ok, "partial sums + tail ratio", notes)


# -- transition law -------------------------------------------------------------

def _rate(spec: RadialLevySpec, k: int) -> float:
    # r_k = p^(-alpha k): exponential rate attached to the ball of radius p^k
    return _ppow(spec.p, -spec.alpha * k)


def ball_probability(spec: RadialLevySpec, m: int, t: float) -> float:
    """P(||Z(t)|| <= p^m) = (1 - 1/p) sum_i p^-i exp(-t p^(-alpha (m + i)))."""
    spec.require_stable()
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return 1.0
    p = spec.p
    q = 1 - 1 / p
    if t * _rate(spec, m) > 1.0:
        s = 0.0
        for i in range(_MAX_TERMS):
            s += _ppow(p, -i) * math.exp(-t * _rate(spec, m + i))
            if _ppow(p, -i - 1) / q < SERIES_ATOL * 1e-2:
                break
        return min(1.0, q * s)
    return 1.0 - ball_tail_probability(spec, m, t)


def ball_tail_probability(spec: RadialLevySpec, m: int, t: float) -> float:
    """P(||Z(t)|| > p^m), accurate when it is small."""
    if t == 0:
        return 0.0
    p = spec.p
    q = 1 - 1 / p
    s = 0.0
    for i in range(_MAX_TERMS):
        r = _rate(spec, m + i)
        s -= _ppow(p, -i) * math.expm1(-t * r)
        if _ppow(p, -i) * t * r < SERIES_ATOL * 1e-3:
            break
    return min(1.0, q * s)


def _shell_combination(spec: RadialLevySpec, m: int, E: Callable[[int], float], bound) -> float:
    """q [ q sum_i p^-i E(m + i) - E(m - 1) ], summed until bound(i) is negligible."""
    p = spec.p
    q = 1 - 1 / p
    s = 0.0
    for i in range(_MAX_TERMS):
        s += _ppow(p, -i) * E(m + i)
        if bound(i) < SERIES_ATOL * 1e-3:
            break
    return q * (q * s - E(m - 1))


def shell_probability(spec: RadialLevySpec, m: int, t: float) -> float:
    """P(||Z(t)|| = p^m) = P_m(t) - P_{m-1}(t), evaluated without cancellation."""
    spec.require_stable()
    if t == 0:
        return 0.0
    p = spec.p
    if t * _rate(spec, m - 1) >= 1.0:
        val = _shell_combination(spec, m, lambda k: math.exp(-t * _rate(spec, k)),
                                 lambda i: _ppow(p, -i) * p)
    else:
        val = _shell_combination(spec, m, lambda k: math.expm1(-t * _rate(spec, k)),
                                 lambda i: _ppow(p, -i) * t * _rate(spec, m + i))
    return max(val, 0.0)


def shell_density(spec: RadialLevySpec, m: int, t: float) -> float:
    """Transition density P(t, y) at ||y|| = p^m: shell probability over shell measure."""
    if t <= 0:
        raise ValueError("t must be > 0")
    p = spec.p
    return shell_probability(spec, m, t) / ((1 - 1 / p) * _ppow(p, m))


def density_at_origin(spec: RadialLevySpec, t: float) -> float:
    """P(t, 0) = sum_j (1 - 1/p) p^j exp(-t p^(alpha j))."""
    spec.require_stable()
    if t <= 0:
        raise ValueError("t must be > 0")
    p, al = spec.p, spec.alpha
    q = 1 - 1 / p
    j0 = math.floor(-math.log(t, p) / al)
    s = 0.0
    j = j0
    while True:
        term = q * _ppow(p, j) * math.exp(-t * _ppow(p, al * j))
        s += term
        if term < SERIES_ATOL * 1e-3 * max(s, 1e-300) or j > j0 + 200:
            break
        j += 1
    j = j0 - 1
    while True:
        term = q * _ppow(p, j) * math.exp(-t * _ppow(p, al * j))
        s += term
        # remaining terms are bounded by the geometric tail of q p^j
        if _ppow(p, j) < SERIES_ATOL * 1e-3 * max(s, 1e-300):
            break
        j -= 1
    return s


def transition_density(spec: RadialLevySpec, t: float, norm_exp: int | None) -> float:
    """P(t, y) as a function of ||y|| = p^norm_exp (None for y = 0)."""
    if norm_exp is None:
        return density_at_origin(spec, t)
    return shell_density(spec, norm_exp, t)


def total_mass(spec: RadialLevySpec, t: float, m_lo: int = -200, m_hi: int = 200) -> float:
    """sum_m shell_density * shell measure + the mass beyond the summed range."""
    s = sum(shell_probability(spec, m, t) for m in range(m_lo, m_hi + 1))
    return s + ball_probability(spec, m_lo - 1, t) + ball_tail_probability(spec, m_hi, t)


invariance_integral = total_mass


# -- time integrals ------------------------------------------------------------

def _E_T(T: float, r: float) -> float:
    """int_0^T exp(-s r) ds."""
    if r == 0:
        return T
    if math.isinf(r):
        return 0.0
    return -math.expm1(-T * r) / r


def _G_T(T: float, r: float) -> float:
    """int_0^T (1 - exp(-s r)) ds."""
    x = T * r
    if x < 1e-4:
        return T * (x / 2 - x * x / 6 + x**3 / 24)
    return T - _E_T(T, r)


def integrated_shell_probability(spec: RadialLevySpec, m: int, T: float) -> float:
    """int_0^T P(||Z(s)|| = p^m) ds."""
    spec.require_stable()
    p = spec.p
    if T * _rate(spec, m - 1) >= 1.0:
        val = _shell_combination(spec, m, lambda k: _E_T(T, _rate(spec, k)),
                                 lambda i: _ppow(p, -i) * p * T)
    else:
        val = _shell_combination(spec, m, lambda k: -_G_T(T, _rate(spec, k)),
                                 lambda i: _ppow(p, -i) * T * T * _rate(spec, m + i))
    return max(val, 0.0)


def integrated_ball_probability(spec: RadialLevySpec, m: int, T: float) -> float:
    """int_0^T P(||Z(s)|| <= p^m) ds."""
    p = spec.p
    q = 1 - 1 / p
    s = 0.0
    for i in range(_MAX_TERMS):
        s += _ppow(p, -i) * _E_T(T, _rate(spec, m + i))
        if _ppow(p, -i) * T < SERIES_ATOL * 1e-3:
            break
    return q * s


def integrated_origin_density(spec: RadialLevySpec, T: float) -> float:
    """int_0^T P(s, 0) ds (finite for alpha > 1)."""
    spec.require_stable(min_alpha=1.0)
    p, al = spec.p, spec.alpha
    q = 1 - 1 / p
    s = 0.0
    j = 0
    # upward: terms q p^j (1 - e^{-T p^{alpha j}}) / p^{alpha j} ~ p^{j(1-alpha)}
    while True:
        term = q * _ppow(p, j) * _E_T(T, _ppow(p, al * j))
        s += term
        if term / (1 - _ppow(p, 1 - al)) < SERIES_ATOL * 1e-3:
            break
        j += 1
    j = -1
    while True:
        term = q * _ppow(p, j) * _E_T(T, _ppow(p, al * j))
        s += term
        if _ppow(p, j) * T < SERIES_ATOL * 1e-3:
            break
        j -= 1
    return s


# -- resolvent kernel --------------------------------------------------------

def green_function(spec: RadialLevySpec, lam: float, norm_exp: int | None) -> float:
    """g^lam(x) for ||x|| = p^norm_exp (None for x = 0); needs alpha > 1."""
    spec.require_stable()
    if spec.alpha <= 1:
        raise ValueError("green function diverges for alpha <= 1")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    p, al = spec.p, spec.alpha
    q = 1 - 1 / p
    if norm_exp is None:
        return _green_lower(p, al, lam, 0) + _green_upper(p, al, lam, 1)
    n = norm_exp
    edge = _ppow(p, al * (1 - n))
    if edge >= lam:
        return _green_lower(p, al, lam, -n) - _ppow(p, -n) / (lam + edge)
    # large ||x||: expand 1/(lam + u) = 1/lam - u / (lam (lam + u)) so the p^-n/lam parts cancel
    s = 0.0
    j = -n
    while True:
        u = _ppow(p, al * j)
        term = q * _ppow(p, j) * u / (lam * (lam + u))
        s += term
        if term < SERIES_ATOL * 1e-3 * max(s, 1e-300):
            break
        j -= 1
    return _ppow(p, -n) * edge / (lam * (lam + edge)) - s


def _green_lower(p, al, lam, j_top):
    q = 1 - 1 / p
    s = 0.0
    j = j_top
    while True:
        s += q * _ppow(p, j) / (lam + _ppow(p, al * j))
        if _ppow(p, j) / lam < SERIES_ATOL * 1e-3 * max(s, 1e-300):
            break
        j -= 1
    return s


def _green_upper(p, al, lam, j_bottom):
    q = 1 - 1 / p
    ratio = _ppow(p, 1 - al)
    s = 0.0
    j = j_bottom
    while True:
        term = q * _ppow(p, j) / (lam + _ppow(p, al * j))
        s += term
        if term * ratio / (1 - ratio) < SERIES_ATOL * 1e-3 * max(s, 1e-300):
            break
        j += 1
    return s


def green_deficit(spec: RadialLevySpec, lam: float, norm_exp: int | None) -> float:
    """g^lam(0) - g^lam(x), summed directly over the shells ||xi|| > ||x||^-1."""
    if norm_exp is None:
        return 0.0
    p, al = spec.p, spec.alpha
    n = norm_exp
    edge = _ppow(p, al * (1 - n))
    return _green_upper(p, al, lam, 1 - n) + _ppow(p, -n) / (lam + edge)


def h_function(spec: RadialLevySpec, norm_exp: int | None) -> float:
    """1 - g^1(x) / g^1(0) for ||x|| = p^norm_exp."""
    if norm_exp is None:
        return 0.0
    return min(1.0, green_deficit(spec, 1.0, norm_exp) / green_function(spec, 1.0, None))


def gamma_ab(spec: RadialLevySpec, a: PAdicNumber, b: PAdicNumber) -> float:
    """[1 - (g^1(a-b)/g^1(0))^2]^(1/2)."""
    h = h_function(spec, (a - b).norm_exp)
    ratio = 1.0 - h
    return math.sqrt(max(0.0, 1.0 - ratio * ratio))


def h_ratio_series(spec: RadialLevySpec, norm_exp: int) -> float:
    """(g^1(0) - g^1(x)) / ||x||^(alpha-1) written as a series in X = ||x||.

    p / (X^alpha + p^alpha) + (1 - 1/p) sum_{k>=2} p^k / (X^alpha + p^(alpha k)).
    """
    p, al = spec.p, spec.alpha
    q = 1 - 1 / p
    Xa = _ppow(p, al * norm_exp)
    s = 0.0
    ratio = _ppow(p, 1 - al)
    k = 2
    while True:
        term = _ppow(p, k) / (Xa + _ppow(p, al * k))
        s += term
        if term * ratio / (1 - ratio) < SERIES_ATOL * 1e-3 * max(s, 1e-300):
            break
        k += 1
    return p / (Xa + _ppow(p, al)) + q * s


def h_ratio_limit(p: int, alpha: float) -> float:
    """Limit of h_ratio_series as ||x|| -> 0: p^(1-a) + (1-1/p) p^(2(1-a)) / (1 - p^(1-a))."""
    r = p ** (1 - alpha)
    return r + (1 - 1 / p) * r * r / (1 - r)


# -- integrability of coefficients ---------------------------------------------

@dataclass(frozen=True)
class HCheck:
    finite: bool
    value: float
    tail_bound: float = 0.0
    witness: Ball | None = None
    reason: str = ""


def condition_h_check(spec: RadialLevySpec, b: Coefficient, x: PAdicNumber, L: int, T: float,
                      max_shells: int = 20000) -> HCheck:
    """int_0^T int_{B(0,p^L)} ||b(x+y)||^-alpha P(s,y) dy ds, as a shell sum."""
    spec.require_stable()
    al, p = spec.alpha, spec.p
    witness = b.zero_witness(x, L)
    if witness is not None:
        return HCheck(False, math.inf, witness=witness, reason="b vanishes on a ball of positive measure")
    m_star = b.constant_below(x)
    total = 0.0
    m = L
    if m_star is not None:
        m_star = min(m_star, L)
        while m > m_star:
            w = b.shell_mean_inverse_power(x, m, al)
            if math.isinf(w):
                return HCheck(False, math.inf, reason=f"shell p^{m} average diverges")
            total += w * integrated_shell_probability(spec, m, T)
            m -= 1
        w = b.shell_mean_inverse_power(x, m_star, al)
        if math.isinf(w):
            return HCheck(False, math.inf, witness=Ball(x, m_star), reason="b vanishes near x")
        total += w * integrated_ball_probability(spec, m_star, T)
        return HCheck(True, total, SERIES_ATOL * max(total, 1.0))
    # singular at x: shell averages are c p^(m e)
    c, e = b.singular_profile(x, al)
    if e <= -1:
        return HCheck(False, math.inf, reason=f"shell terms grow like p^(m(1 + {e:.3g})) as m -> -inf")
    G0 = integrated_origin_density(spec, T)
    q = 1 - 1 / p
    for _ in range(max_shells):
        total += c * _ppow(p, m * e) * integrated_shell_probability(spec, m, T)
        m -= 1
        # remaining shells carry density <= P(s, 0) and the next correction decays like p^((alpha-1) m)
        tail = c * q * G0 * _ppow(p, m * (1 + e)) / (1 - _ppow(p, -(1 + e)))
        if tail * _ppow(p, (al - 1) * m) * p**al < SERIES_ATOL * max(total, 1e-300):
            total += tail
            return HCheck(True, total, tail * _ppow(p, (al - 1) * m) * p**al)
    return HCheck(True, total, math.inf, reason="shell budget exhausted")


@dataclass(frozen=True)
class Prop3Result:
    applies: bool
    implied: bool
    integrable: bool


def inverse_power_integrable(b: Coefficient, x: PAdicNumber, radius_exp: int, s: float) -> bool:
    """Is int_{B(0,p^radius_exp)} ||b(x+y)||^-s dy finite?"""
    if b.zero_witness(x, radius_exp) is not None:
        return False
    m_star = b.constant_below(x)
    if m_star is not None:
        m_star = min(m_star, radius_exp)
        for m in range(radius_exp, m_star - 1, -1):
            if math.isinf(b.shell_mean_inverse_power(x, m, s)):
                return False
        return True
    _, e = b.singular_profile(x, s)
    return e > -1


def prop3_sufficiency(spec: RadialLevySpec, b: Coefficient, x: PAdicNumber, lam: float) -> Prop3Result:
    """Sufficient test for the condition: lam > alpha(1+alpha) and ||b(x+.)||^-lam integrable on B(0,1)."""
    spec.require_stable()
    al = spec.alpha
    applies = al >= 1 and lam > al * (1 + al)
    integrable = inverse_power_integrable(b, x, 0, lam)
    return Prop3Result(applies, applies and integrable, integrable)


def local_integrability(f) -> bool:
    """Exact shell-sum criterion for NormPower / StepFunction (or a Coefficient's inverse power)."""
    if isinstance(f, NormPower):
        if f.scale == 0:
            return True
        if math.isinf(f.scale):
            return False
        # sum_m p^(m(1 + e)) over m -> -inf converges iff e > -1
        return f.exponent > -1
    if isinstance(f, StepFunction):
        return f.is_bounded()
    raise TypeError(f"unsupported function class {type(f).__name__}")

