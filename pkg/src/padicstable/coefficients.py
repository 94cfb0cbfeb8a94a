"""Coefficient functions b: Q_p -> Q_p and non-negative test functions f: Q_p -> [0, inf].

Two classes are supported throughout: radial powers about a centre and
locally constant maps on finitely many disjoint balls.  Both expose shell
averages of ``||b(x + y)||**(-s)`` over ``{||y|| = p**m}`` in closed form,
which is what the analytic integrability checks need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .padic import Ball, PAdicNumber, Window


# stands in for "constant at every scale"
UNBOUNDED_SCALE = 10**9


class Coefficient:
    """Base class; subclasses implement evaluation and shell averages."""

    window: Window

    def __call__(self, y: PAdicNumber) -> PAdicNumber:
        raise NotImplementedError

    def norm_at(self, y: PAdicNumber) -> float:
        raise NotImplementedError

    def shell_mean_inverse_power(self, x: PAdicNumber, m: int, s: float) -> float:
        """Average of ||b(x+y)||^-s over the shell ||y|| = p^m (inf if not integrable)."""
        raise NotImplementedError

    def constant_below(self, x: PAdicNumber) -> int | None:
        """An m* such that ||b|| is constant on B(x, p^m*), or None if x is singular."""
        raise NotImplementedError

    def singular_profile(self, x: PAdicNumber, s: float) -> tuple[float, float]:
        """(c, e): shell average equals c * p^(m e) for every m, when x is singular."""
        raise NotImplementedError

    def zero_witness(self, x: PAdicNumber, L: int) -> Ball | None:
        """A ball of positive measure inside B(x, p^L) where b vanishes, if any."""
        return None

    def inverse_power(self, s: float):
        """The non-negative function y -> ||b(y)||^-s."""
        raise NotImplementedError

    def sup_norm(self) -> float | None:
        """sup ||b||, or None when unbounded."""
        return None

    def inf_norm(self) -> float:
        return 0.0


@dataclass(frozen=True)
class RadialPower(Coefficient):
    """b(y) = c * p^(-floor(delta * m)) where ||y - y0|| = p^m.

    The real-valued norm used by the analytic checks is ``||c|| * ||y - y0||**delta``;
    it equals the norm of the returned p-adic value whenever ``delta * m`` is an integer.
    """

    scale: PAdicNumber
    center: PAdicNumber
    delta: float

    @property
    def window(self) -> Window:
        return self.scale.w

    @property
    def p(self) -> int:
        return self.scale.p

    def __call__(self, y: PAdicNumber) -> PAdicNumber:
        z = y - self.center
        m = z.norm_exp
        if m is None:
            if self.delta > 0:
                return PAdicNumber.zero(self.p, self.window)
            if self.delta == 0:
                return self.scale
            raise ValueError("coefficient is infinite at its centre")
        return self.scale.shift(-math.floor(self.delta * m + 1e-12))

    def norm_at(self, y: PAdicNumber) -> float:
        z = y - self.center
        m = z.norm_exp
        c = float(self.scale.norm)
        if m is None:
            return 0.0 if self.delta > 0 else (c if self.delta == 0 else math.inf)
        return c * float(self.p) ** (self.delta * m)

    def _c_pow(self, s: float) -> float:
        c = float(self.scale.norm)
        if c == 0:
            return math.inf
        return c ** (-s)

    def shell_mean_inverse_power(self, x: PAdicNumber, m: int, s: float) -> float:
        p = self.p
        sigma = self.delta * s
        d = x - self.center
        k = d.norm_exp
        cpow = self._c_pow(s)
        if k is None or m > k:
            return cpow * p ** (-m * sigma)
        if m < k:
            return cpow * p ** (-k * sigma)
        # shell ||y|| = p^k contains the centre at y = -d
        if sigma >= 1:
            return math.inf
        q = 1 - 1 / p
        ball_int = q * p ** (k * (1 - sigma)) / (1 - p ** (sigma - 1))
        inner = p ** (k - 1) * p ** (-k * sigma)
        return cpow * (ball_int - inner) / (q * p**k)

    def constant_below(self, x: PAdicNumber) -> int | None:
        if self.delta == 0:
            return UNBOUNDED_SCALE
        k = (x - self.center).norm_exp
        return None if k is None else k - 1

    def singular_profile(self, x: PAdicNumber, s: float) -> tuple[float, float]:
        return self._c_pow(s), -self.delta * s

    def zero_witness(self, x: PAdicNumber, L: int) -> Ball | None:
        if self.scale.is_zero:
            return Ball(x, L)
        return None

    def inverse_power(self, s: float) -> NormPower:
        c = float(self.scale.norm)
        return NormPower(exponent=-self.delta * s, center=self.center,
                         scale=(c ** (-s) if c else math.inf))

    def sup_norm(self) -> float | None:
        return float(self.scale.norm) if self.delta == 0 else None

    def inf_norm(self) -> float:
        return float(self.scale.norm) if self.delta == 0 else 0.0


@dataclass(frozen=True)
class LocallyConstant(Coefficient):
    """b equals ``values[i]`` on ``balls[i]`` (pairwise disjoint) and ``default`` elsewhere."""

    pieces: tuple[tuple[Ball, PAdicNumber], ...]
    default: PAdicNumber
    _radii: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        balls = [b for b, _ in self.pieces]
        for i, bi in enumerate(balls):
            for bj in balls[i + 1:]:
                if not bi.disjoint(bj):
                    raise ValueError(f"balls overlap: {bi} and {bj}")
        object.__setattr__(self, "_radii", tuple(b.radius_exp for b in balls))

    @classmethod
    def constant(cls, c: PAdicNumber) -> LocallyConstant:
        return cls((), c)

    @property
    def window(self) -> Window:
        return self.default.w

    @property
    def p(self) -> int:
        return self.default.p

    def __call__(self, y: PAdicNumber) -> PAdicNumber:
        for ball, v in self.pieces:
            if ball.contains(y):
                return v
        return self.default

    def norm_at(self, y: PAdicNumber) -> float:
        return float(self(y).norm)

    def _shell_overlaps(self, x: PAdicNumber, m: int):
        """Yield (value, measure of ball ∩ shell) for balls meeting {||y - x|| = p^m}."""
        p = self.p
        q = 1 - 1 / p
        for ball, v in self.pieces:
            r = ball.radius_exp
            dn = (ball.center - x).norm_exp
            d = -math.inf if dn is None else dn
            if r >= m and d <= r:
                yield v, q * p**m
            elif r < m and d == m:
                yield v, float(p) ** r

    def shell_mean_inverse_power(self, x: PAdicNumber, m: int, s: float) -> float:
        p = self.p
        shell = (1 - 1 / p) * p**m
        total = 0.0
        covered = 0.0
        for v, meas in self._shell_overlaps(x, m):
            covered += meas
            if v.is_zero:
                return math.inf
            total += meas * float(v.norm) ** (-s)
        rest = shell - covered
        if rest > shell * 1e-12:
            if self.default.is_zero:
                return math.inf
            total += rest * float(self.default.norm) ** (-s)
        return total / shell

    def constant_below(self, x: PAdicNumber) -> int | None:
        m = UNBOUNDED_SCALE
        for ball, _ in self.pieces:
            dn = (ball.center - x).norm_exp
            if dn is None or dn <= ball.radius_exp:
                m = min(m, ball.radius_exp)
            else:
                m = min(m, dn - 1)
        return m

    def zero_witness(self, x: PAdicNumber, L: int) -> Ball | None:
        outer = Ball(x, L)
        for ball, v in self.pieces:
            if v.is_zero and not outer.disjoint(ball):
                return ball if ball.nests_in(outer) else outer
        if self.default.is_zero:
            # default region inside B(x, p^L) has positive measure unless fully covered
            covered = sum(float(b.measure()) for b, _ in self.pieces if b.nests_in(outer))
            if any(outer.nests_in(b) for b, _ in self.pieces):
                return None
            if covered < float(outer.measure()):
                return outer
        return None

    def inverse_power(self, s: float) -> StepFunction:
        def f(v: PAdicNumber) -> float:
            return math.inf if v.is_zero else float(v.norm) ** (-s)
        return StepFunction(tuple((b, f(v)) for b, v in self.pieces), f(self.default))

    def sup_norm(self) -> float | None:
        return max([float(v.norm) for _, v in self.pieces] + [float(self.default.norm)])

    def inf_norm(self) -> float:
        return min([float(v.norm) for _, v in self.pieces] + [float(self.default.norm)])


def constant(c: PAdicNumber) -> LocallyConstant:
    return LocallyConstant.constant(c)


# -- real-valued non-negative functions ------------------------------------

@dataclass(frozen=True)
class NormPower:
    """f(y) = scale * ||y - center||^exponent."""

    exponent: float
    center: PAdicNumber
    scale: float = 1.0

    @property
    def p(self) -> int:
        return self.center.p

    def at_norm_exp(self, m: int | None) -> float:
        if m is None:
            if self.exponent < 0:
                return math.inf
            return self.scale if self.exponent == 0 else 0.0
        return self.scale * float(self.p) ** (m * self.exponent)

    def __call__(self, y: PAdicNumber) -> float:
        return self.at_norm_exp((y - self.center).norm_exp)

    def is_bounded(self) -> bool:
        return self.exponent == 0 or self.scale == 0


@dataclass(frozen=True)
class StepFunction:
    """Locally constant non-negative function on finitely many disjoint balls."""

    pieces: tuple[tuple[Ball, float], ...]
    default: float

    def __call__(self, y: PAdicNumber) -> float:
        for ball, v in self.pieces:
            if ball.contains(y):
                return v
        return self.default

    def is_bounded(self) -> bool:
        return all(math.isfinite(v) for _, v in self.pieces) and math.isfinite(self.default)

