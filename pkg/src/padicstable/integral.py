"""Stochastic integrals against jump paths of Z.

Simple integrands are step functions over a fixed partition whose values may
depend on the path observed up to the left end of each interval.  Adapted
integrands are evaluated on the left limit Z(s-).  Since Z is piecewise
constant at finite resolution, the adapted integral is an exact jump sum.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .analytic import RadialLevySpec, check_conditions
from .coefficients import Coefficient
from .driver import JumpPath, omega_event, sample_path, truncate_large_jumps
from .padic import PAdicNumber, Window

Rule = Callable[[JumpPath], PAdicNumber]


@dataclass(frozen=True)
class SimpleIntegrand:
    """phi = sum_i f_i 1_(t_i, t_{i+1}]; ``values[i]`` is a constant or a rule on the path up to t_i."""

    partition: tuple[float, ...]
    values: tuple[PAdicNumber | Rule, ...]

    def __post_init__(self):
        ts = self.partition
        if len(ts) != len(self.values) + 1:
            raise ValueError("need one value per partition interval")
        if ts[0] != 0 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("partition must start at 0 and increase strictly")

    @classmethod
    def constant(cls, c: PAdicNumber, T: float) -> SimpleIntegrand:
        return cls((0.0, float(T)), (c,))

    @property
    def T(self) -> float:
        return self.partition[-1]

    def value(self, i: int, path: JumpPath) -> PAdicNumber:
        f = self.values[i]
        if isinstance(f, PAdicNumber):
            return f
        # adaptedness by construction: the rule only sees events up to t_i
        return f(path.restrict(self.partition[i]))

    def norm_power_integral(self, path: JumpPath, gamma: float, u: float) -> float:
        """int_0^u ||phi(s)||^gamma ds on this path."""
        total = 0.0
        for i, (a, b) in enumerate(zip(self.partition, self.partition[1:])):
            if a >= u:
                break
            v = self.value(i, path)
            if not v.is_zero:
                total += (min(b, u) - a) * float(v.norm) ** gamma
        return total


@dataclass(frozen=True)
class AdaptedIntegrand:
    """phi(s) = g(shift + Z(s-)); left-continuous and adapted by construction."""

    g: Callable[[PAdicNumber], PAdicNumber]
    shift: PAdicNumber | None = None

    @classmethod
    def from_coefficient(cls, b: Coefficient, x: PAdicNumber | None = None) -> AdaptedIntegrand:
        return cls(b, x)

    @classmethod
    def constant(cls, c: PAdicNumber) -> AdaptedIntegrand:
        return cls(lambda _y: c)

    def at(self, z: PAdicNumber) -> PAdicNumber:
        return self.g(z if self.shift is None else self.shift + z)

    def norm_power_integral(self, path: JumpPath, gamma: float, u: float) -> float:
        w = path.window
        k = path.index_at(u)
        edges = np.concatenate([[0.0], path.times[:k], [u]])
        vals = [0] + [int(v) for v in path.values()[:k]]
        total = 0.0
        for (a, b), z in zip(zip(edges, edges[1:]), vals):
            phi = self.at(PAdicNumber._raw(w, z))
            if not phi.is_zero and b > a:
                total += (b - a) * float(phi.norm) ** gamma
        return total


Integrand = SimpleIntegrand | AdaptedIntegrand


def integrate_simple(phi: SimpleIntegrand, path: JumpPath, t: float) -> PAdicNumber:
    """sum_i f_i (Z(t_{i+1} ^ t) - Z(t_i ^ t)), exact."""
    if t > phi.T:
        raise ValueError(f"t={t} beyond the integrand horizon {phi.T}")
    w = path.window
    total = PAdicNumber.zero(w.p, w)
    for i, (a, b) in enumerate(zip(phi.partition, phi.partition[1:])):
        if a >= t:
            break
        dz = path.value_at(min(b, t)) - path.value_at(a)
        if not dz.is_zero:
            total = total + phi.value(i, path) * dz
    return total


def integrate_adapted(phi: AdaptedIntegrand, path: JumpPath, t: float) -> PAdicNumber:
    """sum over jumps t_j <= t of phi(t_j) dZ_j with phi(t_j) = g(Z(t_j-))."""
    return integral_process(phi, path, t)[1][-1] if path.index_at(t) else PAdicNumber.zero(path.p, path.window)


def integral_process(phi: AdaptedIntegrand, path: JumpPath, t: float | None = None
                     ) -> tuple[np.ndarray, list[PAdicNumber]]:
    """Event times up to t and the integral right after each of them."""
    w = path.window
    k = path.index_at(path.T if t is None else t)
    left = path.left_value_ints()
    acc = PAdicNumber.zero(w.p, w)
    out = []
    for j in range(k):
        acc = acc + phi.at(PAdicNumber._raw(w, int(left[j]))) * PAdicNumber._raw(w, int(path.jumps[j]))
        out.append(acc)
    return path.times[:k], out


def integrate(phi: Integrand, path: JumpPath, t: float) -> PAdicNumber:
    if isinstance(phi, SimpleIntegrand):
        return integrate_simple(phi, path, t)
    return integrate_adapted(phi, path, t)


def integral_sup_norm_exp(phi: Integrand, path: JumpPath, u: float) -> int | None:
    """max_{t <= u} of the norm exponent of the integral (None if it stays 0)."""
    ts = [float(s) for s in path.times[: path.index_at(u)]]
    if isinstance(phi, SimpleIntegrand):
        vals = [integrate_simple(phi, path, s) for s in ts]
    else:
        vals = integral_process(phi, path, u)[1]
    exps = [v.norm_exp for v in vals if not v.is_zero]
    return max(exps) if exps else None


def dyadic_partition(T: float, level: int) -> tuple[float, ...]:
    n = 2**level
    return tuple(T * i / n for i in range(n + 1))


def simple_from_adapted(phi: AdaptedIntegrand, partition: Sequence[float]) -> SimpleIntegrand:
    """Freeze phi at the left end of each partition interval: f_i = g(Z(t_i))."""
    def rule(path: JumpPath) -> PAdicNumber:
        return phi.at(path.value_at(path.T))
    return SimpleIntegrand(tuple(float(s) for s in partition), tuple(rule for _ in partition[1:]))


def ultrametric_bound_exp(phi: AdaptedIntegrand, path: JumpPath, t: float) -> int | None:
    """max_j of the norm exponent of phi(t_j) dZ_j over jumps up to t."""
    w = path.window
    left = path.left_value_ints()
    best = None
    for j in range(path.index_at(t)):
        term = phi.at(PAdicNumber._raw(w, int(left[j]))) * PAdicNumber._raw(w, int(path.jumps[j]))
        e = term.norm_exp
        if e is not None and (best is None or e > best):
            best = e
    return best


# -- moments -------------------------------------------------------------------

@dataclass(frozen=True)
class RatioFit:
    ts: tuple[float, ...]
    ratios: tuple[float, ...]
    stderr: tuple[float, ...]
    C: float

    @property
    def spread(self) -> float:
        """max/min of E||Z(t)||^gamma / t over the grid."""
        return max(self.ratios) / min(self.ratios)

    @property
    def max_relative_deviation(self) -> float:
        """Largest |ratio / mean ratio - 1| over the grid."""
        mean = sum(self.ratios) / len(self.ratios)
        return max(abs(r / mean - 1) for r in self.ratios)


@dataclass(frozen=True)
class MomentEstimate:
    lhs: float
    lhs_se: float
    rhs_integral: float
    rhs_se: float
    C: float
    excess: float = 0.0
    excess_se: float = 0.0

    @property
    def slack(self) -> float:
        return math.inf if self.lhs == 0 else self.C * self.rhs_integral / self.lhs

    @property
    def holds(self) -> bool:
        """One-sided test: E[lhs - C rhs] <= 0 is not rejected at 3 standard errors."""
        return self.excess <= 3.0 * self.excess_se


def _require_cond3(spec: RadialLevySpec, gamma: float) -> None:
    if not check_conditions(spec, gamma).cond3:
        raise ValueError("summability of a(m) p^(gamma m) fails; use RadialLevySpec.truncated first")


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0


def fit_moment_constant(spec: RadialLevySpec, gamma: float, ts: Sequence[float], n_paths: int,
                        M: int, seed: int, window: Window | None = None) -> RatioFit:
    """E||Z(t)||^gamma / t on a t grid, with C the least-squares intercept at t -> 0.

    The ratio decreases in t (coincident large jumps can only cancel), so the
    intercept is the sharp small-time constant; C is never below an observed ratio.
    """
    _require_cond3(spec, gamma)
    ts = tuple(sorted(float(t) for t in ts))
    p = spec.p
    samples = np.zeros((n_paths, len(ts)))
    for i in range(n_paths):
        path = sample_path(spec, ts[-1], M, (seed, i), window)
        vals = path.values_at(ts)
        for k, v in enumerate(vals):
            if int(v) != 0:
                e = PAdicNumber._raw(path.window, int(v)).norm_exp
                samples[i, k] = float(p) ** (gamma * e)
    means = samples.mean(axis=0) / np.array(ts)
    ses = samples.std(axis=0, ddof=1) / math.sqrt(n_paths) / np.array(ts)
    if len(ts) > 1:
        slope, icept = np.polyfit(np.array(ts), means, 1)
        C = float(max(icept, means.max()))
    else:
        C = float(means[0])
    return RatioFit(ts, tuple(means.tolist()), tuple(ses.tolist()), C)


def moment_estimate(spec: RadialLevySpec, phi: Integrand, gamma: float, u: float, n_paths: int,
                    M: int, seed: int, C: float | None = None, window: Window | None = None,
                    fit_ts: Sequence[float] = (0.25, 0.5, 1.0)) -> MomentEstimate:
    """Monte Carlo E sup_{t<=u} ||int phi dZ||^gamma against C * E int_0^u ||phi||^gamma ds."""
    _require_cond3(spec, gamma)
    if C is None:
        # same seeds as below: the paths are shared, which cancels most of the noise
        C = fit_moment_constant(spec, gamma, fit_ts, n_paths, M, seed, window).C
    p = spec.p
    lhs, rhs = [], []
    for i in range(n_paths):
        path = sample_path(spec, u, M, (seed, i), window)
        e = integral_sup_norm_exp(phi, path, u)
        lhs.append(0.0 if e is None else float(p) ** (gamma * e))
        rhs.append(phi.norm_power_integral(path, gamma, u))
    lm, ls = _mean_se(lhs)
    rm, rs = _mean_se(rhs)
    dm, ds = _mean_se(np.asarray(lhs) - C * np.asarray(rhs))
    return MomentEstimate(lm, ls, rm, rs, C, dm, ds)


# -- truncation consistency -------------------------------------------------------

@dataclass(frozen=True)
class TruncationCheck:
    omega: bool
    equal: bool


def truncation_consistency(phi: Integrand, spec: RadialLevySpec, base_seed, M: int, k: int, T: float,
                           resolution: int, window: Window | None = None) -> TruncationCheck:
    """Compare integrals against f_M(Z) and f_{M+k}(Z) on one coupled path.

    Equality is only asserted (``equal`` computed) where Omega(M;T) holds; otherwise
    ``equal`` records whether they happen to agree.
    """
    path = sample_path(spec, T, resolution, base_seed, window)
    za = truncate_large_jumps(path, M)
    zb = truncate_large_jumps(path, M + k)
    grid = sorted(set(path.times.tolist()) | {T})
    equal = all(integrate(phi, za, t) == integrate(phi, zb, t) for t in grid)
    return TruncationCheck(omega_event(path, M), equal)
