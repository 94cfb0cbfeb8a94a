"""Weak solutions of dX = b(X-) dZ by direct jump updates and by random time change.

The time change runs the driver Z on its own clock s and sets
C(s) = int_0^s ||b(x + Z(u))||^-alpha du, tau_t = inf{s : C(s) > t}, and
X(t) = x + Z(tau_t).  Along a jump path every one of these is piecewise linear
or piecewise constant, so they are evaluated exactly at breakpoints.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2_contingency

from .analytic import RadialLevySpec, condition_h_check
from .coefficients import Coefficient
from .driver import JumpPath, sample_path
from .padic import PAdicNumber, PAdicZeroDivision, Window, characters
from .parallel import pmap
from .rng import SeedKey


# -- solutions ------------------------------------------------------------------

@dataclass
class SolutionPath:
    """Right-continuous step function X on [0, T] with X(0) = x."""

    x: PAdicNumber
    T: float
    times: np.ndarray
    values: list[PAdicNumber]
    method: str
    provenance: dict = field(default_factory=dict)

    def value_at(self, t: float) -> PAdicNumber:
        k = int(np.searchsorted(self.times, t, side="right"))
        return self.x if k == 0 else self.values[k - 1]

    @property
    def final(self) -> PAdicNumber:
        return self.value_at(self.T)

    def left_values(self) -> list[PAdicNumber]:
        return [self.x] + self.values[:-1]


def triviality_check(sol: SolutionPath) -> bool:
    """True iff X(t) = X(0) for every t."""
    return all(v == sol.x for v in sol.values)


def solve_direct(b: Coefficient, x: PAdicNumber, path: JumpPath) -> SolutionPath:
    """X <- X + b(X-) dZ at each driver jump."""
    w = path.window
    X = x
    times, vals = [], []
    for t, z in zip(path.times.tolist(), path.jumps.tolist()):
        step = b(X) * PAdicNumber._raw(w, int(z))
        if step.is_zero:
            continue
        X = X + step
        times.append(t)
        vals.append(X)
    return SolutionPath(x, path.T, np.array(times, dtype=float), vals, "direct",
                        {"seed": path.seed, "M": path.M})


# -- time change ------------------------------------------------------------------

@dataclass
class TimeChange:
    """C and tau for a base path; ``s`` holds the driver-clock breakpoints."""

    path: JumpPath
    x: PAdicNumber
    s: np.ndarray  # 0, t_1, ..., t_k, S
    slopes: np.ndarray  # ||b(x + Z)||^-alpha on [s_i, s_{i+1}); inf where b = 0
    C_at: np.ndarray  # C(s_i), inf after absorption
    absorption_index: int | None

    @property
    def absorption_time(self) -> float | None:
        return None if self.absorption_index is None else float(self.s[self.absorption_index])

    @property
    def horizon(self) -> float:
        """Largest t for which tau_t is determined by the base path."""
        return math.inf if self.absorption_index is not None else float(self.C_at[-1])

    def C(self, s: float) -> float:
        i = int(np.searchsorted(self.s, s, side="right")) - 1
        i = min(max(i, 0), len(self.slopes) - 1)
        if math.isinf(self.slopes[i]):
            return self.C_at[i] if s == self.s[i] else math.inf
        return float(self.C_at[i] + self.slopes[i] * (s - self.s[i]))

    def tau(self, t: float) -> float:
        """inf{s : C(s) > t}."""
        if t < 0:
            raise ValueError("t must be >= 0")
        if t > self.horizon:
            if self.absorption_index is None:
                raise ValueError(f"t={t} beyond the time-change horizon {self.horizon}")
        i = int(np.searchsorted(self.C_at, t, side="right")) - 1
        i = min(max(i, 0), len(self.slopes) - 1)
        if math.isinf(self.slopes[i]):
            return float(self.s[i])
        return float(self.s[i] + (t - self.C_at[i]) / self.slopes[i])

    def jump_images(self) -> tuple[np.ndarray, np.ndarray]:
        """(C(t_j), j) for the driver jumps reached before absorption."""
        k = len(self.s) - 2
        last = k if self.absorption_index is None else self.absorption_index
        idx = np.arange(last)
        return self.C_at[1:last + 1], idx

    def tau_integral(self, t: float) -> float:
        """int_0^t ||b(x + Z(tau_u))||^alpha du, summed piece by piece."""
        total = 0.0
        for i in range(len(self.slopes)):
            a = self.C_at[i]
            if a >= t:
                break
            if math.isinf(self.slopes[i]):
                break
            bnd = min(self.C_at[i + 1], t)
            total += (bnd - a) / self.slopes[i]
        return total


def build_time_change(b: Coefficient, x: PAdicNumber, path: JumpPath, alpha: float | None = None,
                      check_h: bool = False) -> TimeChange:
    alpha = path.spec.alpha if alpha is None else alpha
    if check_h:
        res = condition_h_check(path.spec, b, x, 0, max(path.T, 1.0))
        if not res.finite:
            warnings.warn(f"integrability condition fails at x: {res.reason}", stacklevel=2)
    w = path.window
    s = np.concatenate([[0.0], path.times, [path.T]])
    vals = [0] + [int(v) for v in path.values()]
    slopes = np.empty(len(vals))
    absorbed = None
    cache: dict[int, float] = {}
    for i, z in enumerate(vals):
        if z not in cache:
            bv = b(x + PAdicNumber._raw(w, z))
            cache[z] = math.inf if bv.is_zero else float(bv.norm) ** (-alpha)
        slopes[i] = cache[z]
        if absorbed is None and math.isinf(slopes[i]):
            absorbed = i
            slopes[i + 1:] = math.inf
            break
    C_at = np.empty(len(s))
    C_at[0] = 0.0
    for i in range(len(slopes)):
        C_at[i + 1] = math.inf if math.isinf(slopes[i]) else C_at[i] + slopes[i] * (s[i + 1] - s[i])
    return TimeChange(path, x, s, slopes, C_at, absorbed)


def solve_time_change(b: Coefficient, x: PAdicNumber, path: JumpPath, T: float,
                      alpha: float | None = None) -> tuple[SolutionPath, TimeChange]:
    """X(t) = x + Z(tau_t) on [0, T]; the base path must reach C = T or absorb."""
    tc = build_time_change(b, x, path, alpha)
    if tc.horizon < T:
        raise ValueError(f"base path too short: C(S) = {tc.horizon} < T = {T}")
    w = path.window
    imgs, idx = tc.jump_images()
    keep = imgs <= T
    vals = path.values()
    times = imgs[keep]
    xs = [x + PAdicNumber._raw(w, int(vals[j])) for j in idx[keep]]
    sol = SolutionPath(x, T, times, xs, "time_change",
                       {"seed": path.seed, "M": path.M, "S": path.T, "absorbed": tc.absorption_time})
    return sol, tc


def time_change_solution(b: Coefficient, x: PAdicNumber, spec: RadialLevySpec, T: float, M: int,
                         seed: SeedKey, window: Window | None = None, S0: float | None = None,
                         max_doublings: int = 40) -> tuple[SolutionPath, TimeChange]:
    """Sample the base path on [0, S], doubling S until C(S) >= T or the path absorbs.

    Paths are prefix-consistent in S, so the result does not depend on S0.
    """
    S = T if S0 is None else S0
    for _ in range(max_doublings):
        path = sample_path(spec, S, M, seed, window)
        tc = build_time_change(b, x, path)
        if tc.horizon >= T:
            return solve_time_change(b, x, path, T)
        S *= 2
    raise RuntimeError(f"C(S) < {T} after {max_doublings} doublings")


# -- driver reconstruction -------------------------------------------------------------

@dataclass
class Reconstruction:
    zstar: JumpPath
    residual_exp: int | None  # None means the residual is exactly zero
    violations: list[tuple[float, str]]

    @property
    def residual(self) -> float:
        return 0.0 if self.residual_exp is None else float(self.zstar.p) ** self.residual_exp


def rewindow(x: PAdicNumber, w2: Window) -> PAdicNumber:
    """The same value in another window (digits outside w2 are dropped)."""
    w = x.w
    d = w.lo - w2.lo
    n = x.n * w.p**d if d >= 0 else x.n // w.p ** (-d)
    return PAdicNumber._raw(w2, n % w2.modulus)


def reconstruct_driver(b: Coefficient, sol: SolutionPath, alpha: float | None = None) -> Reconstruction:
    """Z*(t) = sum over jumps of X of dX_j / b(X(u_j-)), and the residual of X - x against int b(X-) dZ*.

    Z* lives in a window widened by the largest |valuation of b| met along the path, so
    dividing and multiplying back is exact.
    """
    w = sol.x.w
    lefts = sol.left_values()
    bvals = [b(v) for v in lefts]
    violations = [(float(t), "b(X-) = 0 at a jump") for t, bv in zip(sol.times, bvals) if bv.is_zero]
    vs = [bv.valuation for bv in bvals if not bv.is_zero]
    A = max([abs(v) for v in vs], default=0)
    W2 = Window(w.p, w.lo - A, w.hi + A)
    times, jumps = [], []
    acc_y = PAdicNumber.zero(w.p, w)
    acc_i = PAdicNumber.zero(w.p, W2)
    worst = None
    for t, left, x_new, bv in zip(sol.times.tolist(), lefts, sol.values, bvals):
        dy = x_new - left
        if bv.is_zero:
            continue
        try:
            z = rewindow(dy, W2) / rewindow(bv, W2)
        except PAdicZeroDivision:
            violations.append((t, "division by zero"))
            continue
        times.append(t)
        jumps.append(z.n)
        acc_y = acc_y + dy
        acc_i = acc_i + rewindow(bv, W2) * z
        e = (acc_y - rewindow(acc_i, w)).norm_exp
        if e is not None and (worst is None or e > worst):
            worst = e
    spec = RadialLevySpec.stable(w.p, alpha) if alpha is not None else None
    M = int(sol.provenance.get("M", 0))
    jarr = np.array(jumps, dtype=W2.int_dtype) if jumps else np.empty(0, dtype=W2.int_dtype)
    zstar = JumpPath(spec, sol.T, M, W2, np.array(times, dtype=float), jarr, sol.provenance.get("seed", 0))
    return Reconstruction(zstar, worst, violations)


def characteristic_estimate(zs: Sequence[JumpPath], t: float, xi: PAdicNumber) -> tuple[complex, float]:
    """Mean of chi(xi Z(t)) over paths and the standard error of its real part.

    Paths may carry different windows (reconstructed drivers do), so each group of
    paths is read in its own window.
    """
    groups: dict[Window, list[int]] = {}
    for z in zs:
        groups.setdefault(z.window, []).append(z.value_int_at(t))
    ch = np.concatenate([characters(np.array(v, dtype=object), w, rewindow(xi, w))
                         for w, v in groups.items()])
    return complex(ch.mean()), float(ch.real.std(ddof=1) / math.sqrt(len(ch)))


# -- law comparison -------------------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceReport:
    radii: tuple[int, ...]
    pvalues: tuple[float, ...]
    n_paths: int
    trivial_fraction: tuple[float, float]  # (direct, time change)
    degenerate: bool = False
    h_finite: bool | None = None

    @property
    def pvalue(self) -> float:
        """Bonferroni-adjusted minimum over radii."""
        if not self.pvalues:
            return 1.0
        return min(1.0, min(self.pvalues) * len(self.pvalues))

    def passed(self, level: float = 0.01) -> bool:
        return self.pvalue > level

    def to_dict(self) -> dict:
        return {"radii": list(self.radii), "pvalues": list(self.pvalues), "pvalue": self.pvalue,
                "n_paths": self.n_paths, "trivial_fraction": list(self.trivial_fraction),
                "degenerate": self.degenerate, "h_finite": self.h_finite, "passed": self.passed()}


def ball_counts(points: Sequence[PAdicNumber], center: PAdicNumber, radius_exp: int) -> dict[int, int]:
    """Frequencies of the balls B(., p^radius_exp) holding each point."""
    w = center.w
    k = -radius_exp - w.lo
    mod = w.p ** max(k, 0)
    out: dict[int, int] = {}
    for x in points:
        key = (x.n - center.n) % mod if k > 0 else 0
        out[key] = out.get(key, 0) + 1
    return out


def ball_frequency_pvalue(a: Sequence[PAdicNumber], b: Sequence[PAdicNumber], center: PAdicNumber,
                          radius_exp: int, min_expected: float = 5.0) -> float:
    """Chi-square homogeneity p-value of the two samples' ball frequencies; rare balls are pooled."""
    ca = ball_counts(a, center, radius_exp)
    cb = ball_counts(b, center, radius_exp)
    keys = sorted(set(ca) | set(cb))
    na, nb = len(a), len(b)
    common, pool_a, pool_b = [], 0, 0
    for k in keys:
        x, y = ca.get(k, 0), cb.get(k, 0)
        if (x + y) * min(na, nb) / (na + nb) < min_expected:
            pool_a += x
            pool_b += y
        else:
            common.append((x, y))
    if pool_a + pool_b:
        common.append((pool_a, pool_b))
    if len(common) < 2:
        return 1.0
    table = np.array(common).T
    return float(chi2_contingency(table, correction=False)[1])


def default_radii(b: Coefficient, M: int, count: int = 3) -> tuple[int, ...]:
    """Radii coarser than both resolutions: p^-M (time change) and ||b|| p^-M (direct)."""
    top = b.sup_norm()
    k = 0 if not top else max(0, math.ceil(math.log(top, b.p) - 1e-9))
    r0 = -M + k + 1
    return tuple(range(r0, r0 + count))


@dataclass(frozen=True)
class _PairJob:
    b: Coefficient
    x: PAdicNumber
    spec: RadialLevySpec
    T: float
    M: int
    seed: int
    window: Window | None

    def __call__(self, i: int) -> tuple[PAdicNumber, PAdicNumber, bool, bool]:
        path = sample_path(self.spec, self.T, self.M, (self.seed, 0, i), self.window)
        sd = solve_direct(self.b, self.x, path)
        st, _ = time_change_solution(self.b, self.x, self.spec, self.T, self.M, (self.seed, 1, i), self.window)
        return sd.final, st.final, triviality_check(sd), triviality_check(st)


def weak_equivalence_test(b: Coefficient, x: PAdicNumber, spec: RadialLevySpec, T: float, M: int,
                          n_paths: int, seed: int, radii: Sequence[int] | None = None,
                          window: Window | None = None, workers: int = 1) -> EquivalenceReport:
    """Compare the laws of X(T) from the two solvers on independent seed streams."""
    radii = tuple(default_radii(b, M) if radii is None else radii)
    h = condition_h_check(spec, b, x, 0, T)
    rows = pmap(_PairJob(b, x, spec, T, M, seed, window), range(n_paths), workers)
    direct = [r[0] for r in rows]
    tchange = [r[1] for r in rows]
    triv_d = sum(r[2] for r in rows)
    triv_t = sum(r[3] for r in rows)
    degenerate = triv_d == n_paths and triv_t == n_paths
    pvals = () if degenerate else tuple(ball_frequency_pvalue(direct, tchange, x, r) for r in radii)
    return EquivalenceReport(radii, pvals, n_paths, (triv_d / n_paths, triv_t / n_paths), degenerate, h.finite)
