"""Occupation measure, cell-averaged local time and pathwise diagnostics.

Every quantity here is a finite sum over the constancy intervals of a jump
path.  Times are floats, so interval lengths are accumulated as exact
``Fraction`` values wherever an identity has to hold exactly.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .analytic import RadialLevySpec, local_integrability
from .coefficients import NormPower
from .driver import JumpPath, sample_path
from .padic import Ball, PAdicNumber, Window, valuations


def _intervals(path: JumpPath, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints 0 = s_0 < ... < s_k = t and the window integer held on [s_i, s_{i+1})."""
    if t > path.T:
        raise ValueError(f"t={t} beyond the path horizon {path.T}")
    k = path.index_at(t)
    edges = np.concatenate([[0.0], path.times[:k], [float(t)]])
    vals = np.zeros(k + 1, dtype=path.jumps.dtype)
    vals[1:] = path.values()[:k]
    return edges, vals


def _check_resolution(path: JumpPath, radius_exp: int) -> None:
    if radius_exp < -path.M:
        raise ValueError(f"ball radius p^{radius_exp} is finer than the path resolution p^-{path.M}")


def occupation_measure(path: JumpPath, t: float, B: Ball) -> Fraction:
    """nu(t, B) = int_0^t 1_B(Z(s)) ds, exact."""
    _check_resolution(path, B.radius_exp)
    edges, vals = _intervals(path, t)
    inside = B.contains_ints(vals)
    return sum((Fraction(float(edges[i + 1])) - Fraction(float(edges[i])) for i in np.flatnonzero(inside)),
               Fraction(0))


def occupation_measure_float(path: JumpPath, t: float, B: Ball) -> float:
    edges, vals = _intervals(path, t)
    _check_resolution(path, B.radius_exp)
    return float(np.diff(edges)[B.contains_ints(vals)].sum())


@dataclass(frozen=True)
class LocalTimeGrid:
    """Occupation masses of the cells B(c, p^-n) inside B(0, p^N) up to time t."""

    p: int
    n: int
    N: int
    t: float
    window: Window
    cells: dict[int, Fraction]  # cell index -> mass

    def cell_index(self, x: PAdicNumber) -> int | None:
        return _cell_indices(np.array([x.n], dtype=object), self.window, self.n, self.N)[0]

    def cell_center(self, idx: int) -> PAdicNumber:
        w = self.window
        return PAdicNumber._raw(w, (idx * w.exp_offset(-self.N)) % w.modulus)

    @property
    def scale(self) -> int:
        return self.p**self.n

    def estimate(self, x: PAdicNumber) -> Fraction:
        """L-hat_t^x = mass(cell(x)) p^n."""
        idx = self.cell_index(x)
        if idx is None:
            return Fraction(0)
        return self.cells.get(idx, Fraction(0)) * self.scale

    def integral_over(self, B: Ball) -> Fraction:
        """int_B L-hat dmu for a cell-aligned ball B."""
        if B.radius_exp < -self.n:
            raise ValueError("ball finer than the grid cells")
        total = Fraction(0)
        for idx, mass in self.cells.items():
            if B.contains(self.cell_center(idx)):
                # each cell has measure p^-n, so L-hat * mu(cell) = mass
                total += mass * self.scale * Fraction(1, self.scale)
        return total

    def total_mass(self) -> Fraction:
        return sum(self.cells.values(), Fraction(0))

    def rows(self) -> list[tuple[PAdicNumber, float]]:
        return [(self.cell_center(i), float(m * self.scale)) for i, m in sorted(self.cells.items())]


def _cell_indices(vals, window: Window, n: int, N: int) -> list[int | None]:
    """Index of the cell B(., p^-n) holding each value, or None outside B(0, p^N)."""
    P = window.p
    lo_digits = -N - window.lo  # digits below exponent -N must vanish
    span = N + n
    out = []
    for v in np.asarray(vals).tolist():
        v = int(v)
        if lo_digits > 0 and v % P**lo_digits:
            out.append(None)
            continue
        out.append((v // P**max(lo_digits, 0)) % P**span)
    return out


def local_time_grid(path: JumpPath, t: float, n: int, N: int) -> LocalTimeGrid:
    """Exact per-cell occupation on B(0, p^N) at cell radius p^-n."""
    _check_resolution(path, -n)
    if n < -N:
        raise ValueError("cells larger than the window ball")
    edges, vals = _intervals(path, t)
    idxs = _cell_indices(vals, path.window, n, N)
    cells: dict[int, Fraction] = {}
    for i, idx in enumerate(idxs):
        if idx is None:
            continue
        dt = Fraction(float(edges[i + 1])) - Fraction(float(edges[i]))
        if dt:
            cells[idx] = cells.get(idx, Fraction(0)) + dt
    return LocalTimeGrid(path.p, n, N, float(t), path.window, cells)


# -- Hoelder statistic ------------------------------------------------------------

@dataclass(frozen=True)
class HolderReport:
    levels: tuple[int, ...]
    stats: tuple[float, ...]
    kappa: float

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(b / a if a > 0 else math.inf for a, b in zip(self.stats, self.stats[1:]))

    def bounded(self, max_ratio: float = 1.5) -> bool:
        return all(r <= max_ratio for r in self.ratios)


MAX_CELLS = 4096


def holder_level_statistic(path: JumpPath, t: float, n: int, N: int, kappa: float) -> float:
    """max over cell pairs (a, b) of sup_s |L-hat_s^a - L-hat_s^b| / ||a - b||^kappa."""
    _check_resolution(path, -n)
    p = path.p
    ncell = p ** (N + n)
    if ncell > MAX_CELLS:
        raise ValueError(f"{ncell} cells exceed the limit {MAX_CELLS}")
    edges, vals = _intervals(path, t)
    idxs = _cell_indices(vals, path.window, n, N)
    k = len(vals)
    # occupation of each cell at every breakpoint; differences peak at breakpoints
    occ = np.zeros((ncell, k + 1))
    dts = np.diff(edges)
    for j, idx in enumerate(idxs):
        if idx is not None:
            occ[idx, j + 1] = dts[j]
    occ = np.cumsum(occ, axis=1) * float(p) ** n
    # ||a - b|| = p^(N - v) where v is the p-adic valuation of the index difference
    ids = np.arange(ncell)
    diff = np.abs(ids[:, None] - ids[None, :])
    v = np.zeros_like(diff)
    d = diff.copy()
    for _ in range(N + n):
        step = (d % p == 0) & (d > 0)
        v += step
        d = np.where(step, d // p, d)
    dist = np.where(diff > 0, np.power(float(p), N - v), np.inf)
    best = 0.0
    for a in range(ncell):
        sup = np.max(np.abs(occ[a][None, :] - occ), axis=1)
        best = max(best, float(np.max(sup / dist[a] ** kappa)))
    return best


def holder_statistic(path: JumpPath, t: float, levels: Sequence[int], N: int, kappa: float,
                     alpha: float | None = None) -> HolderReport:
    alpha = path.spec.alpha if alpha is None else alpha
    if not 0 < kappa < (alpha - 1) / 2:
        warnings.warn(f"kappa={kappa} outside (0, {(alpha - 1) / 2}); no Hoelder bound is expected",
                      stacklevel=2)
    stats = tuple(holder_level_statistic(path, t, n, N, kappa) for n in levels)
    return HolderReport(tuple(levels), stats, kappa)


def median_trend(reports: Sequence[HolderReport]) -> HolderReport:
    """Median statistic per level across paths."""
    arr = np.array([r.stats for r in reports])
    return HolderReport(reports[0].levels, tuple(np.median(arr, axis=0).tolist()), reports[0].kappa)


# -- recurrence -------------------------------------------------------------------

@dataclass(frozen=True)
class RecurrenceTable:
    ts: tuple[float, ...]
    nu: np.ndarray  # paths x times
    threshold: float

    @property
    def minimum(self) -> np.ndarray:
        return self.nu.min(axis=0)

    @property
    def median(self) -> np.ndarray:
        return np.median(self.nu, axis=0)

    @property
    def fraction_above(self) -> np.ndarray:
        return (self.nu > self.threshold).mean(axis=0)

    def median_strictly_increasing(self) -> bool:
        med = self.median
        return bool(np.all(np.diff(med) > 0))


def recurrence_diagnostic(spec: RadialLevySpec, B: Ball, ts: Sequence[float], n_paths: int, seed: int,
                          M: int | None = None, window: Window | None = None,
                          threshold: float = 1.0) -> RecurrenceTable:
    """nu(t, B) on each path along an increasing t grid."""
    if spec.alpha < 1:
        raise ValueError("recurrence needs alpha >= 1")
    ts = tuple(sorted(float(t) for t in ts))
    M = max(-B.radius_exp, 0) if M is None else M
    nu = np.zeros((n_paths, len(ts)))
    for i in range(n_paths):
        path = sample_path(spec, ts[-1], M, (seed, i), window)
        for k, t in enumerate(ts):
            nu[i, k] = occupation_measure_float(path, t, B)
    return RecurrenceTable(ts, nu, threshold)


# -- zero-one diagnostic ------------------------------------------------------

@dataclass(frozen=True)
class ZeroOneReport:
    levels: tuple[int, ...]
    integrals: np.ndarray  # paths x levels
    divergent: np.ndarray  # per-path verdict
    locally_integrable: bool

    @property
    def fraction_finite(self) -> float:
        return float(1 - self.divergent.mean())

    @property
    def fraction_divergent(self) -> float:
        return float(self.divergent.mean())

    @property
    def verdict_matches(self) -> bool:
        """Majority verdict agrees with the analytic local-integrability criterion."""
        return (self.fraction_finite > 0.5) == self.locally_integrable


def _norm_exps_about(path: JumpPath, t: float, center: PAdicNumber) -> tuple[np.ndarray, np.ndarray]:
    """Interval lengths up to t and the norm exponent of Z(s) - center on each."""
    edges, vals = _intervals(path, t)
    w = path.window
    shifted = (vals - center.n) % w.modulus
    return np.diff(edges), -valuations(shifted, w)


def _norm_power_levels(f: NormPower, path: JumpPath, t: float, levels: Sequence[int]) -> np.ndarray:
    # a fine-path value of norm > p^-n keeps its norm on the resolution-n path, and every
    # other value is clamped to p^-n, so one valuation pass serves all levels exactly
    dts, ne = _norm_exps_about(path, t, f.center)
    return np.array([float(np.dot(dts, f.scale * np.power(float(f.p), np.maximum(ne, -n) * f.exponent)))
                     for n in levels])


def pathwise_integral(f, path: JumpPath, t: float, n: int) -> float:
    """int_0^t f(Z(s)) ds with f read at cell resolution p^-n.

    For a norm power the norm is clamped below at p^-n, the smallest scale the
    resolution-n path can distinguish.
    """
    if isinstance(f, NormPower):
        return float(_norm_power_levels(f, path.coarsen(n), t, (n,))[0])
    edges, vals = _intervals(path, t)
    w = path.window
    fv = np.array([f(PAdicNumber._raw(w, int(v))) for v in vals], dtype=float)
    return float(np.dot(np.diff(edges), fv))


def divergence_verdict(values: Sequence[float]) -> bool:
    """Divergent when the refinement increments grow.

    Fits a least-squares line to log|increment| against level; a positive slope means
    divergent.  Vanishing increments sit at -inf-like floor values and pull the slope
    down; a constant sequence is finite.
    """
    d = np.abs(np.diff(np.asarray(values, dtype=float)))
    if len(d) < 2 or not np.any(d > 0):
        return False
    logs = np.log(np.maximum(d, np.finfo(float).tiny))
    slope = np.polyfit(np.arange(len(d)), logs, 1)[0]
    return bool(slope > 0)


def zero_one_diagnostic(f, spec: RadialLevySpec, t: float, n_paths: int, seed: int,
                        levels: Sequence[int] = tuple(range(1, 9)),
                        window: Window | None = None) -> ZeroOneReport:
    """Per-path refinement sequence of int_0^t f(Z(s)) ds and its finite/divergent verdict."""
    levels = tuple(sorted(levels))
    vals = np.zeros((n_paths, len(levels)))
    div = np.zeros(n_paths, dtype=bool)
    for i in range(n_paths):
        fine = sample_path(spec, t, levels[-1], (seed, i), window)
        if isinstance(f, NormPower):
            vals[i] = _norm_power_levels(f, fine, t, levels)
        else:
            for k, n in enumerate(levels):
                vals[i, k] = pathwise_integral(f, fine.coarsen(n), t, n)
        div[i] = divergence_verdict(vals[i])
    return ZeroOneReport(levels, vals, div, local_integrability(f))
