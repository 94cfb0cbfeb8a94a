"""Sampling the radial alpha-stable process Z(t) exactly at resolution p^-M.

Paths are compound Poisson superpositions of independent layers:

* a base layer carrying every shell ||dZ|| = p^m with m >= 0, keyed by ``BASE_LAYER``;
* one layer per shell -M < m < 0, keyed by m itself.

Each layer draws its inter-arrival times and marks in fixed-size blocks from its
own counter-based stream, so a path is a pure function of (spec, M, seed,
window); extending T only appends events, and raising M only adds layers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .analytic import RadialLevySpec, ball_probability, ball_tail_probability
from .padic import PAdicNumber, Window, shell_ints, valuations
from .rng import SeedKey, format_key, parse_key, stream

BASE_LAYER = 1
BLOCK = 64


class WindowTooSmall(ValueError):
    pass


# -- intensities ------------------------------------------------------------

@dataclass(frozen=True)
class Intensities:
    p: int
    alpha: float
    K: float
    M: int
    cap: int | None

    def rate(self, m: int) -> float:
        """Poisson rate of jumps with ||dZ|| = p^m."""
        if m <= -self.M:
            return 0.0
        if self.cap is not None:
            if m > self.cap:
                return 0.0
            if m == self.cap:
                # f_cap folds every larger shell onto the shell p^cap
                return self.raw_rate(m) / (1 - self.p ** (-self.alpha))
        return self.raw_rate(m)

    def raw_rate(self, m: int) -> float:
        q = 1 - 1 / self.p
        return self.K * q * self.p ** (-self.alpha * m)

    def tail_rate(self, m0: int) -> float:
        """sum of raw rates over shells m >= m0."""
        return self.raw_rate(m0) / (1 - self.p ** (-self.alpha))

    @property
    def total(self) -> float:
        """Lambda_M: total jump rate above the resolution."""
        return self.tail_rate(1 - self.M)

    def shells(self, upto: int) -> dict[int, float]:
        return {m: self.rate(m) for m in range(1 - self.M, upto + 1)}


def characteristic_exponent(spec: RadialLevySpec, M: int, norm_exp: int) -> float:
    """psi_M(xi) for ||xi|| = p^norm_exp: E chi(xi Z_M(t)) = exp(-t psi_M(xi)).

    Shells ||y|| <= ||xi||^-1 have trivial character; the shell just above averages
    chi to -1/(p-1), and every larger shell averages it to 0.  For norm_exp <= M the
    result is exactly ||xi||^alpha, so the resolution correction vanishes.
    """
    inten = jump_intensities(spec, M)
    p = spec.p
    edge = 1 - norm_exp
    if edge >= 1 - M:
        return inten.raw_rate(edge) * p / (p - 1) + inten.tail_rate(edge + 1)
    return inten.total


def jump_intensities(spec: RadialLevySpec, M: int) -> Intensities:
    spec.require_stable()
    return Intensities(spec.p, spec.alpha, spec.K, M, spec.cap)


# -- paths ------------------------------------------------------------------

@dataclass
class JumpPath:
    """Time-sorted jump events of Z at resolution p^-M on [0, T]."""

    spec: RadialLevySpec
    T: float
    M: int
    window: Window
    times: np.ndarray
    jumps: np.ndarray
    seed: SeedKey = 0
    clamped: int = 0
    _values: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def p(self) -> int:
        return self.window.p

    @property
    def resolution_bound(self) -> float:
        """Every omitted small-jump cloud has norm at most this."""
        return float(self.p) ** (-self.M)

    @property
    def events(self) -> list[tuple[float, PAdicNumber]]:
        w = self.window
        return [(float(t), PAdicNumber._raw(w, int(z))) for t, z in zip(self.times, self.jumps)]

    def jump_norm_exps(self) -> np.ndarray:
        return -valuations(self.jumps, self.window)

    def values(self) -> np.ndarray:
        """Window integers of Z right after each event."""
        if self._values is None:
            mod = self.window.modulus
            if len(self.jumps) == 0:
                self._values = self.jumps.copy()
            elif self.jumps.dtype == object:
                out = np.empty(len(self.jumps), dtype=object)
                acc = 0
                for i, z in enumerate(self.jumps):
                    acc = (acc + z) % mod
                    out[i] = acc
                self._values = out
            else:
                # partial sums stay below 2^63 for fewer than 2^23 events
                self._values = np.cumsum(self.jumps) % mod
        return self._values

    def index_at(self, t: float) -> int:
        """Number of events with time <= t."""
        return int(np.searchsorted(self.times, t, side="right"))

    def value_int_at(self, t: float) -> int:
        k = self.index_at(t)
        return 0 if k == 0 else int(self.values()[k - 1])

    def value_at(self, t: float) -> PAdicNumber:
        return PAdicNumber._raw(self.window, self.value_int_at(t))

    def values_at(self, ts) -> np.ndarray:
        ks = np.searchsorted(self.times, np.asarray(ts, dtype=float), side="right")
        vals = self.values()
        out = np.zeros(len(ks), dtype=self.jumps.dtype)
        hit = ks > 0
        out[hit] = vals[ks[hit] - 1]
        return out

    def left_value_ints(self) -> np.ndarray:
        """Z(t_j-) for each event j."""
        vals = self.values()
        out = np.zeros(len(vals), dtype=self.jumps.dtype)
        if len(vals) > 1:
            out[1:] = vals[:-1]
        return out

    def restrict(self, t: float) -> JumpPath:
        """The same path observed on [0, t]."""
        k = self.index_at(t)
        return replace(self, T=float(t), times=self.times[:k], jumps=self.jumps[:k], _values=None)

    def coarsen(self, M: int) -> JumpPath:
        """Drop jumps of norm <= p^-M (the resolution-M path of the same seed)."""
        keep = self.jump_norm_exps() > -M
        return replace(self, M=M, times=self.times[keep], jumps=self.jumps[keep], _values=None)


def check_window(window: Window, M: int) -> None:
    # shells 1-M .. -lo must be representable, and the base layer needs shell 0
    if not (M <= window.hi and window.lo <= min(0, M - 1)):
        raise WindowTooSmall(
            f"window [{window.lo}, {window.hi}) cannot hold resolution p^-{M}")


def _geometric_shells(rng: np.random.Generator, p: int, alpha: float, size: int) -> np.ndarray:
    # P(G = j) = (1 - p^-alpha) p^(-alpha j), j >= 0, by closed-form inverse CDF
    u = 1.0 - rng.random(size)  # (0, 1]
    return np.floor(np.log(u) / (-alpha * math.log(p))).astype(np.int64)


def _layer(key: SeedKey, tag: int, rate: float, T: float, window: Window,
           shell: int | None, p: int, alpha: float) -> tuple[np.ndarray, np.ndarray, int]:
    """Events of one layer on [0, T]; ``shell=None`` draws shells m >= 0 geometrically."""
    if rate <= 0 or T <= 0:
        return np.empty(0), np.empty(0, dtype=window.int_dtype), 0
    rng = stream(key, tag)
    top = window.max_norm_exp()
    t0 = 0.0
    times, jumps = [], []
    clamped = 0
    while t0 <= T:
        cum = t0 + np.cumsum(rng.exponential(1.0 / rate, BLOCK))
        if shell is None:
            ms = _geometric_shells(rng, p, alpha, BLOCK)
            bad = ms > top
            while bad.any():
                clamped += int(bad.sum())
                ms[bad] = _geometric_shells(rng, p, alpha, int(bad.sum()))
                bad = ms > top
        else:
            ms = np.full(BLOCK, shell, dtype=np.int64)
        zs = shell_ints(rng, window, ms)
        times.append(cum)
        jumps.append(zs)
        t0 = float(cum[-1])
    t = np.concatenate(times)
    z = np.concatenate(jumps)
    k = int(np.searchsorted(t, T, side="right"))
    # clamps are tallied over the whole last block so the count is T-monotone
    return t[:k], z[:k], clamped


def sample_path(spec: RadialLevySpec, T: float, M: int, seed: SeedKey,
                window: Window | None = None) -> JumpPath:
    """Z on [0, T] with all jumps of norm > p^-M, deterministic in ``seed``."""
    spec.require_stable()
    if T < 0:
        raise ValueError("T must be >= 0")
    window = window or Window(spec.p)
    check_window(window, M)
    p, al = spec.p, spec.alpha
    inten = Intensities(p, al, spec.K, M, None)
    parts = [_layer(seed, BASE_LAYER, inten.tail_rate(0), T, window, None, p, al)]
    for m in range(1 - M, 0):
        parts.append(_layer(seed, m, inten.raw_rate(m), T, window, m, p, al))
    times = np.concatenate([pt[0] for pt in parts])
    jumps = np.concatenate([pt[1] for pt in parts]).astype(window.int_dtype)
    clamped = sum(pt[2] for pt in parts)
    order = np.argsort(times, kind="stable")
    path = JumpPath(spec, float(T), M, window, times[order], jumps[order], seed, clamped)
    if M <= 0:
        path = path.coarsen(M)
    if spec.cap is not None:
        path = truncate_large_jumps(path, spec.cap)
    return path


def clamp_probability_bound(spec: RadialLevySpec, T: float, window: Window) -> float:
    """Upper bound on P(some base-layer jump is resampled on [0, T])."""
    inten = Intensities(spec.p, spec.alpha, spec.K, 0, None)
    return min(1.0, T * inten.tail_rate(window.max_norm_exp() + 1))


def truncate_large_jumps(path: JumpPath, M_big: int) -> JumpPath:
    """Apply f_M: a jump with ||z|| = p^(M_big + m), m >= 0, becomes p^m z."""
    ne = path.jump_norm_exps()
    big = ne > M_big
    if not big.any():
        return replace(path, _values=None)
    w = path.window
    jumps = path.jumps.copy()
    P = w.p
    for i in np.flatnonzero(big):
        jumps[i] = (int(jumps[i]) * P ** int(ne[i] - M_big)) % w.modulus
    return replace(path, jumps=jumps, _values=None)


def omega_event(path: JumpPath, M_big: int) -> bool:
    """No jump on [0, T] has norm > p^M_big."""
    return not bool(np.any(path.jump_norm_exps() > M_big))


def omega_probability_bound(spec: RadialLevySpec, T: float, M_big: int) -> float:
    """exp(-T * sum_{m > M_big} rate(m)), the exact Poisson thinning probability."""
    inten = Intensities(spec.p, spec.alpha, spec.K, 0, None)
    return math.exp(-T * inten.tail_rate(M_big + 1))


# -- one-shot increments ------------------------------------------------------

@dataclass(frozen=True)
class IncrementTable:
    """CDF of the shell index of Z(t) over the window's norm range."""

    m_lo: int
    cdf: np.ndarray  # cdf[i] = P(||Z(t)|| <= p^(m_lo + i))


def increment_table(spec: RadialLevySpec, t: float, window: Window) -> IncrementTable:
    m_lo, m_hi = window.min_norm_exp(), window.max_norm_exp()
    cdf = np.array([ball_probability(spec, m, t) for m in range(m_lo, m_hi + 1)])
    return IncrementTable(m_lo, np.maximum.accumulate(cdf))


def sample_increments(spec: RadialLevySpec, t: float, rng: np.random.Generator, size: int,
                      window: Window | None = None) -> np.ndarray:
    """Window integers distributed as Z(t), by inverse CDF over the shell index."""
    window = window or Window(spec.p)
    if t == 0:
        return np.zeros(size, dtype=window.int_dtype)
    tab = increment_table(spec, t, window)
    u = rng.random(size)
    idx = np.searchsorted(tab.cdf, u, side="left")
    top = len(tab.cdf) - 1
    # mass above the window's largest shell is resampled
    bad = idx > top
    while bad.any():
        u[bad] = rng.random(int(bad.sum()))
        idx = np.searchsorted(tab.cdf, u, side="left")
        bad = idx > top
    ms = tab.m_lo + idx
    # index 0 also holds the underflow mass P(||Z|| < p^m_lo), which is represented as zero
    under = u <= ball_probability(spec, tab.m_lo - 1, t)
    out = shell_ints(rng, window, ms)
    out[under] = 0
    return out


def sample_increment(spec: RadialLevySpec, t: float, rng: np.random.Generator,
                     window: Window | None = None) -> PAdicNumber:
    window = window or Window(spec.p)
    return PAdicNumber._raw(window, int(sample_increments(spec, t, rng, 1, window)[0]))


def increment_tail_bound(spec: RadialLevySpec, t: float, window: Window) -> float:
    """Probability mass outside the representable shells."""
    return ball_tail_probability(spec, window.max_norm_exp(), t) + ball_probability(
        spec, window.min_norm_exp() - 1, t)


# -- path files -------------------------------------------------------------

def format_path(path: JumpPath) -> str:
    w = path.window
    lines = [f"{w.p} {path.spec.alpha!r} {path.M} {path.T!r} {format_key(path.seed)} {w.lo} {w.hi}"]
    for t, z in zip(path.times.tolist(), path.jumps.tolist()):
        x = PAdicNumber._raw(w, int(z))
        v = x.valuation
        if v is None:
            lines.append(f"{t!r} {w.hi}")
            continue
        ds = list(x.digits[v - w.lo:])
        while ds and ds[-1] == 0:
            ds.pop()
        lines.append(f"{t!r} {v} " + " ".join(map(str, ds)))
    return "\n".join(lines) + "\n"


def parse_path(text: str) -> JumpPath:
    rows = text.strip("\n").split("\n")
    head = rows[0].split()
    p, alpha, M, T, seed = int(head[0]), float(head[1]), int(head[2]), float(head[3]), parse_key(head[4])
    window = Window(p, int(head[5]), int(head[6])) if len(head) >= 7 else Window(p)
    times, jumps = [], []
    for row in rows[1:]:
        if not row.strip():
            continue
        parts = row.split()
        times.append(float(parts[0]))
        v = int(parts[1])
        n = 0
        if v < window.hi:
            for i, d in enumerate(parts[2:]):
                n += int(d) * p ** (v - window.lo + i)
        jumps.append(n % window.modulus)
    jarr = np.array(jumps, dtype=window.int_dtype) if jumps else np.empty(0, dtype=window.int_dtype)
    return JumpPath(RadialLevySpec.stable(p, alpha), T, M, window, np.array(times, dtype=float), jarr, seed)


def write_path(path: JumpPath, fname) -> None:
    with open(fname, "w") as fh:
        fh.write(format_path(path))


def read_path(fname) -> JumpPath:
    with open(fname) as fh:
        return parse_path(fh.read())
