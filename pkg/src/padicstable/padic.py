"""Fixed-window arithmetic on Q_p.

A number is stored as its digit window ``[lo, hi)``: the value is
``sum(d_e * p**e for e in range(lo, hi))``.  Internally the digits are packed
into a single non-negative integer ``n`` with ``value = n * p**lo`` and
``0 <= n < p**(hi - lo)``, so addition is integer addition modulo
``p**(hi - lo)`` and the top digit window_hi is where truncation happens.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

DEFAULT_LO = -64
DEFAULT_HI = 64


class WindowMismatch(ValueError):
    pass


class PAdicZeroDivision(ZeroDivisionError):
    pass


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    return all(p % k for k in range(3, math.isqrt(p) + 1, 2))


@dataclass(frozen=True)
class Window:
    """Digit window ``[lo, hi)`` for a prime ``p``."""

    p: int
    lo: int = DEFAULT_LO
    hi: int = DEFAULT_HI

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.lo >= self.hi:
            raise ValueError(f"empty window [{self.lo}, {self.hi})")

    @property
    def width(self) -> int:
        return self.hi - self.lo

    @cached_property
    def modulus(self) -> int:
        return self.p**self.width

    @property
    def int_dtype(self):
        # int64 whenever cumulative sums of a few million window integers fit
        return np.int64 if self.modulus <= 2**40 else object

    def exp_offset(self, e: int) -> int:
        """p**(e - lo): integer representation of p**e."""
        if not self.lo <= e < self.hi:
            raise ValueError(f"exponent {e} outside window [{self.lo}, {self.hi})")
        return self.p ** (e - self.lo)

    def max_norm_exp(self) -> int:
        return -self.lo

    def min_norm_exp(self) -> int:
        return 1 - self.hi


def _valuation_int(n: int, p: int) -> int:
    v = 0
    if p == 2:
        return (n & -n).bit_length() - 1
    while n % p == 0:
        n //= p
        v += 1
    return v


class PAdicNumber:
    """Element of Q_p known through a fixed digit window."""

    __slots__ = ("w", "n")

    def __init__(self, window: Window, n: int):
        self.w = window
        self.n = int(n) % window.modulus

    @classmethod
    def _raw(cls, window: Window, n: int) -> PAdicNumber:
        obj = object.__new__(cls)
        obj.w = window
        obj.n = n
        return obj

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, p: int, window: Window | None = None) -> PAdicNumber:
        return cls._raw(window or Window(p), 0)

    @classmethod
    def from_int(cls, k: int, p: int | None = None, window: Window | None = None) -> PAdicNumber:
        window = window or Window(p)
        return cls.from_fraction(Fraction(k), window=window)

    @classmethod
    def from_fraction(cls, q, p: int | None = None, window: Window | None = None) -> PAdicNumber:
        window = window or Window(p)
        q = Fraction(q)
        P = window.p
        if q == 0:
            return cls._raw(window, 0)
        num, den = q.numerator, q.denominator
        vd = _valuation_int(den, P)
        den_unit = den // P**vd
        # value * p**(-lo) = num * p**(-vd - lo) / den_unit
        shift = -vd - window.lo
        mod = window.modulus
        if shift >= 0:
            top = num * P**shift
        else:
            # digits below lo are dropped
            top = num // P**(-shift) if num % P**(-shift) == 0 else None
            if top is None:
                raise ValueError(f"{q} has digits below window exponent {window.lo}")
        return cls._raw(window, (top * pow(den_unit, -1, mod)) % mod)

    @classmethod
    def from_digits(cls, digits, p: int | None = None, lo: int | None = None,
                    window: Window | None = None) -> PAdicNumber:
        """Build from little-endian digits starting at exponent ``lo`` (default window.lo)."""
        window = window or Window(p)
        start = window.lo if lo is None else lo
        n = 0
        P = window.p
        for i, d in enumerate(digits):
            d = int(d)
            if not 0 <= d < P:
                raise ValueError(f"digit {d} out of range for p={P}")
            e = start + i
            if d and not window.lo <= e < window.hi:
                raise ValueError(f"nonzero digit at exponent {e} outside window")
            if d:
                n += d * P ** (e - window.lo)
        return cls._raw(window, n)

    @classmethod
    def p_power(cls, k: int, p: int | None = None, window: Window | None = None) -> PAdicNumber:
        window = window or Window(p)
        return cls._raw(window, window.exp_offset(k))

    # -- basic properties -------------------------------------------------
    @property
    def p(self) -> int:
        return self.w.p

    @property
    def window(self) -> Window:
        return self.w

    @property
    def digits(self) -> tuple[int, ...]:
        """Digits d_lo, d_lo+1, ..., d_hi-1 (little-endian)."""
        out = []
        n, P = self.n, self.w.p
        for _ in range(self.w.width):
            n, d = divmod(n, P)
            out.append(d)
        return tuple(out)

    def digit(self, e: int) -> int:
        if not self.w.lo <= e < self.w.hi:
            return 0
        return (self.n // self.w.p ** (e - self.w.lo)) % self.w.p

    @property
    def is_zero(self) -> bool:
        return self.n == 0

    underflow = is_zero

    @property
    def valuation(self) -> int | None:
        if self.n == 0:
            return None
        return self.w.lo + _valuation_int(self.n, self.w.p)

    @property
    def norm_exp(self) -> int | None:
        """log_p of the norm, or None for an effective zero."""
        v = self.valuation
        return None if v is None else -v

    @property
    def norm(self) -> Fraction:
        v = self.valuation
        if v is None:
            return Fraction(0)
        return Fraction(self.w.p) ** (-v)

    @property
    def underflow_bound(self) -> Fraction:
        """Upper bound on the true norm of an effective zero."""
        return Fraction(self.w.p) ** (-self.w.hi)

    def to_fraction(self) -> Fraction:
        return Fraction(self.n) * Fraction(self.w.p) ** self.w.lo

    def unit_part(self) -> PAdicNumber:
        v = self.valuation
        if v is None:
            raise PAdicZeroDivision("zero has no unit part")
        return self.shift(-v)

    def shift(self, k: int) -> PAdicNumber:
        """Multiply by p**k (digits move up by k, truncated at both window ends)."""
        P = self.w.p
        if k >= 0:
            return PAdicNumber._raw(self.w, (self.n * P**k) % self.w.modulus)
        return PAdicNumber._raw(self.w, self.n // P ** (-k))

    # -- arithmetic -------------------------------------------------------
    def _check(self, other: PAdicNumber):
        if not isinstance(other, PAdicNumber):
            return NotImplemented
        if other.w != self.w:
            raise WindowMismatch(f"{self.w} vs {other.w}")
        return None

    def __add__(self, other):
        if isinstance(other, int):
            other = PAdicNumber.from_int(other, window=self.w)
        if self._check(other) is NotImplemented:
            return NotImplemented
        return PAdicNumber._raw(self.w, (self.n + other.n) % self.w.modulus)

    __radd__ = __add__

    def __neg__(self):
        return PAdicNumber._raw(self.w, (-self.n) % self.w.modulus)

    def __sub__(self, other):
        if isinstance(other, int):
            other = PAdicNumber.from_int(other, window=self.w)
        if self._check(other) is NotImplemented:
            return NotImplemented
        return PAdicNumber._raw(self.w, (self.n - other.n) % self.w.modulus)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            other = PAdicNumber.from_int(other, window=self.w)
        if self._check(other) is NotImplemented:
            return NotImplemented
        w = self.w
        prod = self.n * other.n
        if w.lo < 0:
            prod //= w.p ** (-w.lo)
        else:
            prod *= w.p**w.lo
        return PAdicNumber._raw(w, prod % w.modulus)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, int):
            other = PAdicNumber.from_int(other, window=self.w)
        if self._check(other) is NotImplemented:
            return NotImplemented
        return div(self, other)

    def __eq__(self, other):
        if not isinstance(other, PAdicNumber):
            return NotImplemented
        return self.w == other.w and self.n == other.n

    def __hash__(self):
        return hash((self.w, self.n))

    def __repr__(self):
        return f"PAdicNumber({format_literal(self)!r}, lo={self.w.lo}, hi={self.w.hi})"

    def __str__(self):
        return format_literal(self)

    def __reduce__(self):
        return (PAdicNumber._raw, (self.w, self.n))


def _same_window(x: PAdicNumber, y: PAdicNumber) -> Window:
    if x.w != y.w:
        raise WindowMismatch(f"{x.w} vs {y.w}")
    return x.w


def add(x: PAdicNumber, y: PAdicNumber) -> PAdicNumber:
    _same_window(x, y)
    return x + y


def mul(x: PAdicNumber, y: PAdicNumber) -> PAdicNumber:
    _same_window(x, y)
    return x * y


def div(x: PAdicNumber, y: PAdicNumber) -> PAdicNumber:
    """x / y, using the inverse of y's unit part modulo the window."""
    w = _same_window(x, y)
    vy = y.valuation
    if vy is None:
        raise PAdicZeroDivision("division by an effective zero")
    P = w.p
    unit = y.n // P ** (vy - w.lo)
    # x/y = x * unit^-1 * p^-vy ; keep vy extra low digits so the shift is exact
    extra = max(vy, 0)
    mod = P ** (w.width + extra)
    q = (x.n * pow(unit, -1, mod)) % mod
    if vy >= 0:
        q //= P**vy
    else:
        q *= P ** (-vy)
    return PAdicNumber._raw(w, q % w.modulus)


def character(x: PAdicNumber) -> complex:
    """Canonical additive character exp(2 pi i {x})."""
    num, den = frac_part(x)
    if num == 0:
        return 1.0 + 0.0j
    return cmath.exp(2j * math.pi * _centered(num, den))


def frac_part(x: PAdicNumber) -> tuple[int, int]:
    """Fractional part of x as (numerator, denominator = p**(-lo))."""
    lo = x.w.lo
    if lo >= 0:
        return 0, 1
    den = x.w.p ** (-lo)
    return x.n % den, den


def _centered(num: int, den: int) -> float:
    # representative of num/den in [-1/2, 1/2) for accurate angles
    if 2 * num >= den:
        num -= den
    return num / den


# -- vectorised helpers on window integers --------------------------------

def uniform_window_ints(rng: np.random.Generator, window: Window, ndigits: int, size: int):
    """``size`` independent integers uniform on [0, p**ndigits)."""
    P = window.p
    dtype = window.int_dtype
    if ndigits <= 0:
        return np.zeros(size, dtype=dtype)
    if P**ndigits < 2**62:
        out = rng.integers(0, P**ndigits, size=size, dtype=np.int64)
        return out if dtype is np.int64 else out.astype(object)
    chunk = 1
    while P ** (chunk + 1) < 2**62:
        chunk += 1
    out = np.zeros(size, dtype=object)
    scale = 1
    left = ndigits
    while left > 0:
        k = min(chunk, left)
        part = rng.integers(0, P**k, size=size, dtype=np.int64).astype(object)
        out = out + part * scale
        scale *= P**k
        left -= k
    return out


def valuations(arr, window: Window) -> np.ndarray:
    """Valuations of window integers; zeros get ``window.hi`` (underflow)."""
    arr = np.asarray(arr)
    out = np.full(arr.shape, window.hi, dtype=np.int64)
    flat = out.reshape(-1)
    idx = np.flatnonzero(arr.reshape(-1) != 0)
    vals = arr.reshape(-1)[idx]
    P = window.p
    if P == 2 and vals.dtype == np.int64:
        low = vals & -vals  # lowest set bit, an exact power of two
        flat[idx] = window.lo + np.log2(low.astype(np.float64)).astype(np.int64)
        return out
    e = window.lo
    # each pass strips one digit from the values still undecided
    while idx.size:
        hit = vals % P != 0
        flat[idx[hit]] = e
        idx, vals = idx[~hit], vals[~hit] // P
        e += 1
    return out


def characters(arr, window: Window, xi: PAdicNumber | None = None) -> np.ndarray:
    """chi(xi * z) for each window integer z (xi defaults to 1)."""
    arr = np.asarray(arr)
    lo = window.lo
    P = window.p
    if xi is None:
        if lo >= 0:
            return np.ones(arr.shape, dtype=complex)
        den = P ** (-lo)
        nums = arr % den
    else:
        # xi*z = xi.n * z * p^(2 lo); fractional part needs digits below exponent 0
        den = P ** (-2 * lo) if lo < 0 else 1
        nums = (arr.astype(object) * xi.n) % den if den > 1 else np.zeros(arr.shape, dtype=object)
    if den == 1:
        return np.ones(arr.shape, dtype=complex)
    fr = np.array([_centered(int(v), den) for v in np.ravel(nums)], dtype=float).reshape(arr.shape)
    return np.exp(2j * np.pi * fr)


# -- balls and Haar measure -------------------------------------------------

@dataclass(frozen=True)
class Ball:
    """Closed ball B(center, p**radius_exp)."""

    center: PAdicNumber
    radius_exp: int

    def __post_init__(self):
        object.__setattr__(self, "center", _canonical_center(self.center, self.radius_exp))

    @property
    def p(self) -> int:
        return self.center.p

    @property
    def window(self) -> Window:
        return self.center.w

    def contains(self, x: PAdicNumber) -> bool:
        _same_window(x, self.center)
        return _in_ball_int(x.n, self.center.n, self.radius_exp, x.w)

    __contains__ = contains

    def contains_ints(self, arr) -> np.ndarray:
        w = self.window
        k = -self.radius_exp - w.lo
        if k <= 0:
            return np.ones(np.shape(arr), dtype=bool)
        mod = w.p**k
        return (np.asarray(arr) - self.center.n) % mod == 0

    def measure(self) -> Fraction:
        return haar_measure(self)

    def subballs(self, radius_exp: int):
        """All sub-balls of the given (smaller or equal) radius."""
        if radius_exp > self.radius_exp:
            raise ValueError("sub-ball radius exceeds ball radius")
        w = self.window
        k = self.radius_exp - radius_exp
        base = -self.radius_exp
        for idx in range(w.p**k):
            n = self.center.n
            if k:
                n = (n + idx * w.exp_offset(base)) % w.modulus
            yield Ball(PAdicNumber._raw(w, n), radius_exp)

    def nests_in(self, other: Ball) -> bool:
        return self.radius_exp <= other.radius_exp and other.contains(self.center)

    def disjoint(self, other: Ball) -> bool:
        return not (self.nests_in(other) or other.nests_in(self))


def _canonical_center(c: PAdicNumber, r: int) -> PAdicNumber:
    w = c.w
    k = -r - w.lo
    if k <= 0:
        return PAdicNumber._raw(w, 0)
    if k >= w.width:
        return c
    return PAdicNumber._raw(w, c.n % w.p**k)


def _in_ball_int(n: int, c: int, r: int, w: Window) -> bool:
    k = -r - w.lo
    if k <= 0:
        return True
    return (n - c) % w.p**k == 0


def haar_measure(b: Ball) -> Fraction:
    return Fraction(b.p) ** b.radius_exp


def shell_measure(p: int, m: int) -> Fraction:
    """mu{||y|| = p**m} = p**m (1 - 1/p)."""
    return Fraction(p) ** m * (1 - Fraction(1, p))


def sample_uniform(b: Ball, rng: np.random.Generator) -> PAdicNumber:
    w = b.window
    r = b.radius_exp
    if not w.lo <= -r <= w.hi:
        raise ValueError(f"radius p^{r} outside window [{w.lo}, {w.hi})")
    free = w.hi + r
    u = int(uniform_window_ints(rng, w, free, 1)[0])
    step = w.p ** (-r - w.lo)
    return PAdicNumber._raw(w, (b.center.n + u * step) % w.modulus)


def sample_uniform_shell(m: int, rng: np.random.Generator, window: Window) -> PAdicNumber:
    """Uniform sample from {||y|| = p**m}."""
    return PAdicNumber._raw(window, int(shell_ints(rng, window, np.array([m]))[0]))


def shell_ints(rng: np.random.Generator, window: Window, shells) -> np.ndarray:
    """Window integers uniform on the shells ||y|| = p**m, one per entry of ``shells``."""
    shells = np.asarray(shells, dtype=np.int64)
    w = window
    if shells.size and (np.any(-shells < w.lo) or np.any(-shells >= w.hi)):
        raise ValueError("shell outside window")
    P = w.p
    lead = rng.integers(1, P, size=shells.size)
    rest = uniform_window_ints(rng, w, w.width, shells.size)
    if w.int_dtype is np.int64:
        lead = lead.astype(np.int64)
        pos = (-shells - w.lo).astype(np.int64)
        powers = np.power(np.int64(P), pos)
        avail = w.modulus // powers  # p**(digits from -m to hi)
        unit = lead + P * (rest % (avail // P))
        return (unit * powers) % w.modulus
    out = np.empty(shells.size, dtype=object)
    for i, m in enumerate(shells.tolist()):
        pw = P ** (-m - w.lo)
        avail = w.modulus // pw
        unit = int(lead[i]) + P * (int(rest[i]) % (avail // P))
        out[i] = (unit * pw) % w.modulus
    return out


# -- textual literal ---------------------------------------------------------

_LITERAL = re.compile(r"^\s*(\d+)\^(-?\d+)\s*\*\s*\(([0-9.]+)\)\s*$")


def format_literal(x: PAdicNumber) -> str:
    """``p^v * (d0.d1.d2...)`` with d0 != 0; ``0`` for an effective zero."""
    v = x.valuation
    if v is None:
        return "0"
    ds = x.digits[v - x.w.lo:]
    last = max(i for i, d in enumerate(ds) if d)
    return f"{x.p}^{v} * ({'.'.join(str(d) for d in ds[: last + 1])})"


def parse_literal(s: str, window: Window) -> PAdicNumber:
    if s.strip() == "0":
        return PAdicNumber.zero(window.p, window)
    m = _LITERAL.match(s)
    if not m:
        raise ValueError(f"bad p-adic literal {s!r}")
    p, v, body = int(m.group(1)), int(m.group(2)), m.group(3)
    if p != window.p:
        raise ValueError(f"literal prime {p} does not match window prime {window.p}")
    digits = [int(d) for d in body.split(".")]
    if digits[0] == 0:
        raise ValueError("leading digit must be nonzero")
    return PAdicNumber.from_digits(digits, lo=v, window=window)
