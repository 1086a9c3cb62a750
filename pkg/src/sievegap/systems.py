"""Sieving systems: residue tables, densities, periods, classification stats.

A sieving system assigns to each prime p a set of forbidden residue
classes I_p.  Supported kinds:

* ``eratosthenes`` -- I_p = {0} for every p;
* ``polynomial``   -- I_p = roots of an integer-valued polynomial mod p;
* ``table``        -- explicit finite residue table (empty elsewhere).
"""

from __future__ import annotations

import json
import math
import re
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from mpmath import mp, mpf

from .errors import DegenerateSystemError, DomainError
from .primes import is_prime, primes_in_range, primes_upto

SIGMA_PRECISION_BITS = 120      # >= 80-bit significand requirement
BRUTE_ROOT_LIMIT = 100_000      # brute-force root finding cap on p


# ---------------------------------------------------------------------------
# integer-valued polynomials


def _binom(n: int, k: int) -> int:
    return math.comb(n, k) if n >= 0 else (-1) ** k * math.comb(-n + k - 1, k)


class IntPolynomial:
    """Integer-valued polynomial stored as f(n) = sum_j a_j * C(n, j).

    The binomial-basis coefficients a_j are integers exactly when f maps
    the integers to the integers, which is the acceptance test applied by
    :meth:`from_coefficients`.
    """

    def __init__(self, binomial_coeffs: Sequence[int]):
        coeffs = [int(c) for c in binomial_coeffs]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        self.binomial_coeffs = tuple(coeffs)

    @property
    def degree(self) -> int:
        return len(self.binomial_coeffs) - 1

    @classmethod
    def from_coefficients(cls, coeffs: Sequence[int | Fraction]) -> "IntPolynomial":
        """Build from standard-basis coefficients [c0, c1, ...] (rationals ok)."""
        cs = [Fraction(c) for c in coeffs]
        if not cs:
            cs = [Fraction(0)]
        d = len(cs) - 1

        def f(n: int) -> Fraction:
            acc = Fraction(0)
            for c in reversed(cs):
                acc = acc * n + c
            return acc

        binom = []
        for j in range(d + 1):
            a = sum((-1) ** (j - i) * math.comb(j, i) * f(i) for i in range(j + 1))
            if a.denominator != 1:
                raise DomainError(f"polynomial is not integer-valued (a_{j} = {a})")
            binom.append(int(a))
        return cls(binom)

    @classmethod
    def parse(cls, text: str) -> "IntPolynomial":
        """Parse e.g. "n^2+1", "x^3 - 2x + 7" or "(n^7-n+7)/7"."""
        s = text.strip().replace(" ", "").replace("x", "n").replace("**", "^")
        denom = 1
        m = re.fullmatch(r"\((?P<body>.+)\)/(?P<d>\d+)", s)
        if m:
            s, denom = m.group("body"), int(m.group("d"))
        s = s.replace("-", "+-")
        coeffs: dict[int, Fraction] = {}
        for term in filter(None, s.split("+")):
            m = re.fullmatch(r"(?P<c>-?\d*)(?P<v>n(\^(?P<e>\d+))?)?", term)
            if not m or (not m.group("c") and not m.group("v")):
                raise DomainError(f"cannot parse polynomial term {term!r}")
            c = m.group("c")
            coef = Fraction(-1 if c == "-" else int(c) if c else 1)
            exp = 0
            if m.group("v"):
                exp = int(m.group("e") or 1)
            coeffs[exp] = coeffs.get(exp, Fraction(0)) + coef
        top = max(coeffs) if coeffs else 0
        std = [coeffs.get(i, Fraction(0)) / denom for i in range(top + 1)]
        return cls.from_coefficients(std)

    def __call__(self, n: int) -> int:
        return sum(a * _binom(n, j) for j, a in enumerate(self.binomial_coeffs))

    def scaled_standard_coeffs(self) -> tuple[list[int], int]:
        """Return (coeffs of d! * f in the standard basis, d!).

        d! * C(n, j) = (d!/j!) * n (n-1) ... (n-j+1) has integer
        coefficients, so d! * f does too.
        """
        d = self.degree
        fact = math.factorial(d)
        out = [0] * (d + 1)
        for j, a in enumerate(self.binomial_coeffs):
            poly = [1]  # falling factorial n (n-1) ... (n-j+1)
            for i in range(j):
                new = [0] * (len(poly) + 1)
                for k, c in enumerate(poly):
                    new[k + 1] += c
                    new[k] -= i * c
                poly = new
            scale = a * (fact // math.factorial(j))
            for k, c in enumerate(poly):
                out[k] += scale * c
        return out, fact

    def __repr__(self) -> str:
        return f"IntPolynomial(binomial_coeffs={list(self.binomial_coeffs)})"


# ---------------------------------------------------------------------------
# modular root finding


def _legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def sqrt_mod_p(a: int, p: int) -> int | None:
    """A square root of a modulo an odd prime p, or None (Tonelli-Shanks)."""
    a %= p
    if a == 0:
        return 0
    if _legendre(a, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while _legendre(z, p) != -1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t = t * c % p
        r = r * b % p
    return r


def _roots_brute(poly: IntPolynomial, p: int) -> tuple[int, ...]:
    """All n in [0, p) with poly(n) == 0 mod p, by direct evaluation."""
    d = poly.degree
    if p <= d or p <= 3:
        # tiny modulus: exact integer evaluation (d! may vanish mod p)
        return tuple(n for n in range(p) if poly(n) % p == 0)
    if p > BRUTE_ROOT_LIMIT:
        raise DomainError(
            f"brute-force root finding capped at p <= {BRUTE_ROOT_LIMIT} (got {p})")
    coeffs, _ = poly.scaled_standard_coeffs()
    cm = [c % p for c in coeffs]
    ns = np.arange(p, dtype=np.int64)
    vals = np.zeros(p, dtype=np.int64)
    for c in reversed(cm):
        vals = (vals * ns + c) % p
    return tuple(int(n) for n in np.flatnonzero(vals == 0))


def _roots_quadratic(poly: IntPolynomial, p: int) -> tuple[int, ...]:
    """Fast path for degree-2 polynomials, p odd and p > 2 = degree."""
    coeffs, _ = poly.scaled_standard_coeffs()  # 2*f = A y^2 + B y + C
    c0, c1, c2 = (coeffs + [0, 0, 0])[:3]
    a, b, c = c2 % p, c1 % p, c0 % p
    if a == 0:
        if b == 0:
            return tuple(range(p)) if c == 0 else ()
        return ((-c * pow(b, -1, p)) % p,)
    disc = (b * b - 4 * a * c) % p
    if disc == 0:
        return ((-b * pow(2 * a, -1, p)) % p,)
    r = sqrt_mod_p(disc, p)
    if r is None:
        return ()
    inv = pow(2 * a, -1, p)
    return tuple(sorted({(-b + r) * inv % p, (-b - r) * inv % p}))


def _quadratic_root_count(poly: IntPolynomial, p: int) -> int:
    """|I_p| for a degree-2 polynomial without materializing the roots."""
    coeffs, _ = poly.scaled_standard_coeffs()
    c0, c1, c2 = (coeffs + [0, 0, 0])[:3]
    a, b, c = c2 % p, c1 % p, c0 % p
    if a == 0:
        if b == 0:
            return p if c == 0 else 0
        return 1
    disc = (b * b - 4 * a * c) % p
    if disc == 0:
        return 1
    return 2 if _legendre(disc, p) == 1 else 0


# ---------------------------------------------------------------------------
# sieving systems


@dataclass
class DensityReport:
    """Empirical classification statistics for a system at cutoff x."""

    x: int
    sigma: float
    period_bitlength: int
    rho_hat: float
    mertens_track: list[tuple[int, float]]
    flagged_not_one_dimensional: bool = False
    drift_ratio: float = 0.0

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "sigma": self.sigma,
            "period_bitlength": self.period_bitlength,
            "rho_hat": self.rho_hat,
            "mertens_track": [[int(a), float(b)] for a, b in self.mertens_track],
            "flagged_not_one_dimensional": self.flagged_not_one_dimensional,
            "drift_ratio": self.drift_ratio,
        }


class SievingSystem:
    """Residue classes I_p per prime, with bound B and metadata.

    Residue tables are computed lazily and cached per prime; the cache is
    guarded by a lock so distinct primes may be materialized concurrently.
    """

    def __init__(self, kind: str, *, poly: IntPolynomial | None = None,
                 table: dict[int, tuple[int, ...]] | None = None,
                 small_prime_mode: str = "roots",
                 zero_aligned: bool = False,
                 name: str | None = None):
        if kind not in ("eratosthenes", "polynomial", "table"):
            raise DomainError(f"unknown system kind {kind!r}")
        self.kind = kind
        self.poly = poly
        self.table = dict(table) if table else {}
        if kind == "polynomial" and poly is None:
            raise DomainError("polynomial kind requires a polynomial")
        if small_prime_mode not in ("roots", "empty"):
            raise DomainError("small_prime_mode must be 'roots' or 'empty'")
        self.small_prime_mode = small_prime_mode
        self.zero_aligned = zero_aligned
        self.name = name or kind
        self.degree_d = poly.degree if (kind == "polynomial" and poly) else 0
        self.degenerate_primes: set[int] = set()
        self._cache: dict[int, tuple[int, ...]] = {}
        self._count_cache: dict[int, int] = {}
        self._lock = threading.Lock()

    # -- residue tables ----------------------------------------------------

    def _raw_residues(self, p: int) -> tuple[int, ...]:
        if self.kind == "eratosthenes":
            return (0,)
        if self.kind == "table":
            return tuple(sorted(self.table.get(p, ())))
        assert self.poly is not None
        if p <= self.degree_d and self.small_prime_mode == "empty":
            return ()
        if self.degree_d == 2 and p > 2:
            return _roots_quadratic(self.poly, p)
        return _roots_brute(self.poly, p)

    def residues(self, p: int) -> tuple[int, ...]:
        """Sorted forbidden residue set I_p (cached)."""
        if not is_prime(p):
            raise DomainError(f"{p} is not prime")
        with self._lock:
            if p in self._cache:
                return self._cache[p]
        res = self._raw_residues(p)
        if len(res) == p:
            self.degenerate_primes.add(p)
        elif res and self.zero_aligned:
            lo = res[0]
            res = tuple(sorted((r - lo) % p for r in res))
        with self._lock:
            self._cache[p] = res
            self._count_cache[p] = len(res)
        return res

    def residue_count(self, p: int) -> int:
        """|I_p|, via a count-only fast path where one exists."""
        with self._lock:
            if p in self._count_cache:
                return self._count_cache[p]
        if self.kind == "eratosthenes":
            n = 1
        elif self.kind == "table":
            n = len(self.table.get(p, ()))
        else:
            assert self.poly is not None
            if p <= self.degree_d and self.small_prime_mode == "empty":
                n = 0
            elif self.degree_d == 2 and p > 2:
                n = _quadratic_root_count(self.poly, p)
            else:
                n = len(self.residues(p))
        if n == p:
            self.degenerate_primes.add(p)
        with self._lock:
            self._count_cache[p] = n
        return n

    @property
    def bound_B(self) -> int:
        if self.kind == "eratosthenes":
            return 1
        if self.kind == "polynomial":
            return max(1, self.degree_d)
        return max((len(v) for v in self.table.values()), default=1)

    def is_degenerate_at(self, p: int) -> bool:
        return self.residue_count(p) >= p

    def check_non_degenerate(self, x: float, z: float = 1) -> None:
        for p in primes_in_range(z, x):
            if self.is_degenerate_at(int(p)):
                raise DegenerateSystemError(int(p))

    def active_primes(self, x: float, z: float = 1) -> list[int]:
        """Primes p in (z, x] with I_p nonempty."""
        return [int(p) for p in primes_in_range(z, x)
                if self.residue_count(int(p)) >= 1]

    def copy(self, **overrides) -> "SievingSystem":
        kw = dict(kind=self.kind, poly=self.poly, table=self.table,
                  small_prime_mode=self.small_prime_mode,
                  zero_aligned=self.zero_aligned, name=self.name)
        kw.update(overrides)
        return SievingSystem(**kw)


def normalize_shift(system: SievingSystem) -> SievingSystem:
    """Translate every nonempty I_p so that 0 is a member.

    A per-prime translation does not change the gap structure of the
    sifted set, it only shifts which b realizes a given configuration.
    """
    return system.copy(zero_aligned=True)


# ---------------------------------------------------------------------------
# densities and periods


def sigma(system: SievingSystem, z: float, x: float, exact: bool = False):
    """The density product over primes in (z, x].

    Returns an mpmath float carrying a >= 80-bit significand, or an exact
    Fraction when ``exact`` is set.  sigma(1, x) is the sifted-set density.
    """
    if not (1 <= z <= x):
        raise DomainError(f"need 1 <= z <= x, got z={z}, x={x}")
    counts = []
    for p in system.active_primes(x, z):
        k = system.residue_count(p)
        if k >= p:
            raise DegenerateSystemError(p)
        counts.append((p, k))
    if exact:
        out = Fraction(1)
        for p, k in counts:
            out *= Fraction(p - k, p)
        return out
    with mp.workprec(SIGMA_PRECISION_BITS):
        out = mpf(1)
        for p, k in counts:
            out *= mpf(p - k) / p
        return +out


def _balanced_prod(vals: list[int]) -> int:
    if not vals:
        return 1
    while len(vals) > 1:
        vals = [vals[i] * vals[i + 1] if i + 1 < len(vals) else vals[i]
                for i in range(0, len(vals), 2)]
    return vals[0]


def period(system: SievingSystem, x: float) -> int:
    """P(x): product of primes p <= x with nonempty I_p."""
    if x < 1:
        raise DomainError("x must be >= 1")
    return _balanced_prod(system.active_primes(x))


def estimate_rho(system: SievingSystem, x: int) -> float:
    """Empirical support density: #{p <= x : |I_p| >= 1} / (x / log x)."""
    if x < 10:
        raise DomainError("x must be >= 10")
    return len(system.active_primes(x)) / (x / math.log(x))


def mertens_fit(system: SievingSystem, checkpoints: Sequence[int],
                drift_tol: float = 0.1) -> DensityReport:
    """Track sigma(x_i) * log(x_i) along increasing checkpoints.

    Flags non-one-dimensional behavior when the track still drifts
    monotonically by more than ``drift_tol`` (relative) between the final
    two checkpoints.
    """
    cps = [int(c) for c in checkpoints]
    if not cps or any(c < 100 for c in cps) or sorted(cps) != cps:
        raise DomainError("checkpoints must be increasing and >= 100")
    track: list[tuple[int, float]] = []
    with mp.workprec(SIGMA_PRECISION_BITS):
        acc = mpf(1)
        prev = 0
        for cp in cps:
            for p in primes_in_range(prev, cp):
                k = system.residue_count(int(p))
                if k >= p:
                    raise DegenerateSystemError(int(p))
                if k:
                    acc *= mpf(int(p) - k) / int(p)
            prev = cp
            track.append((cp, float(acc * mp.log(cp))))
        final_sigma = float(acc)
    drift = 0.0
    flagged = False
    if len(track) >= 2 and track[-2][1] > 0:
        drift = abs(track[-1][1] / track[-2][1] - 1)
        deltas = [b2 - b1 for (_, b1), (_, b2) in zip(track, track[1:])]
        monotone = all(d > 0 for d in deltas) or all(d < 0 for d in deltas)
        flagged = monotone and drift > drift_tol
    x = cps[-1]
    return DensityReport(
        x=x,
        sigma=final_sigma,
        period_bitlength=period(system, x).bit_length(),
        rho_hat=estimate_rho(system, x),
        mertens_track=track,
        flagged_not_one_dimensional=flagged,
        drift_ratio=drift,
    )


# ---------------------------------------------------------------------------
# construction / serialization helpers


def eratosthenes() -> SievingSystem:
    return SievingSystem("eratosthenes", name="eratosthenes")


def polynomial_system(poly: IntPolynomial | str, *,
                      small_prime_mode: str = "roots") -> SievingSystem:
    if isinstance(poly, str):
        poly = IntPolynomial.parse(poly)
    return SievingSystem("polynomial", poly=poly,
                         small_prime_mode=small_prime_mode,
                         name=f"poly(deg={poly.degree})")


def twin_system(limit: int = 1_000_000) -> SievingSystem:
    """I_p = {0, p-2 mod p}: a two-dimensional (non-one-dimensional) example."""
    table = {}
    for p in primes_upto(limit):
        p = int(p)
        table[p] = tuple(sorted({0, (p - 2) % p}))
    return SievingSystem("table", table=table, name="twin")


def system_from_spec(spec: str, *, table_limit: int = 1_000_000) -> SievingSystem:
    """Resolve a CLI system string: builtin name, poly:<expr>, or a file path."""
    if spec == "eratosthenes":
        return eratosthenes()
    if spec == "twin":
        return twin_system(table_limit)
    if spec.startswith("poly:"):
        return polynomial_system(spec[5:])
    return load_system_file(spec)


def load_system_file(path: str) -> SievingSystem:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    kind = data.get("kind")
    if kind == "eratosthenes":
        return eratosthenes()
    if kind == "polynomial":
        if "binomial_coeffs" in data:
            poly = IntPolynomial(data["binomial_coeffs"])
        elif "coeffs" in data:
            poly = IntPolynomial.from_coefficients(
                [Fraction(c) if isinstance(c, str) else c for c in data["coeffs"]])
        else:
            raise DomainError("polynomial file needs binomial_coeffs or coeffs")
        return SievingSystem(
            "polynomial", poly=poly,
            small_prime_mode=data.get("small_prime_mode", "roots"))
    if kind == "table":
        table = {int(p): tuple(int(r) for r in rs) for p, rs in data["entries"]}
        for p, rs in table.items():
            if not is_prime(p):
                raise DomainError(f"table modulus {p} is not prime")
            if any(not 0 <= r < p for r in rs):
                raise DomainError(f"residue out of range for p={p}")
        return SievingSystem("table", table=table)
    raise DomainError(f"unknown system kind {kind!r} in {path}")
