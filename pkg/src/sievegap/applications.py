"""Composite runs of polynomial values and coprimality witnesses,
built on the sieving construction, plus re-exports of the numeric
constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import (ConstantsReport, c_rho, c_rho_lower_bound,
                        constants_report, rho_derangement)
from .errors import DomainError
from .primes import primality, primes_in_range, primes_upto
from .rng import substream
from .systems import IntPolynomial, SievingSystem, polynomial_system
from .window import ShiftVector, verify_empty

__all__ = [
    "ConstantsReport", "c_rho", "c_rho_lower_bound", "constants_report",
    "rho_derangement", "RunResult", "composite_run_bruteforce",
    "ConstructedRun", "composite_run_constructed", "coprimality_witness",
    "CoprimalityWitness", "coprimality_constructed",
]

_OVERFLOW_LIMIT = 1 << 128
_PRESIEVE_LIMIT = 300
_BRUTE_X_CAP = 100_000_000


def _as_poly(f) -> IntPolynomial:
    return IntPolynomial.parse(f) if isinstance(f, str) else f


def _horner_fn(poly: IntPolynomial):
    coeffs, fact = poly.scaled_standard_coeffs()

    def f(n: int) -> int:
        acc = 0
        for c in reversed(coeffs):
            acc = acc * n + c
        return acc // fact
    return f


# ---------------------------------------------------------------------------
# brute-force composite runs


@dataclass
class RunResult:
    start: int
    length: int
    probabilistic_checks: int = 0

    def to_dict(self) -> dict:
        return {"start": self.start, "length": self.length,
                "probabilistic_checks": self.probabilistic_checks}


def composite_run_bruteforce(f, X: int) -> RunResult:
    """Longest run of consecutive n in [1, X] with f(n) not prime.

    Values with |f(n)| <= 1 (and negatives) count as non-prime.  A
    presieve marks n where a small prime divides f(n); only unmarked
    values reach the primality test.  Ties break to the smallest start.
    """
    poly = _as_poly(f)
    if X < 1 or X > _BRUTE_X_CAP:
        raise DomainError(f"X must lie in [1, {_BRUTE_X_CAP}]")
    fn = _horner_fn(poly)
    system = polynomial_system(poly)
    # spf[n] = smallest presieve prime dividing f(n), or 0
    spf = np.zeros(X + 1, dtype=np.int32)
    for p in reversed([int(p) for p in primes_upto(_PRESIEVE_LIMIT)]):
        for r in system.residues(p):
            spf[r::p] = p
    best_start, best_len = 1, 0
    run_start, run_len = 1, 0
    prob = 0
    for n in range(1, X + 1):
        v = fn(n)
        if abs(v) >= _OVERFLOW_LIMIT:
            raise DomainError(f"|f({n})| exceeds 128 bits")
        p = int(spf[n])
        if abs(v) <= 1:
            is_p = False
        elif p and abs(v) > p:
            is_p = False          # a proper small divisor: composite
        else:
            is_p, tag = primality(abs(v))
            if tag == "probabilistic":
                prob += 1
        if is_p:
            run_start, run_len = n + 1, 0
        else:
            run_len += 1
            if run_len > best_len:
                best_start, best_len = run_start, run_len
    return RunResult(start=best_start, length=best_len,
                     probabilistic_checks=prob)


# ---------------------------------------------------------------------------
# constructed composite runs


@dataclass
class ConstructedRun:
    start: int
    length: int
    x: int
    period: int
    shift_crt: int
    verified: bool
    probabilistic_checks: int = 0

    def to_dict(self) -> dict:
        return {"start": self.start, "length": self.length, "x": self.x,
                "period": self.period, "verified": self.verified,
                "probabilistic_checks": self.probabilistic_checks}


def _greedy_empty_shift(system: SievingSystem, primes: list[int], x: int,
                        z: int, rng) -> tuple[ShiftVector, int]:
    """Seeded random start, then coordinate ascent: re-choose each
    prime's residue to maximize the initial empty run of the shifted
    sifted set (primes in (z, x])."""
    from .window import sift
    entries = {p: rng.randrange(p) for p in primes}
    target = max(x, 4) * 4

    def initial_run() -> int:
        surv = sift(system, x, ShiftVector(entries, x), 1, target,
                    z=z).members()
        return int(surv[0]) - 1 if len(surv) else target

    for _ in range(3):
        improved = False
        for p in sorted(primes, reverse=True):
            base = entries[p]
            best_r, best_len = base, initial_run()
            for r in range(p):
                if r == base:
                    continue
                entries[p] = r
                run = initial_run()
                if run > best_len:
                    best_r, best_len = r, run
            entries[p] = best_r
            improved = improved or best_r != base
        if not improved:
            break
    return ShiftVector(entries, x), initial_run()


def _pick_cutoff(system: SievingSystem, X: int) -> int:
    """Largest prime cutoff x whose active-prime product stays <= X/4,
    so the CRT-mapped run fits inside [X/2, X]."""
    prod, x = 1, 2
    for p in (int(p) for p in primes_upto(max(100, int(math.log(X) ** 2)))):
        if system.residue_count(p) >= 1:
            if prod * p > X // 4:
                break
            prod *= p
        x = p
    return max(x, 2)


def composite_run_constructed(f, X: int, seed: int) -> ConstructedRun:
    """Sieve-constructed interval in [X/2, X] on which f is composite.

    Builds the root system of f, finds a shift b emptying an initial
    interval of the shifted sifted set at a small cutoff x (nominally
    (1/2) log X; enlarged at desk scale while the period still fits in
    X/4), maps the interval into [X/2, X] through the CRT position of b,
    and verifies every element composite with the primality test.
    """
    poly = _as_poly(f)
    system = polynomial_system(poly)
    x = _pick_cutoff(system, X)
    active = system.active_primes(x)
    if not active:
        raise DomainError("no prime sieves any value; cannot construct a run")
    # randomized shift, then greedy clean-up: give every prime whose
    # residue is still free the class that kills the first survivor
    rng = substream(seed, "composite-run")
    shift, L = _greedy_empty_shift(system, active, x, 1, rng)
    if not verify_empty(system, x, shift, 1, L):
        raise DomainError("internal error: constructed interval not empty")
    b, P = shift.crt_value()
    # integers m = n - b for n in [1, L] are all sieved; place the run
    # representative in [X/2, X]
    n0 = (1 - b) % P
    start = n0 + P * ((X // 2 - n0 + P - 1) // P)
    if start + L - 1 > X:
        raise DomainError("period too large to map the run into [X/2, X]")
    fn = _horner_fn(poly)
    prob = 0
    for n in range(start, start + L):
        v = abs(fn(n))
        is_p, tag = primality(v)
        if tag == "probabilistic":
            prob += 1
        if is_p:
            raise DomainError(
                f"verification failed: f({n}) = {v} is prime (bug)")
    return ConstructedRun(start=start, length=L, x=x, period=P,
                          shift_crt=b, verified=True,
                          probabilistic_checks=prob)


# ---------------------------------------------------------------------------
# coprimality witnesses


def _has_prime_factor_above(g: int, d: int) -> bool:
    """True iff g has a prime factor > d (strip the small ones)."""
    g = abs(g)
    for p in (int(p) for p in primes_upto(max(d, 2))):
        if p > d:
            break
        while g % p == 0:
            g //= p
    return g > 1


def _verify_witness(fn, d: int, n: int, k: int) -> bool:
    """Every i in [1, k] must share a prime > d with some j != i."""
    vals = [fn(n + i) for i in range(1, k + 1)]
    for i in range(k):
        ok = False
        for j in range(k):
            if i != j and _has_prime_factor_above(
                    math.gcd(vals[i], vals[j]), d):
                ok = True
                break
        if not ok:
            return False
    return True


@dataclass
class CoprimalityWitness:
    found: bool
    n: int | None
    k: int
    checked_up_to: int

    def to_dict(self) -> dict:
        return {"found": self.found, "n": self.n, "k": self.k,
                "checked_up_to": self.checked_up_to}


def coprimality_witness(f, k: int, search_bound: int) -> CoprimalityWitness:
    """Smallest n <= search_bound such that no f(n+i), i = 1..k, is
    coprime to all the others (witnessed by shared primes > deg f)."""
    poly = _as_poly(f)
    if k < 2:
        raise DomainError("k must be >= 2")
    fn = _horner_fn(poly)
    d = max(1, poly.degree)
    for n in range(0, search_bound + 1):
        if _verify_witness(fn, d, n, k):
            return CoprimalityWitness(found=True, n=n, k=k,
                                      checked_up_to=n)
    return CoprimalityWitness(found=False, n=None, k=k,
                              checked_up_to=search_bound)


@dataclass
class ConstructedCoprimality:
    n: int
    k_requested: int
    k_verified: int
    x: int

    def to_dict(self) -> dict:
        return {"n": str(self.n), "k_requested": self.k_requested,
                "k_verified": self.k_verified, "x": self.x}


def coprimality_constructed(f, x: int, seed: int = 0) -> ConstructedCoprimality:
    """Witness built from a sieve-constructed gap using primes in (d, x].

    A shift b emptying [1, L] of the shifted sifted set means every
    index m in [1, L] has some prime p in (d, x] dividing f(n + m) with
    n = -b (mod product of the primes).  Each value is then re-checked
    independently: after stripping all prime factors <= d, a nontrivial
    cofactor must remain, certifying divisibility by a prime > d.  The
    pairwise form (every value sharing its large prime with a partner
    inside the window) needs a window at least twice the largest sieving
    prime, which the available prime density cannot reach at small x, so
    only the per-index check is enforced here; `coprimality_witness`
    performs the full pairwise verification on searched witnesses.
    """
    poly = _as_poly(f)
    d = poly.degree
    system = polynomial_system(poly, small_prime_mode="empty")
    primes = [p for p in (int(p) for p in primes_in_range(d, x))
              if system.residue_count(p) >= 1]
    if not primes:
        raise DomainError(f"no usable primes in ({d}, {x}]")
    rng = substream(seed, "coprime")
    shift, L = _greedy_empty_shift(system, primes, x, max(d, 1), rng)
    if L < 2:
        raise DomainError("constructed gap shorter than 2; x too small")
    b, mod = shift.crt_value()
    n = (-b) % mod
    if n == 0:
        n = mod
    fn = _horner_fn(poly)
    for i in range(1, L + 1):
        if not _has_prime_factor_above(fn(n + i), d):
            raise DomainError(
                f"verification failed: f(n+{i}) has no prime factor > {d}")
    return ConstructedCoprimality(n=n, k_requested=L, k_verified=L, x=x)
