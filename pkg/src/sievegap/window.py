"""Shifted sifted sets over integer windows, and their largest gaps.

The shift b lives in Z/P(x)Z but is stored per-prime (a residue modulo
each relevant prime): P(x) has thousands of bits already at modest x,
so b is never materialized as one big integer except for explicit CRT
position queries.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSystemError, DomainError
from .systems import SievingSystem

MAX_WINDOW = 1 << 31


@dataclass
class ShiftVector:
    """A shift b mod P(x), stored as residues modulo each active prime.

    ``entries`` maps each prime p <= x with I_p nonempty to b mod p.
    Missing primes are treated as residue 0 by readers, so the zero
    shift is just an empty map.
    """

    entries: dict[int, int] = field(default_factory=dict)
    x: int = 0

    def residue(self, p: int) -> int:
        return self.entries.get(p, 0) % p

    def restricted(self, x: int) -> "ShiftVector":
        """Projection mod P(x) for x <= self.x (keep primes <= x)."""
        return ShiftVector({p: r for p, r in self.entries.items() if p <= x}, x)

    def merged(self, other: "ShiftVector") -> "ShiftVector":
        """Union of residue constraints; ``other`` wins on overlap."""
        out = dict(self.entries)
        out.update(other.entries)
        return ShiftVector(out, max(self.x, other.x))

    def crt_value(self) -> tuple[int, int]:
        """(b mod P, P) as explicit integers, for position mapping only."""
        b, mod = 0, 1
        for p, r in sorted(self.entries.items()):
            # b' = b + mod * t with b' == r (mod p)
            t = (r - b) * pow(mod % p, -1, p) % p
            b += mod * t
            mod *= p
        return b, mod

    @classmethod
    def zero(cls, system: SievingSystem, x: int) -> "ShiftVector":
        return cls({p: 0 for p in system.active_primes(x)}, x)

    @classmethod
    def uniform(cls, system: SievingSystem, x: int,
                rng: random.Random) -> "ShiftVector":
        """Independent uniform residue for each active prime p <= x."""
        return cls({p: rng.randrange(p) for p in system.active_primes(x)}, x)

    def validate(self, system: SievingSystem) -> None:
        active = set(system.active_primes(self.x))
        if set(self.entries) != active:
            raise DomainError("shift keys do not match active primes <= x")
        for p, r in self.entries.items():
            if not 0 <= r < p:
                raise DomainError(f"residue {r} out of range mod {p}")


@dataclass
class SiftedWindow:
    """Membership bitmap of (S_{z,x} + b) over [lo, hi]."""

    lo: int
    hi: int
    bits: np.ndarray
    x: int
    z: int
    shift: ShiftVector

    def __contains__(self, n: int) -> bool:
        return self.lo <= n <= self.hi and bool(self.bits[n - self.lo])

    def members(self) -> np.ndarray:
        return np.flatnonzero(self.bits) + self.lo

    def count(self) -> int:
        return int(self.bits.sum())

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1


def sift(system: SievingSystem, x: int, shift: ShiftVector,
         lo: int, hi: int, z: int = 1) -> SiftedWindow:
    """Exact membership of (S_{z,x} + b) on [lo, hi] by strided marking.

    n is a member iff (n - b) mod p is not in I_p for every prime
    p in (z, x].
    """
    if lo > hi:
        raise DomainError(f"empty window [{lo}, {hi}]")
    if hi - lo + 1 > MAX_WINDOW:
        raise DomainError(f"window wider than {MAX_WINDOW}; chunk the request")
    if z >= x:
        raise DomainError(f"need z < x, got z={z}, x={x}")
    width = hi - lo + 1
    bits = np.ones(width, dtype=bool)
    for p in system.active_primes(x, z):
        res = system.residues(p)
        if len(res) >= p:
            raise DegenerateSystemError(p)
        b = shift.residue(p)
        for r in res:
            start = (b + r - lo) % p
            bits[start::p] = False
    return SiftedWindow(lo, hi, bits, x, z, shift)


@dataclass
class GapResult:
    length: int
    left: int
    sentinel: bool = False  # fewer than two members: length is window width


def largest_gap(window: SiftedWindow) -> GapResult:
    """Max difference between consecutive members; first occurrence wins ties."""
    ms = window.members()
    if len(ms) < 2:
        return GapResult(window.width, window.lo, sentinel=True)
    diffs = np.diff(ms)
    i = int(np.argmax(diffs))
    return GapResult(int(diffs[i]), int(ms[i]))


def verify_empty(system: SievingSystem, x: int, shift: ShiftVector,
                 lo: int, hi: int, z: int = 1) -> bool:
    """True iff (S_{z,x} + b) has no member in [lo, hi].

    Independent of sift(): checks each integer individually against
    every active prime, so it can certify a constructed gap without
    sharing code with the strided marker.
    """
    if lo > hi:
        return True
    primes = system.active_primes(x, z)
    tables = {p: set(system.residues(p)) for p in primes}
    offsets = {p: shift.residue(p) for p in primes}
    for n in range(lo, hi + 1):
        sieved = False
        for p in primes:
            if (n - offsets[p]) % p in tables[p]:
                sieved = True
                break
        if not sieved:
            return False
    return True
