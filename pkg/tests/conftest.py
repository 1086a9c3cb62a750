"""Shared helpers: brute-force oracles and random small systems."""

import random

import pytest

from sievegap.systems import SievingSystem


def random_table_system(rng: random.Random, prime_cap: int = 50,
                        max_classes: int = 3) -> SievingSystem:
    """A random table system on primes <= prime_cap with |I_p| <= max_classes."""
    from sievegap.primes import primes_upto
    table = {}
    for p in (int(p) for p in primes_upto(prime_cap)):
        k = rng.randint(0, min(max_classes, p - 1))
        table[p] = tuple(sorted(rng.sample(range(p), k)))
    return SievingSystem("table", table=table, name="random")


def brute_members(system: SievingSystem, x: int, shift, lo: int, hi: int,
                  z: int = 1) -> list[int]:
    """Per-integer oracle for (S_{z,x} + b) on [lo, hi].

    n is allowed at p iff n mod p avoids (I_p + b_p) mod p; the per-prime
    allowed table is precomputed so the inner loop is a lookup.
    """
    tables = []
    for p in system.active_primes(x, z):
        allowed = bytearray([1]) * p
        for r in system.residues(p):
            allowed[(r + shift.residue(p)) % p] = 0
        tables.append((p, bytes(allowed)))
    out = []
    for n in range(lo, hi + 1):
        if all(t[n % p] for p, t in tables):
            out.append(n)
    return out


def brute_gap(members: list[int], lo: int, hi: int):
    """Scan oracle for the largest gap between consecutive members."""
    if len(members) < 2:
        return hi - lo + 1, lo, True
    best, left = 0, members[0]
    for a, b in zip(members, members[1:]):
        if b - a > best:
            best, left = b - a, a
    return best, left, False
