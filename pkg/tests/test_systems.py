"""Sieving systems: residue tables, density products, classification."""

import math
import random
from fractions import Fraction

import pytest

from sievegap.errors import DomainError
from sievegap.primes import primes_upto
from sievegap.systems import (IntPolynomial, SievingSystem, eratosthenes,
                              estimate_rho, mertens_fit, normalize_shift,
                              period, polynomial_system, sigma,
                              system_from_spec, twin_system)

N2P1 = polynomial_system("n^2+1")


# ---------------------------------------------------------------------------
# residue tables


def test_eratosthenes_residues():
    era = eratosthenes()
    for p in (2, 3, 5, 7, 97):
        assert era.residues(p) == (0,)
        assert era.residue_count(p) == 1


def test_n2p1_residue_examples():
    assert N2P1.residues(3) == ()
    assert N2P1.residues(5) == (2, 3)
    assert N2P1.residues(2) == (1,)


def test_residues_require_prime():
    with pytest.raises(DomainError):
        eratosthenes().residues(6)


def test_polynomial_root_count_bounded_by_degree():
    polys = ["n^2+1", "n^3-2n+7", "(n^7-n+7)/7", "n^4+n+1"]
    for text in polys:
        sys_ = polynomial_system(text)
        d = sys_.degree_d
        for p in (int(q) for q in primes_upto(200)):
            if p > d:
                assert sys_.residue_count(p) <= d


def test_residues_match_bruteforce_random_pairs():
    rng = random.Random(20240817)
    primes = [int(p) for p in primes_upto(997)]
    for _ in range(100):
        d = rng.randint(1, 4)
        coeffs = [rng.randint(-20, 20) for _ in range(d)] + [rng.randint(1, 20)]
        poly = IntPolynomial.from_coefficients(coeffs)
        sys_ = polynomial_system(poly)
        p = rng.choice(primes)
        brute = tuple(n for n in range(p) if poly(n) % p == 0)
        if len(brute) == p:
            continue  # degenerate at p; flag tested elsewhere
        assert sys_.residues(p) == brute


def test_quadratic_fast_path_matches_bruteforce():
    rng = random.Random(7)
    primes = [int(p) for p in primes_upto(500) if p > 2]
    for _ in range(50):
        poly = IntPolynomial.from_coefficients(
            [rng.randint(-9, 9), rng.randint(-9, 9), rng.randint(1, 9)])
        p = rng.choice(primes)
        brute = tuple(n for n in range(p) if poly(n) % p == 0)
        assert polynomial_system(poly).residues(p) == brute


def test_degenerate_prime_flagged_not_error():
    sys_ = SievingSystem("table", table={2: (0, 1), 3: (0,)})
    assert sys_.residues(2) == (0, 1)
    assert sys_.is_degenerate_at(2)
    assert 2 in sys_.degenerate_primes


# ---------------------------------------------------------------------------
# integer-valued polynomials


def test_parse_standard_and_scaled_forms():
    assert [IntPolynomial.parse("n^2+1")(n) for n in range(5)] == \
        [1, 2, 5, 10, 17]
    f = IntPolynomial.parse("(n^7-n+7)/7")
    assert all((n ** 7 - n + 7) % 7 == 0 for n in range(20))
    assert [f(n) for n in range(5)] == [(n ** 7 - n + 7) // 7
                                        for n in range(5)]


def test_non_integer_valued_rejected():
    with pytest.raises(DomainError):
        IntPolynomial.from_coefficients([0, Fraction(1, 2)])


def test_scaled_standard_coeffs_consistent():
    rng = random.Random(11)
    for _ in range(20):
        d = rng.randint(1, 5)
        poly = IntPolynomial([rng.randint(-10, 10) for _ in range(d + 1)])
        coeffs, fact = poly.scaled_standard_coeffs()
        for n in range(-5, 6):
            acc = 0
            for c in reversed(coeffs):
                acc = acc * n + c
            assert acc == fact * poly(n)


# ---------------------------------------------------------------------------
# normalize_shift


def test_normalize_shift_examples():
    sys_ = SievingSystem("table", table={5: (2, 3), 7: (), 3: (0, 2)})
    norm = normalize_shift(sys_)
    assert norm.residues(5) == (0, 1)
    assert norm.residues(7) == ()
    assert norm.residues(3) == (0, 2)


def test_normalize_shift_preserves_sizes_and_sigma():
    rng = random.Random(99)
    from conftest import random_table_system
    for _ in range(10):
        sys_ = random_table_system(rng)
        norm = normalize_shift(sys_)
        for x in (10, 30, 50):
            assert [sys_.residue_count(p) for p in sys_.active_primes(x)] == \
                [norm.residue_count(p) for p in norm.active_primes(x)]
            assert sigma(sys_, 1, x, exact=True) == \
                sigma(norm, 1, x, exact=True)


# ---------------------------------------------------------------------------
# sigma / period / rho


def test_sigma_examples_exact():
    assert sigma(eratosthenes(), 1, 10, exact=True) == Fraction(8, 35)
    assert sigma(eratosthenes(), 10, 10, exact=True) == 1
    assert sigma(N2P1, 1, 5, exact=True) == Fraction(3, 10)


def test_sigma_multiplicative_chain():
    rng = random.Random(5)
    from conftest import random_table_system
    for _ in range(10):
        sys_ = random_table_system(rng)
        a = float(sigma(sys_, 1, 20)) * float(sigma(sys_, 20, 50))
        b = float(sigma(sys_, 1, 50))
        assert a == pytest.approx(b, rel=1e-9)


def test_sigma_degenerate_error_names_prime():
    sys_ = SievingSystem("table", table={3: (0, 1, 2)})
    with pytest.raises(Exception, match="3"):
        sigma(sys_, 1, 10)


def test_period_examples():
    assert period(eratosthenes(), 10) == 210
    assert period(N2P1, 4) == 2
    assert period(SievingSystem("table", table={}), 100) == 1


def test_period_divisibility():
    for x, x2 in ((10, 30), (30, 100), (7, 7)):
        assert period(N2P1, x2) % period(N2P1, x) == 0


def test_estimate_rho():
    era = eratosthenes()
    assert estimate_rho(era, 10_000) == pytest.approx(
        1229 * math.log(10_000) / 10_000, rel=1e-12)
    assert estimate_rho(SievingSystem("table", table={}), 1000) == 0.0


# ---------------------------------------------------------------------------
# mertens_fit


def test_mertens_fit_eratosthenes_tracks_constant():
    rep = mertens_fit(eratosthenes(), [1_000, 10_000, 100_000])
    assert not rep.flagged_not_one_dimensional
    assert rep.mertens_track[-1][1] == pytest.approx(0.5615, rel=0.02)
    assert 0 < rep.sigma <= 1
    assert rep.period_bitlength > 0


def test_mertens_fit_flags_single_prime_divergence():
    sys_ = SievingSystem("table", table={2: (0,)})
    rep = mertens_fit(sys_, [100, 1_000, 10_000])
    assert rep.flagged_not_one_dimensional
    assert rep.mertens_track[-1][1] == pytest.approx(0.5 * math.log(10_000),
                                                     rel=1e-9)


def test_mertens_fit_flags_twin_system():
    rep = mertens_fit(twin_system(100_000), [1_000, 10_000, 100_000])
    assert rep.flagged_not_one_dimensional


def test_mertens_fit_rejects_bad_checkpoints():
    with pytest.raises(DomainError):
        mertens_fit(eratosthenes(), [50, 1000])
    with pytest.raises(DomainError):
        mertens_fit(eratosthenes(), [1000, 100])


# ---------------------------------------------------------------------------
# system loading


def test_system_from_spec_builtins():
    assert system_from_spec("eratosthenes").kind == "eratosthenes"
    assert system_from_spec("twin").residues(5) == (0, 3)
    assert system_from_spec("poly:n^2+1").residues(5) == (2, 3)


def test_load_system_file_roundtrip(tmp_path):
    f = tmp_path / "sys.json"
    f.write_text('{"kind": "polynomial", "binomial_coeffs": [1, 1, 2]}')
    sys_ = system_from_spec(str(f))
    # a_0 + a_1 C(n,1) + a_2 C(n,2) with a=[1,1,2] is n^2 + 1
    assert [sys_.poly(n) for n in range(4)] == [1, 2, 5, 10]

    g = tmp_path / "table.json"
    g.write_text('{"kind": "table", "entries": [[5, [2, 3]], [7, []]]}')
    sys2 = system_from_spec(str(g))
    assert sys2.residues(5) == (2, 3)
    assert sys2.residues(7) == ()
