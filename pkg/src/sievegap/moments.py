"""Exact correlation / error-function computations and Monte Carlo
verification of the moment identities for a uniform random shift.

Throughout, the shift b is uniform modulo P(z) and S denotes the shifted
sifted set S_z + b.  The identities verified are:

(i)   E |S cap [1,y]|   = sigma(z) y            (exact),
      E |S cap [1,y]|^2 = (1 + O(1/log y)) (sigma y)^2,
(ii)  E sum_q (sum_n lambda(H;q,n))^j = (1 + o) ((K+1)y)^j |Q_H|,
(iii) E sum_{n in S cap [1,y]} (sum_q sum_{h<=KH} lambda(H;q,n-qh))^j
        = (1 + o) (|Q_H| K H / sigma2)^j sigma y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .construction import Params, build_weight_tables, stage1_uniform
from .errors import DomainError, EnumerationLimitError
from .primes import primes_in_range
from .rng import substream
from .systems import SievingSystem, period, sigma
from .window import ShiftVector, sift

EXACT_PERIOD_CAP = 100_000
ENUM_CAP = 1_000_000


@dataclass
class MomentReport:
    identity: str
    predicted: float
    estimated: float
    std_error: float
    trials: int
    z_score: float
    exact: bool = False
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"identity": self.identity, "predicted": self.predicted,
                "estimated": self.estimated, "std_error": self.std_error,
                "trials": self.trials, "z_score": self.z_score,
                "exact": self.exact, "extras": self.extras}


def _report(identity: str, predicted: float, values: list[float],
            **extras) -> MomentReport:
    n = len(values)
    if n == 0:
        raise DomainError("no trials: cannot form an estimate")
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    z = (mean - predicted) / se if se > 0 else 0.0
    return MomentReport(identity=identity, predicted=float(predicted),
                        estimated=mean, std_error=se, trials=n,
                        z_score=z, extras=extras)


# ---------------------------------------------------------------------------
# error function E_A


def error_E(system: SievingSystem, A, m: int, H: float, M: float, z: int):
    """sum over squarefree d > 1 with prime factors in (H^M, z] of
    (A^{omega(d)} / d) * 1{m mod d in I_d - I_d}.

    By the Chinese remainder theorem the indicator factors through the
    per-prime difference sets, so a depth-first walk over the prime list
    can prune every branch whose prime fails m mod p in I_p - I_p.
    Exact rational arithmetic when A is an int or Fraction.
    """
    primes = [int(p) for p in primes_in_range(H ** M, z)]
    if len(primes) < 64 and (1 << len(primes)) - 1 > ENUM_CAP or \
            len(primes) >= 64:
        raise EnumerationLimitError(
            f"{len(primes)} primes in range: too many squarefree d")
    good = []
    for p in primes:
        res = system.residues(p)
        diff = {(a - b) % p for a in res for b in res}
        if m % p in diff:
            good.append(p)
    exact = isinstance(A, (int, Fraction))
    Aq = Fraction(A) if exact else float(A)
    total = Fraction(0) if exact else 0.0

    def dfs(idx, ratio):
        nonlocal total
        for k in range(idx, len(good)):
            term = ratio * Aq / good[k]
            total += term
            dfs(k + 1, term)

    dfs(0, Fraction(1) if exact else 1.0)
    return total


# ---------------------------------------------------------------------------
# exact correlation


def correlation_exact(system: SievingSystem, U, H: float, M: float, z: int,
                      exact: bool = False):
    """Pr(U + b2 subset of S_{H^M, z} + b2 shifted ... ) — precisely, the
    probability over a uniform shift that every u in U survives the
    primes in (H^M, z]: product of (1 - |N_p - I_p| / p) with
    N_p = U mod p.
    """
    U = sorted(set(int(u) for u in U))
    out = Fraction(1) if exact else 1.0
    for p in (int(p) for p in primes_in_range(H ** M, z)):
        res = system.residues(p)
        if not res:
            continue
        forbidden = {(u - r) % p for u in U for r in res}
        if exact:
            out *= Fraction(p - len(forbidden), p)
        else:
            out *= (p - len(forbidden)) / p
    return out


# ---------------------------------------------------------------------------
# first and second moments of |S cap [1, y]|


def exact_first_moment(system: SievingSystem, z: int, y: int) -> MomentReport:
    """Enumerate every shift b mod P(z); the mean member count is an
    exact rational equal to sigma(z) y."""
    P = period(system, z)
    if P > EXACT_PERIOD_CAP:
        raise EnumerationLimitError(f"P(z) = {P} exceeds {EXACT_PERIOD_CAP}")
    if y < 0:
        raise DomainError("y must be >= 0")
    bit = np.ones(P, dtype=bool)
    for p in system.active_primes(z):
        for r in system.residues(p):
            bit[r::p] = False
    total = 0
    bs = np.arange(P, dtype=np.int64)
    for n in range(1, y + 1):
        total += int(bit[(n - bs) % P].sum())
    mean = Fraction(total, P)
    predicted = sigma(system, 1, z, exact=True) * y
    rep = MomentReport(identity="i-first-exact", predicted=float(predicted),
                       estimated=float(mean), std_error=0.0, trials=P,
                       z_score=0.0, exact=True,
                       extras={"mean_fraction": f"{mean}",
                               "predicted_fraction": f"{predicted}",
                               "equal": mean == predicted})
    return rep


def mc_first_moment(system: SievingSystem, z: int, y: int, trials: int,
                    seed: int) -> MomentReport:
    if trials < 1:
        raise DomainError("trials must be >= 1")
    vals = []
    for t in range(trials):
        b = ShiftVector.uniform(system, z, substream(seed, "first", t))
        vals.append(float(sift(system, z, b, 1, y).count()) if y >= 1 else 0.0)
    predicted = float(sigma(system, 1, z)) * y
    return _report("i-first-mc", predicted, vals)


def mc_second_moment(system: SievingSystem, z: int, y: int, trials: int,
                     seed: int) -> MomentReport:
    if trials < 1:
        raise DomainError("trials must be >= 1")
    vals = []
    for t in range(trials):
        b = ShiftVector.uniform(system, z, substream(seed, "second", t))
        c = sift(system, z, b, 1, y).count() if y >= 1 else 0
        vals.append(float(c) ** 2)
    predicted = (float(sigma(system, 1, z)) * y) ** 2
    rep = _report("i-second-mc", predicted, vals)
    rep.extras["relative_deviation"] = abs(rep.estimated / predicted - 1) \
        if predicted > 0 else float("inf")
    return rep


# ---------------------------------------------------------------------------
# lambda moments (identities ii and iii)


def _lambda_trial(system: SievingSystem, params: Params, H: float,
                  seed: int, t: int):
    """One fresh stage-1 draw; returns (tables, shift)."""
    b = stage1_uniform(system, params.z_eff, substream(seed, "lam", t))
    return build_weight_tables(system, params, b, H), b


def mc_lambda_moments(system: SievingSystem, params: Params, H: float,
                      j: int, trials: int, seed: int,
                      identity: str = "ii") -> MomentReport:
    """Monte Carlo for identity (ii) or (iii) at moment order j in {0,1,2}."""
    if j not in (0, 1, 2):
        raise DomainError("j must be 0, 1 or 2")
    if identity not in ("ii", "iii"):
        raise DomainError("identity must be 'ii' or 'iii'")
    if H not in params.Q:
        raise DomainError(f"H={H} has no prime family in params")
    qs = params.Q[H]
    K, y = params.K, params.y
    table_cells = len(qs) * (K + 1) * y
    if table_cells > 100_000_000:
        raise EnumerationLimitError("weight tables too large; reduce y")
    HM = H ** params.M
    sigma2 = float(sigma(system, HM, params.z_eff)) if HM < params.z_eff \
        else 1.0
    J = int(K * H)
    vals = []
    for t in range(trials):
        tables, b = _lambda_trial(system, params, H, seed, t)
        if identity == "ii":
            v = sum(tab.total ** j for tab in tables.values())
        else:
            members = sift(system, params.z_eff, b, 1, y).members()
            if j == 0:
                v = float(len(members))
            else:
                v = 0.0
                for n in members:
                    inner = 0.0
                    for q, tab in tables.items():
                        # lambda(H; q, n - qh) for 1 <= h <= KH
                        for h in range(1, J + 1):
                            k = int(n) - q * h - tab.n_lo
                            if 0 <= k < len(tab.values):
                                inner += float(tab.values[k])
                    v += inner ** j
        vals.append(float(v))
    if identity == "ii":
        predicted = ((K + 1) * y) ** j * len(qs)
    else:
        sig = float(sigma(system, 1, params.z_eff))
        predicted = (len(qs) * K * H / sigma2) ** j * sig * y
    rep = _report(f"{identity}-j{j}", predicted, vals,
                  H=H, K=K, y=y, n_q=len(qs), sigma2=sigma2)
    return rep
