"""Three-stage randomized construction of a shift with a long empty
initial interval, plus the trivial baseline construction.

Stage 1 draws a uniform shift modulo the product of small primes.
Stage 2 greedily re-chooses residues modulo mid-size primes q, sampling
a class n_q with weight sigma2^{-|AP|} when the surviving portion of
the progression {n_q + q h} also survives the mid-range sieve.  Stage 3
matches each element still surviving in the target interval with a
distinct large prime and sieves it away individually.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from . import cover as cover_mod
from .constants import c_rho
from .errors import DomainError
from .primes import primes_in_range
from .rng import derive_seed, substream
from .systems import SievingSystem, estimate_rho, sigma
from .window import ShiftVector, sift, verify_empty

DEFAULT_M = 4.6
DEFAULT_K = 3
DEFAULT_XI = 1.1


@dataclass
class Params:
    """Derived parameters for the construction at cutoff x."""

    x: int
    delta: float
    M: float
    K: int
    xi: float
    y: int
    z: int
    z_eff: int                       # z clamped to x/2 so stage 3 has primes
    scales: list[float]
    Q: dict[float, list[int]]
    degraded: bool
    rho_hat: float
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"x": self.x, "delta": self.delta, "M": self.M, "K": self.K,
                "xi": self.xi, "y": self.y, "z": self.z, "z_eff": self.z_eff,
                "scales": self.scales,
                "Q_sizes": {f"{H:.6g}": len(qs) for H, qs in self.Q.items()},
                "degraded": self.degraded, "rho_hat": self.rho_hat,
                "warnings": self.warnings}


def derive_params(system: SievingSystem, x: int, delta: float | None = None,
                  M: float = DEFAULT_M, K: int = DEFAULT_K,
                  xi: float = DEFAULT_XI,
                  force_z: int | None = None,
                  force_scales: list[float] | None = None) -> Params:
    """Populate y, z, the scale set and the prime families Q_H.

    y = ceil(x (log x)^delta); z = round(y loglog x / sqrt(log x));
    scales are the powers of xi inside [2y/x, y/(xi z)]; Q_H holds the
    smallest primes q in (y/(xi H), y/H] with a nonempty residue set,
    capped near rho_hat (1 - 1/xi) y / (H log x).
    """
    if x < 100:
        raise DomainError("x must be >= 100")
    warnings: list[str] = []
    rho_hat = estimate_rho(system, max(x, 100))
    if delta is None:
        delta = min(0.9 * c_rho(min(rho_hat, 1.0)), 0.45)
    elif delta >= c_rho(min(rho_hat, 1.0)):
        warnings.append(
            f"delta={delta} is at or above the admissible threshold "
            f"c_rho({rho_hat:.3f})")
    if not 4 + delta < M <= 5:
        raise DomainError(f"need 4 + delta < M <= 5, got M={M}")
    if K < 2:
        raise DomainError("K must be >= 2")
    if xi <= 1:
        raise DomainError("xi must be > 1")
    lx = math.log(x)
    y = math.ceil(x * lx ** delta)
    z = force_z if force_z is not None else round(y * math.log(lx) / math.sqrt(lx))
    z = max(z, 2)
    z_eff = min(z, x // 2)
    if z_eff != z:
        warnings.append(f"z={z} exceeds x/2; stages use z_eff={z_eff}")
    if force_scales is not None:
        scales = sorted(force_scales)
    else:
        lo, hi = 2 * y / x, y / (xi * z)
        scales = []
        if lo <= hi and lo > 0:
            j = math.ceil(math.log(lo) / math.log(xi))
            while xi ** j <= hi:
                if xi ** j >= lo:
                    scales.append(xi ** j)
                j += 1
    degraded = not scales
    Q: dict[float, list[int]] = {}
    for H in scales:
        lo_q, hi_q = y / (xi * H), y / H
        cands = [int(q) for q in primes_in_range(lo_q, hi_q)
                 if system.residue_count(int(q)) >= 1]
        target = max(1, round(rho_hat * (1 - 1 / xi) * y / (H * lx)))
        Q[H] = cands[: min(len(cands), target)]
    Q = {H: qs for H, qs in Q.items() if qs}
    if scales and not Q:
        degraded = True
        warnings.append("no scale has admissible primes; running degraded")
        scales = []
    return Params(x=x, delta=delta, M=M, K=K, xi=xi, y=y, z=z, z_eff=z_eff,
                  scales=scales, Q=Q, degraded=degraded, rho_hat=rho_hat,
                  warnings=warnings)


# ---------------------------------------------------------------------------
# stage 1


def stage1_uniform(system: SievingSystem, z: int,
                   rng: random.Random) -> ShiftVector:
    """Independent uniform residue mod p for each active prime p <= z."""
    return ShiftVector.uniform(system, z, rng)


# ---------------------------------------------------------------------------
# stage 2: AP sets, weights, selection


def _membership_tables(system: SievingSystem, shift: ShiftVector,
                       lo: float, hi: float):
    primes = system.active_primes(hi, lo)
    return [(p, shift.residue(p), set(system.residues(p))) for p in primes]


def _survives(n: int, tables) -> bool:
    return all((n - b) % p not in res for p, b, res in tables)


def compute_AP(system: SievingSystem, stage1_shift: ShiftVector,
               H: float, q: int, n: int, J: int,
               M: float = DEFAULT_M) -> list[int]:
    """{n + q h : 1 <= h <= J} intersected with S1 = S_{H^M} + b1.

    Callers typically pass J = floor(K H).
    """
    tables = _membership_tables(system, stage1_shift, 1, H ** M)
    return [n + q * h for h in range(1, J + 1)
            if _survives(n + q * h, tables)]


def weight_lambda(system: SievingSystem, stage1_shift: ShiftVector,
                  H: float, q: int, n: int, *, M: float, K: int,
                  z: int, sigma2: float | None = None) -> float:
    """sigma2^{-|AP(KH; q, n)|} if the AP survives the (H^M, z] sieve, else 0."""
    HM = H ** M
    if sigma2 is None:
        sigma2 = float(sigma(system, HM, z)) if HM < z else 1.0
    ap = compute_AP(system, stage1_shift, H, q, n, int(K * H), M=M)
    mid_tables = _membership_tables(system, stage1_shift, HM, z)
    if all(_survives(m, mid_tables) for m in ap):
        return sigma2 ** -len(ap)
    return 0.0


@dataclass
class WeightTable:
    H: float
    q: int
    n_lo: int                    # values[k] is lambda at n = n_lo + k
    values: np.ndarray
    total: float

    def sample_n(self, rng: random.Random) -> int:
        if self.total <= 0:
            raise DomainError("cannot sample from an all-zero weight table")
        r = rng.random() * self.total
        c = np.cumsum(self.values)
        k = int(np.searchsorted(c, r, side="right"))
        k = min(k, len(self.values) - 1)
        return self.n_lo + k


def build_weight_tables(system: SievingSystem, params: Params,
                        stage1_shift: ShiftVector,
                        H: float) -> dict[int, WeightTable]:
    """Vectorized lambda tables for every q in Q_H over n in (-Ky, y]."""
    K, y, M, z = params.K, params.y, params.M, params.z_eff
    HM = H ** M
    J = int(K * H)
    qs = params.Q[H]
    n_lo, n_hi = -K * y + 1, y
    lo_all = n_lo + min(qs)
    hi_all = n_hi + max(qs) * J
    s1 = sift(system, HM, stage1_shift, lo_all, hi_all) if \
        system.active_primes(HM) else None
    s2 = sift(system, z, stage1_shift, lo_all, hi_all, z=HM) if \
        system.active_primes(z, HM) else None
    sigma2 = float(sigma(system, HM, z)) if HM < z else 1.0
    ns = np.arange(n_lo, n_hi + 1, dtype=np.int64)
    hs = np.arange(1, J + 1, dtype=np.int64)
    out = {}
    for q in qs:
        pos = ns[:, None] + q * hs[None, :]
        in_s1 = s1.bits[pos - lo_all] if s1 is not None else \
            np.ones(pos.shape, dtype=bool)
        in_s2 = s2.bits[pos - lo_all] if s2 is not None else \
            np.ones(pos.shape, dtype=bool)
        ap_sizes = in_s1.sum(axis=1)
        bad = (in_s1 & ~in_s2).any(axis=1)
        vals = sigma2 ** (-ap_sizes.astype(float))
        vals[bad] = 0.0
        out[q] = WeightTable(H=H, q=q, n_lo=n_lo, values=vals,
                             total=float(vals.sum()))
    return out


@dataclass
class Stage2Result:
    chosen: dict[int, int]          # q -> n_q
    rejected: list[int]             # q with all-zero weight table
    tables_built: int


def stage2_select(system: SievingSystem, params: Params,
                  stage1_shift: ShiftVector, seed: int,
                  mode: str = "sample") -> Stage2Result:
    """Choose n_q for each admissible q, with probability lambda / total.

    mode "sample" draws independently per q; mode "cover" additionally
    runs the covering rounds over the stage-1 survivors in [1, y] using
    the sampled progressions as edges, re-drawing n_q for indices whose
    edge must land inside the still-alive set.  q's whose weight table
    is identically zero are reported as rejected.
    """
    if mode not in ("sample", "cover"):
        raise DomainError(f"unknown stage-2 mode {mode!r}")
    chosen: dict[int, int] = {}
    rejected: list[int] = []
    built = 0
    all_tables: dict[int, WeightTable] = {}
    for H in params.scales:
        if H not in params.Q:
            continue
        tables = build_weight_tables(system, params, stage1_shift, H)
        built += len(tables)
        for q, tab in tables.items():
            if tab.total <= 0:
                rejected.append(q)
            else:
                all_tables[q] = tab
    if not all_tables:
        return Stage2Result(chosen={}, rejected=rejected, tables_built=built)
    if mode == "sample":
        for q, tab in sorted(all_tables.items()):
            chosen[q] = tab.sample_n(substream(seed, "stage2", q))
        return Stage2Result(chosen=chosen, rejected=rejected,
                            tables_built=built)
    # cover mode: survivors of the full stage-1 sieve inside [1, y] are the
    # vertices; each q's sampler draws n ~ lambda and emits the portion of
    # its progression that is still alive among the vertices.
    surv = sift(system, params.z_eff, stage1_shift, 1, params.y).members()
    if len(surv) == 0:
        for q, tab in sorted(all_tables.items()):
            chosen[q] = tab.sample_n(substream(seed, "stage2", q))
        return Stage2Result(chosen=chosen, rejected=rejected,
                            tables_built=built)
    vset = set(int(v) for v in surv)
    order = sorted(all_tables)

    class _ProgressionEdge(cover_mod.EdgeSampler):
        def __init__(self, q: int, tab: WeightTable, K: int, H: float):
            self.q, self.tab, self.J = q, tab, int(K * H)
            self.last_n: int | None = None

        def sample(self, rng: random.Random) -> np.ndarray:
            n = self.tab.sample_n(rng)
            self.last_n = n
            hits = [n + self.q * h for h in range(1, self.J + 1)
                    if (n + self.q * h) in vset]
            return np.array(hits, dtype=np.int64)

        def max_size(self) -> int:
            return self.J

        def inclusion_probs(self, vertices: np.ndarray) -> np.ndarray:
            probs = np.zeros(len(vertices))
            idx = {int(v): k for k, v in enumerate(vertices)}
            w = self.tab.values / self.tab.total
            for k, wk in enumerate(w):
                if wk == 0:
                    continue
                n = self.tab.n_lo + k
                for h in range(1, self.J + 1):
                    v = n + self.q * h
                    if v in idx:
                        probs[idx[v]] += wk
            return probs

        def codegree_bound(self) -> float:
            return 1.0

    samplers = [_ProgressionEdge(q, all_tables[q], params.K,
                                 all_tables[q].H) for q in order]
    inst = cover_mod.CoverInstance(vertices=surv, samplers=samplers,
                                   eta=0.05, C2=1.0)
    # simple even plan over at most three rounds (never more rounds than
    # samplers): the q family at desk scale is too small for the
    # asymptotic interval lengths to apply
    m = min(3, len(samplers))
    plan = cover_mod.RoundPlan(beta=3.3, m=m, intervals=[
        (j / m, (j + 1) / m) for j in range(m)])
    part = cover_mod.assign_indices(len(samplers), plan,
                                    substream(seed, "stage2-assign"))
    cover_mod.run_cover(inst, plan, part, derive_seed(seed, "stage2-cover"))
    for k, q in enumerate(order):
        n_last = samplers[k].last_n
        chosen[q] = n_last if n_last is not None else \
            all_tables[q].sample_n(substream(seed, "stage2", q))
    return Stage2Result(chosen=chosen, rejected=rejected, tables_built=built)


def apply_stage2(system: SievingSystem, shift: ShiftVector,
                 chosen: dict[int, int]) -> ShiftVector:
    """Override the shift at each chosen q so the class of n_q is sieved.

    Sieving removes n with (n - b) mod q in I_q; choosing
    b = n_q - min(I_q) puts the whole class n = n_q (mod q) among the
    removed integers without requiring pre-normalized residue sets.
    """
    out = dict(shift.entries)
    for q, n_q in chosen.items():
        res = system.residues(q)
        if not res:
            raise DomainError(f"q={q} has an empty residue set")
        out[q] = (n_q - res[0]) % q
    return ShiftVector(out, shift.x)


# ---------------------------------------------------------------------------
# stage 3


@dataclass
class Stage3Result:
    ok: bool
    shift: ShiftVector | None
    survivors: int
    available: int
    matched: int


def _survivors_above(system: SievingSystem, shift: ShiftVector,
                     cutoff: int, y: int) -> list[int]:
    """Members of [1, y] surviving primes <= cutoff and every shift entry
    already fixed for a prime > cutoff."""
    if y < 1:
        return []
    base = [int(m) for m in sift(system, cutoff, shift, 1, y).members()]
    extra = [(q, shift.entries[q], set(system.residues(q)))
             for q in shift.entries if q > cutoff]
    if not extra:
        return base
    return [m for m in base
            if all((m - b) % q not in res for q, b, res in extra)]


def stage3_cleanup(system: SievingSystem, x: int, partial_shift: ShiftVector,
                   y: int, rng: random.Random,
                   z_mid: int | None = None) -> Stage3Result:
    """Match survivors in [1, y] with distinct primes q in (x/2, x].

    Each survivor m gets b = m - min(I_q) (mod q) for the smallest
    unused admissible q, so m is sieved by q; unmatched large primes
    receive uniform residues.  Primes already fixed by an earlier stage
    keep their residues.  Fails (attempt rejected) when survivors
    outnumber the available primes.
    """
    half = x // 2 if z_mid is None else z_mid
    survivors = _survivors_above(system, partial_shift, half, y)
    large = [p for p in system.active_primes(x, half)
             if p not in partial_shift.entries]
    if len(survivors) > len(large):
        return Stage3Result(ok=False, shift=None, survivors=len(survivors),
                            available=len(large), matched=0)
    entries = dict(partial_shift.entries)
    for m, q in zip(survivors, large):
        res = system.residues(q)
        entries[q] = (m - res[0]) % q
    for q in large[len(survivors):]:
        entries[q] = rng.randrange(q)
    return Stage3Result(ok=True, shift=ShiftVector(entries, x),
                        survivors=len(survivors), available=len(large),
                        matched=len(survivors))


# ---------------------------------------------------------------------------
# full pipelines


@dataclass
class ConstructResult:
    shift: ShiftVector
    length: int
    params: Params
    survivors_stage1: int
    survivors_stage2: int
    matched: int
    rejected_q: list[int]
    mode: str

    def to_dict(self) -> dict:
        return {"L": self.length, "params": self.params.to_dict(),
                "survivors_stage1": self.survivors_stage1,
                "survivors_stage2": self.survivors_stage2,
                "matched": self.matched,
                "rejected_q_count": len(self.rejected_q),
                "mode": self.mode}


def _finish(system: SievingSystem, x: int, partial: ShiftVector,
            target_y: int, rng: random.Random, z_mid: int):
    """Stage 3 with adaptive target shrinking, then certification."""
    y = target_y
    while True:
        r3 = stage3_cleanup(system, x, partial, y, rng, z_mid=z_mid)
        if r3.ok:
            break
        # keep as many survivors as there are primes: shrink the target
        # to just below the first unmatchable survivor
        surv = _survivors_above(system, partial, z_mid, y)
        y = surv[r3.available] - 1
    assert r3.shift is not None
    if not verify_empty(system, x, r3.shift, 1, y):
        raise DomainError("internal error: certification failed after cleanup")
    return r3, y


def construct(system: SievingSystem, params: Params, seed: int,
              mode: str = "sample") -> ConstructResult:
    """Run stages 1-3 and certify the empty interval [1, L]."""
    x = params.x
    z_mid = min(params.z_eff, x // 2)
    b1 = stage1_uniform(system, z_mid, substream(seed, "stage1"))
    n1 = len(_survivors_above(system, b1, z_mid, params.y))
    rejected: list[int] = []
    partial = b1
    if not params.degraded:
        r2 = stage2_select(system, params, b1, seed, mode=mode)
        rejected = r2.rejected
        partial = apply_stage2(system, b1, r2.chosen)
    n2 = len(_survivors_above(system, partial, z_mid, params.y))
    r3, L = _finish(system, x, partial, params.y,
                    substream(seed, "stage3"), z_mid)
    return ConstructResult(shift=r3.shift, length=L, params=params,
                           survivors_stage1=n1, survivors_stage2=n2,
                           matched=r3.matched, rejected_q=rejected, mode=mode)


@dataclass
class BaselineResult:
    shift: ShiftVector
    length: int
    target: int
    matched: int


def trivial_baseline(system: SievingSystem, x: int, seed: int) -> BaselineResult:
    """Uniform shift mod P(x/2) plus clean-up over (x/2, x].

    The target interval is [1, rho x / (8 C1)] with rho and C1 estimated
    empirically; the target shrinks adaptively when survivors outnumber
    the available clean-up primes.
    """
    if x < 100:
        raise DomainError("x must be >= 100")
    half = x // 2
    rho_hat = estimate_rho(system, x)
    c1_hat = float(sigma(system, 1, x)) * math.log(x)
    target = max(1, math.floor(rho_hat * x / (8 * c1_hat))) if c1_hat > 0 \
        else x // 4
    b1 = stage1_uniform(system, half, substream(seed, "stage1"))
    r3, L = _finish(system, x, b1, target, substream(seed, "stage3"), half)
    return BaselineResult(shift=r3.shift, length=L, target=target,
                          matched=r3.matched)
