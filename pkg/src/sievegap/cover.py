"""Hypergraph covering rounds: hypothesis checks, round planning, and a
semi-random covering procedure verified statistically.

An instance is a vertex set plus s indexed random-edge samplers with
exact per-vertex inclusion probabilities summing to roughly a constant
C2 per vertex.  The covering procedure assigns each index to one of m
rounds via a uniform mark falling into disjoint intervals of geometric
lengths, then greedily keeps sampled edges that lie inside the set of
vertices still alive at the start of their round.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .rng import substream

ASSIGN_RETRY_CAP = 100
RESAMPLE_FACTOR = 5.0       # attempts per index ~ factor / alive fraction
RESAMPLE_HARD_CAP = 20_000


class EdgeSampler:
    """A random edge: subsets of V with known inclusion probabilities."""

    def sample(self, rng: random.Random) -> np.ndarray:
        raise NotImplementedError

    def inclusion_prob(self, v: int) -> float:
        raise NotImplementedError

    def max_size(self) -> int:
        raise NotImplementedError

    def pair_prob(self, v: int, w: int) -> float:
        """Pr(v in e and w in e) for distinct vertices v != w."""
        raise NotImplementedError

    def inclusion_probs(self, vertices: np.ndarray) -> np.ndarray:
        return np.array([self.inclusion_prob(int(v)) for v in vertices])

    def codegree_bound(self) -> float:
        """An upper bound on max_{v != w} pair_prob(v, w)."""
        raise NotImplementedError


class ProgressionSampler(EdgeSampler):
    """Edge = {a + q h : 1 <= h <= L} intersected with V = [0, N).

    The anchor a is chosen by picking a uniform vertex v and a uniform
    offset h* in [1, L], setting a = v - q h*.  When the step q >= N at
    most one progression element lands in V, so every edge is the
    singleton {v} and Pr(v in e) = 1/N exactly, with zero codegree.
    """

    def __init__(self, n_vertices: int, step: int, length: int = 3):
        if step < n_vertices:
            raise DomainError("step must be >= |V| for singleton progressions")
        self.n = n_vertices
        self.step = step
        self.length = length

    def sample(self, rng: random.Random) -> np.ndarray:
        h_star = rng.randrange(1, self.length + 1)
        v = rng.randrange(self.n)
        a = v - self.step * h_star
        members = [a + self.step * h for h in range(1, self.length + 1)
                   if 0 <= a + self.step * h < self.n]
        return np.array(members, dtype=np.int64)

    def inclusion_prob(self, v: int) -> float:
        return 1.0 / self.n

    def inclusion_probs(self, vertices: np.ndarray) -> np.ndarray:
        return np.full(len(vertices), 1.0 / self.n)

    def max_size(self) -> int:
        return 1

    def pair_prob(self, v: int, w: int) -> float:
        return 0.0

    def codegree_bound(self) -> float:
        return 0.0


@dataclass
class CoverInstance:
    vertices: np.ndarray            # integer labels, treated as [0, N) ranks
    samplers: list[EdgeSampler]
    eta: float
    C2: float

    @property
    def s(self) -> int:
        return len(self.samplers)


def progression_instance(n_vertices: int, C2: float, eta: float,
                         length: int = 3) -> CoverInstance:
    """The calibrated synthetic family: C2 * N singleton-progression edges."""
    s = int(round(C2 * n_vertices))
    sampler = ProgressionSampler(n_vertices, step=n_vertices + 7, length=length)
    return CoverInstance(
        vertices=np.arange(n_vertices, dtype=np.int64),
        samplers=[sampler] * s,
        eta=eta,
        C2=C2,
    )


# ---------------------------------------------------------------------------
# hypothesis checking


@dataclass
class ConditionReport:
    name: str
    ok: bool
    worst: float
    threshold: float
    offender: object = None

    def to_dict(self) -> dict:
        return {"name": self.name, "ok": self.ok, "worst": self.worst,
                "threshold": self.threshold,
                "offender": None if self.offender is None else str(self.offender)}


@dataclass
class HypothesisReport:
    y: float
    conditions: list[ConditionReport]

    @property
    def all_ok(self) -> bool:
        return all(c.ok for c in self.conditions)

    def to_dict(self) -> dict:
        return {"y": self.y, "all_ok": self.all_ok,
                "conditions": [c.to_dict() for c in self.conditions]}


def check_hypotheses(instance: CoverInstance, delta: float,
                     y: float | None = None) -> HypothesisReport:
    """Verify the covering hypotheses at scale y (default max(|V|, s)).

    Checks: edge-size cap (log y)^{1/2}/loglog y, per-edge sparsity
    y^{-1/2-1/100}, codegree sum y^{-1/2}, per-vertex degree sum within
    eta of C2, and 10^{2 delta} <= C2 <= 100.
    """
    if y is None:
        y = float(max(len(instance.vertices), instance.s))
    if y <= math.e ** math.e:
        raise DomainError("scale y too small for the size cap to make sense")
    conds: list[ConditionReport] = []

    size_cap = math.sqrt(math.log(y)) / math.log(math.log(y))
    worst_size = max(sm.max_size() for sm in instance.samplers)
    conds.append(ConditionReport("edge_size", worst_size <= size_cap,
                                 float(worst_size), size_cap))

    sparsity_cap = y ** (-0.5 - 0.01)
    worst_p, worst_v = 0.0, None
    degree = np.zeros(len(instance.vertices))
    for i, sm in enumerate(instance.samplers):
        probs = sm.inclusion_probs(instance.vertices)
        degree += probs
        j = int(np.argmax(probs))
        if probs[j] > worst_p:
            worst_p, worst_v = float(probs[j]), (i, int(instance.vertices[j]))
    conds.append(ConditionReport("sparsity", worst_p <= sparsity_cap,
                                 worst_p, sparsity_cap, worst_v))

    codeg_cap = y ** -0.5
    codeg = sum(sm.codegree_bound() for sm in instance.samplers)
    conds.append(ConditionReport("codegree", codeg <= codeg_cap,
                                 float(codeg), codeg_cap))

    dev = np.abs(degree - instance.C2)
    j = int(np.argmax(dev))
    conds.append(ConditionReport("degree_uniform", float(dev[j]) <= instance.eta,
                                 float(dev[j]), instance.eta,
                                 int(instance.vertices[j])))

    lo = 10.0 ** (2 * delta)
    ok = lo <= instance.C2 <= 100.0
    conds.append(ConditionReport("C2_range", ok, instance.C2,
                                 lo, "C2 must lie in [10^{2 delta}, 100]"))
    return HypothesisReport(y=y, conditions=conds)


# ---------------------------------------------------------------------------
# round planning


@dataclass
class RoundPlan:
    beta: float
    m: int
    intervals: list[tuple[float, float]]   # disjoint [a, b) inside [0, 1]

    def to_dict(self) -> dict:
        return {"beta": self.beta, "m": self.m,
                "intervals": [[a, b] for a, b in self.intervals]}


def _beta_admissible(beta: float, delta: float) -> bool:
    thr = 10.0 ** (2 * delta)
    return beta > thr and thr > beta * math.log(beta) / (beta - 1)


def plan_rounds(eta: float, delta: float, C2: float,
                beta: float | None = None) -> RoundPlan:
    """Choose beta, the round count m, and the marking intervals.

    beta defaults to the smallest grid value 10^{2 delta} + 0.1 k
    (k >= 1) with beta > 10^{2 delta} > beta log beta / (beta - 1); an
    explicit beta is accepted if it satisfies the same inequalities.
    m = ceil(log(1/eta) / log beta); interval j has length
    beta^{1-j} log(beta) / C2.
    """
    if not 0 < eta < 1:
        raise DomainError("eta must lie in (0, 1)")
    if not 0 < delta < 0.5:
        raise DomainError("delta must lie in (0, 1/2)")
    if beta is None:
        thr = 10.0 ** (2 * delta)
        k = 1
        while not _beta_admissible(thr + 0.1 * k, delta):
            k += 1
            if k > 10_000:
                raise DomainError("no admissible beta found on the grid")
        beta = thr + 0.1 * k
    elif not _beta_admissible(beta, delta):
        raise DomainError(f"beta={beta} violates the admissibility inequalities")
    m = max(1, math.ceil(math.log(1 / eta) / math.log(beta)))
    intervals = []
    t = 0.0
    for j in range(1, m + 1):
        length = beta ** (1 - j) * math.log(beta) / C2
        intervals.append((t, t + length))
        t += length
    if t > 1.0 + 1e-12:
        raise DomainError(
            f"interval lengths sum to {t:.4f} > 1; C2 too small for beta={beta}")
    return RoundPlan(beta=beta, m=m, intervals=intervals)


def assign_indices(s: int, plan: RoundPlan,
                   rng: random.Random) -> dict[int, list[int]]:
    """Uniform marks t_i; round j receives {i : t_i in interval j}.

    Indices falling outside every interval stay unused.  If some round
    would be empty, the whole marking is redrawn (bounded retries).
    """
    for _ in range(ASSIGN_RETRY_CAP):
        marks = [rng.random() for _ in range(s)]
        part: dict[int, list[int]] = {j: [] for j in range(1, plan.m + 1)}
        for i, t in enumerate(marks):
            for j, (a, b) in enumerate(plan.intervals, start=1):
                if a <= t < b:
                    part[j].append(i)
                    break
        if all(part[j] for j in part):
            return part
    raise DomainError("could not draw a marking with all rounds nonempty")


# ---------------------------------------------------------------------------
# degree profile and the P_j recursion


@dataclass
class DegreeProfile:
    degrees: np.ndarray      # shape (m, N): d_{I_j}(v)
    P: np.ndarray            # shape (m + 1, N): P_0 = 1, recursion below
    kappa: float             # min_v P_m(v)

    def to_dict(self) -> dict:
        return {"kappa": self.kappa,
                "min_P_by_round": [float(r.min()) for r in self.P]}


def degree_profile(instance: CoverInstance,
                   partition: dict[int, list[int]]) -> DegreeProfile:
    """d_{I_j}(v) = sum of inclusion probabilities over round j, and the
    recursion P_{j+1}(v) = P_j(v) exp(-d_{I_{j+1}}(v) / P_j(v))."""
    n = len(instance.vertices)
    m = max(partition) if partition else 0
    degrees = np.zeros((m, n))
    for j, idxs in partition.items():
        for i in idxs:
            degrees[j - 1] += instance.samplers[i].inclusion_probs(
                instance.vertices)
    P = np.ones((m + 1, n))
    for j in range(m):
        P[j + 1] = P[j] * np.exp(-degrees[j] / P[j])
    return DegreeProfile(degrees=degrees, P=P, kappa=float(P[m].min()))


# ---------------------------------------------------------------------------
# the covering procedure


@dataclass
class CoverResult:
    chosen: dict[int, tuple[int, ...]]   # index -> accepted edge (may be ())
    uncovered: np.ndarray
    uncovered_fraction: float
    rounds_trace: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"uncovered_count": int(len(self.uncovered)),
                "uncovered_fraction": self.uncovered_fraction,
                "rounds": self.rounds_trace}


def run_cover(instance: CoverInstance, plan: RoundPlan,
              partition: dict[int, list[int]], seed: int) -> CoverResult:
    """Rounds j = 1..m: each index i in round j redraws its edge until it
    lies inside the set of vertices alive at the start of the round.

    Freezing the alive set per round makes indices within a round
    exchangeable (parallel semantics); the redraw conditions the edge on
    the alive set, so per-vertex hit rates scale like d_{I_j}(v) divided
    by the alive fraction, tracking the P_j recursion.  Attempts are
    capped; an index that never lands inside the alive set contributes
    the empty edge.  Every accepted edge is literally a sampler output,
    replayable from substream(seed, "cover", j, i).
    """
    n = len(instance.vertices)
    rank = {int(v): k for k, v in enumerate(instance.vertices)}
    alive = np.ones(n, dtype=bool)
    chosen: dict[int, tuple[int, ...]] = {}
    trace = []
    for j in range(1, plan.m + 1):
        alive_start = alive.copy()
        frac = alive_start.mean()
        cap = min(RESAMPLE_HARD_CAP,
                  max(1, int(math.ceil(RESAMPLE_FACTOR / max(frac, 1e-9)))))
        accepted = 0
        for i in partition.get(j, ()):
            rng_i = substream(seed, "cover", j, i)
            edge: tuple[int, ...] = ()
            for _ in range(cap):
                e = instance.samplers[i].sample(rng_i)
                if len(e) and all(alive_start[rank[int(v)]] for v in e):
                    edge = tuple(int(v) for v in e)
                    break
            chosen[i] = edge
            if edge:
                accepted += 1
                for v in edge:
                    alive[rank[v]] = False
        trace.append({"round": j, "alive_fraction_start": float(frac),
                      "indices": len(partition.get(j, ())),
                      "accepted": accepted, "attempt_cap": cap})
    return CoverResult(chosen=chosen,
                       uncovered=instance.vertices[alive],
                       uncovered_fraction=float(alive.mean()),
                       rounds_trace=trace)
