"""Decoders: greedy, beam, exact best-first, and brute-force oracles.

All decoders share one tie-breaking rule so their outputs are directly
comparable: higher total score first, then higher log-probability, then
the lexicographically smallest token-id sequence. Exact search runs
Dijkstra-style on prefix scores when every active penalty can only grow
under extension; otherwise it orders the queue by an optimistic bound
(the prefix log-probability, adjusted for any length transform) and stops
once the best complete hypothesis provably dominates the queue.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field

from .exceptions import ContractError, NoHypothesisError, SearchSpaceError
from .models import SequenceModel, _source_key
from .objectives import MAP_OBJECTIVE, Objective, ScoreBreakdown, r_beam_ids, score_parts

BRUTE_FORCE_PREFIX_GUARD = 10**7


@dataclass(frozen=True)
class SearchConfig:
    beam_width: int = 1
    n_max: int = 50
    empty_string_pruning: bool = True
    tie_break: str = "score-logprob-lex"

    def __post_init__(self) -> None:
        if self.beam_width < 1:
            raise ContractError("beam width must be >= 1")
        if self.n_max < 1:
            raise ContractError("n_max must be >= 1")
        if self.tie_break != "score-logprob-lex":
            raise ContractError(f"unknown tie-break rule {self.tie_break!r}")


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple[str, ...]
    token_ids: tuple[int, ...]
    trace: tuple[float, ...]
    minima: tuple[float, ...]
    log_prob: float
    complete: bool
    breakdown: ScoreBreakdown

    @property
    def score(self) -> float:
        return self.breakdown.total

    def sort_key(self):
        return (-self.breakdown.total, -self.log_prob, self.token_ids)

    @property
    def surface(self) -> tuple[str, ...]:
        """Tokens without the begin/end markers."""
        end = -1 if self.complete else len(self.tokens)
        return self.tokens[1:end]


@dataclass
class DecodeRecord:
    best: Hypothesis
    beam_set: list[Hypothesis] = field(default_factory=list)
    nodes_expanded: int = 0
    optimality_certificate: bool = False
    wall_time: float = 0.0


def _make_hypothesis(model: SequenceModel, ids, trace, minima, log_prob, breakdown) -> Hypothesis:
    vocab = model.vocabulary
    return Hypothesis(
        tokens=vocab.decode(ids),
        token_ids=tuple(ids),
        trace=tuple(trace),
        minima=tuple(minima),
        log_prob=log_prob,
        complete=ids[-1] == vocab.eos_id,
        breakdown=breakdown,
    )


def greedy_search(model: SequenceModel, source, config: SearchConfig) -> DecodeRecord:
    """Stepwise argmax until the end marker; ties go to the lowest token id."""
    start = time.perf_counter()
    vocab = model.vocabulary
    source_key = _source_key(source)
    eos = vocab.eos_id
    ids = [vocab.bos_id]
    trace: list[float] = []
    minima: list[float] = []
    log_prob = 0.0
    expanded = 0
    for _ in range(config.n_max):
        dist = model.next_log_probs_ids(source_key, tuple(ids)).tolist()
        expanded += 1
        best_tid = max(range(len(dist)), key=lambda i: (dist[i], -i))
        logv = dist[best_tid]
        ids.append(best_tid)
        log_prob += logv
        trace.append(-logv)
        minima.append(-logv)
        if best_tid == eos:
            breakdown = score_parts(MAP_OBJECTIVE, trace, minima, log_prob)
            hyp = _make_hypothesis(model, ids, trace, minima, log_prob, breakdown)
            return DecodeRecord(
                best=hyp, nodes_expanded=expanded, wall_time=time.perf_counter() - start
            )
    raise NoHypothesisError(f"greedy path did not terminate within n_max={config.n_max}")


def beam_search(
    model: SequenceModel, source, objective: Objective, config: SearchConfig
) -> DecodeRecord:
    """Width-limited breadth-first search under the given objective.

    Every one-token extension of the current set is scored as a prefix,
    ended hypotheses persist with their score unchanged, and the best k
    candidates survive. Keeping the top k maximizes the summed set score.
    Stops early once all survivors have ended; survivors still open at
    n_max are dropped as invalid.
    """
    start = time.perf_counter()
    vocab = model.vocabulary
    source_key = _source_key(source)
    eos = vocab.eos_id
    k = config.beam_width
    expanded = 0

    Node = tuple  # (ids, trace, minima, log_prob, breakdown); the root is never ranked
    beams: list[Node] = [((vocab.bos_id,), (), (), 0.0, None)]

    for _ in range(config.n_max):
        if all(node[0][-1] == eos for node in beams):
            break
        candidates: list[Node] = []
        for ids, trace, minima, log_prob, breakdown in beams:
            if ids[-1] == eos:
                candidates.append((ids, trace, minima, log_prob, breakdown))
                continue
            dist = model.next_log_probs_ids(source_key, ids).tolist()
            expanded += 1
            step_min = -max(dist)
            for tid, logv in enumerate(dist):
                if logv == -math.inf:
                    continue
                c_trace = trace + (-logv,)
                c_minima = minima + (step_min,)
                c_lp = log_prob + logv
                c_breakdown = score_parts(objective, c_trace, c_minima, c_lp)
                candidates.append(((*ids, tid), c_trace, c_minima, c_lp, c_breakdown))
        candidates.sort(key=lambda n: (-n[4].total, -n[3], n[0]))
        beams = candidates[:k]

    finished = [node for node in beams if node[0][-1] == eos]
    if not finished:
        raise NoHypothesisError(
            f"no beam member reached the end marker within n_max={config.n_max}"
        )
    hyps = [_make_hypothesis(model, *node) for node in finished]
    hyps.sort(key=Hypothesis.sort_key)
    return DecodeRecord(
        best=hyps[0],
        beam_set=hyps,
        nodes_expanded=expanded,
        wall_time=time.perf_counter() - start,
    )


def _empty_hypothesis(model: SequenceModel, source_key: str, objective: Objective) -> Hypothesis | None:
    vocab = model.vocabulary
    ids = (vocab.bos_id, vocab.eos_id)
    dist = model.next_log_probs_ids(source_key, ids[:1]).tolist()
    logv = dist[vocab.eos_id]
    if logv == -math.inf:
        return None
    trace = (-logv,)
    minima = (-max(dist),)
    breakdown = score_parts(objective, trace, minima, logv)
    return _make_hypothesis(model, ids, trace, minima, logv, breakdown)


def exact_search(
    model: SequenceModel, source, objective: Objective, config: SearchConfig
) -> DecodeRecord:
    """Optimal decoding with a certificate, restricted to |y| <= n_max."""
    start = time.perf_counter()
    source_key = _source_key(source)
    if objective.is_prefix_monotone:
        best, expanded = _exact_monotone(model, source_key, objective, config)
    else:
        best, expanded = _exact_bounded(model, source_key, objective, config)
    if best is None:
        raise NoHypothesisError(
            f"no complete hypothesis within n_max={config.n_max}"
        )
    return DecodeRecord(
        best=best,
        nodes_expanded=expanded,
        optimality_certificate=True,
        wall_time=time.perf_counter() - start,
    )


def _exact_monotone(model, source_key, objective, config):
    """Dijkstra ordering on prefix scores; penalties only grow under
    extension, so the first complete pop is the argmax."""
    vocab = model.vocabulary
    eos = vocab.eos_id
    n_max = config.n_max
    empty = _empty_hypothesis(model, source_key, objective)
    empty_score = empty.score if (config.empty_string_pruning and empty is not None) else -math.inf

    root = score_parts(objective, (), (), 0.0)
    heap = [(-root.total, -0.0, (vocab.bos_id,), (), (), 0.0, root)]
    expanded = 0
    while heap:
        neg_total, _, ids, trace, minima, log_prob, breakdown = heapq.heappop(heap)
        if ids[-1] == eos:
            hyp = _make_hypothesis(model, ids, trace, minima, log_prob, breakdown)
            return hyp, expanded
        steps = len(ids) - 1
        if steps >= n_max:
            continue
        dist = model.next_log_probs_ids(source_key, ids).tolist()
        expanded += 1
        step_min = -max(dist)
        for tid, logv in enumerate(dist):
            if logv == -math.inf:
                continue
            if tid != eos and steps + 1 >= n_max:
                continue  # could never reach the end marker in time
            c_trace = trace + (-logv,)
            c_minima = minima + (step_min,)
            c_lp = log_prob + logv
            c_breakdown = score_parts(objective, c_trace, c_minima, c_lp)
            assert c_breakdown.total <= -neg_total + 1e-9, "penalty shrank under extension"
            if c_breakdown.total < empty_score:
                continue
            heapq.heappush(
                heap, (-c_breakdown.total, -c_lp, (*ids, tid), c_trace, c_minima, c_lp, c_breakdown)
            )
    return None, expanded


def _exact_bounded(model, source_key, objective, config):
    """Best-first on optimistic bounds with the non-monotone stopping rule:
    finish once the best complete hypothesis scores at least as high as
    every bound left in the queue (equal bounds are still expanded so tie
    breaking matches the brute-force oracle)."""
    vocab = model.vocabulary
    eos = vocab.eos_id
    n_max = config.n_max
    best = _empty_hypothesis(model, source_key, objective)
    best_key = best.sort_key() if best is not None else None
    empty_score = best.score if (config.empty_string_pruning and best is not None) else -math.inf

    heap = [(-objective.optimistic_bound(0.0, n_max), -0.0, (vocab.bos_id,), (), (), 0.0)]
    expanded = 0
    while heap:
        neg_bound, _, ids, trace, minima, log_prob = heapq.heappop(heap)
        if best is not None and -neg_bound < best.score:
            break
        steps = len(ids) - 1
        if steps >= n_max:
            continue
        dist = model.next_log_probs_ids(source_key, ids).tolist()
        expanded += 1
        step_min = -max(dist)
        for tid, logv in enumerate(dist):
            if logv == -math.inf:
                continue
            c_trace = trace + (-logv,)
            c_minima = minima + (step_min,)
            c_lp = log_prob + logv
            if tid == eos:
                c_breakdown = score_parts(objective, c_trace, c_minima, c_lp)
                cand = _make_hypothesis(model, (*ids, tid), c_trace, c_minima, c_lp, c_breakdown)
                if best_key is None or cand.sort_key() < best_key:
                    best, best_key = cand, cand.sort_key()
                continue
            if steps + 1 >= n_max:
                continue
            c_bound = objective.optimistic_bound(c_lp, n_max)
            if c_bound < empty_score:
                continue
            if best is not None and c_bound < best.score:
                continue
            heapq.heappush(heap, (-c_bound, -c_lp, (*ids, tid), c_trace, c_minima, c_lp))
    return best, expanded


def _enumerated_prefix_count(n_tokens: int, n_max: int) -> int:
    return sum(n_tokens**length for length in range(n_max))


def enumerate_complete(model: SequenceModel, source_key: str, n_max: int):
    """Depth-first walk yielding (ids, trace, minima, log_prob) for every
    complete hypothesis of at most n_max steps, skipping forbidden steps."""
    vocab = model.vocabulary
    eos = vocab.eos_id
    stack = [((vocab.bos_id,), (), (), 0.0)]
    while stack:
        ids, trace, minima, log_prob = stack.pop()
        dist = model.next_log_probs_ids(source_key, ids).tolist()
        step_min = -max(dist)
        steps = len(ids) - 1
        eos_logv = dist[eos]
        if eos_logv != -math.inf:
            yield (
                (*ids, eos),
                trace + (-eos_logv,),
                minima + (step_min,),
                log_prob + eos_logv,
            )
        if steps + 1 >= n_max:
            continue
        for tid in range(len(dist) - 1, -1, -1):
            if tid == eos or dist[tid] == -math.inf:
                continue
            stack.append(
                ((*ids, tid), trace + (-dist[tid],), minima + (step_min,), log_prob + dist[tid])
            )


def brute_force(
    model: SequenceModel, source, objective: Objective, n_max: int
) -> DecodeRecord:
    """Exhaustive argmax over every complete hypothesis of at most n_max steps."""
    start = time.perf_counter()
    if n_max < 1:
        raise ContractError("n_max must be >= 1")
    n_tokens = len(model.vocabulary.tokens)
    space = _enumerated_prefix_count(n_tokens, n_max)
    if space > BRUTE_FORCE_PREFIX_GUARD:
        raise SearchSpaceError(
            f"{space} prefixes exceed the brute-force guard of {BRUTE_FORCE_PREFIX_GUARD}"
        )
    source_key = _source_key(source)
    best = None
    best_key = None
    count = 0
    for ids, trace, minima, log_prob in enumerate_complete(model, source_key, n_max):
        count += 1
        breakdown = score_parts(objective, trace, minima, log_prob)
        key = (-breakdown.total, -log_prob, ids)
        if best_key is None or key < best_key:
            best_key = key
            best = _make_hypothesis(model, ids, trace, minima, log_prob, breakdown)
    if best is None:
        raise NoHypothesisError(f"no complete hypothesis within n_max={n_max}")
    return DecodeRecord(
        best=best,
        nodes_expanded=count,
        optimality_certificate=True,
        wall_time=time.perf_counter() - start,
    )


def brute_force_set(
    model: SequenceModel, source, k: int, lam: float, n_max: int
) -> list[Hypothesis]:
    """Exhaustive argmax of the size-k set objective: summed member
    log-probability minus ``lam`` times the set deviation penalty.

    Tiny instances only; the candidate pool is every distinct complete
    hypothesis of at most n_max steps, chosen k at a time.
    """
    vocab = model.vocabulary
    if k < 1 or k > 3:
        raise SearchSpaceError("set decoding is guarded to k <= 3")
    if vocab.dist_size > 4:
        raise SearchSpaceError("set decoding is guarded to |V|+1 <= 4")
    if n_max < 1 or n_max > 5:
        raise SearchSpaceError("set decoding is guarded to n_max <= 5")
    source_key = _source_key(source)
    pool = sorted(enumerate_complete(model, source_key, n_max), key=lambda h: h[0])
    if len(pool) < k:
        raise NoHypothesisError(f"only {len(pool)} complete hypotheses within n_max={n_max}")
    best = None
    best_key = None
    for combo in itertools.combinations(pool, k):
        members = [c[0] for c in combo]
        set_lp = sum(c[3] for c in combo)
        penalty = r_beam_ids(members, model, source_key, k, n_max) if lam != 0.0 else 0.0
        total = set_lp - lam * penalty
        key = (-total, -set_lp, tuple(members))
        if best_key is None or key < best_key:
            best_key = key
            best = combo
    out = []
    for ids, trace, minima, log_prob in best:
        breakdown = score_parts(MAP_OBJECTIVE, trace, minima, log_prob)
        out.append(_make_hypothesis(model, ids, trace, minima, log_prob, breakdown))
    out.sort(key=Hypothesis.sort_key)
    return out
