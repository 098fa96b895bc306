"""Per-step surprisals of a hypothesis and their summary statistics.

A trace holds one non-negative value (in nats) per generated token,
starting at the first real token and including the end-marker step; the
begin marker is defined to carry zero surprisal and is never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .exceptions import ContractError
from .models import SequenceModel

Trace = tuple[float, ...]


def trace(model: SequenceModel, source, tokens: Sequence[str]) -> Trace:
    """Surprisal of each step of ``tokens`` (a bos-initial hypothesis or prefix).

    The entries sum to the negated cumulative log-probability. A step the
    model forbids yields ``inf`` rather than being clipped.
    """
    vocab = model.vocabulary
    values = []
    for t in range(1, len(tokens)):
        dist = model.next_log_probs(source, tokens[:t])
        values.append(-float(dist[vocab.id_of(tokens[t])]))
    return tuple(values)


@dataclass(frozen=True)
class SurprisalStats:
    mean: float
    variance: float
    std_dev: float
    max: float
    length: int


def stats(trace_values: Sequence[float]) -> SurprisalStats:
    """Population statistics over the trace entries (the bos step excluded)."""
    n = len(trace_values)
    if n == 0:
        raise ContractError("trace must be nonempty")
    mean = sum(trace_values) / n
    variance = sum((u - mean) ** 2 for u in trace_values) / n
    return SurprisalStats(
        mean=mean,
        variance=variance,
        std_dev=math.sqrt(variance),
        max=max(trace_values),
        length=n,
    )
