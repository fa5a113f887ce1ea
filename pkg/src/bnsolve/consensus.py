"""Self-consistency aggregation: majority vote over canonical answers."""
from __future__ import annotations

from dataclasses import dataclass, field

from .answers import CanonicalAnswer
from .errors import EmptyCandidateList

ABSTAIN_KEY = "abstain"


@dataclass(frozen=True)
class ConsensusResult:
    answer: CanonicalAnswer | None
    vote_count: int
    total_candidates: int
    tie: bool
    # Keys are decimal value strings, plus ABSTAIN_KEY for unparseables,
    # so the distribution serializes to JSON as-is.
    distribution: dict[str, int] = field(default_factory=dict)


def majority_vote(candidates: list[CanonicalAnswer]) -> ConsensusResult:
    """Pick the most frequent integer answer.

    Ties break toward the value whose first occurrence has the lowest
    candidate index. Unparseable candidates count toward the total and the
    distribution (under the abstain key) but can never win.
    """
    if not candidates:
        raise EmptyCandidateList("majority_vote needs at least one candidate")

    counts: dict[int, int] = {}
    first_seen: dict[int, int] = {}
    abstain = 0
    for index, candidate in enumerate(candidates):
        if not candidate.is_integer:
            abstain += 1
            continue
        value = candidate.value
        counts[value] = counts.get(value, 0) + 1
        first_seen.setdefault(value, index)

    distribution = {str(value): count for value, count in counts.items()}
    if abstain:
        distribution[ABSTAIN_KEY] = abstain

    if not counts:
        return ConsensusResult(
            answer=None,
            vote_count=0,
            total_candidates=len(candidates),
            tie=False,
            distribution=distribution,
        )

    top = max(counts.values())
    winner = min((v for v, c in counts.items() if c == top), key=first_seen.__getitem__)
    tie = sum(1 for c in counts.values() if c == top) >= 2
    return ConsensusResult(
        answer=CanonicalAnswer.integer(winner),
        vote_count=top,
        total_candidates=len(candidates),
        tie=tie,
        distribution=distribution,
    )
