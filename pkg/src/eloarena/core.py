"""Domain types: prompts, outputs, match records, ratings, leaderboards.

All types are immutable values once constructed and safe to share across
threads. The one append-only container, :class:`MatchLedger`, must be fed
through a single writer when appended to concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import DataFormatError

#: Model identifiers are plain strings: non-empty, no whitespace, no commas.
#: Lexicographic comparison between them is the deterministic tie-break
#: everywhere an order is needed.
ModelId = str


def validate_model_id(name: str) -> str:
    if not isinstance(name, str) or not name:
        raise DataFormatError(f"model id must be a non-empty string, got {name!r}")
    if any(ch.isspace() for ch in name) or "," in name:
        raise DataFormatError(f"model id may not contain whitespace or commas: {name!r}")
    return name


@dataclass(frozen=True)
class Prompt:
    """One benchmark instruction, optionally tagged with a stratum label."""

    prompt_id: str
    instruction: str = ""
    stratum: str | None = None

    def __post_init__(self):
        if not self.prompt_id or any(ch.isspace() for ch in self.prompt_id):
            raise DataFormatError(f"invalid prompt id: {self.prompt_id!r}")


@dataclass(frozen=True)
class PromptSet:
    """An ordered, non-empty collection of prompts with unique ids."""

    prompts: tuple[Prompt, ...]
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "prompts", tuple(self.prompts))
        if not self.prompts:
            raise DataFormatError("empty prompt set")
        index: dict[str, int] = {}
        for i, p in enumerate(self.prompts):
            if p.prompt_id in index:
                raise DataFormatError(f"duplicate prompt id: {p.prompt_id!r}")
            index[p.prompt_id] = i
        object.__setattr__(self, "_index", index)

    @classmethod
    def synthetic(cls, n_prompts: int, prefix: str = "p") -> "PromptSet":
        """Build a textless prompt set whose ids act purely as RNG keys."""
        if n_prompts < 1:
            raise DataFormatError("a prompt set needs at least one prompt")
        return cls(tuple(Prompt(f"{prefix}{i:05d}") for i in range(n_prompts)))

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(p.prompt_id for p in self.prompts)

    def index_of(self, prompt_id: str) -> int:
        try:
            return self._index[prompt_id]
        except KeyError:
            raise DataFormatError(f"unknown prompt id: {prompt_id!r}") from None

    def __len__(self) -> int:
        return len(self.prompts)

    def __iter__(self) -> Iterator[Prompt]:
        return iter(self.prompts)

    def __getitem__(self, i: int) -> Prompt:
        return self.prompts[i]


class OutputStore:
    """Per-(prompt, model) response texts.

    A complete store (every participant answered every prompt) is a
    precondition for any benchmarking run that reads response texts.
    """

    def __init__(self, outputs: Mapping[tuple[str, str], str] | None = None):
        self._outputs: dict[tuple[str, str], str] = dict(outputs or {})

    def put(self, prompt_id: str, model_id: str, response: str) -> None:
        self._outputs[(prompt_id, model_id)] = response

    def response(self, prompt_id: str, model_id: str) -> str:
        try:
            return self._outputs[(prompt_id, model_id)]
        except KeyError:
            raise DataFormatError(
                f"no stored output for prompt {prompt_id!r}, model {model_id!r}"
            ) from None

    def missing_pairs(
        self, participants: Iterable[ModelId], prompts: PromptSet
    ) -> list[tuple[str, str]]:
        return [
            (p.prompt_id, m)
            for p in prompts
            for m in sorted(participants)
            if (p.prompt_id, m) not in self._outputs
        ]

    def items(self) -> Iterator[tuple[tuple[str, str], str]]:
        return iter(self._outputs.items())

    def __len__(self) -> int:
        return len(self._outputs)

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._outputs

    def __eq__(self, other) -> bool:
        return isinstance(other, OutputStore) and self._outputs == other._outputs


@dataclass(frozen=True)
class MatchRecord:
    """One adjudicated pairwise comparison."""

    prompt_id: str
    model_a: ModelId
    model_b: ModelId
    winner: ModelId
    judge_id: str
    position_swapped: bool = False
    trial_id: int | None = None

    def __post_init__(self):
        validate_model_id(self.model_a)
        validate_model_id(self.model_b)
        if self.model_a == self.model_b:
            raise DataFormatError(
                f"match pairs a model with itself: {self.model_a!r} on {self.prompt_id!r}"
            )
        if self.winner not in (self.model_a, self.model_b):
            raise DataFormatError(
                f"winner {self.winner!r} is neither {self.model_a!r} nor {self.model_b!r} "
                f"on {self.prompt_id!r}"
            )

    @property
    def loser(self) -> ModelId:
        return self.model_b if self.winner == self.model_a else self.model_a

    @property
    def pair(self) -> tuple[ModelId, ModelId]:
        lo, hi = sorted((self.model_a, self.model_b))
        return lo, hi


class MatchLedger:
    """Append-only sequence of match records.

    Rating fits over a ledger are order-insensitive, so concatenation is
    associative and any permutation of records yields the same ratings.
    """

    def __init__(self, records: Iterable[MatchRecord] = ()):
        self._records: list[MatchRecord] = list(records)

    def append(self, record: MatchRecord) -> None:
        self._records.append(record)

    def extend(self, records: Iterable[MatchRecord]) -> None:
        self._records.extend(records)

    def models(self) -> set[ModelId]:
        out: set[ModelId] = set()
        for r in self._records:
            out.add(r.model_a)
            out.add(r.model_b)
        return out

    def __add__(self, other: "MatchLedger") -> "MatchLedger":
        return MatchLedger(list(self._records) + list(other._records))

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[MatchRecord]:
        return iter(self._records)

    def __getitem__(self, i):
        return self._records[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, MatchLedger) and self._records == other._records


@dataclass(frozen=True)
class FitMeta:
    """Convergence diagnostics attached to a fitted rating table."""

    iterations: int
    gradient_norm: float
    regularization: float


@dataclass(frozen=True)
class RatingTable:
    """Model -> Elo rating map, centered so the mean equals ``anchor_mean``."""

    ratings: Mapping[ModelId, float]
    anchor_mean: float
    fit_meta: FitMeta | None = None

    def __post_init__(self):
        object.__setattr__(self, "ratings", dict(self.ratings))
        if not self.ratings:
            raise DataFormatError("rating table is empty")
        for m, r in self.ratings.items():
            validate_model_id(m)
            if not math.isfinite(r):
                raise DataFormatError(f"non-finite rating for {m!r}: {r!r}")
        mean = sum(self.ratings.values()) / len(self.ratings)
        if abs(mean - self.anchor_mean) > 1e-6:
            raise DataFormatError(
                f"rating mean {mean!r} does not match anchor mean {self.anchor_mean!r}"
            )

    @classmethod
    def from_ratings(
        cls, ratings: Mapping[ModelId, float], fit_meta: FitMeta | None = None
    ) -> "RatingTable":
        """Build a table whose anchor mean is simply the mean of the ratings."""
        vals = list(ratings.values())
        if not vals:
            raise DataFormatError("rating table is empty")
        return cls(dict(ratings), sum(vals) / len(vals), fit_meta)

    @property
    def models(self) -> list[ModelId]:
        return sorted(self.ratings)

    def rating(self, model: ModelId) -> float:
        try:
            return self.ratings[model]
        except KeyError:
            raise DataFormatError(f"model {model!r} has no rating") from None

    def __contains__(self, model: ModelId) -> bool:
        return model in self.ratings

    def __len__(self) -> int:
        return len(self.ratings)


@dataclass(frozen=True)
class LeaderboardEntry:
    rank: int
    model: ModelId
    score: float
    ci_low: float | None = None
    ci_high: float | None = None

    def __post_init__(self):
        if self.rank < 1:
            raise DataFormatError(f"rank must be >= 1, got {self.rank}")
        if self.ci_low is not None and self.ci_high is not None:
            if not (self.ci_low <= self.score <= self.ci_high):
                raise DataFormatError(
                    f"score {self.score} outside CI [{self.ci_low}, {self.ci_high}] "
                    f"for {self.model!r}"
                )


@dataclass(frozen=True)
class Leaderboard:
    """Entries sorted by score descending with competition ranking.

    Tied scores share a rank and the following rank is skipped (1, 2, 2, 4).
    Within a tie block, models are ordered lexicographically.
    """

    entries: tuple[LeaderboardEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise DataFormatError("leaderboard is empty")
        seen: set[str] = set()
        above = 0
        for i, e in enumerate(self.entries):
            if e.model in seen:
                raise DataFormatError(f"duplicate leaderboard model: {e.model!r}")
            seen.add(e.model)
            if i > 0 and e.score > self.entries[i - 1].score:
                raise DataFormatError("leaderboard scores are not descending")
            above = sum(1 for other in self.entries if other.score > e.score)
            if e.rank != above + 1:
                raise DataFormatError(
                    f"rank {e.rank} for {e.model!r} violates competition ranking "
                    f"(expected {above + 1})"
                )

    @property
    def order(self) -> tuple[ModelId, ...]:
        return tuple(e.model for e in self.entries)

    def models(self) -> set[ModelId]:
        return {e.model for e in self.entries}

    def entry(self, model: ModelId) -> LeaderboardEntry:
        for e in self.entries:
            if e.model == model:
                return e
        raise DataFormatError(f"model {model!r} not on leaderboard")

    def rank_of(self, model: ModelId) -> int:
        return self.entry(model).rank

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[LeaderboardEntry]:
        return iter(self.entries)
