"""Judge backends: stochastic simulated, deterministic oracle, cached
verdicts, and an external pairwise-judge service client.

Every backend returns a strict winner (never a tie). Simulated, oracle,
and cached judges are pure functions of their inputs; the external client
alternates response positions across prompts to mitigate position bias.
"""

from __future__ import annotations

import importlib.resources
import json
import logging
import math
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np
import requests

from ._parallel import parallel_map_settled
from .core import MatchRecord, ModelId, OutputStore, PromptSet, RatingTable
from .errors import (
    CacheMissError,
    DataFormatError,
    JudgeError,
    JudgeServiceError,
    VerdictParseError,
)
from .rating import expected_win_rate
from .seeding import unit_uniform

logger = logging.getLogger(__name__)

_PLACEHOLDERS = ("instruction", "response_a", "response_b")
_PLACEHOLDER_RE = re.compile(r"\{(instruction|response_a|response_b)\}")


# ---------------------------------------------------------------------------
# prompt template


@dataclass(frozen=True)
class PromptTemplate:
    """System/user prompt pair for pairwise judging.

    ``user_text`` must contain {instruction}, {response_a}, and
    {response_b} exactly once each; ``answers`` are the two literal
    verdict strings the judge is instructed to reply with.
    """

    system_text: str
    user_text: str
    answers: tuple[str, str]

    def __post_init__(self):
        found = [m.group(1) for m in _PLACEHOLDER_RE.finditer(self.user_text)]
        for name in _PLACEHOLDERS:
            count = found.count(name)
            if count != 1:
                raise DataFormatError(
                    f"template must contain {{{name}}} exactly once, found {count}"
                )
        if len(self.answers) != 2 or self.answers[0] == self.answers[1]:
            raise DataFormatError("template needs two distinct verdict strings")

    @classmethod
    def default(cls) -> "PromptTemplate":
        """The packaged pairwise evaluation prompt."""
        asset = importlib.resources.files("eloarena.assets") / "default_judge_prompt.json"
        return cls._from_obj(json.loads(asset.read_text(encoding="utf-8")))

    @classmethod
    def load(cls, path: str | Path) -> "PromptTemplate":
        with open(path, encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}: invalid template JSON ({exc})") from exc
        return cls._from_obj(obj)

    @classmethod
    def _from_obj(cls, obj: dict) -> "PromptTemplate":
        try:
            return cls(
                system_text=str(obj["system"]),
                user_text=str(obj["user"]),
                answers=(str(obj["answers"][0]), str(obj["answers"][1])),
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise DataFormatError(f"template missing field: {exc}") from exc


def render_judge_prompt(
    template: PromptTemplate, instruction: str, response_a: str, response_b: str
) -> tuple[str, str]:
    """Substitute the three placeholders in a single pass.

    Placeholder-like text inside the responses themselves is left
    untouched (no re-scanning of substituted content).
    """
    values = {
        "instruction": instruction,
        "response_a": response_a,
        "response_b": response_b,
    }
    user = _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template.user_text)
    return template.system_text, user


def parse_verdict(reply: str, template: PromptTemplate) -> str:
    """Map a judge reply onto a winner position, ``"a"`` or ``"b"``.

    Tolerates surrounding whitespace and case differences but nothing else.
    """
    if not reply:
        raise VerdictParseError("empty judge reply", raw_reply=reply)
    normalized = reply.strip().casefold()
    if normalized == template.answers[0].strip().casefold():
        return "a"
    if normalized == template.answers[1].strip().casefold():
        return "b"
    raise VerdictParseError("unparseable verdict", raw_reply=reply)


def position_order(
    prompt_index: int, model_a: ModelId, model_b: ModelId
) -> tuple[ModelId, ModelId, bool]:
    """Deterministic response order for one match, alternating by prompt.

    Canonical order is lexicographic; odd-indexed prompts present the pair
    reversed so each side of a pair appears first on half the benchmark.
    """
    if model_a == model_b:
        raise DataFormatError(f"cannot order a model against itself: {model_a!r}")
    lo, hi = sorted((model_a, model_b))
    if prompt_index % 2 == 1:
        return hi, lo, True
    return lo, hi, False


# ---------------------------------------------------------------------------
# simulated outcomes


def _winner_side(precision: float, rating_a: float, rating_b: float, u: float) -> str:
    # Side "a" is the designated higher-rated side on exact rating ties.
    if rating_b > rating_a:
        high, low = "b", "a"
        p_high = precision * expected_win_rate(rating_b, rating_a)
    else:
        high, low = "a", "b"
        p_high = precision * expected_win_rate(rating_a, rating_b)
    return high if u < p_high else low


def simulated_outcome(
    precision: float, rating_a: float, rating_b: float, rng: np.random.Generator
) -> str:
    """Sample one match outcome; returns the winning side, ``"a"`` or ``"b"``.

    The higher-rated side wins with probability
    ``precision * P_gt(higher beats lower)`` where P_gt is the logistic
    win-rate curve; otherwise the lower-rated side wins. At equal ratings
    side "a" is treated as the designated higher side.
    """
    if not 0.0 <= precision <= 1.0:
        raise DataFormatError(f"precision must be in [0, 1], got {precision}")
    if not (math.isfinite(rating_a) and math.isfinite(rating_b)):
        raise DataFormatError("ratings must be finite")
    return _winner_side(precision, rating_a, rating_b, float(rng.random()))


# ---------------------------------------------------------------------------
# judge backends


class Judge:
    """Interface all backends implement; instances are stateless per call."""

    judge_id: str

    def decide(
        self,
        prompt_id: str,
        model_a: ModelId,
        model_b: ModelId,
        *,
        outputs: OutputStore | None = None,
        prompt_index: int | None = None,
        instruction: str | None = None,
    ) -> tuple[ModelId, bool]:
        """Return (winner, position_swapped)."""
        raise NotImplementedError


@dataclass(frozen=True)
class SimulatedUnbiasedJudge(Judge):
    """Stochastic judge driven by ground-truth ratings and a precision knob.

    The outcome for a given (seed, prompt, pair) is fixed: the uniform
    variate is keyed off those values, so repeated calls agree and runs
    are reproducible under any execution order.
    """

    precision: float
    gt_ratings: RatingTable
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.precision <= 1.0:
            raise DataFormatError(f"precision must be in [0, 1], got {self.precision}")

    @property
    def judge_id(self) -> str:
        return f"simulated:p={self.precision:g}"

    def decide(self, prompt_id, model_a, model_b, *, outputs=None, prompt_index=None,
               instruction=None):
        lo, hi = sorted((model_a, model_b))
        try:
            rating_lo = self.gt_ratings.rating(lo)
            rating_hi = self.gt_ratings.rating(hi)
        except DataFormatError as exc:
            raise JudgeError(f"simulated judge: {exc}") from exc
        u = unit_uniform(self.seed, "match", prompt_id, lo, hi)
        side = _winner_side(self.precision, rating_lo, rating_hi, u)
        return (lo if side == "a" else hi), False


@dataclass(frozen=True)
class DeterministicOracleJudge(Judge):
    """Always declares the truly higher-rated model the winner.

    Exact rating ties go to the lexicographically smaller id.
    """

    gt_ratings: RatingTable

    judge_id = "oracle"

    def decide(self, prompt_id, model_a, model_b, *, outputs=None, prompt_index=None,
               instruction=None):
        lo, hi = sorted((model_a, model_b))
        try:
            winner = lo if self.gt_ratings.rating(lo) >= self.gt_ratings.rating(hi) else hi
        except DataFormatError as exc:
            raise JudgeError(f"oracle judge: {exc}") from exc
        return winner, False


# ---------------------------------------------------------------------------
# cached verdicts


@dataclass(frozen=True)
class CacheEntry:
    first: ModelId
    second: ModelId
    winner: ModelId


class MatchCache:
    """Precomputed verdicts keyed by (prompt, unordered pair).

    Each entry remembers which model was shown first, so position
    provenance survives the round trip. Lookups never mutate, and
    (m1, m2) and (m2, m1) hit the same entry.
    """

    def __init__(self):
        self._entries: dict[tuple[str, str, str], CacheEntry] = {}

    @staticmethod
    def _key(prompt_id: str, m1: ModelId, m2: ModelId) -> tuple[str, str, str]:
        lo, hi = sorted((m1, m2))
        return prompt_id, lo, hi

    def put(self, prompt_id: str, first: ModelId, second: ModelId, winner: ModelId) -> None:
        if first == second:
            raise DataFormatError(f"cache entry pairs {first!r} with itself")
        if winner not in (first, second):
            raise DataFormatError(
                f"cache winner {winner!r} not in pair ({first!r}, {second!r})"
            )
        self._entries[self._key(prompt_id, first, second)] = CacheEntry(
            first, second, winner
        )

    def lookup(self, prompt_id: str, m1: ModelId, m2: ModelId) -> CacheEntry:
        try:
            return self._entries[self._key(prompt_id, m1, m2)]
        except KeyError:
            raise CacheMissError(prompt_id, *sorted((m1, m2))) from None

    def __contains__(self, key: tuple[str, ModelId, ModelId]) -> bool:
        return self._key(*key) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> Iterator[tuple[str, CacheEntry]]:
        for (prompt_id, _, _), entry in sorted(self._entries.items()):
            yield prompt_id, entry


def save_match_cache(cache: MatchCache, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for prompt_id, entry in cache.entries():
            fh.write(_cache_line(prompt_id, entry) + "\n")


def _cache_line(prompt_id: str, entry: CacheEntry) -> str:
    return json.dumps(
        {
            "prompt_id": prompt_id,
            "model_first": entry.first,
            "model_second": entry.second,
            "winner": entry.winner,
        },
        sort_keys=True,
        ensure_ascii=False,
    )


def load_match_cache(path: str | Path) -> MatchCache:
    cache = MatchCache()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                cache.put(
                    str(obj["prompt_id"]),
                    str(obj["model_first"]),
                    str(obj["model_second"]),
                    str(obj["winner"]),
                )
            except (json.JSONDecodeError, KeyError, DataFormatError) as exc:
                raise DataFormatError(f"{path}:{lineno}: bad cache entry ({exc})") from exc
    return cache


@dataclass(frozen=True)
class CachedJudge(Judge):
    """Replays verdicts from a full-grid cache; no network, no randomness."""

    cache: MatchCache

    judge_id = "cached"

    def decide(self, prompt_id, model_a, model_b, *, outputs=None, prompt_index=None,
               instruction=None):
        entry = self.cache.lookup(prompt_id, model_a, model_b)
        lo, _ = sorted((model_a, model_b))
        return entry.winner, entry.first != lo


# ---------------------------------------------------------------------------
# external judge service


def _http_post(url: str, body: dict, headers: dict, timeout: float) -> tuple[int, str]:
    response = requests.post(url, json=body, headers=headers, timeout=timeout)
    return response.status_code, response.text


@dataclass(frozen=True)
class ExternalJudge(Judge):
    """Client for a chat-completion-style pairwise judge endpoint.

    Sends one POST per match with JSON body {system, user, max_tokens};
    the reply body must be JSON carrying the verdict under ``"text"``.
    The bearer token is read from the environment variable named by
    ``auth_env``, never from flags. Response order alternates across
    prompts; exactly one judgment is made per match.
    """

    endpoint: str
    template: PromptTemplate
    auth_env: str | None = None
    timeout: float = 30.0
    retries: int = 2
    max_tokens: int = 6
    post: Callable[[str, dict, dict, float], tuple[int, str]] = field(
        default=_http_post, repr=False, compare=False
    )

    @property
    def judge_id(self) -> str:
        return f"external:{self.endpoint}"

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            token = os.environ.get(self.auth_env)
            if not token:
                raise JudgeServiceError(
                    f"auth environment variable {self.auth_env!r} is not set"
                )
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _request(self, system: str, user: str) -> str:
        body = {"system": system, "user": user, "max_tokens": self.max_tokens}
        headers = self._headers()
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(min(0.25 * 2 ** (attempt - 1), 5.0))
            try:
                status, text = self.post(self.endpoint, body, headers, self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("judge request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if status >= 500:
                last_error = JudgeServiceError(f"judge service returned HTTP {status}")
                logger.warning("judge HTTP %d (attempt %d)", status, attempt + 1)
                continue
            if status != 200:
                raise JudgeServiceError(f"judge service returned HTTP {status}: {text[:200]}")
            try:
                return str(json.loads(text)["text"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise JudgeServiceError(f"malformed judge response: {text[:200]}") from exc
        raise JudgeServiceError(
            f"judge service unreachable after {self.retries + 1} attempts: {last_error}"
        )

    def decide(self, prompt_id, model_a, model_b, *, outputs=None, prompt_index=None,
               instruction=None):
        if outputs is None:
            raise JudgeError("external judge requires an output store")
        if prompt_index is None or instruction is None:
            raise JudgeError(
                "external judge requires the prompt position and instruction text"
            )
        first, second, swapped = position_order(prompt_index, model_a, model_b)
        system, user = render_judge_prompt(
            self.template,
            instruction,
            outputs.response(prompt_id, first),
            outputs.response(prompt_id, second),
        )
        side = parse_verdict(self._request(system, user), self.template)
        return (first if side == "a" else second), swapped


# ---------------------------------------------------------------------------
# match adjudication


def judge_match(
    judge: Judge,
    prompt_id: str,
    model_a: ModelId,
    model_b: ModelId,
    *,
    outputs: OutputStore | None = None,
    prompt_index: int | None = None,
    instruction: str | None = None,
    trial_id: int | None = None,
) -> MatchRecord:
    """Adjudicate one pair on one prompt and wrap the verdict in a record."""
    if model_a == model_b:
        raise DataFormatError(f"cannot judge {model_a!r} against itself")
    try:
        winner, swapped = judge.decide(
            prompt_id,
            model_a,
            model_b,
            outputs=outputs,
            prompt_index=prompt_index,
            instruction=instruction,
        )
    except CacheMissError:
        raise  # already carries (prompt, pair)
    except JudgeError as exc:
        raise JudgeError(
            f"{exc} [prompt {prompt_id!r}, pair ({model_a!r}, {model_b!r})]"
        ) from exc
    return MatchRecord(
        prompt_id=prompt_id,
        model_a=model_a,
        model_b=model_b,
        winner=winner,
        judge_id=judge.judge_id,
        position_swapped=swapped,
        trial_id=trial_id,
    )


# ---------------------------------------------------------------------------
# full-grid cache construction


@dataclass
class CacheBuildReport:
    """Outcome of a (possibly partial) full-grid cache build."""

    cache: MatchCache
    requested: int
    judged: int
    skipped: int
    failures: list[dict]

    @property
    def complete(self) -> bool:
        return not self.failures

    def retry_manifest(self) -> dict:
        return {"pending": self.failures}


def build_full_grid_cache(
    models: Iterable[ModelId],
    prompts: PromptSet,
    judge: Judge,
    outputs: OutputStore | None = None,
    *,
    concurrency: int = 1,
    cache_path: str | Path | None = None,
    cache: MatchCache | None = None,
) -> CacheBuildReport:
    """Judge all-play-all on every prompt, one entry per unordered pair.

    Entries already present in ``cache`` (e.g. loaded from a previous run's
    ``cache_path``) are skipped, so interrupted builds resume idempotently.
    When ``cache_path`` is given, every fresh verdict is appended to the
    file as it lands. Per-entry failures are collected rather than raised;
    the report carries a retry manifest for the remainder.
    """
    participants = sorted(set(models))
    if len(participants) < 2:
        raise DataFormatError("full grid needs at least two models")
    cache = cache if cache is not None else MatchCache()

    jobs = []
    skipped = 0
    for i, prompt in enumerate(prompts):
        for a_idx in range(len(participants)):
            for b_idx in range(a_idx + 1, len(participants)):
                pair = (participants[a_idx], participants[b_idx])
                if (prompt.prompt_id, *pair) in cache:
                    skipped += 1
                else:
                    jobs.append((i, prompt, pair))

    write_lock = threading.Lock()
    sink = open(cache_path, "a", encoding="utf-8") if cache_path else None

    def judge_one(job):
        i, prompt, (m1, m2) = job
        first, second, _ = position_order(i, m1, m2)
        record = judge_match(
            judge,
            prompt.prompt_id,
            first,
            second,
            outputs=outputs,
            prompt_index=i,
            instruction=prompt.instruction,
        )
        if sink is not None:
            # flush each verdict as it lands so an interrupted build
            # resumes from everything already judged
            with write_lock:
                sink.write(
                    _cache_line(prompt.prompt_id, CacheEntry(first, second, record.winner))
                    + "\n"
                )
                sink.flush()
        return prompt.prompt_id, first, second, record.winner

    try:
        results = parallel_map_settled(judge_one, jobs, threads=concurrency)
    finally:
        if sink is not None:
            sink.close()

    failures = []
    judged = 0
    for job, (value, error) in zip(jobs, results):
        if error is not None:
            i, prompt, pair = job
            failures.append(
                {
                    "prompt_id": prompt.prompt_id,
                    "model_a": pair[0],
                    "model_b": pair[1],
                    "error": str(error),
                }
            )
            continue
        prompt_id, first, second, winner = value
        cache.put(prompt_id, first, second, winner)
        judged += 1

    if failures:
        logger.warning("cache build left %d entries pending", len(failures))
    return CacheBuildReport(
        cache=cache,
        requested=len(jobs) + skipped,
        judged=judged,
        skipped=skipped,
        failures=failures,
    )
