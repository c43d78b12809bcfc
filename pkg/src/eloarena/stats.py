"""Rank-agreement metrics, bootstrap intervals, stratified subsampling,
and the simulated / cache-replay trial runners.

Trials are embarrassingly parallel: each derives its RNG streams from
(seed, trial_id), and reports merge rows by trial so output is identical
under any schedule.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from ._parallel import parallel_map
from .bracket import run_iterated_tournaments
from .core import Leaderboard, ModelId, PromptSet, RatingTable
from .errors import DataFormatError, StatsError, TournamentAborted
from .judges import CachedJudge, Judge, MatchCache, SimulatedUnbiasedJudge
from .rating import FitConfig, fit_elo, rank_from_scores, run_anchored_comparison
from .seeding import derive_seed, rng_from

TOURNAMENT = "tournament"
ANCHORED = "anchored"



# ---------------------------------------------------------------------------
# rank-agreement metrics


def _fractional_ranks(board: Leaderboard | Sequence[ModelId]) -> dict[ModelId, float]:
    if isinstance(board, Leaderboard):
        models = [e.model for e in board]
        scores = np.array([e.score for e in board])
        ranks = rankdata(-scores, method="average")
        return {m: float(r) for m, r in zip(models, ranks)}
    order = list(board)
    if len(order) != len(set(order)):
        raise StatsError("ranking contains duplicate models")
    return {m: float(i + 1) for i, m in enumerate(order)}


def spearman(rank_a: Leaderboard | Sequence[ModelId],
             rank_b: Leaderboard | Sequence[ModelId]) -> float:
    """Spearman correlation between two rankings of the same model set.

    Computed as the Pearson correlation of rank vectors, with tied scores
    assigned their average rank. Average ranks are half-integers, so the
    moments are accumulated in exact integer arithmetic on doubled ranks;
    identical rankings therefore yield exactly 1.0 and mirrored ones -1.0.
    """
    ranks_a = _fractional_ranks(rank_a)
    ranks_b = _fractional_ranks(rank_b)
    if set(ranks_a) != set(ranks_b):
        raise StatsError(
            f"rankings cover different models: "
            f"{sorted(set(ranks_a) ^ set(ranks_b))[:5]} ..."
        )
    if len(ranks_a) < 2:
        raise StatsError("spearman needs at least two models")
    models = sorted(ranks_a)
    va = [int(round(2.0 * ranks_a[m])) for m in models]
    vb = [int(round(2.0 * ranks_b[m])) for m in models]
    n = len(models)
    s_ab = n * sum(a * b for a, b in zip(va, vb)) - sum(va) * sum(vb)
    s_aa = n * sum(a * a for a in va) - sum(va) ** 2
    s_bb = n * sum(b * b for b in vb) - sum(vb) ** 2
    if s_aa == 0 or s_bb == 0:
        raise StatsError("spearman undefined: a ranking has zero rank variance")
    return s_ab / math.sqrt(s_aa * s_bb)


def _arm_spearman(predicted: Leaderboard,
                  truth: Leaderboard | Sequence[ModelId]) -> float:
    """Trial scoring: a fully tied prediction carries no order, score 0."""
    if len({e.score for e in predicted}) == 1:
        return 0.0
    return spearman(predicted, truth)


def mean_rank_deviation(predicted: Leaderboard | Sequence[ModelId],
                        ground_truth: Leaderboard | Sequence[ModelId]) -> float:
    """Mean absolute difference between predicted and true ranks."""

    def competition_ranks(board) -> dict[ModelId, int]:
        if isinstance(board, Leaderboard):
            return {e.model: e.rank for e in board}
        return {m: i + 1 for i, m in enumerate(board)}

    pred = competition_ranks(predicted)
    truth = competition_ranks(ground_truth)
    if set(pred) != set(truth):
        raise StatsError("rankings cover different models")
    return float(np.mean([abs(pred[m] - truth[m]) for m in sorted(pred)]))


# ---------------------------------------------------------------------------
# bootstrap


@dataclass(frozen=True)
class BootstrapSummary:
    median: float
    ci_low: float
    ci_high: float


def bootstrap_ci(
    samples: Sequence[float],
    n_resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> BootstrapSummary:
    """Percentile bootstrap of the median.

    Resamples with replacement ``n_resamples`` times, takes each resample's
    median, and reports the median of those medians with the symmetric
    (1 - level) empirical quantiles. Deterministic given ``seed``.
    """
    data = np.asarray(list(samples), dtype=float)
    if data.size == 0:
        raise StatsError("bootstrap needs at least one sample")
    if n_resamples < 1:
        raise StatsError("n_resamples must be >= 1")
    if not 0.0 < level < 1.0:
        raise StatsError("confidence level must be in (0, 1)")
    rng = rng_from(seed, "bootstrap")
    idx = rng.integers(0, data.size, size=(n_resamples, data.size))
    medians = np.median(data[idx], axis=1)
    alpha = (1.0 - level) / 2.0
    return BootstrapSummary(
        median=float(np.median(medians)),
        ci_low=float(np.quantile(medians, alpha)),
        ci_high=float(np.quantile(medians, 1.0 - alpha)),
    )


# ---------------------------------------------------------------------------
# stratified subsampling


def stratified_subsample(prompts: PromptSet, k: int, seed: int) -> PromptSet:
    """Draw k prompts preserving per-stratum proportions.

    Stratum quotas use largest-remainder rounding; selection within a
    stratum is uniform without replacement. Prompts without a stratum form
    one implicit stratum. The full-size draw returns the set unchanged.
    """
    if not 1 <= k <= len(prompts):
        raise DataFormatError(f"subsample size {k} out of range 1..{len(prompts)}")
    if k == len(prompts):
        return prompts

    strata: dict[tuple[int, str], list[int]] = {}
    for i, prompt in enumerate(prompts):
        key = (1, "") if prompt.stratum is None else (0, prompt.stratum)
        strata.setdefault(key, []).append(i)

    total = len(prompts)
    quotas = {key: k * len(members) / total for key, members in strata.items()}
    counts = {key: int(np.floor(q)) for key, q in quotas.items()}
    leftover = k - sum(counts.values())
    by_remainder = sorted(strata, key=lambda key: (-(quotas[key] - counts[key]), key))
    for key in by_remainder[:leftover]:
        counts[key] += 1

    chosen: list[int] = []
    for key in sorted(strata):
        members = strata[key]
        take = counts[key]
        if take == 0:
            continue
        rng = rng_from(seed, "stratum", key[0], key[1])
        picked = rng.choice(len(members), size=take, replace=False)
        chosen.extend(members[j] for j in picked)
    chosen.sort()  # keep the original prompt order
    return PromptSet(tuple(prompts[i] for i in chosen))


# ---------------------------------------------------------------------------
# trial reports


@dataclass(frozen=True)
class TrialRow:
    trial_id: int
    approach: str
    spearman: float
    matches: int


@dataclass(frozen=True)
class ArmAggregate:
    approach: str
    n_trials: int
    median: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class TrialReport:
    rows: tuple[TrialRow, ...]
    aggregates: tuple[ArmAggregate, ...]

    def arm_rows(self, approach: str) -> list[TrialRow]:
        return [r for r in self.rows if r.approach == approach]

    def aggregate(self, approach: str) -> ArmAggregate:
        for agg in self.aggregates:
            if agg.approach == approach:
                return agg
        raise StatsError(f"no aggregate for approach {approach!r}")


def _aggregate(rows: Iterable[TrialRow], seed: int,
               n_resamples: int = 1000, level: float = 0.95) -> tuple[ArmAggregate, ...]:
    by_arm: dict[str, list[float]] = {}
    for row in rows:
        by_arm.setdefault(row.approach, []).append(row.spearman)
    aggregates = []
    for arm in sorted(by_arm):
        samples = by_arm[arm]
        boot = bootstrap_ci(samples, n_resamples=n_resamples, level=level,
                            seed=derive_seed(seed, "aggregate", arm))
        aggregates.append(
            ArmAggregate(
                approach=arm,
                n_trials=len(samples),
                median=float(np.median(samples)),
                ci_low=boot.ci_low,
                ci_high=boot.ci_high,
            )
        )
    return tuple(aggregates)


def save_trial_rows(report: TrialReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in report.rows:
            fh.write(
                json.dumps(
                    {
                        "trial_id": row.trial_id,
                        "approach": row.approach,
                        "spearman": row.spearman,
                        "matches": row.matches,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_trial_rows(path: str | Path) -> list[TrialRow]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rows.append(
                    TrialRow(
                        trial_id=int(obj["trial_id"]),
                        approach=str(obj["approach"]),
                        spearman=float(obj["spearman"]),
                        matches=int(obj["matches"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise DataFormatError(f"{path}:{lineno}: bad trial row ({exc})") from exc
    return rows


def summary_document(report: TrialReport) -> dict:
    return {
        "aggregates": [
            {
                "approach": a.approach,
                "n_trials": a.n_trials,
                "median": a.median,
                "ci_low": a.ci_low,
                "ci_high": a.ci_high,
            }
            for a in report.aggregates
        ]
    }


# ---------------------------------------------------------------------------
# experiment runners


@dataclass(frozen=True)
class SimulationConfig:
    """One cell of the unbiased-judge simulation grid."""

    gt_ratings: RatingTable
    n_models: int
    n_prompts: int
    judge_precision: float
    ref_model: ModelId
    trials: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.judge_precision <= 1.0:
            raise DataFormatError("judge_precision must be in [0, 1]")
        if self.trials < 1:
            raise DataFormatError("trials must be >= 1")
        if self.n_prompts < 1:
            raise DataFormatError("n_prompts must be >= 1")
        if self.ref_model not in self.gt_ratings:
            raise DataFormatError(
                f"reference model {self.ref_model!r} missing from ground-truth ratings"
            )


def select_participants(
    gt_ratings: RatingTable, n_models: int, ref_model: ModelId | None = None
) -> list[ModelId]:
    """Top n models by rating, skipping exact-rating ties.

    Only one model of a tied-rating group is kept (the lexicographically
    smallest), so the resulting ground-truth order is strict. The reference
    model is never selected.
    """
    candidates = sorted(
        (m for m in gt_ratings.models if m != ref_model),
        key=lambda m: (-gt_ratings.rating(m), m),
    )
    chosen: list[ModelId] = []
    seen_ratings: set[float] = set()
    for m in candidates:
        rating = gt_ratings.rating(m)
        if rating in seen_ratings:
            continue
        seen_ratings.add(rating)
        chosen.append(m)
        if len(chosen) == n_models:
            return chosen
    raise DataFormatError(
        f"only {len(chosen)} models available after tie-skipping, need {n_models}"
    )


def run_simulation_grid(
    config: SimulationConfig,
    *,
    judge_factory=None,
    fit_config: FitConfig | None = None,
    bootstrap_resamples: int = 1000,
    threads: int = 1,
) -> TrialReport:
    """Simulate both benchmarking arms against a known ground truth.

    Per trial: the tournament arm runs iterated tournaments with the
    stochastic simulated judge over synthetic prompts, fits Elo ratings and
    ranks; the anchored arm plays every participant against the reference
    model with the same judge and ranks by win rate. Each arm's ranking is
    scored by Spearman correlation against the ground-truth order. Fully
    deterministic given the config seed.

    ``judge_factory(trial_seed) -> Judge`` overrides the default simulated
    judge (used to study noise-free behavior with the oracle).
    """
    participants = select_participants(
        config.gt_ratings, config.n_models, config.ref_model
    )
    gt_board = rank_from_scores({m: config.gt_ratings.rating(m) for m in participants})
    prompts = PromptSet.synthetic(config.n_prompts)

    def default_judge(trial_seed: int) -> Judge:
        return SimulatedUnbiasedJudge(
            precision=config.judge_precision,
            gt_ratings=config.gt_ratings,
            seed=trial_seed,
        )

    make_judge = judge_factory or default_judge

    def one_trial(trial: int) -> list[TrialRow]:
        trial_seed = derive_seed(config.seed, "trial", trial)
        judge = make_judge(derive_seed(trial_seed, "judge"))

        ledger = run_iterated_tournaments(
            participants, prompts, judge, derive_seed(trial_seed, "bracket"),
            trial_id=trial,
        )
        fitted = fit_elo(ledger, fit_config)
        tournament_board = rank_from_scores(
            {m: fitted.rating(m) for m in participants}
        )

        anchored_ledger, scores = run_anchored_comparison(
            participants, prompts, config.ref_model, judge, trial_id=trial
        )
        anchored_board = rank_from_scores(scores)

        return [
            TrialRow(trial, TOURNAMENT, _arm_spearman(tournament_board, gt_board),
                     len(ledger)),
            TrialRow(trial, ANCHORED, _arm_spearman(anchored_board, gt_board),
                     len(anchored_ledger)),
        ]

    nested = parallel_map(one_trial, range(config.trials), threads=threads)
    rows = tuple(row for trial_rows in nested for row in trial_rows)
    return TrialReport(
        rows, _aggregate(rows, config.seed, n_resamples=bootstrap_resamples)
    )


def run_empirical_trials(
    prompts: PromptSet,
    cache: MatchCache,
    participants: Sequence[ModelId],
    ref_model: ModelId,
    gt_order: Leaderboard | Sequence[ModelId],
    n_prompts_subset: int,
    trials: int,
    seed: int,
    *,
    fit_config: FitConfig | None = None,
    bootstrap_resamples: int = 1000,
    threads: int = 1,
) -> TrialReport:
    """Replay cached verdicts over stratified prompt subsets.

    Per trial: draw a stratified subsample, run the tournament arm with the
    cached judge and a fresh random bracket, and score the anchored arm by
    counting cached outcomes against the reference. At the full prompt set
    only bracket randomness varies between trials, so the anchored arm is
    constant. Cache misses abort with the missing (prompt, pair).
    """
    field = sorted(set(participants))
    if ref_model in field:
        raise DataFormatError(f"reference model {ref_model!r} cannot be a participant")
    judge = CachedJudge(cache)

    def one_trial(trial: int) -> list[TrialRow]:
        subset = stratified_subsample(
            prompts, n_prompts_subset, derive_seed(seed, "subsample", trial)
        )
        try:
            ledger = run_iterated_tournaments(
                field, subset, judge, derive_seed(seed, "bracket", trial),
                trial_id=trial,
            )
        except TournamentAborted as aborted:
            raise aborted.failures[0][1]  # replay errors are not resumable
        fitted = fit_elo(ledger, fit_config)
        tournament_board = rank_from_scores({m: fitted.rating(m) for m in field})

        scores = {}
        for m in field:
            wins = sum(
                1
                for prompt in subset
                if cache.lookup(prompt.prompt_id, m, ref_model).winner == m
            )
            scores[m] = wins / len(subset)
        anchored_board = rank_from_scores(scores)

        return [
            TrialRow(trial, TOURNAMENT, _arm_spearman(tournament_board, gt_order),
                     len(ledger)),
            TrialRow(trial, ANCHORED, _arm_spearman(anchored_board, gt_order),
                     len(subset) * len(field)),
        ]

    nested = parallel_map(one_trial, range(trials), threads=threads)
    rows = tuple(row for trial_rows in nested for row in trial_rows)
    return TrialReport(rows, _aggregate(rows, seed, n_resamples=bootstrap_resamples))
