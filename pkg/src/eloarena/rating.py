"""Elo win-rate curve, Bradley-Terry maximum-likelihood fitting, and
anchored-comparison scoring.

Ratings come from a batch fit of the logistic pairwise model over a match
ledger (no online K-factor updates). The likelihood is translation
invariant, so fitted ratings are recentered to ``anchor_mean``; a small L2
penalty on centered ratings keeps all-win/all-loss participants finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.special import expit, log_expit

from .core import (
    FitMeta,
    Leaderboard,
    LeaderboardEntry,
    MatchLedger,
    ModelId,
    OutputStore,
    PromptSet,
    RatingTable,
)
from .errors import DataFormatError, NonConvergenceError


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameters of the rating fit.

    ``scale`` and ``base`` define the logistic link (400 / 10 are the
    conventional Elo constants). ``l2_lambda`` penalizes mean-centered
    ratings; ``0`` demands a ledger whose win graph is strongly connected.
    """

    scale: float = 400.0
    base: float = 10.0
    anchor_mean: float = 1000.0
    l2_lambda: float = 1e-6
    max_iterations: int = 100
    gradient_tolerance: float = 1e-10

    def __post_init__(self):
        if self.scale <= 0 or self.base <= 1 or self.l2_lambda < 0:
            raise DataFormatError(
                "fit config requires scale > 0, base > 1, l2_lambda >= 0"
            )


def expected_win_rate(
    rating_i: float, rating_j: float, *, scale: float = 400.0, base: float = 10.0
) -> float:
    """Probability that the first participant beats the second.

    The logistic curve of the rating gap: 1 / (1 + base**((R_j - R_i)/scale)).
    Strictly increasing in ``rating_i``; complements sum to one.
    """
    exponent = (rating_j - rating_i) / scale
    if exponent > 300.0:
        return 0.0
    if exponent < -300.0:
        return 1.0
    return 1.0 / (1.0 + base**exponent)


def _win_matrix(ledger: MatchLedger) -> tuple[list[ModelId], np.ndarray]:
    models = sorted(ledger.models())
    index = {m: i for i, m in enumerate(models)}
    wins = np.zeros((len(models), len(models)))
    for record in ledger:
        wins[index[record.winner], index[record.loser]] += 1.0
    return models, wins


def _strongly_connected(wins: np.ndarray) -> bool:
    n_components, _ = connected_components(
        wins > 0, directed=True, connection="strong"
    )
    return n_components == 1


def fit_elo(ledger: MatchLedger, config: FitConfig | None = None) -> RatingTable:
    """Fit Elo ratings to a match ledger by Bradley-Terry maximum likelihood.

    Minimizes the negative log-likelihood of the logistic pairwise model
    plus (l2_lambda/2) * sum of squared centered ratings, by damped Newton
    steps with backtracking. Convergence is declared when the gradient norm
    drops below ``gradient_tolerance``. The result is deterministic and
    order-insensitive: only per-pair win counts enter the objective.

    Raises ``DataFormatError`` for an empty ledger and
    ``NonConvergenceError`` when the optimum is unreachable (iteration
    budget exhausted, or an unregularized fit on a ledger whose win graph
    is not strongly connected, leaving the maximum at infinity).
    """
    config = config or FitConfig()
    if len(ledger) == 0:
        raise DataFormatError("cannot fit ratings to an empty ledger")
    models, wins = _win_matrix(ledger)

    if config.l2_lambda == 0.0 and not _strongly_connected(wins):
        raise NonConvergenceError(
            "unregularized likelihood has no finite maximum: the win graph is "
            "not strongly connected (some model or group has only wins or only "
            "losses); set l2_lambda > 0",
            gradient_norm=math.inf,
            iterations=0,
        )

    c = math.log(config.base) / config.scale
    lam = config.l2_lambda
    pair_counts = wins + wins.T
    has_matches = wins > 0
    n = len(models)
    theta = np.zeros(n)

    def objective(t: np.ndarray) -> float:
        logp = log_expit(c * (t[:, None] - t[None, :]))
        nll = -float(np.sum(wins[has_matches] * logp[has_matches]))
        return nll + 0.5 * lam * float(t @ t)

    def gradient(t: np.ndarray) -> np.ndarray:
        p = expit(c * (t[:, None] - t[None, :]))
        g = wins * (1.0 - p)
        return -c * (g.sum(axis=1) - g.sum(axis=0)) + lam * t

    iterations = 0
    grad = gradient(theta)
    grad_norm = float(np.linalg.norm(grad))
    while grad_norm >= config.gradient_tolerance:
        if iterations >= config.max_iterations:
            raise NonConvergenceError(
                "rating fit did not converge", gradient_norm=grad_norm,
                iterations=iterations,
            )
        p = expit(c * (theta[:, None] - theta[None, :]))
        curvature = pair_counts * p * (1.0 - p)
        hessian = c * c * (np.diag(curvature.sum(axis=1)) - curvature)
        hessian[np.diag_indices(n)] += lam
        try:
            step = np.linalg.solve(hessian, -grad)
        except np.linalg.LinAlgError:
            # lam == 0 leaves a flat translation direction; take the
            # minimum-norm step within the identifiable subspace.
            step = np.linalg.lstsq(hessian, -grad, rcond=None)[0]

        f0 = objective(theta)
        slope = float(grad @ step)
        if -slope <= 1e-14 * (1.0 + abs(f0)):
            # Predicted decrease is below objective rounding noise: the
            # iterate is inside the quadratic basin where the undamped
            # Newton step is safe and a line search can only stall.
            theta = theta + step
        else:
            scale_factor = 1.0
            candidate = theta + step
            while objective(candidate) > f0 + 1e-4 * scale_factor * slope:
                scale_factor *= 0.5
                if scale_factor < 1e-12:
                    break
                candidate = theta + scale_factor * step
            theta = candidate
        iterations += 1
        grad = gradient(theta)
        grad_norm = float(np.linalg.norm(grad))

    theta = theta - theta.mean() + config.anchor_mean
    meta = FitMeta(
        iterations=iterations, gradient_norm=grad_norm, regularization=lam
    )
    return RatingTable(
        {m: float(r) for m, r in zip(models, theta)}, config.anchor_mean, meta
    )


# ---------------------------------------------------------------------------
# anchored comparison


def anchored_scores(ledger: MatchLedger, ref_model: ModelId) -> dict[ModelId, float]:
    """Win rate of every non-reference model against the reference.

    Only valid on anchored ledgers: every match must involve ``ref_model``.
    """
    wins: dict[ModelId, int] = {}
    totals: dict[ModelId, int] = {}
    for record in ledger:
        if ref_model not in (record.model_a, record.model_b):
            raise DataFormatError(
                f"anchored scoring saw a non-reference match "
                f"({record.model_a!r} vs {record.model_b!r} on {record.prompt_id!r})"
            )
        other = record.model_b if record.model_a == ref_model else record.model_a
        totals[other] = totals.get(other, 0) + 1
        if record.winner == other:
            wins[other] = wins.get(other, 0) + 1
    if not totals:
        raise DataFormatError("anchored scoring needs at least one match")
    return {m: wins.get(m, 0) / totals[m] for m in totals}


def run_anchored_comparison(
    models: Iterable[ModelId],
    prompts: PromptSet,
    ref_model: ModelId,
    judge,
    *,
    outputs: OutputStore | None = None,
    trial_id: int | None = None,
    threads: int = 1,
) -> tuple[MatchLedger, dict[ModelId, float]]:
    """Play every model against the reference on every prompt.

    Produces exactly |prompts| * |models| matches and the per-model win
    rates against the reference.
    """
    from ._parallel import parallel_map
    from .judges import judge_match

    participants = sorted(set(models))
    if ref_model in participants:
        raise DataFormatError(f"reference model {ref_model!r} cannot be a participant")
    if not participants:
        raise DataFormatError("no participants")

    def one_prompt(i: int) -> list:
        prompt = prompts[i]
        return [
            judge_match(
                judge,
                prompt.prompt_id,
                m,
                ref_model,
                outputs=outputs,
                prompt_index=i,
                instruction=prompt.instruction,
                trial_id=trial_id,
            )
            for m in participants
        ]

    ledger = MatchLedger()
    for records in parallel_map(one_prompt, range(len(prompts)), threads=threads):
        ledger.extend(records)
    return ledger, anchored_scores(ledger, ref_model)


class AnchorUsefulness(Enum):
    """Whether one reference comparison separates a pair of models."""

    USEFUL = "useful"
    USELESS = "useless"


def classify_anchored_usefulness(
    a_beats_ref: bool, b_beats_ref: bool
) -> AnchorUsefulness:
    """A reference anchors a pair only when it splits them.

    Both models beating the reference, or both losing to it, yields no
    information about their relative order.
    """
    if a_beats_ref != b_beats_ref:
        return AnchorUsefulness.USEFUL
    return AnchorUsefulness.USELESS


def winrate_vs_anchor_from_ratings(
    table: RatingTable, anchor: ModelId
) -> dict[ModelId, float]:
    """Convert a rating table into expected win rates against one anchor."""
    if anchor not in table:
        raise DataFormatError(f"anchor {anchor!r} not in rating table")
    anchor_rating = table.rating(anchor)
    return {
        m: expected_win_rate(table.rating(m), anchor_rating) for m in table.models
    }


def rank_from_scores(
    scores: Mapping[ModelId, float],
    cis: Mapping[ModelId, tuple[float, float]] | None = None,
) -> Leaderboard:
    """Order models by score descending with competition ranking on ties."""
    if not scores:
        raise DataFormatError("cannot rank an empty score map")
    ordered = sorted(scores, key=lambda m: (-scores[m], m))
    entries = []
    for m in ordered:
        rank = 1 + sum(1 for other in ordered if scores[other] > scores[m])
        lo, hi = (cis or {}).get(m, (None, None))
        entries.append(
            LeaderboardEntry(rank=rank, model=m, score=scores[m], ci_low=lo, ci_high=hi)
        )
    return Leaderboard(tuple(entries))
