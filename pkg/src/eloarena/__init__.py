"""Reference-free LLM ranking: iterated single-elimination tournaments over
a benchmark prompt set, Elo ratings fitted from the pooled match ledger,
and tooling to compare the approach against anchored-comparison baselines.
"""

from .bracket import (
    BYE,
    Bracket,
    expected_match_count,
    make_bracket,
    run_iterated_tournaments,
    run_tournament,
)
from .core import (
    FitMeta,
    Leaderboard,
    LeaderboardEntry,
    MatchLedger,
    MatchRecord,
    ModelId,
    OutputStore,
    Prompt,
    PromptSet,
    RatingTable,
)
from .errors import (
    ArenaError,
    CacheMissError,
    DataFormatError,
    FitError,
    JudgeError,
    JudgeServiceError,
    NonConvergenceError,
    StatsError,
    TournamentAborted,
    VerdictParseError,
)
from .formats import (
    leaderboard_from_document,
    leaderboard_to_document,
    ledger_read,
    ledger_write,
    load_leaderboard,
    load_output_store,
    load_prompt_set,
    load_rating_table,
    save_leaderboard,
    save_output_store,
    save_prompt_set,
    save_rating_table,
)
from .insertion import (
    PlacementResult,
    anchored_insertion,
    binary_search_placement,
    imputed_winrate_insertion,
)
from .judges import (
    CacheBuildReport,
    CachedJudge,
    DeterministicOracleJudge,
    ExternalJudge,
    Judge,
    MatchCache,
    PromptTemplate,
    SimulatedUnbiasedJudge,
    build_full_grid_cache,
    judge_match,
    load_match_cache,
    parse_verdict,
    position_order,
    render_judge_prompt,
    save_match_cache,
    simulated_outcome,
)
from .rating import (
    AnchorUsefulness,
    FitConfig,
    anchored_scores,
    classify_anchored_usefulness,
    expected_win_rate,
    fit_elo,
    rank_from_scores,
    run_anchored_comparison,
    winrate_vs_anchor_from_ratings,
)
from .seeding import derive_seed, rng_from, unit_uniform
from .stats import (
    ANCHORED,
    TOURNAMENT,
    ArmAggregate,
    BootstrapSummary,
    SimulationConfig,
    TrialReport,
    TrialRow,
    bootstrap_ci,
    mean_rank_deviation,
    run_empirical_trials,
    run_simulation_grid,
    select_participants,
    spearman,
    stratified_subsample,
)

__version__ = "0.1.0"
