from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eloarena import (
    ANCHORED,
    TOURNAMENT,
    CacheMissError,
    DataFormatError,
    DeterministicOracleJudge,
    Prompt,
    PromptSet,
    RatingTable,
    SimulationConfig,
    StatsError,
    bootstrap_ci,
    build_full_grid_cache,
    mean_rank_deviation,
    rank_from_scores,
    run_empirical_trials,
    run_simulation_grid,
    select_participants,
    spearman,
    stratified_subsample,
)
from eloarena.stats import load_trial_rows, save_trial_rows

from oracles import spearman_brute_force


class TestSpearman:
    def test_identical_is_exactly_one(self):
        assert spearman(list("abcd"), list("abcd")) == 1.0

    def test_reversed_is_exactly_minus_one(self):
        assert spearman(list("abcd"), list("dcba")) == -1.0

    def test_middle_swap(self):
        assert spearman(list("abcd"), ["a", "c", "b", "d"]) == pytest.approx(0.8)

    def test_mismatched_sets_rejected(self):
        with pytest.raises(StatsError, match="different models"):
            spearman(["a", "b"], ["a", "c"])

    def test_leaderboard_ties_use_average_ranks(self):
        tied = rank_from_scores({"a": 0.9, "b": 0.5, "c": 0.5, "d": 0.1})
        strict = rank_from_scores({"a": 4.0, "b": 3.0, "c": 2.0, "d": 1.0})
        expected = spearman_brute_force([0.9, 0.5, 0.5, 0.1], [4.0, 3.0, 2.0, 1.0])
        assert spearman(tied, strict) == pytest.approx(expected, abs=1e-12)

    def test_constant_scores_rejected(self):
        flat = rank_from_scores({"a": 0.5, "b": 0.5})
        with pytest.raises(StatsError, match="variance"):
            spearman(flat, rank_from_scores({"a": 1.0, "b": 0.0}))

    @settings(max_examples=150, deadline=None)
    @given(st.data())
    def test_agrees_with_brute_force(self, data):
        n = data.draw(st.integers(min_value=2, max_value=50))
        pool_max = data.draw(st.sampled_from([max(1, n // 2), 10**6]))
        score_vector = st.lists(
            st.integers(min_value=0, max_value=pool_max), min_size=n, max_size=n
        ).filter(lambda v: len(set(v)) > 1)
        sa = [float(x) for x in data.draw(score_vector)]
        sb = [float(x) for x in data.draw(score_vector)]
        models = [f"m{i:02d}" for i in range(n)]
        got = spearman(
            rank_from_scores(dict(zip(models, sa))),
            rank_from_scores(dict(zip(models, sb))),
        )
        assert got == pytest.approx(spearman_brute_force(sa, sb), abs=1e-12)


class TestMeanRankDeviation:
    def test_identical(self):
        board = rank_from_scores({"a": 3.0, "b": 2.0, "c": 1.0})
        assert mean_rank_deviation(board, board) == 0.0

    def test_adjacent_swap(self):
        assert mean_rank_deviation(["b", "a", "c"], ["a", "b", "c"]) == pytest.approx(2 / 3)

    def test_bottom_swap_of_twenty(self):
        truth = [f"m{i:02d}" for i in range(20)]
        pred = truth[:18] + [truth[19], truth[18]]
        assert mean_rank_deviation(pred, truth) == pytest.approx(0.1)

    def test_mismatch_rejected(self):
        with pytest.raises(StatsError):
            mean_rank_deviation(["a"], ["b"])


class TestBootstrap:
    def test_constant_samples_zero_width(self):
        summary = bootstrap_ci([5.0, 5.0, 5.0, 5.0], seed=1)
        assert (summary.median, summary.ci_low, summary.ci_high) == (5.0, 5.0, 5.0)

    def test_interval_brackets_median(self):
        rng = np.random.default_rng(9)
        samples = rng.normal(10.0, 2.0, size=500)
        summary = bootstrap_ci(samples, n_resamples=1000, level=0.95, seed=4)
        assert summary.ci_low <= summary.median <= summary.ci_high

    def test_deterministic(self):
        samples = list(np.random.default_rng(2).normal(size=120))
        assert bootstrap_ci(samples, seed=7) == bootstrap_ci(samples, seed=7)

    def test_width_shrinks_with_sample_count(self):
        rng = np.random.default_rng(31)
        widths = {100: [], 1000: []}
        for rep in range(100):
            for n in widths:
                draws = rng.normal(size=n)
                s = bootstrap_ci(draws, n_resamples=400, seed=rep)
                widths[n].append(s.ci_high - s.ci_low)
        assert np.median(widths[1000]) < np.median(widths[100])

    def test_empty_rejected(self):
        with pytest.raises(StatsError):
            bootstrap_ci([])


class TestStratifiedSubsample:
    def test_one_per_subtopic(self):
        prompts = PromptSet(
            tuple(
                Prompt(f"q{s:03d}-{i}", stratum=f"topic{s:03d}")
                for s in range(250)
                for i in range(2)
            )
        )
        sub = stratified_subsample(prompts, 250, seed=0)
        strata = [p.stratum for p in sub]
        assert len(sub) == 250
        assert len(set(strata)) == 250

    def test_full_size_is_identity(self, ten_prompts):
        assert stratified_subsample(ten_prompts, 10, seed=3) == ten_prompts

    def test_largest_remainder_allocation(self):
        prompts = PromptSet(
            tuple(Prompt(f"a{i}", stratum="big") for i in range(6))
            + tuple(Prompt(f"b{i}", stratum="small") for i in range(4))
        )
        sub = stratified_subsample(prompts, 5, seed=11)
        counts = {"big": 0, "small": 0}
        for p in sub:
            counts[p.stratum] += 1
        assert counts == {"big": 3, "small": 2}

    def test_missing_stratum_is_implicit(self):
        prompts = PromptSet(
            tuple(Prompt(f"s{i}", stratum="tag") for i in range(4))
            + tuple(Prompt(f"u{i}") for i in range(4))
        )
        sub = stratified_subsample(prompts, 4, seed=5)
        tagged = sum(1 for p in sub if p.stratum == "tag")
        assert tagged == 2

    def test_deterministic(self, ten_prompts):
        a = stratified_subsample(ten_prompts, 4, seed=8)
        b = stratified_subsample(ten_prompts, 4, seed=8)
        assert a == b

    def test_out_of_range(self, ten_prompts):
        with pytest.raises(DataFormatError):
            stratified_subsample(ten_prompts, 0, seed=0)
        with pytest.raises(DataFormatError):
            stratified_subsample(ten_prompts, 11, seed=0)

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_allocations_sum_and_fit(self, data):
        sizes = data.draw(
            st.lists(st.integers(min_value=1, max_value=9), min_size=1, max_size=6)
        )
        prompts = []
        for s, size in enumerate(sizes):
            for i in range(size):
                prompts.append(Prompt(f"q{s}-{i}", stratum=f"s{s}"))
        ps = PromptSet(tuple(prompts))
        k = data.draw(st.integers(min_value=1, max_value=len(ps)))
        sub = stratified_subsample(ps, k, seed=data.draw(st.integers(0, 100)))
        assert len(sub) == k
        per = {}
        for p in sub:
            per[p.stratum] = per.get(p.stratum, 0) + 1
        for s, size in enumerate(sizes):
            assert per.get(f"s{s}", 0) <= size


class TestSelectParticipants:
    def test_keeps_lexicographically_smallest_of_tie(self):
        table = RatingTable.from_ratings(
            {"zeta": 1300.0, "alpha": 1300.0, "mid": 1200.0, "low": 1100.0}
        )
        assert select_participants(table, 3) == ["alpha", "mid", "low"]

    def test_excludes_reference(self):
        table = RatingTable.from_ratings(
            {"best": 1300.0, "ref": 1250.0, "mid": 1200.0}
        )
        assert select_participants(table, 2, "ref") == ["best", "mid"]

    def test_insufficient_after_skipping(self):
        table = RatingTable.from_ratings({"a": 1000.0, "b": 1000.0, "c": 1000.0})
        with pytest.raises(DataFormatError, match="tie-skipping"):
            select_participants(table, 2)


def small_gt(n: int = 6, ref_rating: float = 1150.0) -> RatingTable:
    ratings = {f"model-{i:02d}": 1300.0 - 40.0 * i for i in range(n)}
    ratings["reference"] = ref_rating
    return RatingTable.from_ratings(ratings)


class TestSimulationGrid:
    def test_row_counts_and_match_counts(self):
        config = SimulationConfig(
            gt_ratings=small_gt(), n_models=4, n_prompts=6,
            judge_precision=0.8, ref_model="reference", trials=50, seed=5,
        )
        report = run_simulation_grid(config)
        t_rows = report.arm_rows(TOURNAMENT)
        a_rows = report.arm_rows(ANCHORED)
        assert len(t_rows) == 50 and len(a_rows) == 50
        assert all(r.matches == 6 * 3 for r in t_rows)
        assert all(r.matches == 6 * 4 for r in a_rows)
        assert {r.trial_id for r in t_rows} == set(range(50))

    def test_two_model_degenerate_spearman(self):
        config = SimulationConfig(
            gt_ratings=small_gt(), n_models=2, n_prompts=1,
            judge_precision=1.0, ref_model="reference", trials=20, seed=2,
        )
        report = run_simulation_grid(config)
        # one match fully orders two models, so the tournament arm is +/-1;
        # the anchored arm can tie both models against the reference, which
        # scores as zero association
        assert all(r.spearman in (1.0, -1.0) for r in report.arm_rows(TOURNAMENT))
        assert all(r.spearman in (1.0, -1.0, 0.0) for r in report.arm_rows(ANCHORED))

    def test_deterministic_across_threads(self):
        config = SimulationConfig(
            gt_ratings=small_gt(), n_models=5, n_prompts=8,
            judge_precision=0.7, ref_model="reference", trials=12, seed=9,
        )
        assert (
            run_simulation_grid(config, threads=1)
            == run_simulation_grid(config, threads=4)
        )

    def test_oracle_judge_sorts_perfectly_with_ample_prompts(self):
        # noise-free sorting holds once every adjacent pair is likely to meet
        for n in (4, 8, 16):
            gt = small_gt(n + 1)
            config = SimulationConfig(
                gt_ratings=gt, n_models=n, n_prompts=16 * n,
                judge_precision=1.0, ref_model="reference", trials=5, seed=31,
            )
            report = run_simulation_grid(
                config, judge_factory=lambda s, gt=gt: DeterministicOracleJudge(gt)
            )
            assert all(r.spearman == 1.0 for r in report.arm_rows(TOURNAMENT))

    def test_aggregates_present(self):
        config = SimulationConfig(
            gt_ratings=small_gt(), n_models=4, n_prompts=5,
            judge_precision=0.9, ref_model="reference", trials=10, seed=1,
        )
        report = run_simulation_grid(config)
        agg = report.aggregate(TOURNAMENT)
        assert agg.n_trials == 10
        assert agg.ci_low <= agg.median <= agg.ci_high

    def test_missing_reference_rejected(self):
        with pytest.raises(DataFormatError, match="reference"):
            SimulationConfig(
                gt_ratings=RatingTable.from_ratings({"a": 1.0, "b": 2.0}),
                n_models=2, n_prompts=1, judge_precision=0.5,
                ref_model="ghost", trials=1, seed=0,
            )


class TestTrialRowsFile:
    def test_round_trip(self, tmp_path):
        config = SimulationConfig(
            gt_ratings=small_gt(), n_models=3, n_prompts=4,
            judge_precision=0.8, ref_model="reference", trials=4, seed=3,
        )
        report = run_simulation_grid(config)
        path = tmp_path / "rows.jsonl"
        save_trial_rows(report, path)
        assert tuple(load_trial_rows(path)) == report.rows


class TestEmpiricalTrials:
    def build_fixture(self, n_models: int = 5, n_prompts: int = 12):
        ratings = {f"model-{i:02d}": 1300.0 - 35.0 * i for i in range(n_models)}
        ratings["anchor-model"] = 1300.0 - 35.0 * (n_models / 2)
        table = RatingTable.from_ratings(ratings)
        prompts = PromptSet(
            tuple(
                Prompt(f"q{i:03d}", stratum=f"s{i % 3}")
                for i in range(n_prompts)
            )
        )
        participants = [m for m in table.models if m != "anchor-model"]
        cache = build_full_grid_cache(
            participants + ["anchor-model"], prompts, DeterministicOracleJudge(table)
        ).cache
        gt_board = rank_from_scores({m: ratings[m] for m in participants})
        return prompts, cache, participants, gt_board

    def test_row_counts(self):
        prompts, cache, participants, gt_board = self.build_fixture()
        report = run_empirical_trials(
            prompts, cache, participants, "anchor-model", gt_board,
            n_prompts_subset=6, trials=10, seed=4,
        )
        assert len(report.arm_rows(TOURNAMENT)) == 10
        assert len(report.arm_rows(ANCHORED)) == 10

    def test_full_set_anchored_arm_is_constant(self):
        prompts, cache, participants, gt_board = self.build_fixture()
        report = run_empirical_trials(
            prompts, cache, participants, "anchor-model", gt_board,
            n_prompts_subset=len(prompts), trials=8, seed=4,
        )
        anchored_values = {r.spearman for r in report.arm_rows(ANCHORED)}
        assert len(anchored_values) == 1

    def test_oracle_cache_gives_perfect_tournament_arm(self):
        prompts, cache, participants, gt_board = self.build_fixture(n_prompts=24)
        report = run_empirical_trials(
            prompts, cache, participants, "anchor-model", gt_board,
            n_prompts_subset=24, trials=5, seed=6,
        )
        assert all(r.spearman == 1.0 for r in report.arm_rows(TOURNAMENT))

    def test_cache_hole_is_identified(self):
        prompts, cache, participants, gt_board = self.build_fixture()
        holes = PromptSet(
            tuple(prompts.prompts) + (Prompt("uncached", stratum="s0"),)
        )
        with pytest.raises(CacheMissError, match="uncached"):
            run_empirical_trials(
                holes, cache, participants, "anchor-model", gt_board,
                n_prompts_subset=len(holes), trials=2, seed=0,
            )

    def test_reference_cannot_participate(self):
        prompts, cache, participants, gt_board = self.build_fixture()
        with pytest.raises(DataFormatError):
            run_empirical_trials(
                prompts, cache, participants + ["anchor-model"], "anchor-model",
                gt_board, n_prompts_subset=4, trials=1, seed=0,
            )
