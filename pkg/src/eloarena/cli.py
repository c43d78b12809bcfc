"""Command-line entry point.

Data goes to files under --out-dir, logs to stderr, and one
machine-readable JSON summary line to stdout. Every run writes a manifest
recording the resolved configuration, seed, and package version. Exit
codes: 0 success, 1 usage, 2 data error, 3 judge/backend failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import os
import statistics
import sys
from pathlib import Path

from . import __version__
from .bracket import run_iterated_tournaments
from .core import MatchLedger
from .errors import ArenaError, DataFormatError, JudgeError, TournamentAborted
from .formats import (
    leaderboard_to_document,
    ledger_write,
    load_leaderboard,
    load_output_store,
    load_prompt_set,
    load_rating_table,
    save_leaderboard,
    save_rating_table,
)
from .insertion import anchored_insertion, binary_search_placement, imputed_winrate_insertion
from .judges import (
    CachedJudge,
    DeterministicOracleJudge,
    ExternalJudge,
    PromptTemplate,
    SimulatedUnbiasedJudge,
    build_full_grid_cache,
    load_match_cache,
)
from .rating import FitConfig, fit_elo, rank_from_scores, run_anchored_comparison
from .seeding import derive_seed
from .stats import (
    SimulationConfig,
    bootstrap_ci,
    load_trial_rows,
    mean_rank_deviation,
    run_simulation_grid,
    save_trial_rows,
    spearman,
    summary_document,
)

logger = logging.getLogger("eloarena")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_JUDGE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    parser.add_argument("--out-dir", default=None, help="output directory (default .)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap (default: os.cpu_count())")
    parser.add_argument("--config", default=None,
                        help="JSON config file; flags override its values")
    parser.add_argument("-v", "--verbose", action="count", default=0)


def _judge_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--judge", default=None,
                        help="oracle | simulated:<precision> | cache:<path> | external:<url>")
    parser.add_argument("--gt-ratings", default=None,
                        help="rating table file (oracle/simulated judges)")
    parser.add_argument("--outputs", default=None, help="responses file")
    parser.add_argument("--template", default=None, help="judge prompt template file")
    parser.add_argument("--auth-env", default=None,
                        help="environment variable holding the external judge token")
    parser.add_argument("--timeout", type=float, default=None,
                        help="external judge request timeout seconds (default 30)")
    parser.add_argument("--retries", type=int, default=None,
                        help="external judge retry count (default 2)")


def _fit_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--anchor-mean", type=float, default=None)
    parser.add_argument("--l2-lambda", type=float, default=None)
    parser.add_argument("--max-iterations", type=int, default=None)
    parser.add_argument("--gradient-tolerance", type=float, default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="eloarena", description=__doc__)
    parser.add_argument("--version", action="version", version=f"eloarena {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rank = sub.add_parser("rank", help="rank models via iterated tournaments")
    p_rank.add_argument("--prompts", required=True)
    p_rank.add_argument("--participants", required=True,
                        help="comma-separated model ids, or @file with one per line")
    _judge_flags(p_rank)
    _fit_flags(p_rank)
    _common_flags(p_rank)

    p_sim = sub.add_parser("simulate", help="unbiased-judge simulation grid")
    p_sim.add_argument("--gt-ratings", required=True)
    p_sim.add_argument("--ref-model", required=True)
    p_sim.add_argument("--n-models", default=None, help="comma list (default 8)")
    p_sim.add_argument("--n-prompts", default=None, help="comma list (default 100)")
    p_sim.add_argument("--precision", default=None, help="comma list (default 0.8)")
    p_sim.add_argument("--trials", type=int, default=None, help="default 50")
    p_sim.add_argument("--resamples", type=int, default=None,
                       help="bootstrap resamples (default 1000)")
    _fit_flags(p_sim)
    _common_flags(p_sim)

    p_anch = sub.add_parser("anchored", help="win-rate scoring against a reference model")
    p_anch.add_argument("--prompts", required=True)
    p_anch.add_argument("--participants", required=True)
    p_anch.add_argument("--ref-model", required=True)
    _judge_flags(p_anch)
    _common_flags(p_anch)

    p_ins = sub.add_parser("insert", help="place one new model on a leaderboard")
    p_ins.add_argument("--strategy", choices=["binary", "anchored", "imputed"],
                       required=True)
    p_ins.add_argument("--leaderboard", required=True, help="existing leaderboard CSV")
    p_ins.add_argument("--new-model", required=True)
    p_ins.add_argument("--prompts", required=True)
    p_ins.add_argument("--ref-model", default=None, help="anchored strategy reference")
    p_ins.add_argument("--anchor", default=None, help="imputed strategy anchor model")
    p_ins.add_argument("--ratings", default=None, help="imputed strategy rating table")
    p_ins.add_argument("--ledger", default=None, help="imputed strategy match ledger")
    p_ins.add_argument("--min-direct-matches", type=int, default=None, help="default 20")
    _judge_flags(p_ins)
    _common_flags(p_ins)

    p_cache = sub.add_parser("cache", help="build a full-grid verdict cache")
    p_cache.add_argument("--prompts", required=True)
    p_cache.add_argument("--participants", required=True)
    p_cache.add_argument("--cache-file", required=True,
                         help="cache file to create or resume")
    p_cache.add_argument("--concurrency", type=int, default=None,
                         help="in-flight request cap (default 4)")
    _judge_flags(p_cache)
    _common_flags(p_cache)

    p_rep = sub.add_parser("report", help="rank-agreement metrics between leaderboards")
    p_rep.add_argument("--predicted", default=None, help="leaderboard CSV")
    p_rep.add_argument("--truth", default=None, help="leaderboard CSV")
    p_rep.add_argument("--rows", default=None,
                       help="per-trial rows file to aggregate with bootstrap CIs")
    p_rep.add_argument("--resamples", type=int, default=None)
    p_rep.add_argument("--level", type=float, default=None, help="default 0.95")
    _common_flags(p_rep)

    return parser


# ---------------------------------------------------------------------------
# resolution helpers


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """flags > config file > defaults."""
    resolved = dict(vars(args))
    config = {}
    if resolved.get("config"):
        try:
            with open(resolved["config"], encoding="utf-8") as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataFormatError(f"cannot read config file: {exc}") from exc
        if not isinstance(config, dict):
            raise DataFormatError("config file must hold a JSON object")
    for key, value in config.items():
        key = key.replace("-", "_")
        if resolved.get(key) is None:
            resolved[key] = value
    for key, value in defaults.items():
        if resolved.get(key) is None:
            resolved[key] = value
    return resolved


def _parse_participants(value: str) -> list[str]:
    if value.startswith("@"):
        try:
            lines = Path(value[1:]).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise DataFormatError(f"cannot read participants file: {exc}") from exc
        names = [line.strip() for line in lines if line.strip()]
    else:
        names = [name.strip() for name in value.split(",") if name.strip()]
    if not names:
        raise DataFormatError("no participants")
    return names


def _parse_list(value, cast, flag: str) -> list:
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    try:
        return [cast(part) for part in str(value).split(",") if part.strip()]
    except ValueError as exc:
        raise DataFormatError(f"bad {flag} list: {value!r}") from exc


def _fit_config(opts: dict) -> FitConfig:
    return FitConfig(
        anchor_mean=float(opts["anchor_mean"]),
        l2_lambda=float(opts["l2_lambda"]),
        max_iterations=int(opts["max_iterations"]),
        gradient_tolerance=float(opts["gradient_tolerance"]),
    )


_FIT_DEFAULTS = {
    "anchor_mean": 1000.0,
    "l2_lambda": 1e-6,
    "max_iterations": 100,
    "gradient_tolerance": 1e-10,
}


def _build_judge(opts: dict):
    spec = opts.get("judge")
    if not spec:
        raise DataFormatError("--judge is required")
    template = (
        PromptTemplate.load(opts["template"]) if opts.get("template")
        else PromptTemplate.default()
    )
    if spec == "oracle" or spec.startswith("simulated:"):
        if not opts.get("gt_ratings"):
            raise DataFormatError(f"judge {spec!r} requires --gt-ratings")
        table = load_rating_table(opts["gt_ratings"])
        if spec == "oracle":
            return DeterministicOracleJudge(table)
        precision = float(spec.split(":", 1)[1])
        return SimulatedUnbiasedJudge(
            precision, table, seed=derive_seed(int(opts["seed"]), "judge")
        )
    if spec.startswith("cache:"):
        return CachedJudge(load_match_cache(spec.split(":", 1)[1]))
    if spec.startswith("external:"):
        return ExternalJudge(
            endpoint=spec.split(":", 1)[1],
            template=template,
            auth_env=opts.get("auth_env"),
            timeout=float(opts.get("timeout") or 30.0),
            retries=int(opts.get("retries") or 2),
        )
    raise DataFormatError(f"unknown judge spec: {spec!r}")


def _load_outputs_if_needed(opts: dict, judge, participants, prompts):
    needs_outputs = isinstance(judge, ExternalJudge)
    if opts.get("outputs"):
        return load_output_store(opts["outputs"], participants, prompts)
    if needs_outputs:
        raise DataFormatError("external judge requires --outputs")
    return None


def _out_dir(opts: dict) -> Path:
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, opts: dict) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "seed": opts.get("seed"),
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "resolved": {
            k: v for k, v in sorted(opts.items())
            if k not in ("command", "verbose", "func") and not k.startswith("_")
        },
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


# ---------------------------------------------------------------------------
# commands


def cmd_rank(args: argparse.Namespace) -> int:
    opts = _resolve(args, {"seed": 0, "out_dir": ".", "threads": os.cpu_count() or 1,
                           **_FIT_DEFAULTS})
    prompts = load_prompt_set(opts["prompts"])
    participants = _parse_participants(opts["participants"])
    judge = _build_judge(opts)
    outputs = _load_outputs_if_needed(opts, judge, participants, prompts)
    out = _out_dir(opts)

    try:
        ledger = run_iterated_tournaments(
            participants, prompts, judge, int(opts["seed"]),
            outputs=outputs, threads=int(opts["threads"]),
        )
    except TournamentAborted as aborted:
        ledger_write(MatchLedger(aborted.partial_records), out / "ledger.partial.jsonl")
        (out / "resume.json").write_text(
            json.dumps(
                {
                    "completed_prompt_ids": aborted.completed_prompt_ids,
                    "failures": [
                        {"prompt_id": pid, "error": str(err)}
                        for pid, err in aborted.failures
                    ],
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
        logger.error("aborted: %s (partial ledger + resume marker written)", aborted)
        return EXIT_JUDGE

    table = fit_elo(ledger, _fit_config(opts))
    board = rank_from_scores(table.ratings)
    ledger_write(ledger, out / "ledger.jsonl")
    save_rating_table(table, out / "ratings.jsonl")
    save_leaderboard(board, out / "leaderboard.csv")
    (out / "leaderboard.json").write_text(
        json.dumps(leaderboard_to_document(board), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    _write_manifest(out, "rank", opts)
    _emit(
        {
            "command": "rank",
            "models": len(participants),
            "prompts": len(prompts),
            "matches": len(ledger),
            "leader": board.entries[0].model,
            "out_dir": str(out),
        }
    )
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    opts = _resolve(
        args,
        {"seed": 0, "out_dir": ".", "threads": os.cpu_count() or 1,
         "n_models": "8", "n_prompts": "100", "precision": "0.8",
         "trials": 50, "resamples": 1000, **_FIT_DEFAULTS},
    )
    gt = load_rating_table(opts["gt_ratings"])
    ref_model = opts["ref_model"]
    n_models_list = _parse_list(opts["n_models"], int, "--n-models")
    n_prompts_list = _parse_list(opts["n_prompts"], int, "--n-prompts")
    precision_list = _parse_list(opts["precision"], float, "--precision")
    out = _out_dir(opts)
    fit_config = _fit_config(opts)

    cells = []
    for n_models in n_models_list:
        for n_prompts in n_prompts_list:
            for precision in precision_list:
                tag = f"n{n_models}_x{n_prompts}_p{precision:g}"
                config = SimulationConfig(
                    gt_ratings=gt,
                    n_models=n_models,
                    n_prompts=n_prompts,
                    judge_precision=precision,
                    ref_model=ref_model,
                    trials=int(opts["trials"]),
                    seed=derive_seed(int(opts["seed"]), "cell", tag),
                )
                report = run_simulation_grid(
                    config,
                    fit_config=fit_config,
                    bootstrap_resamples=int(opts["resamples"]),
                    threads=int(opts["threads"]),
                )
                save_trial_rows(report, out / f"trials_{tag}.jsonl")
                cell_summary = {
                    "cell": tag,
                    "n_models": n_models,
                    "n_prompts": n_prompts,
                    "precision": precision,
                    **summary_document(report),
                }
                (out / f"summary_{tag}.json").write_text(
                    json.dumps(cell_summary, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8",
                )
                cells.append(cell_summary)

    (out / "summary.json").write_text(
        json.dumps({"cells": cells}, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_manifest(out, "simulate", opts)
    _emit({"command": "simulate", "cells": len(cells),
           "trials": int(opts["trials"]), "out_dir": str(out)})
    return EXIT_OK


def cmd_anchored(args: argparse.Namespace) -> int:
    opts = _resolve(args, {"seed": 0, "out_dir": ".", "threads": os.cpu_count() or 1})
    prompts = load_prompt_set(opts["prompts"])
    participants = _parse_participants(opts["participants"])
    ref_model = opts["ref_model"]
    judge = _build_judge(opts)
    outputs = _load_outputs_if_needed(
        opts, judge, participants + [ref_model], prompts
    )
    out = _out_dir(opts)

    ledger, scores = run_anchored_comparison(
        participants, prompts, ref_model, judge,
        outputs=outputs, threads=int(opts["threads"]),
    )
    board = rank_from_scores(scores)
    ledger_write(ledger, out / "ledger.jsonl")
    save_leaderboard(board, out / "leaderboard.csv")
    _write_manifest(out, "anchored", opts)
    _emit(
        {
            "command": "anchored",
            "models": len(participants),
            "prompts": len(prompts),
            "matches": len(ledger),
            "out_dir": str(out),
        }
    )
    return EXIT_OK


def cmd_insert(args: argparse.Namespace) -> int:
    opts = _resolve(args, {"seed": 0, "out_dir": ".", "threads": 1,
                           "min_direct_matches": 20})
    board = load_leaderboard(opts["leaderboard"])
    prompts = load_prompt_set(opts["prompts"])
    new_model = opts["new_model"]
    judge = _build_judge(opts)
    outputs = _load_outputs_if_needed(
        opts, judge, list(board.order) + [new_model], prompts
    )
    out = _out_dir(opts)
    strategy = opts["strategy"]

    updated_board = None
    if strategy == "binary":
        placement = binary_search_placement(
            board.order, new_model, prompts, judge, int(opts["seed"]), outputs=outputs
        )
    elif strategy == "anchored":
        if not opts.get("ref_model"):
            raise DataFormatError("anchored insertion requires --ref-model")
        existing = {e.model: e.score for e in board if e.model != opts["ref_model"]}
        placement = anchored_insertion(
            existing, new_model, prompts, judge, opts["ref_model"], outputs=outputs
        )
        updated_board = rank_from_scores({**existing, new_model: placement.new_score})
    else:
        for flag in ("anchor", "ratings", "ledger"):
            if not opts.get(flag):
                raise DataFormatError(f"imputed insertion requires --{flag}")
        from .formats import ledger_read

        table = load_rating_table(opts["ratings"])
        ledger = ledger_read(opts["ledger"])
        placement = imputed_winrate_insertion(
            table, ledger, opts["anchor"], new_model, prompts, judge,
            min_direct_matches=int(opts["min_direct_matches"]), outputs=outputs,
        )
        if placement.incumbent_scores is not None:
            updated_board = rank_from_scores(
                {**dict(placement.incumbent_scores), new_model: placement.new_score}
            )

    order = list(board.order)
    order.insert(placement.position, new_model)
    report = {
        "strategy": strategy,
        "new_model": new_model,
        "position": placement.position,
        "is_tie": placement.is_tie,
        "matches_used": placement.matches_used,
        "n_comparisons": placement.n_comparisons,
        "n_matches": placement.n_matches,
        "new_score": placement.new_score,
        "updated_order": order,
    }
    (out / "placement.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if updated_board is not None:
        save_leaderboard(updated_board, out / "leaderboard_updated.csv")
    else:
        (out / "leaderboard_updated.json").write_text(
            json.dumps({"order": order, "tie_with_position": placement.is_tie},
                       indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    _write_manifest(out, "insert", opts)
    _emit(
        {
            "command": "insert",
            "strategy": strategy,
            "position": placement.position,
            "is_tie": placement.is_tie,
            "matches_used": placement.matches_used,
            "out_dir": str(out),
        }
    )
    return EXIT_OK


def cmd_cache(args: argparse.Namespace) -> int:
    opts = _resolve(args, {"seed": 0, "out_dir": ".", "concurrency": 4})
    prompts = load_prompt_set(opts["prompts"])
    participants = _parse_participants(opts["participants"])
    judge = _build_judge(opts)
    outputs = _load_outputs_if_needed(opts, judge, participants, prompts)
    out = _out_dir(opts)

    cache_file = Path(opts["cache_file"])
    existing = load_match_cache(cache_file) if cache_file.exists() else None
    report = build_full_grid_cache(
        participants,
        prompts,
        judge,
        outputs,
        concurrency=int(opts["concurrency"]),
        cache_path=cache_file,
        cache=existing,
    )
    (out / "cache_report.json").write_text(
        json.dumps(
            {
                "requested": report.requested,
                "judged": report.judged,
                "skipped": report.skipped,
                "failed": len(report.failures),
                "entries": len(report.cache),
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    _write_manifest(out, "cache", opts)
    if not report.complete:
        (out / "retry_manifest.json").write_text(
            json.dumps(report.retry_manifest(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        logger.error("cache build incomplete: %d failures", len(report.failures))
        _emit({"command": "cache", "entries": len(report.cache),
               "failed": len(report.failures), "out_dir": str(out)})
        return EXIT_JUDGE
    _emit({"command": "cache", "entries": len(report.cache), "failed": 0,
           "out_dir": str(out)})
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    opts = _resolve(args, {"seed": 0, "out_dir": ".", "resamples": 1000, "level": 0.95})
    out = _out_dir(opts)
    report: dict = {"command": "report"}

    if opts.get("predicted") or opts.get("truth"):
        if not (opts.get("predicted") and opts.get("truth")):
            raise DataFormatError("--predicted and --truth must be given together")
        predicted = load_leaderboard(opts["predicted"])
        truth = load_leaderboard(opts["truth"])
        report["spearman"] = spearman(predicted, truth)
        report["mean_rank_deviation"] = mean_rank_deviation(predicted, truth)

    if opts.get("rows"):
        rows = load_trial_rows(opts["rows"])
        arms = {}
        for arm in sorted({r.approach for r in rows}):
            samples = [r.spearman for r in rows if r.approach == arm]
            boot = bootstrap_ci(
                samples,
                n_resamples=int(opts["resamples"]),
                level=float(opts["level"]),
                seed=derive_seed(int(opts["seed"]), "report", arm),
            )
            arms[arm] = {
                "n_trials": len(samples),
                "median": statistics.median(samples),
                "ci_low": boot.ci_low,
                "ci_high": boot.ci_high,
            }
        report["arms"] = arms

    if len(report) == 1:
        raise DataFormatError("report needs --predicted/--truth or --rows")

    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_manifest(out, "report", opts)
    _emit(report)
    return EXIT_OK


_COMMANDS = {
    "rank": cmd_rank,
    "simulate": cmd_simulate,
    "anchored": cmd_anchored,
    "insert": cmd_insert,
    "cache": cmd_cache,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except JudgeError as exc:
        logger.error("judge failure: %s", exc)
        return EXIT_JUDGE
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    except ArenaError as exc:
        logger.error("%s", exc)
        return EXIT_DATA
