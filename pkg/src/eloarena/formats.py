"""Line-delimited file formats for every shared data type.

All list-like data is JSON Lines (UTF-8, one object per line): appendable
and diff-friendly. Leaderboards are CSV with a header row, and can also be
emitted as a single JSON document. Round-trip serialization is the
identity for every type here.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

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
    validate_model_id,
)
from .errors import DataFormatError

LEADERBOARD_HEADER = ["rank", "model", "score", "ci_low", "ci_high"]


def _read_jsonl(path: str | Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if not isinstance(obj, dict):
                raise DataFormatError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def _require(obj: dict, key: str, path, lineno: int):
    if key not in obj:
        raise DataFormatError(f"{path}:{lineno}: missing field {key!r}")
    return obj[key]


# ---------------------------------------------------------------------------
# prompts


def load_prompt_set(path: str | Path) -> PromptSet:
    """Parse a prompts file; rejects the whole file on any malformed line."""
    prompts = []
    for lineno, obj in _read_jsonl(path):
        stratum = obj.get("stratum")
        if stratum == "":
            stratum = None
        try:
            prompts.append(
                Prompt(
                    prompt_id=str(_require(obj, "prompt_id", path, lineno)),
                    instruction=str(obj.get("instruction", "")),
                    stratum=None if stratum is None else str(stratum),
                )
            )
        except DataFormatError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    if not prompts:
        raise DataFormatError(f"{path}: empty prompt set")
    seen: dict[str, int] = {}
    for i, p in enumerate(prompts, start=1):
        if p.prompt_id in seen:
            raise DataFormatError(
                f"{path}:{i}: duplicate prompt_id {p.prompt_id!r} "
                f"(first seen on line {seen[p.prompt_id]})"
            )
        seen[p.prompt_id] = i
    return PromptSet(tuple(prompts))


def save_prompt_set(prompts: PromptSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in prompts:
            fh.write(
                _dump_line(
                    {
                        "prompt_id": p.prompt_id,
                        "stratum": p.stratum,
                        "instruction": p.instruction,
                    }
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# outputs


def load_output_store(
    path: str | Path, participants: Iterable[ModelId], prompts: PromptSet
) -> OutputStore:
    """Load responses and verify every (prompt, participant) pair is present."""
    participants = sorted(set(participants))
    if not participants:
        raise DataFormatError("no participants")
    for m in participants:
        validate_model_id(m)
    store = OutputStore()
    for lineno, obj in _read_jsonl(path):
        store.put(
            str(_require(obj, "prompt_id", path, lineno)),
            str(_require(obj, "model_id", path, lineno)),
            str(_require(obj, "response", path, lineno)),
        )
    gaps = store.missing_pairs(participants, prompts)
    if gaps:
        listing = ", ".join(f"({p}, {m})" for p, m in gaps[:20])
        more = "" if len(gaps) <= 20 else f" (+{len(gaps) - 20} more)"
        raise DataFormatError(f"{path}: missing (prompt, model) pairs: {listing}{more}")
    return store


def save_output_store(store: OutputStore, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (prompt_id, model_id), response in sorted(store.items()):
            fh.write(
                _dump_line(
                    {"prompt_id": prompt_id, "model_id": model_id, "response": response}
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# match ledger


def _record_to_obj(record: MatchRecord) -> dict:
    return {
        "prompt_id": record.prompt_id,
        "model_a": record.model_a,
        "model_b": record.model_b,
        "winner": record.winner,
        "judge_id": record.judge_id,
        "position_swapped": record.position_swapped,
        "trial_id": record.trial_id,
    }


def ledger_write(ledger: MatchLedger, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in ledger:
            fh.write(_dump_line(_record_to_obj(record)) + "\n")


def ledger_read(path: str | Path) -> MatchLedger:
    records = []
    for lineno, obj in _read_jsonl(path):
        try:
            records.append(
                MatchRecord(
                    prompt_id=str(_require(obj, "prompt_id", path, lineno)),
                    model_a=str(_require(obj, "model_a", path, lineno)),
                    model_b=str(_require(obj, "model_b", path, lineno)),
                    winner=str(_require(obj, "winner", path, lineno)),
                    judge_id=str(_require(obj, "judge_id", path, lineno)),
                    position_swapped=bool(obj.get("position_swapped", False)),
                    trial_id=obj.get("trial_id"),
                )
            )
        except DataFormatError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    return MatchLedger(records)


# ---------------------------------------------------------------------------
# rating table


def save_rating_table(table: RatingTable, path: str | Path) -> None:
    meta = None
    if table.fit_meta is not None:
        meta = {
            "iterations": table.fit_meta.iterations,
            "gradient_norm": table.fit_meta.gradient_norm,
            "regularization": table.fit_meta.regularization,
        }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump_line({"anchor_mean": table.anchor_mean, "fit_meta": meta}) + "\n")
        for model in table.models:
            fh.write(_dump_line({"model": model, "rating": table.ratings[model]}) + "\n")


def load_rating_table(path: str | Path) -> RatingTable:
    lines = iter(_read_jsonl(path))
    try:
        _, header = next(lines)
    except StopIteration:
        raise DataFormatError(f"{path}: empty rating table file") from None
    if "anchor_mean" not in header:
        raise DataFormatError(f"{path}:1: first line must carry 'anchor_mean'")
    meta = header.get("fit_meta")
    fit_meta = None
    if meta is not None:
        fit_meta = FitMeta(
            iterations=int(meta["iterations"]),
            gradient_norm=float(meta["gradient_norm"]),
            regularization=float(meta["regularization"]),
        )
    ratings = {}
    for lineno, obj in lines:
        model = str(_require(obj, "model", path, lineno))
        if model in ratings:
            raise DataFormatError(f"{path}:{lineno}: duplicate model {model!r}")
        ratings[model] = float(_require(obj, "rating", path, lineno))
    try:
        return RatingTable(ratings, float(header["anchor_mean"]), fit_meta)
    except DataFormatError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# leaderboard


def save_leaderboard(board: Leaderboard, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LEADERBOARD_HEADER)
        for e in board:
            writer.writerow(
                [
                    e.rank,
                    e.model,
                    repr(e.score),
                    "" if e.ci_low is None else repr(e.ci_low),
                    "" if e.ci_high is None else repr(e.ci_high),
                ]
            )


def load_leaderboard(path: str | Path) -> Leaderboard:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty leaderboard file") from None
        if header != LEADERBOARD_HEADER:
            raise DataFormatError(f"{path}: unexpected header {header!r}")
        entries = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(LEADERBOARD_HEADER):
                raise DataFormatError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            rank, model, score, lo, hi = row
            try:
                entries.append(
                    LeaderboardEntry(
                        rank=int(rank),
                        model=model,
                        score=float(score),
                        ci_low=None if lo == "" else float(lo),
                        ci_high=None if hi == "" else float(hi),
                    )
                )
            except (ValueError, DataFormatError) as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    try:
        return Leaderboard(tuple(entries))
    except DataFormatError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def leaderboard_to_document(board: Leaderboard) -> dict:
    """The leaderboard as one structured document (for JSON emission)."""
    return {
        "entries": [
            {
                "rank": e.rank,
                "model": e.model,
                "score": e.score,
                "ci_low": e.ci_low,
                "ci_high": e.ci_high,
            }
            for e in board
        ]
    }


def leaderboard_from_document(doc: dict) -> Leaderboard:
    return Leaderboard(
        tuple(
            LeaderboardEntry(
                rank=int(e["rank"]),
                model=str(e["model"]),
                score=float(e["score"]),
                ci_low=e.get("ci_low"),
                ci_high=e.get("ci_high"),
            )
            for e in doc["entries"]
        )
    )
