"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: data problems exit 2, judge/backend
problems exit 3, usage problems exit 1.
"""

from __future__ import annotations


class ArenaError(Exception):
    """Base class for all package errors."""


class DataFormatError(ArenaError):
    """Invalid or inconsistent input data (files, ids, domain violations)."""


class JudgeError(ArenaError):
    """A judge backend could not produce a verdict."""


class CacheMissError(JudgeError):
    """Cache lookup failed; carries the (prompt, pair) that was missing."""

    def __init__(self, prompt_id: str, model_a: str, model_b: str):
        super().__init__(
            f"no cached verdict for prompt {prompt_id!r}, pair ({model_a!r}, {model_b!r})"
        )
        self.prompt_id = prompt_id
        self.pair = (model_a, model_b)


class VerdictParseError(JudgeError):
    """The judge replied with text matching neither expected verdict."""

    def __init__(self, message: str, raw_reply: str):
        super().__init__(f"{message}; raw reply: {raw_reply!r}")
        self.raw_reply = raw_reply


class JudgeServiceError(JudgeError):
    """Transport-level failure talking to an external judge service."""


class FitError(ArenaError):
    """Rating fit could not be performed on the given ledger."""


class NonConvergenceError(FitError):
    """Optimizer did not reach the gradient tolerance.

    Carries the last observed gradient norm and the number of iterations
    performed.
    """

    def __init__(self, message: str, gradient_norm: float, iterations: int):
        super().__init__(
            f"{message} (gradient norm {gradient_norm:.3e} after {iterations} iterations)"
        )
        self.gradient_norm = gradient_norm
        self.iterations = iterations


class StatsError(ArenaError):
    """Metric inputs are degenerate or mismatched."""


class TournamentAborted(ArenaError):
    """A judge failure interrupted an iterated-tournament run.

    Carries the records of every tournament that did complete, so callers
    can flush a partial ledger together with a resume marker.
    """

    def __init__(self, failures, partial_records, completed_prompt_ids):
        pairs = ", ".join(f"{pid}: {err}" for pid, err in failures[:3])
        more = "" if len(failures) <= 3 else f" (+{len(failures) - 3} more)"
        super().__init__(f"judge failed on {len(failures)} prompt(s): {pairs}{more}")
        self.failures = list(failures)
        self.partial_records = list(partial_records)
        self.completed_prompt_ids = list(completed_prompt_ids)
