"""End-to-end orchestration: partition, x sampling, the three weight
stages, separation checks, and final verification, with a deterministic
flat-text report. Stage timings go to stderr only, never into reports."""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass, field

from .distinguish import DistinguishDiagnostics, run_distinguishing, separation_checks
from .errors import ParameterError, StageFailure
from .graphs import Graph
from .labeling import (
    Budgets,
    FeasibilityReport,
    WeightingState,
    assign_omega_prime,
    compute_budgets,
    find_x,
    initial_weighting,
)
from .partition import PipelineParams, VertexPartition, find_partition, membership_probability
from .report import ConditionReport
from .verify import VerificationResult, finalize_and_check

FAILURE_KINDS = (
    "parameter",
    "partition_conditions",
    "x_conditions",
    "delta_infeasible",
    "kkp_no_option",
    "kkp_threshold",
    "separation",
    "verification",
    "bound",
)


def strict_degree_window(n: int, b: float, eps: float) -> tuple[float, float]:
    """Degree range the asymptotic guarantee covers:
    ln^(1+6b+12eps) n <= d <= n / ln^(2b+5eps) n."""
    if n < 3:
        raise ParameterError(f"need n >= 3, got {n}")
    logn = math.log(n)
    return logn ** (1.0 + 6.0 * b + 12.0 * eps), n / logn ** (2.0 * b + 5.0 * eps)


@dataclass
class PipelineResult:
    """Everything one run produced, success or not.

    Failed runs carry the failing stage, its kind from FAILURE_KINDS,
    and a message naming the witness; all reports gathered before the
    failure stay available.
    """

    n: int
    d: int | None
    params: PipelineParams
    seed: int
    success: bool = False
    membership_prob: float | None = None
    window_low: float | None = None
    window_high: float | None = None
    window_contains_d: bool | None = None
    budgets: Budgets | None = None
    partition: VertexPartition | None = None
    partition_report: ConditionReport | None = None
    partition_attempts: int = 0
    x_report: ConditionReport | None = None
    x_attempts: int = 0
    feasibility: FeasibilityReport | None = None
    diagnostics: DistinguishDiagnostics | None = None
    separation: ConditionReport | None = None
    verification: VerificationResult | None = None
    state: WeightingState | None = None
    failure_stage: str | None = None
    failure_kind: str | None = None
    failure_message: str | None = None
    timings: list[tuple[str, float]] = field(default_factory=list)

    def to_text(self) -> str:
        p = self.params
        lines = [
            f"n={self.n}",
            f"d={'' if self.d is None else self.d}",
            f"b={p.b!r}",
            f"eps={p.eps!r}",
            f"slack={p.slack!r}",
            f"mode={p.mode}",
            f"seed={self.seed}",
            f"success={str(self.success).lower()}",
        ]
        if self.failure_kind is not None:
            lines.append(f"failure.stage={self.failure_stage}")
            lines.append(f"failure.kind={self.failure_kind}")
            lines.append(f"failure.message={self.failure_message}")
        if self.membership_prob is not None:
            lines.append(f"membership_prob={self.membership_prob!r}")
        if self.window_low is not None:
            lines.append(f"window.low={self.window_low!r}")
            lines.append(f"window.high={self.window_high!r}")
            lines.append(f"window.contains_d={str(self.window_contains_d).lower()}")
        if self.budgets is not None:
            bg = self.budgets
            lines.append(f"budgets.base={bg.base}")
            lines.append(f"budgets.class_step={bg.class_step}")
            lines.append(f"budgets.fine_cap={bg.fine_cap}")
            lines.append(f"budgets.coarse_step={bg.coarse_step}")
            lines.append(f"budgets.target_base={bg.target_base}")
            lines.append(f"budgets.delta_span={bg.delta_span}")
            lines.append(f"budgets.label_cap={bg.label_cap()}")
            lines.append(f"budgets.near_integer={','.join(bg.near_integer_fields)}")
        if self.partition_report is not None:
            lines.append(f"partition.attempts={self.partition_attempts}")
            lines.extend(_prefixed("partition.", self.partition_report.to_text()))
        if self.x_report is not None:
            lines.append(f"x.attempts={self.x_attempts}")
            lines.extend(_prefixed("x.", self.x_report.to_text()))
        if self.feasibility is not None:
            fz = self.feasibility
            lines.append(f"tuning.feasible={str(fz.feasible).lower()}")
            lines.append(f"tuning.sandwich_rate={fz.sandwich_rate!r}")
            lines.append(f"tuning.separation_ok={str(fz.separation_ok).lower()}")
            lines.append(f"tuning.max_v0_sigma={fz.max_v0_sigma}")
            lines.append(f"tuning.min_u_sigma={fz.min_u_sigma}")
        if self.diagnostics is not None:
            dg = self.diagnostics
            lines.append(f"distinguish.components={dg.components}")
            lines.append(f"distinguish.endgame_vertices={len(dg.endgame_vertices)}")
            lines.append(f"distinguish.multi_pairs={dg.multi_pair_count}")
            lines.append(f"distinguish.per_class_injective={str(dg.per_class_injective).lower()}")
            lines.append(f"distinguish.u_injective={str(dg.u_injective).lower()}")
            lines.append(f"distinguish.min_increment={dg.min_increment}")
            lines.append(f"distinguish.max_increment={dg.max_increment}")
        if self.separation is not None:
            lines.extend(_prefixed("separation.", self.separation.to_text()))
        if self.verification is not None:
            lines.extend(_prefixed("verification.", self.verification.to_text()))
        return "\n".join(lines) + "\n"


def _prefixed(prefix: str, block: str) -> list[str]:
    return [prefix + line for line in block.rstrip("\n").split("\n")]


def run_pipeline(
    g: Graph, params: PipelineParams, seed: int, emit_timings: bool = False
) -> PipelineResult:
    """Run every stage in order; never raises on stage failure.

    The returned result always exists: entry validation problems appear
    as kind "parameter", stage aborts under their own kind, and a
    weighting that survives every stage but fails verification or the
    label bound is reported as "verification" or "bound".
    """
    result = PipelineResult(n=g.n, d=None, params=params, seed=seed)
    clock: list[tuple[str, float]] = []

    def fail(stage: str, kind: str, message: str) -> PipelineResult:
        result.failure_stage = stage
        result.failure_kind = kind
        result.failure_message = message
        result.timings = clock
        if emit_timings:
            _print_timings(clock)
        return result

    try:
        d = g.regular_degree()
        result.d = d
        budgets = compute_budgets(g.n, d, params.b, params.eps)
        result.budgets = budgets
        result.membership_prob = membership_probability(g.n, params.b, params.eps)
        if budgets.delta_span < 1:
            raise ParameterError(
                f"tuning span N={budgets.delta_span} is not positive at n={g.n}; "
                "the fine-tuning targets cannot fit"
            )
        lo, hi = strict_degree_window(g.n, params.b, params.eps)
        result.window_low, result.window_high = lo, hi
        result.window_contains_d = lo <= d <= hi
        if params.strict and not result.window_contains_d:
            raise ParameterError(
                f"d={d} outside the guaranteed degree window [{lo!r}, {hi!r}] "
                "and mode is strict"
            )
    except ParameterError as exc:
        return fail("entry", "parameter", str(exc))

    try:
        t0 = time.perf_counter()
        part, prep, attempts = find_partition(g, params, seed)
        clock.append(("partition", time.perf_counter() - t0))
        result.partition = part
        result.partition_report = prep
        result.partition_attempts = attempts

        t0 = time.perf_counter()
        xa, xrep, xattempts = find_x(g, part, params, seed)
        clock.append(("x", time.perf_counter() - t0))
        result.x_report = xrep
        result.x_attempts = xattempts

        t0 = time.perf_counter()
        state = initial_weighting(g, part, xa, budgets)
        result.state = state
        result.feasibility = assign_omega_prime(g, part, xa, budgets, state, params)
        clock.append(("tuning", time.perf_counter() - t0))

        t0 = time.perf_counter()
        result.diagnostics = run_distinguishing(g, part, budgets, state, params)
        clock.append(("distinguish", time.perf_counter() - t0))

        t0 = time.perf_counter()
        sep = separation_checks(g, part, state, budgets)
        result.separation = sep
        clock.append(("separation", time.perf_counter() - t0))
        if not sep.passed:
            worst = sep.worst()
            detail = worst.line() if worst is not None else "unknown"
            return fail("separation", "separation", f"ordering violated: {detail}")

        t0 = time.perf_counter()
        ver = finalize_and_check(g, state, budgets)
        result.verification = ver
        clock.append(("verify", time.perf_counter() - t0))
        if not ver.irregular:
            w = ver.witness
            return fail(
                "verification",
                "verification",
                f"weighted degrees collide at pair ({w[0]},{w[1]})",
            )
        if not ver.bound_ok:
            return fail(
                "verification",
                "bound",
                f"max label {ver.max_label} exceeds the cap {budgets.label_cap()}",
            )
    except StageFailure as exc:
        return fail(exc.stage, exc.kind, exc.message)
    except ParameterError as exc:
        return fail("stage", "parameter", str(exc))

    result.success = True
    result.timings = clock
    if emit_timings:
        _print_timings(clock)
    return result


def _print_timings(clock: list[tuple[str, float]]) -> None:
    for stage, seconds in clock:
        print(f"timing stage={stage} seconds={seconds:.3f}", file=sys.stderr)
