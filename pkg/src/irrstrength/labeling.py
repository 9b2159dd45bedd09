"""Second stage: x-values on V0, integer budgets, and the fine tuning
that pins the V0 weighted degrees to a consecutive run of targets.

The x-values order V0; conditions (3)-(6) certify the order statistics
and the heavy-neighbor counts are concentrated. The weight budgets are
the only place real arithmetic meets integer rounding, so every ceiling
of a log expression goes through a guarded helper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from mpmath import mp

from .errors import InputFormatError, ParameterError, StageFailure
from .graphs import Graph
from .partition import PipelineParams, VertexPartition
from .report import ConditionCheck, ConditionReport
from .seeds import derive_seed

# stage tags in pipeline order
STAGE_INITIAL = "initial"
STAGE_TUNED = "tuned"
STAGE_DISTINGUISHED = "distinguished"
STAGE_FINAL = "final"
_STAGE_ORDER = (STAGE_INITIAL, STAGE_TUNED, STAGE_DISTINGUISHED, STAGE_FINAL)

_NEAR_INTEGER_TOL = 1e-9


# ---------------------------------------------------------------------------
# budgets


@dataclass(frozen=True)
class Budgets:
    """Integer weight budgets derived from (n, d, b, eps).

    base: weight unit on heavy inner V0 edges, ceil(n/d).
    class_step: class increment on V0-U edges, ceil(n/(d ln^b n)).
    fine_cap: per-edge cap of the fine-tuning increments, ceil(n/(d ln^{b+eps} n)).
    coarse_step: step of the distinguishing stage, floor(n/(3d)).
    target_base: offset of the V0 target run, so targets are target_base + j.
    delta_span: width the tuning increments are expected to need
        asymptotically; may be nonpositive at small n, which the
        pipeline (not this function) rejects.
    near_integer_fields: fields whose real-valued quotient fell within
        1e-9 of an integer and were re-evaluated in high precision.
    """

    base: int
    class_step: int
    fine_cap: int
    coarse_step: int
    target_base: int
    delta_span: int
    near_integer_fields: tuple[str, ...] = ()

    def label_cap(self) -> int:
        """Largest final edge label the construction may produce."""
        return self.base + 7 * self.class_step + self.fine_cap + 1


def _ceil_log_term(n: int, k: int, power: float) -> tuple[int, bool]:
    """ceil(n / (k * ln(n)^power)) with a near-integer guard.

    Within 1e-9 of an integer the float result is untrustworthy, so the
    quotient is recomputed at 60 significant digits and flagged.
    """
    q = n / (k * math.log(n) ** power)
    frac = q - math.floor(q)
    if min(frac, 1.0 - frac) < _NEAR_INTEGER_TOL:
        with mp.workdps(60):
            hq = mp.mpf(n) / (mp.mpf(k) * mp.log(n) ** mp.mpf(power))
            return int(mp.ceil(hq)), True
    return math.ceil(q), False


def compute_budgets(n: int, d: int, b: float, eps: float) -> Budgets:
    if n < 3:
        raise ParameterError(f"need n >= 3, got {n}")
    if not 1 <= d < n:
        raise ParameterError(f"need 1 <= d < n, got d={d}, n={n}")
    if b <= 0 or eps <= 0:
        raise ParameterError(f"b and eps must be positive, got b={b}, eps={eps}")
    coarse_step = n // (3 * d)
    if coarse_step == 0:
        raise ParameterError(
            f"d too large for the distinguishing stage: floor(n/(3d)) = 0 for n={n}, d={d}"
        )
    flags: list[str] = []

    def term(name: str, k: int, power: float) -> int:
        value, flagged = _ceil_log_term(n, k, power)
        if flagged:
            flags.append(name)
        return value

    base = -(-n // d)
    class_step = term("class_step", d, b)
    fine_cap = term("fine_cap", d, b + eps)
    target_base = (
        term("target_base", 1, b + eps)
        + 4 * term("target_base", 1, 2 * b + eps)
        + 2 * term("target_base", 1, 2 * b + 3 * eps)
    )
    delta_span = term("delta_span", 1, 2 * b + 2 * eps) - 2 * term(
        "delta_span", 1, 3 * b + 5 * eps
    )
    seen: list[str] = []
    for name in flags:
        if name not in seen:
            seen.append(name)
    return Budgets(
        base=base,
        class_step=class_step,
        fine_cap=fine_cap,
        coarse_step=coarse_step,
        target_base=target_base,
        delta_span=delta_span,
        near_integer_fields=tuple(seen),
    )


# ---------------------------------------------------------------------------
# x-values


@dataclass
class XAssignment:
    """Uniform x-values on V0 with the induced total order.

    The order sorts by (x, vertex id); the id tiebreak makes the order
    total even under float ties, so position j in ``order`` always has
    exactly j earlier vertices (its |L| count).
    """

    x: np.ndarray
    order: np.ndarray
    rank: np.ndarray
    r_size: np.ndarray

    def l_size(self, v: int) -> int:
        return int(self.rank[v])


def sample_x(g: Graph, part: VertexPartition, seed: int) -> XAssignment:
    v0 = part.v0_vertices()
    if v0.size == 0:
        raise ParameterError("V0 is empty; nothing to order")
    rng = np.random.default_rng(seed)
    draws = rng.random(v0.size)
    x = np.full(g.n, np.nan)
    x[v0] = draws
    order = v0[np.lexsort((v0, draws))]
    rank = np.full(g.n, -1, dtype=np.int64)
    rank[order] = np.arange(order.size, dtype=np.int64)

    # |R_v| = heavy G0-edges at v: x_u + x_v >= 1, i.e. x_u >= 1 - x_v
    eu, ev = g.edges[:, 0], g.edges[:, 1]
    inner = (~part.in_u[eu]) & (~part.in_u[ev])
    iu, iv = eu[inner], ev[inner]
    heavy = x[iu] + x[iv] >= 1.0
    r_size = np.zeros(g.n, dtype=np.int64)
    np.add.at(r_size, iu[heavy], 1)
    np.add.at(r_size, iv[heavy], 1)
    return XAssignment(x=x, order=order, rank=rank, r_size=r_size)


def check_x_conditions(
    g: Graph, part: VertexPartition, xa: XAssignment, p: PipelineParams
) -> ConditionReport:
    """Conditions (3)-(6): order-position and heavy-count concentration,
    split by whether x_v clears the threshold 1/ln^{2b+3eps} n."""
    n = g.n
    logn = math.log(n)
    tau = 1.0 / logn ** (2 * p.b + 3 * p.eps)
    rel = 1.0 / logn ** (2 * p.b + 4 * p.eps)
    low1 = 1.0 / logn ** (2 * p.b + 3 * p.eps)
    low2 = 1.0 / logn ** (4 * p.b + 7 * p.eps)

    v0 = part.v0_vertices()
    n0 = v0.size
    x = xa.x[v0]
    l_sz = xa.rank[v0].astype(np.float64)
    r_sz = xa.r_size[v0].astype(np.float64)
    d0 = part.d0[v0].astype(np.float64)
    above = x >= tau

    report = ConditionReport(slack=p.slack)

    def add(cond: str, label: str, mask: np.ndarray, dev: np.ndarray, bound: np.ndarray) -> None:
        if not np.any(mask):
            report.checks.append(
                ConditionCheck(cond=cond, label=label, passed=True, measured=0.0, bound=0.0)
            )
            return
        dv = dev[mask]
        bd = bound[mask] * p.slack
        margin = dv - bd
        worst = int(np.argmax(margin))
        viol = int(np.count_nonzero(margin > 0))
        vid = int(v0[np.nonzero(mask)[0][worst]])
        witness = ""
        if viol:
            witness = f"v={vid} x={xa.x[vid]!r} deviation {dv[worst]!r} > {bd[worst]!r}"
        report.checks.append(
            ConditionCheck(
                cond=cond,
                label=label,
                passed=viol == 0,
                measured=float(dv[worst]),
                bound=float(bd[worst]),
                witness=witness,
                violations=viol,
            )
        )

    add("(3°)", "order position vs x", above, np.abs(l_sz - x * (n0 - 1)), x * (n0 - 1) * rel)
    add(
        "(4°)",
        "order position, small x",
        ~above,
        l_sz,
        np.full(n0, (n0 - 1) * (low1 + low2)),
    )
    add("(5°)", "heavy count vs x", above, np.abs(r_sz - x * d0), x * d0 * rel)
    add("(6°)", "heavy count, small x", ~above, r_sz, d0 * (low1 + low2))
    return report


def find_x(
    g: Graph, part: VertexPartition, p: PipelineParams, seed: int
) -> tuple[XAssignment, ConditionReport, int]:
    """Las Vegas loop over x samples until conditions (3)-(6) pass."""
    last: ConditionReport | None = None
    for attempt in range(p.max_retries + 1):
        xa = sample_x(g, part, derive_seed(seed, "x", attempt))
        rep = check_x_conditions(g, part, xa, p)
        if rep.passed:
            return xa, rep, attempt + 1
        last = rep
    worst = last.worst() if last is not None else None
    detail = worst.line() if worst is not None else "no report"
    raise StageFailure(
        stage="x",
        kind="x_conditions",
        message=(
            f"no x assignment met conditions (3°)-(6°) in {p.max_retries + 1} attempts; "
            f"tightest: {detail}"
        ),
        witness=last,
    )


# ---------------------------------------------------------------------------
# weighting state


@dataclass
class WeightingState:
    """Edge weights with cached weighted degrees and stage bookkeeping.

    mod_count tracks modifications made by the distinguishing pass only
    (its initialization excluded); the final uniform +1 shift does not
    count either. last_mod_stage holds the stage ordinal of each edge's
    most recent weight change, giving unchanged-since-tuned witnesses.
    """

    stage: str
    weights: np.ndarray
    sigma: np.ndarray
    mod_count: np.ndarray
    last_mod_stage: np.ndarray
    v0_sigma_at_tuned: np.ndarray | None = None

    def stage_ord(self) -> int:
        return _STAGE_ORDER.index(self.stage)

    def require_stage(self, expected: str) -> None:
        if self.stage != expected:
            raise ParameterError(f"operation requires stage {expected!r}, state is at {self.stage!r}")


def recompute_sigma(g: Graph, weights: np.ndarray) -> np.ndarray:
    """Independent weighted-degree recomputation (the cache oracle)."""
    w = weights.astype(np.float64)
    s = np.bincount(g.edges[:, 0], weights=w, minlength=g.n)
    s += np.bincount(g.edges[:, 1], weights=w, minlength=g.n)
    # integer sums well below 2^53 stay exact in float64
    return s.astype(np.int64)


def initial_weighting(
    g: Graph, part: VertexPartition, xa: XAssignment, budgets: Budgets
) -> WeightingState:
    """Base weighting: heavy inner V0 edges get base, V0-U edges get
    base + class * class_step, U-edges start at zero."""
    eu, ev = g.edges[:, 0].astype(np.int64), g.edges[:, 1].astype(np.int64)
    ku, kv = part.klass[eu].astype(np.int64), part.klass[ev].astype(np.int64)
    w = np.zeros(g.num_edges, dtype=np.int64)

    inner = (ku == 0) & (kv == 0)
    iu, iv = eu[inner], ev[inner]
    heavy = xa.x[iu] + xa.x[iv] >= 1.0
    wi = np.where(heavy, np.int64(budgets.base), np.int64(0))
    w[inner] = wi

    cross = (ku == 0) != (kv == 0)
    klass_edge = np.maximum(ku, kv)[cross]
    w[cross] = budgets.base + klass_edge * budgets.class_step

    return WeightingState(
        stage=STAGE_INITIAL,
        weights=w,
        sigma=recompute_sigma(g, w),
        mod_count=np.zeros(g.num_edges, dtype=np.int16),
        last_mod_stage=np.zeros(g.num_edges, dtype=np.int8),
    )


@dataclass
class FeasibilityReport:
    """Diagnostics of the fine-tuning stage.

    deltas[j] is the increment vertex j of the sorted V0 order needed;
    sandwich_rate is the fraction landing in [1, delta_span], the window
    the asymptotic analysis predicts; separation_ok compares the largest
    V0 weighted degree against the smallest one on U.
    """

    deltas: np.ndarray
    capacities: np.ndarray
    feasible: bool
    sandwich_rate: float
    separation_ok: bool
    max_v0_sigma: int
    min_u_sigma: int


def assign_omega_prime(
    g: Graph,
    part: VertexPartition,
    xa: XAssignment,
    budgets: Budgets,
    state: WeightingState,
    params: PipelineParams,
) -> FeasibilityReport:
    """Raise each sorted-V0 vertex to its target weighted degree.

    All-or-nothing: every needed increment must fit [0, du(v) * fine_cap]
    before any edge is touched. Increments spread greedily over the
    vertex's U-edges in ascending neighbor order, each edge capped at
    fine_cap, so the per-edge window holds by construction.
    """
    state.require_stage(STAGE_INITIAL)
    order = xa.order
    n0 = order.size
    targets = budgets.target_base + 1 + np.arange(n0, dtype=np.int64)
    deltas = targets - state.sigma[order]
    capacities = part.du[order].astype(np.int64) * budgets.fine_cap

    bad = (deltas < 0) | (deltas > capacities)
    if np.any(bad):
        j = int(np.nonzero(bad)[0][0])
        v = int(order[j])
        raise StageFailure(
            stage="omega_prime",
            kind="delta_infeasible",
            message=(
                f"tuning increment infeasible at position j={j + 1} (vertex {v}): "
                f"needed {int(deltas[j])}, capacity window [0, {int(capacities[j])}] "
                f"({int(np.count_nonzero(bad))} positions violate in total)"
            ),
            witness={
                "j": j + 1,
                "vertex": v,
                "delta": int(deltas[j]),
                "capacity": int(capacities[j]),
                "violations": int(np.count_nonzero(bad)),
            },
        )

    cap = budgets.fine_cap
    w = state.weights
    for idx in range(n0):
        delta = int(deltas[idx])
        if delta == 0:
            continue
        v = int(order[idx])
        nbrs = g.neighbors(v)
        eids = g.incident_edges(v)
        u_eids = eids[part.in_u[nbrs]]
        full, rem = divmod(delta, cap)
        w[u_eids[:full]] += cap
        state.last_mod_stage[u_eids[:full]] = 1
        if rem:
            w[u_eids[full]] += rem
            state.last_mod_stage[u_eids[full]] = 1

    state.sigma = recompute_sigma(g, w)
    if not np.array_equal(state.sigma[order], targets):
        raise RuntimeError("tuning stage failed to hit its targets; internal invariant broken")
    state.stage = STAGE_TUNED
    state.v0_sigma_at_tuned = state.sigma[part.v0_vertices()].copy()

    u_verts = part.u_vertices()
    max_v0 = int(targets[-1]) if n0 else 0
    min_u = int(state.sigma[u_verts].min()) if u_verts.size else 0
    separation_ok = bool(u_verts.size == 0 or max_v0 < min_u)
    span = budgets.delta_span
    sandwich = float(np.count_nonzero((deltas >= 1) & (deltas <= span)) / max(n0, 1))
    report = FeasibilityReport(
        deltas=deltas,
        capacities=capacities,
        feasible=True,
        sandwich_rate=sandwich,
        separation_ok=separation_ok,
        max_v0_sigma=max_v0,
        min_u_sigma=min_u,
    )
    if params.strict and not separation_ok:
        raise StageFailure(
            stage="omega_prime",
            kind="separation",
            message=(
                f"V0 weighted degrees reach {max_v0}, not below the U minimum {min_u}; "
                "the asymptotic ordering between V0 and U does not hold at this size"
            ),
            witness=report,
        )
    return report


# ---------------------------------------------------------------------------
# CSV weight serialization


def write_weight_rows(g: Graph, weights: np.ndarray, path: str, header: str) -> None:
    """Shared CSV body: one comment header line, then u,v,weight rows."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# {header}\n")
        fh.write("u,v,weight\n")
        rows = [
            f"{g.edges[eid, 0]},{g.edges[eid, 1]},{weights[eid]}\n"
            for eid in range(g.num_edges)
        ]
        fh.writelines(rows)


def write_weights_csv(
    g: Graph,
    state: WeightingState,
    path: str,
    n: int,
    d: int,
    b: float,
    eps: float,
    seed: int,
) -> None:
    header = f"stage={state.stage} n={n} d={d} b={b!r} eps={eps!r} seed={seed}"
    write_weight_rows(g, state.weights, path, header)


def read_weights_csv(path: str, g: Graph) -> np.ndarray:
    """Load a weight vector aligned with g's edge ids."""
    weights = np.zeros(g.num_edges, dtype=np.int64)
    seen = np.zeros(g.num_edges, dtype=bool)
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#") or text == "u,v,weight":
                continue
            parts = text.split(",")
            if len(parts) != 3:
                raise InputFormatError(f"line {lineno}: expected u,v,weight, got {text!r}")
            try:
                u, v, wt = int(parts[0]), int(parts[1]), int(parts[2])
            except ValueError:
                raise InputFormatError(f"line {lineno}: non-integer field in {text!r}") from None
            eid = g.edge_between(u, v)
            if eid is None:
                raise InputFormatError(f"line {lineno}: edge ({u},{v}) not in graph")
            if seen[eid]:
                raise InputFormatError(f"line {lineno}: duplicate weight for edge ({u},{v})")
            seen[eid] = True
            weights[eid] = wt
    if not np.all(seen):
        missing = int(np.nonzero(~seen)[0][0])
        u, v = g.edges[missing]
        raise InputFormatError(f"no weight given for edge ({u},{v})")
    return weights
