from __future__ import annotations

import math

import numpy as np
import pytest

from irrstrength import (
    Budgets,
    Graph,
    InputFormatError,
    ParameterError,
    PipelineParams,
    StageFailure,
    VertexPartition,
    XAssignment,
    assign_omega_prime,
    check_x_conditions,
    compute_budgets,
    find_x,
    generate_random_regular,
    initial_weighting,
    read_weights_csv,
    recompute_sigma,
    sample_partition,
    sample_x,
    write_weights_csv,
)
from irrstrength.labeling import _ceil_log_term


def empirical(slack: float = 1.0, retries: int = 100) -> PipelineParams:
    return PipelineParams(b=1.0, eps=1 / 12, slack=slack, max_retries=retries, mode="empirical")


def make_partition(g: Graph, klass_list: list[int]) -> VertexPartition:
    """Partition with caches rebuilt by brute force from the labels."""
    klass = np.array(klass_list, dtype=np.int8)
    in_u = klass > 0
    du = np.zeros(g.n, dtype=np.int32)
    d0 = np.zeros(g.n, dtype=np.int32)
    dui = np.zeros((g.n, 7), dtype=np.int32)
    for v in range(g.n):
        for u in g.neighbors(v):
            k = int(klass[u])
            if k:
                du[v] += 1
                dui[v, k - 1] += 1
            else:
                d0[v] += 1
    return VertexPartition(in_u=in_u, klass=klass, du=du, d0=d0, dui=dui)


def make_x(g: Graph, part: VertexPartition, values: dict[int, float]) -> XAssignment:
    """XAssignment with the order caches rebuilt from explicit x values."""
    x = np.full(g.n, np.nan)
    for v, xv in values.items():
        x[v] = xv
    v0 = part.v0_vertices()
    order = np.array(sorted(v0, key=lambda v: (x[v], v)), dtype=np.int64)
    rank = np.full(g.n, -1, dtype=np.int64)
    rank[order] = np.arange(order.size)
    r_size = np.zeros(g.n, dtype=np.int64)
    for eid in range(g.num_edges):
        u, v = int(g.edges[eid, 0]), int(g.edges[eid, 1])
        if not part.in_u[u] and not part.in_u[v] and x[u] + x[v] >= 1.0:
            r_size[u] += 1
            r_size[v] += 1
    return XAssignment(x=x, order=order, rank=rank, r_size=r_size)


class TestComputeBudgets:
    def test_frozen_reference_point(self):
        # values re-derived independently at 40 digits before freezing
        bud = compute_budgets(20000, 1000, 0.2, 0.05)
        assert (bud.base, bud.class_step, bud.fine_cap, bud.coarse_step) == (20, 13, 12, 6)
        assert bud.target_base == 51121
        assert bud.delta_span == 658
        assert bud.label_cap() == 124
        assert bud.near_integer_fields == ()

    def test_frozen_small_points(self):
        bud = compute_budgets(5000, 1000, 0.2, 0.05)
        assert (bud.base, bud.class_step, bud.fine_cap, bud.coarse_step) == (5, 4, 3, 1)
        assert (bud.target_base, bud.delta_span, bud.label_cap()) == (13635, 94, 37)

    def test_nonpositive_span_is_returned_not_raised(self):
        bud = compute_budgets(30, 3, 1.0, 1.0)
        assert (bud.base, bud.class_step, bud.fine_cap, bud.coarse_step) == (10, 3, 1, 3)
        assert bud.target_base == 9
        assert bud.delta_span == -1  # rejecting this is the pipeline's job
        assert bud.label_cap() == 33

    def test_zero_coarse_step_rejected(self):
        with pytest.raises(ParameterError, match="floor"):
            compute_budgets(10, 4, 1.0, 1.0)

    def test_domain(self):
        with pytest.raises(ParameterError):
            compute_budgets(2, 1, 1.0, 1.0)
        with pytest.raises(ParameterError):
            compute_budgets(100, 0, 1.0, 1.0)
        with pytest.raises(ParameterError):
            compute_budgets(100, 100, 1.0, 1.0)
        with pytest.raises(ParameterError):
            compute_budgets(100, 3, 0.0, 1.0)

    def test_near_integer_guard_fires(self):
        # power chosen so n / ln(n)^power lands on an integer up to float
        # error, which is far inside the 1e-9 guard band
        power = math.log(1000 / 200) / math.log(math.log(1000))
        value, flagged = _ceil_log_term(1000, 1, power)
        assert flagged is True
        assert value in (200, 201)

    def test_plain_value_not_flagged(self):
        value, flagged = _ceil_log_term(1000, 7, 1.5)
        assert flagged is False
        assert value == math.ceil(1000 / (7 * math.log(1000) ** 1.5))


@pytest.fixture(scope="module")
def setup():
    g = generate_random_regular(200, 8, seed=21)
    part = sample_partition(g, empirical(), seed=2)
    xa = sample_x(g, part, seed=3)
    return g, part, xa


class TestSampleX:
    def test_values_only_on_v0(self, setup):
        g, part, xa = setup
        assert np.all(np.isfinite(xa.x[part.v0_vertices()]))
        assert np.all(np.isnan(xa.x[part.u_vertices()]))
        v0x = xa.x[part.v0_vertices()]
        assert v0x.min() >= 0.0 and v0x.max() < 1.0

    def test_order_is_sorted_and_rank_inverts(self, setup):
        g, part, xa = setup
        xs = xa.x[xa.order]
        assert np.all(np.diff(xs) >= 0)
        for j, v in enumerate(xa.order):
            assert xa.rank[v] == j
            assert xa.l_size(int(v)) == j
        assert np.all(xa.rank[part.u_vertices()] == -1)

    def test_r_size_matches_brute_force(self, setup):
        g, part, xa = setup
        brute = np.zeros(g.n, dtype=np.int64)
        for eid in range(g.num_edges):
            u, v = int(g.edges[eid, 0]), int(g.edges[eid, 1])
            if not part.in_u[u] and not part.in_u[v] and xa.x[u] + xa.x[v] >= 1.0:
                brute[u] += 1
                brute[v] += 1
        assert np.array_equal(xa.r_size, brute)

    def test_deterministic(self, setup):
        g, part, _ = setup
        a = sample_x(g, part, seed=3)
        c = sample_x(g, part, seed=3)
        assert np.array_equal(a.order, c.order)

    def test_empty_v0_rejected(self, setup):
        g, part, _ = setup
        allu = make_partition(g, [1] * g.n)
        with pytest.raises(ParameterError):
            sample_x(g, allu, seed=0)


class TestCheckXConditions:
    def test_condition_names_in_order(self):
        g = generate_random_regular(200, 8, seed=21)
        part = sample_partition(g, empirical(), seed=2)
        xa = sample_x(g, part, seed=3)
        rep = check_x_conditions(g, part, xa, empirical())
        assert [c.cond for c in rep.checks] == ["(3°)", "(4°)", "(5°)", "(6°)"]

    def test_empty_mask_passes_vacuously(self):
        # all x above the threshold leaves (4) and (6) without instances
        g = Graph(4, [(0, 1), (1, 2), (2, 3)])
        part = make_partition(g, [0, 0, 0, 0])
        xa = make_x(g, part, {0: 0.9, 1: 0.8, 2: 0.7, 3: 0.6})
        rep = check_x_conditions(g, part, xa, empirical())
        by = {c.cond: c for c in rep.checks}
        assert by["(4°)"].passed and by["(4°)"].bound == 0.0
        assert by["(6°)"].passed and by["(6°)"].bound == 0.0

    def test_slack_widens_monotonically(self):
        g = generate_random_regular(300, 10, seed=22)
        part = sample_partition(g, empirical(), seed=4)
        xa = sample_x(g, part, seed=5)
        reports = [check_x_conditions(g, part, xa, empirical(slack=s)) for s in (1.0, 2.0, 8.0)]
        for cond in range(4):
            viols = [r.checks[cond].violations for r in reports]
            assert viols == sorted(viols, reverse=True)


class TestFindX:
    def test_huge_slack_first_attempt(self):
        g = generate_random_regular(200, 8, seed=21)
        part = sample_partition(g, empirical(), seed=2)
        xa, rep, attempts = find_x(g, part, empirical(slack=1e9), seed=6)
        assert attempts == 1 and rep.passed

    def test_exhaustion_kind_and_stage(self):
        # integer order positions cannot meet sub-unit windows at n=100
        g = generate_random_regular(100, 10, seed=3)
        part = sample_partition(g, empirical(), seed=2)
        with pytest.raises(StageFailure) as exc:
            find_x(g, part, empirical(slack=1.0, retries=2), seed=6)
        assert exc.value.stage == "x"
        assert exc.value.kind == "x_conditions"
        assert "tightest:" in exc.value.message


def tiny_instance():
    """Six vertices, V0 = {0,1,2}, U = {3,4,5} with classes (1,1,2).

    Every initial weight below is hand computed; tests compare against
    these numbers, not against the code under test.
    """
    g = Graph(6, [(0, 3), (0, 4), (1, 4), (1, 5), (2, 3), (2, 5), (0, 1), (3, 4)])
    part = make_partition(g, [0, 0, 0, 1, 1, 2])
    xa = make_x(g, part, {0: 0.7, 1: 0.4, 2: 0.5})
    budgets = Budgets(
        base=10, class_step=3, fine_cap=12, coarse_step=2, target_base=40, delta_span=3
    )
    return g, part, xa, budgets


class TestInitialWeighting:
    def test_hand_oracle(self):
        g, part, xa, budgets = tiny_instance()
        state = initial_weighting(g, part, xa, budgets)
        # canonical edge order: (0,1) (0,3) (0,4) (1,4) (1,5) (2,3) (2,5) (3,4)
        assert state.weights.tolist() == [10, 13, 13, 13, 16, 13, 16, 0]
        assert state.sigma.tolist() == [36, 39, 29, 26, 26, 32]
        assert state.stage == "initial"
        assert np.all(state.mod_count == 0)
        assert np.all(state.last_mod_stage == 0)
        assert state.v0_sigma_at_tuned is None

    def test_light_inner_edge_zero(self):
        g, part, xa, budgets = tiny_instance()
        xa2 = make_x(g, part, {0: 0.2, 1: 0.4, 2: 0.5})  # 0.2+0.4 < 1
        state = initial_weighting(g, part, xa2, budgets)
        eid = g.edge_between(0, 1)
        assert state.weights[eid] == 0

    def test_sigma_cache_matches_recompute(self):
        g, part, xa, budgets = tiny_instance()
        state = initial_weighting(g, part, xa, budgets)
        assert np.array_equal(state.sigma, recompute_sigma(g, state.weights))


class TestAssignOmegaPrime:
    def test_feasible_hand_oracle(self):
        g, part, xa, budgets = tiny_instance()
        state = initial_weighting(g, part, xa, budgets)
        rep = assign_omega_prime(g, part, xa, budgets, state, empirical())
        # order is [1, 2, 0], targets 41, 42, 43; worked increments:
        # v1 needs 2 on edge (1,4); v2 needs 13 = 12 on (2,3) + 1 on (2,5);
        # v0 needs 7 on (0,3)
        assert state.weights.tolist() == [10, 20, 13, 15, 16, 25, 17, 0]
        assert state.sigma.tolist() == [43, 41, 42, 45, 28, 33]
        assert state.stage == "tuned"
        assert state.v0_sigma_at_tuned.tolist() == [43, 41, 42]
        touched = [g.edge_between(*e) for e in [(0, 3), (1, 4), (2, 3), (2, 5)]]
        assert sorted(np.nonzero(state.last_mod_stage == 1)[0].tolist()) == sorted(touched)
        assert np.all(state.mod_count == 0)
        assert rep.feasible is True
        assert rep.deltas.tolist() == [2, 13, 7]
        assert rep.capacities.tolist() == [24, 24, 24]
        assert rep.sandwich_rate == pytest.approx(1 / 3)
        assert rep.max_v0_sigma == 43 and rep.min_u_sigma == 28
        assert rep.separation_ok is False

    def test_per_edge_increments_capped(self):
        g, part, xa, budgets = tiny_instance()
        state = initial_weighting(g, part, xa, budgets)
        before = state.weights.copy()
        assign_omega_prime(g, part, xa, budgets, state, empirical())
        incr = state.weights - before
        assert incr.max() <= budgets.fine_cap
        assert incr.min() >= 0

    def test_strict_separation_failure_raises(self):
        g, part, xa, budgets = tiny_instance()
        state = initial_weighting(g, part, xa, budgets)
        with pytest.raises(StageFailure) as exc:
            assign_omega_prime(g, part, xa, budgets, state, PipelineParams(b=1.0, eps=1 / 12))
        assert exc.value.stage == "omega_prime"
        assert exc.value.kind == "separation"
        # the increments were applied before the separation verdict
        assert state.stage == "tuned"

    def test_infeasible_is_all_or_nothing(self):
        g, part, xa, _ = tiny_instance()
        lowcap = Budgets(
            base=10, class_step=3, fine_cap=2, coarse_step=2, target_base=40, delta_span=3
        )
        state = initial_weighting(g, part, xa, lowcap)
        before = state.weights.copy()
        with pytest.raises(StageFailure) as exc:
            assign_omega_prime(g, part, xa, lowcap, state, empirical())
        err = exc.value
        assert err.stage == "omega_prime" and err.kind == "delta_infeasible"
        assert err.witness["j"] == 2 and err.witness["vertex"] == 2
        assert err.witness["delta"] == 13 and err.witness["capacity"] == 4
        assert err.witness["violations"] == 2
        assert "j=2" in err.message
        assert np.array_equal(state.weights, before)
        assert state.stage == "initial"

    def test_requires_initial_stage(self):
        g, part, xa, budgets = tiny_instance()
        state = initial_weighting(g, part, xa, budgets)
        assign_omega_prime(g, part, xa, budgets, state, empirical())
        with pytest.raises(ParameterError, match="stage"):
            assign_omega_prime(g, part, xa, budgets, state, empirical())


class TestWeightsCsv:
    def test_round_trip(self, tmp_path):
        g, part, xa, budgets = tiny_instance()
        state = initial_weighting(g, part, xa, budgets)
        path = str(tmp_path / "w.csv")
        write_weights_csv(g, state, path, n=6, d=2, b=1.0, eps=0.5, seed=99)
        back = read_weights_csv(path, g)
        assert np.array_equal(back, state.weights)
        text = open(path).read()
        assert text.startswith("# stage=initial n=6 d=2 ")
        assert "seed=99" in text.splitlines()[0]
        assert text.splitlines()[1] == "u,v,weight"

    def test_read_errors(self, tmp_path):
        g = Graph(3, [(0, 1), (1, 2)])
        cases = [
            ("0,1\n", "expected u,v,weight"),
            ("0,1,x\n", "non-integer"),
            ("0,2,5\n", "not in graph"),
            ("0,1,5\n0,1,6\n", "duplicate"),
            ("0,1,5\n", "no weight given"),
        ]
        for body, match in cases:
            path = tmp_path / "bad.csv"
            path.write_text("# h\nu,v,weight\n" + body)
            with pytest.raises(InputFormatError, match=match):
                read_weights_csv(str(path), g)
