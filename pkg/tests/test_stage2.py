import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from istsp.errors import InfeasibleError, ModelTooLarge
from istsp.instance import Stage2Policy
from istsp.ipcore import SolveOptions
from istsp.patterns import ShiftPattern, ShiftSchedule
from istsp.stage2 import (
    AssignmentProblem,
    Roster,
    build_stage2,
    estimate_stage2_size,
    greedy_first_fit,
    heuristic_roster,
    overlap,
    overlap_pairs,
    problem_size,
    roster_from_dict,
    solve_stage2,
    validate_roster,
)

from oracles import brute_workers, group_ok

OPTS = SolveOptions(time_limit_s=60)


def test_overlap_examples():
    assert overlap(10, 18, 40, 18, g=24, T=336)
    assert not overlap(10, 18, 52, 18, g=24, T=336)
    assert overlap(1, 18, 330, 18, g=0, T=336)  # 330 wraps onto TP 1
    assert not overlap(1, 18, 330, 18, g=0, T=336, mode="linear")
    assert overlap(5, 3, 7, 3)  # shares TP 7
    assert not overlap(5, 3, 8, 3, T=20)
    with pytest.raises(ValueError):
        overlap(8, 3, 5, 3)
    with pytest.raises(ValueError):
        overlap(1, 3, 30, 3, T=None)


@settings(max_examples=60, deadline=None)
@given(st.integers(10, 60), st.integers(0, 5), st.sampled_from(["cyclic", "linear"]),
       st.lists(st.tuples(st.integers(1, 60), st.integers(1, 9)), min_size=1, max_size=12))
def test_overlap_pairs_match_scalar_predicate(T, g, mode, raw):
    raw = sorted((min(j, T), m) for j, m in raw)
    starts, lengths = [j for j, _ in raw], [m for _, m in raw]
    got = {tuple(p) for p in overlap_pairs(starts, lengths, g, T, mode, chunk=3).tolist()}
    want = {(a, b) for a in range(len(raw)) for b in range(a + 1, len(raw))
            if overlap(starts[a], lengths[a], starts[b], lengths[b], g, T, mode)}
    assert got == want


def test_overlap_pairs_requires_sorted_starts():
    with pytest.raises(ValueError):
        overlap_pairs([3, 1], [2, 2], 0, 10)


def random_problem(seed, T=24, tpd=24, days_off="none", tau_max=8, len_range=(2, 7), mode="cyclic"):
    rng = np.random.default_rng(seed)
    lengths = sorted({int(m) for m in rng.integers(len_range[0], len_range[1] + 1, size=3)})
    patterns = [ShiftPattern((1,) * m, omega=60) for m in lengths]
    tau = int(rng.integers(1, tau_max + 1))
    last = T if mode == "cyclic" else T - max(lengths) + 1
    scheds = [ShiftSchedule(int(rng.integers(1, len(patterns) + 1)), int(rng.integers(1, last + 1)))
              for _ in range(tau)]
    if mode == "linear":
        scheds = [s for s in scheds if s.start_tp + patterns[s.pattern_id - 1].length - 1 <= T]
    g = int(rng.integers(0, 4))
    b = int(rng.integers(1, 5))
    max_hours = int(rng.integers(max(lengths), 3 * max(lengths))) if rng.random() < 0.3 else None
    pol = Stage2Policy(max_shifts=b, rest_gap=g, max_hours=max_hours, days_off=days_off)
    return AssignmentProblem(scheds, patterns, pol, T, tpd, mode)


def oracle(problem):
    lengths = [int(m) for m in problem.lengths]
    return brute_workers(problem.schedules, lengths, problem.policy, problem.T, problem.tps_per_day,
                         problem.cyclic)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["cyclic", "linear"]))
def test_worker_count_matches_exhaustive_search(seed, mode):
    p = random_problem(seed, mode=mode)
    want = oracle(p)
    r = solve_stage2(p, OPTS)
    assert r.status == "optimal"
    assert r.workers_used == want
    assert validate_roster(r, p) == []
    for vs in r.assignment.values():
        assert group_ok(vs, p.schedules, [int(m) for m in p.lengths], p.policy, p.T, p.tps_per_day, p.cyclic)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["two_consecutive", "two_any"]), st.sampled_from([72, 96]))
def test_days_off_match_exhaustive_search(seed, kind, T):
    p = random_problem(seed, T=T, tpd=24, days_off=kind, tau_max=7, len_range=(4, 20))
    want = oracle(p)
    if want is None:
        with pytest.raises(InfeasibleError):
            solve_stage2(p, OPTS)
        return
    r = solve_stage2(p, OPTS)
    assert r.workers_used == want
    assert validate_roster(r, p) == []
    assert set(r.day_off) == set(r.assignment)


def test_heuristics_are_feasible_and_above_bound():
    for seed in range(20):
        p = random_problem(seed, T=48, tau_max=10)
        g = greedy_first_fit(p)
        h = heuristic_roster(p, seed=seed)
        assert validate_roster(g, p) == [] and validate_roster(h, p) == []
        assert p.xi_lower_bound() <= h.workers_used <= g.workers_used
        assert oracle(p) >= p.xi_lower_bound()


def test_validator_flags_each_rule():
    pats = [ShiftPattern((1,) * 4, omega=60)]
    scheds = [ShiftSchedule(1, 1), ShiftSchedule(1, 3), ShiftSchedule(1, 10)]
    p = AssignmentProblem(scheds, pats, Stage2Policy(max_shifts=2, rest_gap=2), 24, 24)
    assert validate_roster(Roster(p.schedules, {1: [0, 2], 2: [1]}), p) == []
    assert any("rest gap" in v for v in validate_roster(Roster(p.schedules, {1: [0, 1], 2: [2]}), p))
    assert any("shifts" in v for v in validate_roster(Roster(p.schedules, {1: [0, 1, 2]}), p))
    assert any("assigned 0" in v for v in validate_roster(Roster(p.schedules, {1: [0, 2]}), p))
    assert any("assigned 2" in v for v in validate_roster(Roster(p.schedules, {1: [0, 2], 2: [1, 2]}), p))
    ph = AssignmentProblem(scheds, pats, Stage2Policy(max_shifts=None, max_hours=6), 24, 24)
    assert any("TPs" in v for v in validate_roster(Roster(ph.schedules, {1: [0, 2], 2: [1]}), ph))
    # rest gap measured across the week boundary
    wrap = AssignmentProblem([ShiftSchedule(1, 1), ShiftSchedule(1, 20)], pats,
                             Stage2Policy(rest_gap=2), 24, 24)
    assert validate_roster(Roster(wrap.schedules, {1: [0, 1]}), wrap)
    lin = AssignmentProblem(wrap.schedules, pats, Stage2Policy(rest_gap=2), 24, 24, mode="linear")
    assert validate_roster(Roster(lin.schedules, {1: [0, 1]}), lin) == []


def test_validator_days_off():
    pats = [ShiftPattern((1,) * 6, omega=60)]
    scheds = [ShiftSchedule(1, 2), ShiftSchedule(1, 26)]  # days 1 and 2 of 4
    pol = Stage2Policy(days_off="two_consecutive")
    p = AssignmentProblem(scheds, pats, pol, 96, 24)
    assert validate_roster(Roster(p.schedules, {1: [0, 1]}, {1: (3, 4)}), p) == []
    assert validate_roster(Roster(p.schedules, {1: [0, 1]}, {1: (4, 1)}), p)
    assert validate_roster(Roster(p.schedules, {1: [0, 1]}), p)
    assert validate_roster(Roster(p.schedules, {1: [0, 1]}, {1: (2, 4)}), p)
    r = solve_stage2(p, OPTS)
    assert r.workers_used == 1 and r.day_off[1] == (3, 4)
    # days 1 and 3 busy leave no free consecutive pair on a 4-day cycle
    spread = AssignmentProblem([ShiftSchedule(1, 2), ShiftSchedule(1, 50)], pats, pol, 96, 24)
    assert solve_stage2(spread, OPTS).workers_used == 2
    q = AssignmentProblem(spread.schedules, pats, Stage2Policy(days_off="two_any"), 96, 24)
    assert validate_roster(Roster(q.schedules, {1: [0, 1]}, {1: (2, 4)}), q) == []
    assert solve_stage2(q, OPTS).workers_used == 1


def test_days_off_need_three_days():
    p = AssignmentProblem([ShiftSchedule(1, 1)], [ShiftPattern((1,), omega=60)],
                          Stage2Policy(days_off="two_any"), 48, 24)
    with pytest.raises(ValueError):
        p.dummies


def test_size_estimate_matches_built_model():
    for seed in range(15):
        for kind in ("none", "two_consecutive", "two_any"):
            p = random_problem(seed, T=96, tpd=24, days_off=kind, tau_max=9, len_range=(2, 12))
            w = greedy_first_fit(p).workers_used
            for sym in (False, True):
                m = build_stage2(p, w, symmetry=sym)
                est = problem_size(p, w, sym)
                assert est == {"variables": m.num_vars, "constraints": m.num_constraints}


def test_budget_and_cap_errors():
    p = random_problem(3, T=48, tau_max=10)
    p = AssignmentProblem(p.schedules * 3, p.patterns, p.policy, p.T, p.tps_per_day)
    with pytest.raises(ModelTooLarge):
        solve_stage2(p, OPTS, budget=1)
    with pytest.raises(ModelTooLarge):
        build_stage2(p, 5, budget=1)
    capped = AssignmentProblem(p.schedules, p.patterns,
                               Stage2Policy(max_shifts=1, max_workers=1), p.T, p.tps_per_day)
    with pytest.raises(InfeasibleError):
        solve_stage2(capped, OPTS)
    assert estimate_stage2_size(0, 0, Stage2Policy())["constraints"] == 0


def test_empty_problem():
    p = AssignmentProblem([], [ShiftPattern((1,), omega=60)], Stage2Policy(), 24, 24)
    r = solve_stage2(p)
    assert r.workers_used == 0 and r.status == "optimal"


def test_roster_round_trip():
    p = random_problem(5, T=96, tpd=24, days_off="two_any", len_range=(3, 9))
    r = solve_stage2(p, OPTS)
    back = roster_from_dict(r.to_dict())
    assert back.workers_used == r.workers_used
    assert validate_roster(back, p) == []
    assert {u: sorted(vs) for u, vs in back.assignment.items()} == {u: sorted(vs) for u, vs in r.assignment.items()}


def test_symmetry_rows_do_not_change_the_optimum():
    for seed in range(8):
        p = random_problem(seed, T=48, tau_max=9)
        a = solve_stage2(p, OPTS, symmetry=True)
        b = solve_stage2(p, OPTS, symmetry=False)
        assert a.workers_used == b.workers_used
