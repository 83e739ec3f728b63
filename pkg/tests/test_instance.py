import json

import pytest
from hypothesis import given, settings, strategies as st

from istsp.horizon import Horizon, PeriodVector
from istsp.instance import (
    CostModel,
    Instance,
    Stage2Policy,
    Task,
    demand_only,
    dumps_instance,
    induced_demand,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    precedence_satisfied,
    save_instance,
    validate,
)
from istsp.patterns import ShiftPattern

from oracles import accumulate_demand
from tiny import tiny_instance


def codes(inst):
    return {v.code for v in validate(inst)}


def small(**kw):
    base = dict(horizon=Horizon(24, omega=60), tasks=(Task(1, (1, 3), 2, (1, 2)),),
                custom_patterns=(ShiftPattern((1, 1, 1), omega=60),))
    base.update(kw)
    return Instance(**base)


def test_valid_instance_has_no_violations():
    assert validate(small()) == []


@pytest.mark.parametrize("task,code", [
    (Task(1, (5, 3), 1, (1,)), "window_inverted"),
    (Task(1, (1, 30), 1, (1,)), "window_range"),
    (Task(1, (1, 2), 2, (1,)), "resource_length"),
    (Task(1, (1, 2), 1, (-1,)), "resource_negative"),
    (Task(1, (1, 2), 2, (0, 0)), "resource_zero"),
])
def test_task_violations(task, code):
    assert code in codes(small(tasks=(task,)))


def test_precedence_violations():
    t = (Task(1, (1, 3), 1, (1,)), Task(2, (1, 3), 1, (1,)))
    assert "precedence_cycle" in codes(small(tasks=t, precedence=((1, 2), (2, 1))))
    assert "precedence_unknown" in codes(small(tasks=t, precedence=((1, 9),)))
    assert "duplicate_task" in codes(small(tasks=(t[0], t[0])))


def test_demand_and_pattern_violations():
    assert "no_demand" in codes(small(tasks=()))
    assert "demand_length" in codes(small(fixed_demand=PeriodVector.from_values([1] * 5)))
    assert "demand_integral" in codes(small(fixed_demand=PeriodVector.from_values([0.5] * 24)))
    assert "omega_mismatch" in codes(small(custom_patterns=(ShiftPattern((1, 1)),)))
    assert "omega_mismatch" in codes(Instance(Horizon(336), fixed_demand=[1] * 336, pattern_family="FX29"))
    assert "policy" in codes(small(policy=Stage2Policy(max_hours=2)))
    assert "policy" in codes(small(policy=Stage2Policy(days_off="two_any")))


def test_policy_defaults_and_kinds():
    assert Stage2Policy().load_kind == "shifts"
    assert Stage2Policy(max_shifts=None, max_hours=80).load_kind == "hours"
    with pytest.raises(ValueError):
        Stage2Policy(days_off="weekends")
    p = Stage2Policy(max_shifts=4, rest_gap=3, days_off="two_consecutive")
    assert Stage2Policy.from_dict(p.to_dict()) == p


def test_cost_models():
    p = ShiftPattern((1,) * 4)
    assert CostModel("uniform").cost(1, p, 3) == 1
    assert CostModel().cost(1, p, 3) == 4
    assert CostModel(table={4: 7}).cost(1, p, 3) == 7
    assert CostModel("matrix", matrix={(1, 3): 2.5}).cost(1, p, 3) == 2.5
    with pytest.raises(ValueError):
        CostModel("matrix")
    c = CostModel("matrix", matrix={(1, 3): 2.5})
    assert CostModel.from_dict(c.to_dict()) == c


def test_induced_demand_wraps_and_adds_fixed():
    inst = small(tasks=(Task(1, (22, 24), 4, (1, 2, 3, 4)),), fixed_demand=[1] * 24)
    R = induced_demand(inst, {1: 23})
    assert R.to_list()[:3] == [1 + 3, 1 + 4, 1]
    assert R.to_list()[22:] == [1 + 1, 1 + 2]
    with pytest.raises(ValueError):
        induced_demand(inst, {1: 5})


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_induced_demand_matches_loop(seed):
    inst = tiny_instance(seed)
    starts = {t.id: (t.l + t.u) // 2 for t in inst.tasks}
    assert induced_demand(inst, starts).as_ints().tolist() == accumulate_demand(inst.tasks, starts, inst.T)
    # total work does not depend on the start map
    assert induced_demand(inst, starts).total() == inst.total_demand_tps()


def test_precedence_is_literal():
    t = (Task(1, (1, 9), 3, (1, 1, 1)), Task(2, (1, 9), 1, (1,)))
    inst = small(tasks=t, precedence=((1, 2),))
    assert precedence_satisfied(inst, {1: 2, 2: 4})  # 2 + 3 - 1 <= 4
    assert not precedence_satisfied(inst, {1: 2, 2: 3})


def test_round_trip_json(tmp_path):
    inst = tiny_instance(3)
    assert instance_from_dict(json.loads(dumps_instance(inst))) == inst
    path = tmp_path / "i.json"
    save_instance(inst, path)
    assert load_instance(path) == inst
    d = instance_to_dict(small(fixed_demand=[0] * 24, shift_window=(2, 20)))
    assert instance_from_dict(d).shift_window == (2, 20)


def test_csv_demand(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("\n".join(["1", "2", "3"] * 112))
    inst = load_instance(path)
    assert inst.T == 336 and inst.fixed_demand.total() == 672
    assert validate(inst) == []
    assert demand_only([1] * 336).total_demand_hours() == 168


def test_with_demand_drops_tasks():
    inst = tiny_instance(5)
    sub = inst.with_demand(PeriodVector.from_values([1] * inst.T))
    assert sub.K == 0 and sub.precedence == () and sub.total_demand_tps() == inst.T
