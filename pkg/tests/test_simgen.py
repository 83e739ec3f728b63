import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from istsp.instance import validate
from istsp.simgen import (
    EMERGENCY_DEMAND_TPS,
    EMERGENCY_K,
    EMERGENCY_PAIRS,
    EMERGENCY_PREC_TASKS,
    MIXES,
    SIZES,
    SimConfig,
    emergency_like,
    simulate,
    simulate_detailed,
)


@pytest.mark.parametrize("mix", sorted(MIXES))
def test_small_instances_hit_the_size(mix):
    inst = simulate(SimConfig("small", mix, seed=3))
    assert validate(inst) == []
    assert inst.T == 672 and inst.horizon.omega == 15
    # chains and the final trimmed task may overshoot by less than one task
    assert SIZES["small"] <= inst.total_demand_hours() < SIZES["small"] + 30


def test_hours_basis_follows_the_mix():
    inst, kinds = simulate_detailed(SimConfig("medium", "S3", seed=0))
    work = {k: sum(inst.task_map()[i].work for i in ids) for k, ids in kinds.items()}
    total = sum(work.values())
    shares = np.array([work["day_long"], work["peak"], work["precedence"]]) / total * 100
    assert np.allclose(shares, MIXES["S3"], atol=2.0)


def test_task_basis_follows_the_mix():
    inst, kinds = simulate_detailed(SimConfig("large", "S6", seed=0))
    counts = np.array([len(kinds[k]) for k in ("day_long", "peak", "precedence")])
    shares = counts / counts.sum() * 100
    assert np.allclose(shares, MIXES["S6"], atol=3.0)


def test_simulation_is_deterministic():
    a = simulate(SimConfig("small", "S2", seed=7))
    b = simulate(SimConfig("small", "S2", seed=7))
    c = simulate(SimConfig("small", "S2", seed=8))
    assert a == b and a != c


def test_precedence_edges_are_within_chains():
    inst, kinds = simulate_detailed(SimConfig("small", "S3", seed=2))
    chained = set(kinds["precedence"])
    tasks = inst.task_map()
    for a, b in inst.precedence:
        assert a in chained and b in chained
        # the successor's window still admits a start after the predecessor ends
        assert tasks[a].l + tasks[a].duration - 1 <= tasks[b].u


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["clustered", "uniform"]), st.sampled_from(["hours", "tasks"]))
def test_random_configs_validate(seed, mode, basis):
    inst = simulate(SimConfig(target_hours=120, mix=(60, 30, 10), window_mode=mode, mix_basis=basis, seed=seed))
    assert validate(inst) == []
    assert inst.total_demand_hours() >= 120


@pytest.mark.parametrize("kwargs", [
    {"mix": "S9"}, {"mix": (50, 50, 1)}, {"size": "huge"}, {"window_mode": "weird"},
    {"mix_basis": "minutes"}, {"chain_length": (1, 3)},
])
def test_bad_configs_are_rejected(kwargs):
    with pytest.raises(ValueError):
        simulate(SimConfig(**kwargs))


def test_emergency_shape_at_full_scale():
    inst = emergency_like(1.0, seed=0)
    assert validate(inst) == []
    assert inst.K == EMERGENCY_K
    assert len(inst.precedence) == EMERGENCY_PAIRS
    in_prec = {i for pair in inst.precedence for i in pair}
    assert len(in_prec) == EMERGENCY_PREC_TASKS
    assert inst.total_demand_tps() == EMERGENCY_DEMAND_TPS
    assert all(set(t.resource) == {1} for t in inst.tasks)


def test_emergency_scales_down():
    inst = emergency_like(0.1, seed=1)
    assert inst.K == 58 and validate(inst) == []
    with pytest.raises(ValueError):
        emergency_like(0.0)
