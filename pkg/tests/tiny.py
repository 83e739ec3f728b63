"""Random tiny instances for the oracle comparisons."""
from __future__ import annotations

import numpy as np

from istsp.horizon import Horizon
from istsp.instance import CostModel, Instance, Stage2Policy, Task
from istsp.patterns import ShiftPattern


def random_pattern(rng, max_len=6):
    m = int(rng.integers(2, max_len + 1))
    cells = [1] * m
    for i in range(1, m - 1):
        cells[i] = [1, 1, 0.5, 0][int(rng.integers(4))]
    return ShiftPattern(tuple(cells), omega=60)


def random_patterns(rng, q_max=3, max_len=6):
    out = []
    while len(out) < int(rng.integers(1, q_max + 1)):
        p = random_pattern(rng, max_len)
        if p not in out:
            out.append(p)
    return tuple(out)


def random_tasks(rng, T, k_max=4, width_max=3, level_max=2, precedence=True):
    tasks = []
    for k in range(1, int(rng.integers(1, k_max + 1)) + 1):
        d = int(rng.integers(1, 4))
        res = [int(r) for r in rng.integers(0, level_max + 1, size=d)]
        if not any(res):
            res[0] = 1
        l = int(rng.integers(1, T + 1))
        u = min(T, l + int(rng.integers(0, width_max + 1)))
        tasks.append(Task(k, (l, u), d, tuple(res)))
    prec = []
    if precedence and len(tasks) >= 2 and rng.random() < 0.5:
        a, b = sorted(rng.choice(len(tasks), size=2, replace=False) + 1)
        ta, tb = tasks[a - 1], tasks[b - 1]
        if ta.l + ta.duration - 1 <= tb.u:
            prec.append((int(a), int(b)))
    return tuple(tasks), tuple(prec)


def random_policy(rng, patterns, T):
    longest = max(p.length for p in patterns)
    g = int(rng.integers(0, min(3, T - longest) + 1))
    max_hours = None
    if rng.random() < 0.3:
        max_hours = int(rng.integers(longest, 2 * longest + 1))
    return Stage2Policy(max_shifts=int(rng.integers(1, 4)), rest_gap=g, max_hours=max_hours)


def tiny_instance(seed, T_range=(8, 24), q_max=3, k_max=4, max_len=6, costs="duration"):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(T_range[0], T_range[1] + 1))
    patterns = random_patterns(rng, q_max, min(max_len, T - 2))
    tasks, prec = random_tasks(rng, T, k_max)
    return Instance(
        horizon=Horizon(T, omega=60),
        tasks=tasks,
        precedence=prec,
        custom_patterns=patterns,
        costs=CostModel(costs),
        policy=random_policy(rng, patterns, T),
        name=f"tiny-{seed}",
    )
