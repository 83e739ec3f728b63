"""Shift pattern families, daily schedule enumeration and supply footprints.

A shift pattern is an availability vector over consecutive TPs with cells in
{0, 0.5, 1}. Patterns are produced by enumerating every placement of the
required breaks and keeping those that satisfy a :class:`PatternRuleSet`.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .horizon import Horizon, PeriodVector

FAMILIES = ("FX260", "FL15", "FL135", "FX29", "STOLLETZ", "CUSTOM")
GAP_MODES = ("strict", "footnote", "independent", "pairwise")


@dataclass(frozen=True)
class Break:
    kind: str
    position: int  # 1-based first cell
    span: int

    def to_dict(self) -> dict:
        return {"kind": self.kind, "position": self.position, "span": self.span}


@dataclass(frozen=True)
class ShiftPattern:
    cells: tuple
    breaks: tuple = ()
    omega: int = 30

    def __post_init__(self):
        cells = tuple(_norm_cell(c) for c in self.cells)
        if not cells:
            raise ValueError("empty shift pattern")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "breaks", tuple(self.breaks))

    @property
    def length(self) -> int:
        return len(self.cells)

    @property
    def halves(self) -> tuple:
        return tuple(int(c * 2) for c in self.cells)

    @property
    def work(self) -> Fraction:
        """Available TPs in the pattern (0.5 cells count half)."""
        return Fraction(sum(self.halves), 2)

    def describe(self) -> str:
        parts = [f"{self.length * self.omega / 60:g}h"]
        for b in self.breaks:
            half = self.cells[b.position - 1] == 0.5
            minutes = self.omega // 2 if half else b.span * self.omega
            offset = (b.position - 1) * self.omega
            parts.append(f"{b.kind} {minutes}min @+{offset // 60}:{offset % 60:02d}")
        return ", ".join(parts)

    def to_dict(self) -> dict:
        return {"cells": list(self.cells), "breaks": [b.to_dict() for b in self.breaks]}


@dataclass(frozen=True)
class ShiftSchedule:
    """A pattern (1-based id) anchored at a horizon start TP."""

    pattern_id: int
    start_tp: int

    def key(self) -> tuple:
        return (self.start_tp, self.pattern_id)


def _norm_cell(c):
    f = Fraction(c)
    if f == 0:
        return 0
    if f == 1:
        return 1
    if f == Fraction(1, 2):
        return 0.5
    raise ValueError(f"pattern cells must be 0, 0.5 or 1, got {c}")


@dataclass(frozen=True)
class BreakSpec:
    kind: str  # lunch | tea | relief
    span: int  # TPs occupied
    value: float = 0  # availability inside the break: 0 or 0.5
    count: int = 1


@dataclass(frozen=True)
class PatternRuleSet:
    """Admissibility rules for one family of shift patterns.

    ``gap_mode`` selects how the minimum gap between successive breaks is read
    when tea breaks occupy only half a TP:

    - ``strict``: full work TPs between break cells >= ceil(gap_minutes / omega).
    - ``footnote``: minute arithmetic; the first half-TP break sits in the first
      half of its TP and later ones in the second half.
    - ``independent``: minute arithmetic; any half placement that satisfies all
      gaps is accepted.
    - ``pairwise``: full work TPs between consecutive breaks >= ``pair_gaps``
      looked up by the (earlier kind, later kind) pair.
    """

    sl_min: int
    sl_max: int
    omega: int = 30
    breaks: tuple = ()
    head_protect: int = 0
    tail_protect: int = 0
    gap_minutes: int = 0
    gap_mode: str = "strict"
    pair_gaps: tuple = ()  # ((kind_a, kind_b, tps), ...)
    start_window: tuple | None = None  # (first start TP, last occupied TP) within a day
    doc: str = ""

    def __post_init__(self):
        if self.sl_min < 1 or self.sl_min > self.sl_max:
            raise ValueError(f"invalid shift length range [{self.sl_min}, {self.sl_max}]")
        if self.gap_mode not in GAP_MODES:
            raise ValueError(f"unknown gap mode {self.gap_mode!r}")
        for b in self.breaks:
            if b.span < 1 or b.count < 1:
                raise ValueError(f"invalid break spec {b}")
            if Fraction(b.value) not in (0, Fraction(1, 2)):
                raise ValueError("break value must be 0 or 0.5")
            if Fraction(b.value) == Fraction(1, 2) and b.span != 1:
                raise ValueError("half-TP breaks must span exactly one TP")
        if self.head_protect < 0 or self.tail_protect < 0:
            raise ValueError("head/tail protection must be nonnegative")

    @property
    def pair_gap_map(self) -> dict:
        return {(a, b): g for a, b, g in self.pair_gaps}

    def to_dict(self) -> dict:
        return {
            "sl_min": self.sl_min,
            "sl_max": self.sl_max,
            "omega": self.omega,
            "breaks": [
                {"kind": b.kind, "span": b.span, "value": b.value, "count": b.count}
                for b in self.breaks
            ],
            "head_protect": self.head_protect,
            "tail_protect": self.tail_protect,
            "gap_minutes": self.gap_minutes,
            "gap_mode": self.gap_mode,
            "pair_gaps": [list(p) for p in self.pair_gaps],
            "start_window": list(self.start_window) if self.start_window else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PatternRuleSet":
        return cls(
            sl_min=d["sl_min"],
            sl_max=d["sl_max"],
            omega=d.get("omega", 30),
            breaks=tuple(BreakSpec(**b) for b in d.get("breaks", [])),
            head_protect=d.get("head_protect", 0),
            tail_protect=d.get("tail_protect", 0),
            gap_minutes=d.get("gap_minutes", 0),
            gap_mode=d.get("gap_mode", "strict"),
            pair_gaps=tuple(tuple(p) for p in d.get("pair_gaps", [])),
            start_window=tuple(d["start_window"]) if d.get("start_window") else None,
        )


# Calibrated so that exhaustive enumeration yields exactly 260 patterns of 18
# TPs: one 60-minute lunch (two 0-cells), two 15-minute teas (0.5-cells), no
# break in the first 3 TPs, last TP worked, and at least 3 full work TPs after
# the lunch before a tea, 2 between the teas, 1 between a tea and the lunch.
# No minute-level reading of the 90-minute gap rule (strict, footnote or
# independent half placement, any head/tail protection) reaches 260; its
# maximum is 224. This configuration is a calibration, not a stated rule.
FX260_RULES = PatternRuleSet(
    sl_min=18,
    sl_max=18,
    omega=30,
    breaks=(BreakSpec("lunch", 2, 0), BreakSpec("tea", 1, 0.5, count=2)),
    head_protect=3,
    tail_protect=1,
    gap_minutes=90,
    gap_mode="pairwise",
    pair_gaps=(("lunch", "tea", 3), ("tea", "lunch", 1), ("tea", "tea", 2)),
    doc="pairwise gaps lunch->tea 3, tea->lunch 1, tea->tea 2 TPs; head 3, tail 1",
)

# 3h..10h, one 30-minute break, nothing in the first or last hour
FL135_RULES = PatternRuleSet(
    sl_min=6,
    sl_max=20,
    omega=30,
    breaks=(BreakSpec("lunch", 1, 0),),
    head_protect=2,
    tail_protect=2,
)

# 3h..10h without breaks on a 15-minute grid
FX29_RULES = PatternRuleSet(sl_min=12, sl_max=40, omega=15)

# 3h..10h without breaks; shifts start and end between 4 am and 9 pm
STOLLETZ_RULES = PatternRuleSet(sl_min=6, sl_max=20, omega=30, start_window=(9, 42))

PRESET_RULES = {
    "FX260": FX260_RULES,
    "FL135": FL135_RULES,
    "FX29": FX29_RULES,
    "STOLLETZ": STOLLETZ_RULES,
}


def _break_items(rules: PatternRuleSet) -> list:
    items = []
    for spec in rules.breaks:
        items.extend([(spec.kind, spec.span, spec.value)] * spec.count)
    return items


def _placements(m: int, items: list):
    """Yield sorted tuples of (kind, start, span, value) for every ordering of
    ``items`` into non-overlapping intervals of a length-``m`` pattern."""
    for order in sorted(set(itertools.permutations(items))):

        def rec(idx, first_free, acc):
            if idx == len(order):
                yield tuple(acc)
                return
            kind, span, value = order[idx]
            remaining = sum(s for _, s, _ in order[idx + 1:])
            for start in range(first_free, m - span - remaining + 2):
                acc.append((kind, start, span, value))
                yield from rec(idx + 1, start + span, acc)
                acc.pop()

        yield from rec(0, 1, [])


def _minute_intervals(placed, omega: int, halves: Sequence[int]) -> list:
    out = []
    it = iter(halves)
    for kind, start, span, value in placed:
        lo = (start - 1) * omega
        if Fraction(value) == Fraction(1, 2):
            h = next(it)
            lo += h * omega / 2
            out.append((lo, lo + omega / 2))
        else:
            out.append((lo, lo + span * omega))
    return out


def _gaps_ok(placed, rules: PatternRuleSet) -> bool:
    if len(placed) < 2:
        return True
    mode = rules.gap_mode
    if mode in ("strict", "pairwise"):
        need_strict = math.ceil(rules.gap_minutes / rules.omega)
        pairs = rules.pair_gap_map
        for (ka, sa, pa, _), (kb, sb, _, _) in zip(placed, placed[1:]):
            work = sb - (sa + pa)
            need = pairs.get((ka, kb), 0) if mode == "pairwise" else need_strict
            if work < need:
                return False
        return True
    n_half = sum(1 for p in placed if Fraction(p[3]) == Fraction(1, 2))
    if mode == "footnote":
        options = [tuple([0] + [1] * (n_half - 1))] if n_half else [()]
    else:
        options = list(itertools.product((0, 1), repeat=n_half))
    for halves in options:
        iv = _minute_intervals(placed, rules.omega, halves)
        if all(b[0] - a[1] >= rules.gap_minutes for a, b in zip(iv, iv[1:])):
            return True
    return False


def _admissible(m: int, placed, rules: PatternRuleSet) -> bool:
    if placed:
        if placed[0][1] <= rules.head_protect:
            return False
        last = placed[-1]
        if last[1] + last[2] - 1 > m - rules.tail_protect:
            return False
    return _gaps_ok(placed, rules)


def _build(m: int, placed, omega: int) -> ShiftPattern:
    cells = [1] * m
    breaks = []
    for kind, start, span, value in placed:
        for t in range(start, start + span):
            cells[t - 1] = value
        breaks.append(Break(kind, start, span))
    return ShiftPattern(tuple(cells), tuple(breaks), omega)


def _sort_key(p: ShiftPattern):
    return (p.length, p.halves)


def enumerate_rules(rules: PatternRuleSet) -> list[ShiftPattern]:
    """All distinct patterns admitted by ``rules``, shorter first, then
    lexicographic on cells."""
    items = _break_items(rules)
    found = {}
    for m in range(rules.sl_min, rules.sl_max + 1):
        for placed in _placements(m, items):
            if _admissible(m, placed, rules):
                p = _build(m, placed, rules.omega)
                found.setdefault(p.cells, p)
    return sorted(found.values(), key=_sort_key)


def _fl15() -> list[ShiftPattern]:
    # Breaks by shift length (30-minute TPs), placed centrally:
    #   6-10 TPs none, 11-12 one 15-min, 13-16 one 30-min,
    #   17-20 one 30-min centred plus a 15-min centred in each side segment.
    out = []
    for m in range(6, 21):
        placed = []
        c = math.ceil(m / 2)
        if 11 <= m <= 12:
            placed = [("relief", c, 1, 0.5)]
        elif 13 <= m <= 16:
            placed = [("relief", c, 1, 0)]
        elif m >= 17:
            left = math.ceil((c - 1) / 2)
            right = c + math.ceil((m - c) / 2)
            placed = [("tea", left, 1, 0.5), ("relief", c, 1, 0), ("tea", right, 1, 0.5)]
        out.append(_build(m, placed, 30))
    return sorted(out, key=_sort_key)


def generate_family(name: str, rules: PatternRuleSet | None = None) -> list[ShiftPattern]:
    """Generate a named pattern family, or a CUSTOM one from ``rules``."""
    name = name.upper()
    if name == "CUSTOM":
        if rules is None:
            raise ValueError("CUSTOM family requires a rule set")
        return enumerate_rules(rules)
    if name == "FL15":
        return _fl15()
    if name not in PRESET_RULES:
        raise ValueError(f"unknown pattern family {name!r}; expected one of {FAMILIES}")
    return enumerate_rules(PRESET_RULES[name])


def family_omega(name: str) -> int:
    name = name.upper()
    if name == "FL15":
        return 30
    return PRESET_RULES[name].omega


def family_start_window(name: str) -> tuple | None:
    rules = PRESET_RULES.get(name.upper())
    return rules.start_window if rules else None


def daily_starts(
    pattern: ShiftPattern,
    day_length: int,
    start_window: tuple | None = None,
) -> list[int]:
    """Admissible daily start TPs (1-based) for ``pattern``.

    ``start_window`` is ``(first_start, last_end)``: the shift must start at or
    after ``first_start`` and occupy no TP after ``last_end``.
    """
    if start_window is None:
        return list(range(1, day_length + 1))
    first, last_end = start_window
    return list(range(first, last_end - pattern.length + 2))


def enumerate_daily_schedules(
    patterns: Sequence[ShiftPattern],
    daily_start_window: tuple | None = None,
    day_length: int = 48,
) -> tuple[int, list[tuple[int, int]]]:
    """Enumerate (pattern id, daily start TP) pairs; pattern ids are 1-based."""
    pairs = [
        (i, s)
        for i, p in enumerate(patterns, start=1)
        for s in daily_starts(p, day_length, daily_start_window)
    ]
    return len(pairs), pairs


def pattern_supply_footprint(s: ShiftPattern, start_tp: int, h: Horizon) -> PeriodVector:
    if not 1 <= start_tp <= h.T:
        raise ValueError(f"start TP {start_tp} outside [1, {h.T}]")
    halves = np.zeros(h.T, dtype=np.int64)
    idx = np.arange(start_tp - 1, start_tp - 1 + s.length)
    vals = np.asarray(s.halves, dtype=np.int64)
    if h.cyclic:
        np.add.at(halves, idx % h.T, vals)
    else:
        keep = idx < h.T
        np.add.at(halves, idx[keep], vals[keep])
    return PeriodVector(halves)


def dump_patterns(patterns: Sequence[ShiftPattern], family: str, path: str | Path | None = None) -> dict:
    omega = patterns[0].omega if patterns else 30
    doc = {"family": family, "omega": omega, "patterns": [p.to_dict() for p in patterns]}
    if path is not None:
        Path(path).write_text(json.dumps(doc, indent=1))
    return doc


def patterns_from_doc(doc: dict) -> list[ShiftPattern]:
    omega = doc.get("omega", 30)
    out = []
    for p in doc["patterns"]:
        breaks = tuple(Break(b["kind"], b["position"], b["span"]) for b in p.get("breaks", []))
        out.append(ShiftPattern(tuple(p["cells"]), breaks, omega))
    return out


def load_patterns(path: str | Path) -> list[ShiftPattern]:
    return patterns_from_doc(json.loads(Path(path).read_text()))


def calibration_grid(
    target: int = 260,
    modes: Iterable[str] = GAP_MODES,
    protect_range: range = range(0, 5),
    pair_range: range = range(0, 5),
) -> list[PatternRuleSet]:
    """Search FX260-shaped rule sets (18 TPs, one lunch, two teas) whose
    exhaustive enumeration has exactly ``target`` patterns."""
    hits = []
    base = dict(
        sl_min=18, sl_max=18, omega=30,
        breaks=(BreakSpec("lunch", 2, 0), BreakSpec("tea", 1, 0.5, count=2)),
        gap_minutes=90,
    )
    for mode in modes:
        for head, tail in itertools.product(protect_range, protect_range):
            if mode == "pairwise":
                for lt, tl, tt in itertools.product(pair_range, repeat=3):
                    rules = PatternRuleSet(
                        head_protect=head, tail_protect=tail, gap_mode=mode,
                        pair_gaps=(("lunch", "tea", lt), ("tea", "lunch", tl), ("tea", "tea", tt)),
                        **base,
                    )
                    if len(enumerate_rules(rules)) == target:
                        hits.append(rules)
            else:
                rules = PatternRuleSet(head_protect=head, tail_protect=tail, gap_mode=mode, **base)
                if len(enumerate_rules(rules)) == target:
                    hits.append(rules)
    return hits
