import csv
import json

import pytest

from istsp.cli import EXIT_BUDGET, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_OK, main
from istsp.horizon import Horizon, PeriodVector
from istsp.instance import Instance, Stage2Policy, Task, load_instance, save_instance
from istsp.patterns import ShiftPattern

from tiny import tiny_instance


@pytest.fixture
def tiny_file(tmp_path):
    path = tmp_path / "tiny.json"
    save_instance(tiny_instance(4, T_range=(10, 14)), path)
    return path


def test_patterns_command(tmp_path, capsys):
    out = tmp_path / "fx29.json"
    assert main(["patterns", "FX29", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert len(data["patterns"]) == 29
    assert "29 patterns" in capsys.readouterr().out


def test_patterns_to_stdout(capsys):
    assert main(["patterns", "FL15"]) == EXIT_OK
    assert len(json.loads(capsys.readouterr().out)["patterns"]) == 15


def test_custom_patterns_need_rules():
    assert main(["patterns", "CUSTOM"]) == EXIT_INVALID


def test_validate_command(tiny_file, tmp_path, capsys):
    assert main(["validate", str(tiny_file)]) == EXIT_OK
    assert capsys.readouterr().out.startswith("ok:")
    bad = tmp_path / "bad.json"
    inst = Instance(horizon=Horizon(24, omega=60), tasks=(Task(1, (5, 3), 2, (1, 1)),),
                    custom_patterns=(ShiftPattern((1, 1, 1), omega=60),))
    save_instance(inst, bad)
    assert main(["validate", str(bad)]) == EXIT_INVALID


def test_missing_or_broken_file(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == EXIT_INVALID
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["validate", str(broken)]) == EXIT_INVALID


def test_simulate_command(tmp_path):
    out = tmp_path / "sim.json"
    assert main(["simulate", "--size", "small", "--mix", "S2", "--seed", "4", "--out", str(out)]) == EXIT_OK
    inst = load_instance(out)
    assert inst.T == 672 and inst.total_demand_hours() >= 600
    out2 = tmp_path / "em.json"
    assert main(["simulate", "--emergency", "0.1", "--out", str(out2)]) == EXIT_OK
    assert load_instance(out2).K == 58


def test_solve_and_report(tiny_file, tmp_path, capsys):
    rep, ros = tmp_path / "rep.json", tmp_path / "roster.json"
    code = main(["solve", str(tiny_file), "--time-limit", "30", "--out", str(rep), "--roster", str(ros)])
    assert code == EXIT_OK
    line = capsys.readouterr().out
    assert "method=direct" in line and "workers=" in line
    assert ros.exists()

    assert main(["report", str(rep)]) == EXIT_OK
    assert "workers:" in capsys.readouterr().out

    for kind in ("demand", "supply", "gantt"):
        svg = tmp_path / f"{kind}.svg"
        assert main(["report", str(rep), "--plot", kind, "--out", str(svg)]) == EXIT_OK
        assert svg.read_text().lstrip().startswith("<?xml")
        table = tmp_path / f"{kind}.csv"
        assert main(["report", str(rep), "--plot", kind, "--out", str(table)]) == EXIT_OK
        rows = list(csv.reader(table.open()))
        assert len(rows) > 1

    data = json.loads(rep.read_text())
    rows = list(csv.reader((tmp_path / "demand.csv").open()))
    assert [int(float(r[1])) for r in rows[1:]] == [int(v) for v in data["demand"]]
    gantt = list(csv.reader((tmp_path / "gantt.csv").open()))
    assert len(gantt) - 1 == data["stage2"]["tau"]


def test_solve_infeasible_exit_code(tmp_path):
    inst = Instance(Horizon(10, omega=60), tasks=(Task(1, (5, 5), 3, (1, 1, 1)), Task(2, (1, 2), 1, (1,))),
                    precedence=((1, 2),), custom_patterns=(ShiftPattern((1, 1), omega=60),))
    path = tmp_path / "inf.json"
    save_instance(inst, path)
    assert main(["solve", str(path), "--time-limit", "10"]) == EXIT_INFEASIBLE


def test_solve_budget_exit_code(tmp_path):
    inst = Instance(Horizon(48, omega=60), fixed_demand=PeriodVector.from_values([3] * 48),
                    custom_patterns=(ShiftPattern((1, 1, 1, 1), omega=60),),
                    policy=Stage2Policy(max_shifts=3, rest_gap=2))
    path = tmp_path / "big.json"
    save_instance(inst, path)
    assert main(["solve", str(path), "--rho", "1", "--budget", "10", "--time-limit", "10"]) == EXIT_BUDGET


def test_bad_rho_is_a_usage_error():
    with pytest.raises(SystemExit):
        main(["solve", "x.json", "--rho", "zero"])
