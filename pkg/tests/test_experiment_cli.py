import json
import subprocess
import sys

import pytest

from fastkm.cli import main
from fastkm.exceptions import ConfigError
from fastkm.experiment import load_config, parse_config, parse_range, run_experiment, sweep

HEADER = "k,residual,residual_times_k,gap,energy,variance"

SKEW_TOML = """schema_version = 1
seed = 0

[problem]
kind = "skew_toy"
d = 10
tau = 0.1

[solver]
name = "fast_km"
alpha = 4.0
eta = 0.5
sigma = 4.0
iterations = {iterations}

[output]
path = "{path}"
"""


def _columns(text, idx):
    return tuple(tuple(line.split(",")[i] for i in idx) for line in text.splitlines())


def _write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_config_defaults_and_unknown_keys():
    cfg = parse_config({"problem": {"kind": "geometric_median"}, "solver": {"name": "ohm"}})
    assert cfg.problem.params == {"N": 20, "d": 10, "Z": None}
    with pytest.raises(ConfigError) as exc:
        parse_config({"problem": {"kind": "skew_toy", "dd": 3}})
    assert exc.value.key == "dd"
    with pytest.raises(ConfigError):
        parse_config({"schema_version": 2})
    with pytest.raises(ConfigError):
        parse_config({"solver": {"name": "fast_km", "alpha": 1.0}})


def test_parse_range():
    assert parse_range("0.1:0.9:9") == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    assert parse_range("2,17") == [2.0, 17.0]
    with pytest.raises(ConfigError):
        parse_range("1:2")


def test_cli_run_skew_defaults(tmp_path):
    cfg = _write(tmp_path, SKEW_TOML.format(iterations=100, path="skew.csv"))
    assert main(["run", "--config", str(cfg)]) == 0
    lines = (tmp_path / "skew.csv").read_text().splitlines()
    assert lines[0] == HEADER and len(lines) == 101
    side = json.loads((tmp_path / "skew.csv.json").read_text())
    assert side["config"]["problem"]["d"] == 10
    assert side["seed"] == 0 and side["T_evaluations"] == 101


def test_cli_malformed_key_exits_2(tmp_path, capsys):
    cfg = _write(tmp_path, SKEW_TOML.format(iterations=10, path="x.csv").replace("tau = 0.1", "tua = 0.1"))
    assert main(["run", "--config", str(cfg)]) == 2
    assert "tua" in capsys.readouterr().err


def test_cli_missing_file_and_bad_flag(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.toml")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["run", "--bogus"])
    assert exc.value.code == 2


def test_cli_sweep_cardinality(tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", "--eta", "0.1:0.9:9", "--alpha", "4", "--sigma", "2",
                 "--iterations", "50", "--out", str(out)]) == 0
    assert len(list(out.glob("*.csv"))) == 9


def test_alpha_two_sweep_traces_coincide(tmp_path):
    base = parse_config({"problem": {"kind": "skew_toy"}, "solver": {"name": "fast_km", "iterations": 200}})
    etas = parse_range("0.1:0.9:9")
    paths = sweep(base, etas, [2.0, 4.0, 16.0, 32.0], [2.0, 17.0], tmp_path)
    assert len(paths) == 2 * 4 * 9
    for sigma in ("2", "17"):
        texts = [(tmp_path / f"skew_toy_fast_km_alpha2_sigma{sigma}_eta{e:g}.csv").read_text() for e in etas]
        # The iterates coincide, so every column derived from them is bitwise equal.
        # The energy column is a diagnostic whose weights depend on eta itself.
        iterate_cols = {_columns(t, (0, 1, 2, 3)) for t in texts}
        assert len(iterate_cols) == 1
        assert len({_columns(t, (4,)) for t in texts}) == len(etas)


def test_parallel_sweep_equals_serial(tmp_path):
    base = parse_config({"problem": {"kind": "l1_ball_toy"}, "solver": {"name": "fast_km", "iterations": 300}})
    ser = sweep(base, [0.3, 0.7], [4.0], [4.0, 8.0], tmp_path / "ser", workers=1)
    par = sweep(base, [0.3, 0.7], [4.0], [4.0, 8.0], tmp_path / "par", workers=2)
    for a, b in zip(ser, par):
        assert open(a, "rb").read() == open(b, "rb").read()


def test_cooling_schedule_in_sidecar(tmp_path):
    cfg = parse_config({
        "problem": {"kind": "skew_toy"},
        "solver": {"name": "fast_km_cooled", "alpha": 4.0, "eta": 0.5, "iterations": 2000, "maxit": 2000},
        "output": {"path": str(tmp_path / "cool.csv")},
    })
    _, side = run_experiment(cfg)
    sched = json.loads(side.read_text())["alpha_schedule"]
    assert len(sched) == 2000 and sched[0] == 4.0
    assert all(a == 400.0 for a in sched[1000:])


def test_zero_budget_gives_header_only(tmp_path):
    cfg = parse_config({"solver": {"iterations": 0}, "output": {"path": str(tmp_path / "empty.csv")}})
    out, _ = run_experiment(cfg)
    assert out.read_text() == HEADER + "\n"


@pytest.mark.parametrize("kind", ["skew_toy", "l1_ball_toy", "beckmann_ot", "geometric_median"])
def test_every_kind_runs_and_is_deterministic(tmp_path, kind):
    extra = {"p": 6} if kind == "beckmann_ot" else {}
    raw = {"seed": 3, "problem": {"kind": kind, **extra}, "solver": {"name": "fast_km", "iterations": 60}}
    texts = []
    for tag in ("a", "b"):
        raw["output"] = {"path": str(tmp_path / f"{tag}.csv")}
        out, _ = run_experiment(parse_config(raw))
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]


def test_plotdata_and_dynamics_commands(tmp_path):
    cfg = _write(tmp_path, SKEW_TOML.format(iterations=5, path="s.csv"))
    assert main(["run", "--config", str(cfg)]) == 0
    out = tmp_path / "long.csv"
    assert main(["plotdata", str(tmp_path / "s.csv"), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "run,k,quantity,value"
    assert rows[1].startswith("s,0,residual,")
    dyn = tmp_path / "dyn.csv"
    assert main(["dynamics", "--experiment", "edge", "--t-end", "5", "--h", "0.01",
                 "--sample-every", "50", "--out", str(dyn)]) == 0
    assert dyn.read_text().splitlines()[0] == "run,t,x1,x2,q_norm,t_q_norm"


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "fastkm", "run", "--config", str(tmp_path / "missing.toml")],
                         capture_output=True, text=True)
    assert res.returncode == 2
    assert "not found" in res.stderr


def test_load_config_resolves_relative_output(tmp_path):
    cfg = load_config(_write(tmp_path, SKEW_TOML.format(iterations=1, path="rel.csv")))
    assert cfg.output == str(tmp_path / "rel.csv")


MEDIAN_TOML = """schema_version = 1
seed = 0

[problem]
kind = "geometric_median"
N = 3
d = 2
Z = {Z}

[solver]
name = "fast_km"
iterations = 20

[output]
path = "{path}"
"""


def test_median_graph_matrix_from_config(tmp_path):
    out = tmp_path / "m.csv"
    Z = "[[1.0, 0.0], [-1.0, 1.0], [0.0, -1.0]]"
    assert main(["run", "--config", str(_write(tmp_path, MEDIAN_TOML.format(Z=Z, path=out)))]) == 0
    assert len(out.read_text().splitlines()) == 21
    ragged = "[[1.0], [-1.0, 1.0], [0.0, -1.0]]"
    assert main(["run", "--config", str(_write(tmp_path, MEDIAN_TOML.format(Z=ragged, path=out), "bad.toml"))]) == 2
