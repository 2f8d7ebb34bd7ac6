import csv
import io
import json

import pytest

from negent.cli import main
from negent.config import RunConfig, parse_int_list
from negent.errors import ConfigError
from negent.output import to_csv
from negent.tasks import ResultEnvelope, run


def _csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_entropy_task(capsys):
    assert main(["--task", "entropy", "--L", "100", "--Ly", "3"]) == 0
    rows = _csv_rows(capsys.readouterr().out)
    assert len(rows) == 1
    assert float(rows[0]["Re_SA"]) < -10


def test_classify_ep_task(capsys):
    assert main(["--task", "classify-ep", "--model", "four-band", "--M", "3", "--delta", "2",
                 "--Ly", "6"]) == 0
    assert _csv_rows(capsys.readouterr().out)[0]["kind"] == "quadratic_det"
    assert main(["--task", "classify-ep", "--model", "four-band", "--M", "3", "--delta", "1",
                 "--Z", "0.44", "--Ly", "6"]) == 0
    assert _csv_rows(capsys.readouterr().out)[0]["kind"] == "linear_det"


def test_oracle_check_task(capsys):
    assert main(["--task", "oracle-check"]) == 0
    rows = _csv_rows(capsys.readouterr().out)
    assert all(r["pass"] == "1" for r in rows)
    assert len(rows) >= 6


@pytest.mark.parametrize("argv,code", [
    (["--task", "entropy", "--L", "7"], 2),
    (["--task", "sweep"], 2),
    (["--task", "hierarchy", "--model", "four-band", "--L-list", "10,20,30,40"], 2),
    (["--task", "entropy", "--B", "20", "--Ly", "20", "--L", "100"], 3),
    (["--task", "entropy", "--model", "two-band", "--t", "0.7", "--a0", "1.3", "--b0", "0.4",
      "--Ly", "1", "--L", "6"], 3),
    (["--task", "classify-ep", "--model", "four-band", "--delta", "0", "--Ly", "6"], 4),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert rec["exit_code"] == code


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"task": "sweep", "L_list": [20, 30, 40, 50], "Ly": 2, "B": 1}))
    out = tmp_path / "out.csv"
    assert main(["--config", str(cfg), "--Ly", "3", "--out", str(out)]) == 0
    rows = _csv_rows(out.read_text())
    assert [int(r["L"]) for r in rows] == [20, 30, 40, 50]
    assert {r["Ly"] for r in rows} == {"3"}
    assert rows[0]["fit_slope"] != "nan"


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("NEGENT_OUTPUT_DIR", str(tmp_path))
    assert main(["--task", "entropy", "--L", "20", "--format", "json"]) == 0
    doc = json.loads((tmp_path / "entropy.json").read_text())
    assert doc["schema_version"] == 1
    assert doc["rows"][0]["L"] == 20


def test_csv_byte_identical_across_threads(tmp_path):
    outs = []
    for th in ("1", "3"):
        p = tmp_path / f"t{th}.csv"
        main(["--task", "sweep", "--model", "four-band", "--L-list", "20,24", "--threads", th,
              "--out", str(p)])
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_echo_round_trip():
    cfg = RunConfig.from_mapping({"task": "sweep", "model": "four-band", "Z": 0.44,
                                  "L_list": "logspace:20:40:4", "Ly": 2})
    again = RunConfig.from_mapping(cfg.echo())
    assert again == cfg
    assert run(again).rows == run(cfg).rows


def test_empty_sweep_header_only():
    env = ResultEnvelope(config={}, task="sweep", columns=["L", "Re_SA"], rows=[])
    assert to_csv(env) == "L,Re_SA\n"


def test_seventeen_digits():
    env = ResultEnvelope(config={}, task="x", columns=["v"], rows=[{"v": 0.1}])
    assert to_csv(env).splitlines()[1] == "0.10000000000000001"


def test_hierarchy_long_format(capsys):
    assert main(["--task", "hierarchy", "--L-list", "40,50,60,70", "--Ly", "3"]) == 0
    rows = _csv_rows(capsys.readouterr().out)
    assert {"L", "branch_rank", "abs_p"} <= set(rows[0])
    assert len(rows) == 4


def test_list_parsing():
    assert parse_int_list("logspace:100:600:9")[0] == 100
    assert parse_int_list("logspace:100:600:9")[-1] == 600
    assert all(v % 2 == 0 for v in parse_int_list("logspace:100:600:9"))
    assert parse_int_list("range:60:66:2") == [60, 62, 64, 66]
    with pytest.raises(ConfigError):
        parse_int_list("1,a")
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"nonsense": 1})


def test_plot_written(tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "sweep.csv"
    assert main(["--task", "sweep", "--L-list", "20,30,40,50", "--out", str(out), "--plot"]) == 0
    assert (tmp_path / "sweep.png").stat().st_size > 1000
