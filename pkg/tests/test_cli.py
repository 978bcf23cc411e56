import json

import pytest

from folnerlab import cli
from folnerlab.io import config_hash, load_schema, read_csv_report, validate


def run(tmp_path, *args, name="out"):
    csv_path, json_path = tmp_path / f"{name}.csv", tmp_path / f"{name}.json"
    code = cli.main([*args, "--out-csv", str(csv_path), "--out-json", str(json_path)])
    return code, csv_path, json_path


def load(path):
    data = json.loads(path.read_text())
    validate(data, "report")
    return data


def test_schemas_ship():
    assert load_schema("config")["type"] == "object"
    assert "config_hash" in load_schema("report")["required"]


@pytest.mark.parametrize("args", [
    ["ball", "--group", "h3", "--ball-radii", "0,1,2,3"],
    ["boundary", "--group", "z1", "--k-radius", "1", "--t-radius", "4"],
    ["defect", "--group", "z2", "--ball-radii", "1,2,4"],
    ["frequency", "--coloring", "fibonacci", "--length", "5000", "--folner", "intervals",
     "--pattern", "a", "--m", "100,1000"],
    ["density", "--coloring", "fibonacci", "--length", "5000", "--m", "10,100"],
    ["converge", "--coloring", "fibonacci", "--length", "5000", "--weight", "letter",
     "--letter", "a", "--m", "100,200"],
    ["axioms", "--coloring", "fibonacci", "--length", "2000", "--weight", "count",
     "--trials", "50", "--seed", "3"],
    ["heis-volume", "--radius", "1", "--samples", "20000", "--seed", "1"],
])
def test_subcommands_emit_valid_reports(tmp_path, args):
    code, c, j = run(tmp_path, *args)
    assert code == 0
    rep = load(j)
    assert rep["command"] == args[0]
    cols, rows, meta = read_csv_report(c.read_text())
    assert cols == rep["columns"] and len(rows) == len(rep["rows"])
    assert meta["config_hash"] == rep["config_hash"]
    assert c.read_text().splitlines()[-1].startswith("# ")
    assert "certified_radius" in meta


def test_ball_values(tmp_path):
    code, c, j = run(tmp_path, "ball", "--group", "z2", "--ball-radii", "1,2")
    rows = load(j)["rows"]
    assert [r["size"] for r in rows] == [5, 13]


def test_boundary_example(tmp_path):
    code, _, j = run(tmp_path, "boundary", "--group", "z1", "--k-radius", "1", "--t-radius", "1")
    rep = load(j)
    assert [r["element"] for r in rep["rows"]] == [[-2], [-1], [1], [2]]


def test_byte_identical(tmp_path, monkeypatch):
    # output paths are part of the echoed config, so keep them equal
    args = ["repetitivity", "--coloring", "fibonacci", "--length", "3000", "--m-max", "4"]
    outs = []
    for d in ("a", "b"):
        (tmp_path / d).mkdir()
        monkeypatch.chdir(tmp_path / d)
        outs.append(run(type(tmp_path)("."), *args)[1:])
    (c1, j1), (c2, j2) = [(tmp_path / d / p.name, tmp_path / d / q.name) for d, (p, q) in zip("ab", outs)]
    assert c1.read_bytes() == c2.read_bytes()
    assert j1.read_bytes() == j2.read_bytes()


def test_rng_algorithm_recorded(tmp_path):
    _, c, j = run(tmp_path, "heis-volume", "--radius", "1", "--samples", "20000", "--seed", "4")
    assert "Philox" in load(j)["summary"]["rng_algorithm"]
    assert "Philox" in read_csv_report(c.read_text())[2]["rng_algorithm"]
    _, c, j = run(tmp_path, "axioms", "--coloring", "random", "--group", "z2", "--window-radius", "8",
                  "--coloring-seed", "2", "--trials", "20", "--seed", "1", name="ax")
    assert "PCG64" in read_csv_report(c.read_text())[2]["rng_algorithm"]


def test_threads_do_not_change_results(tmp_path):
    base = ["heis-volume", "--radius", "2", "--samples", "50000", "--seed", "9"]
    _, _, j1 = run(tmp_path, *base, "--threads", "1", name="t1")
    _, _, j2 = run(tmp_path, *base, "--threads", "4", name="t4")
    a, b = load(j1), load(j2)
    assert a["rows"] == b["rows"] and a["config_hash"] == b["config_hash"]


def test_config_hash_ignores_outputs():
    cfg = {"command": "ball", "group": "z1", "params": {"radius": 2}}
    assert config_hash(cfg) == config_hash({**cfg, "outputs": {"csv": "x"}, "threads": 4})
    assert config_hash(cfg) != config_hash({**cfg, "seed": 1})


def test_doubling_and_unit_schedules(tmp_path):
    common = ["repetitivity", "--coloring", "periodic", "--word", "ab", "--length", "262144",
              "--folner", "balls", "--m-max", "5"]
    code, _, j = run(tmp_path, *common, "--radii", "doubling", name="dbl")
    assert code == 0
    dbl = load(j)
    code, _, j = run(tmp_path, *common, "--radii", "unit", name="unit")
    unit = load(j)
    assert dbl["summary"]["tempered"] is False
    assert unit["summary"]["tempered"] is True
    ratios = [r["ratio"] for r in dbl["rows"] if r["certified"]]
    assert ratios[-1] < 1e-3 < ratios[0]


def test_ids_command(tmp_path):
    code, c, j = run(tmp_path, "ids", "--operator", "adjacency", "--group", "z1",
                     "--m", "100,200,400", "--oracle", "free")
    assert code == 0
    rows = load(j)["rows"]
    assert [r["m"] for r in rows] == [100, 200, 400]
    assert rows[-1]["sup_dist_oracle"] < 0.02


def test_ids_operator_file(tmp_path):
    op = tmp_path / "op.json"
    op.write_text(json.dumps({"kind": "potential", "params": {"coupling": 0.5}}))
    code, _, j = run(tmp_path, "ids", "--operator", str(op), "--coloring", "fibonacci",
                     "--length", "1000", "--m", "50,100")
    assert code == 0
    assert load(j)["summary"]["operator"]["params"] == {"coupling": 0.5}


def test_tile_command(tmp_path):
    code, _, j = run(tmp_path, "tile", "--group", "z1", "--epsilon", "0.09", "--region-radius", "500",
                     "--invariance", "0.09")
    assert code == 0
    rep = load(j)
    assert rep["verification"]["passed"]
    assert rep["summary"]["report"]["coverage"] >= 0.82
    assert set(rep["summary"]["tiling"]) >= {"epsilon", "tiles", "centers", "trimmed"}


def test_verification_failure_exit_4(tmp_path):
    code, c, j = run(tmp_path, "tile", "--group", "h3", "--epsilon", "0.09", "--region-radius", "6",
                     "--radii", "1,2,3", "--tile-indices", "1,2,3")
    assert code == 4
    rep = load(j)
    assert rep["verification"]["passed"] is False


def test_malformed_config_exit_2(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"command": "ball", "unknown_key": 1}))
    code, c, j = run(tmp_path, "run", str(cfg))
    assert code == 2
    assert not c.exists() and not j.exists()
    cfg.write_text("{not json")
    assert cli.main(["run", str(cfg)]) == 2
    code, c, j = run(tmp_path, "tile", "--group", "z1", "--epsilon", "0.5", "--region-radius", "5")
    assert code == 2 and not c.exists()


def test_missing_seed_exit_2(tmp_path):
    code, c, _ = run(tmp_path, "heis-volume", "--radius", "1", "--samples", "20000")
    assert code == 2 and not c.exists()


def test_cap_exit_3(tmp_path):
    code, c, j = run(tmp_path, "ball", "--group", "h3", "--radius", "30", "--cap-elements", "500")
    assert code == 3
    assert not c.exists() and not j.exists()
    # the cap does not leak into later runs
    code, _, _ = run(tmp_path, "ball", "--group", "h3", "--radius", "6", name="after")
    assert code == 0


def test_config_file_matches_flags(tmp_path):
    cfg = {"command": "density", "coloring": {"kind": "fibonacci", "length": 3000},
           "params": {"m": [10, 50]}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    _, _, j1 = run(tmp_path, "run", str(path), name="file")
    _, _, j2 = run(tmp_path, "density", "--coloring", "fibonacci", "--length", "3000", "--m", "10,50",
                   name="flags")
    a, b = load(j1), load(j2)
    assert a["rows"] == b["rows"] and a["config_hash"] == b["config_hash"]


def test_stdout_default(capsys):
    assert cli.main(["ball", "--group", "z1", "--radius", "3"]) == 0
    out = capsys.readouterr().out
    assert json.loads(out)["rows"][0]["size"] == 7
