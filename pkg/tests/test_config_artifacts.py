import json
import os

import numpy as np
import pytest

from hyperpattern.artifacts import atomic_write, jsonable, write_json, write_text
from hyperpattern.config import CONFIG_KEYS, ConfigError, RunConfig, load_config, parse_config


def test_parse_values_and_comments():
    cfg = parse_config("# run\nalpha = 0.5\n\nM=8   # walks\nseeds = 3, 4\nboundaries = 0.1,0.5,0.6,0.7\n")
    assert (cfg.alpha, cfg.M, cfg.seeds, cfg.boundaries) == (0.5, 8, (3, 4), (0.1, 0.5, 0.6, 0.7))
    assert cfg.lr == RunConfig().lr


@pytest.mark.parametrize("text,line,msg", [
    ("alpha = 1\nnope = 2\n", 2, "unknown key"),
    ("M = 8\n\nM = eight\n", 3, "bad value for M"),
    ("just words\n", 1, "expected"),
])
def test_config_errors_name_the_line(text, line, msg):
    with pytest.raises(ConfigError, match=msg) as info:
        parse_config(text, "run.cfg")
    assert info.value.line == line
    assert str(info.value).startswith(f"run.cfg:{line}: ")


def test_load_config_validates_and_overrides(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("M = 4\nlr = 0.01\n")
    cfg = load_config(p, {"M": 9, "alpha": None})
    assert (cfg.M, cfg.lr, cfg.alpha) == (9, 0.01, RunConfig().alpha)
    p.write_text("alpha = -1\n")
    with pytest.raises(ValueError):
        load_config(p)


def test_to_text_round_trip():
    cfg = parse_config("seeds = 1,2\nalpha = 0.25\npolicy = exhaustive\n")
    assert parse_config(cfg.to_text()) == cfg
    assert set(CONFIG_KEYS) == {line.split(" = ")[0] for line in cfg.to_text().splitlines()}


def test_header_is_one_line():
    h = RunConfig().header(command="train", checkpoint="a.pt")
    assert "\n" not in h and "alpha=1e-05" in h and h.endswith("checkpoint=a.pt")


def test_atomic_write_leaves_old_file_on_failure(tmp_path):
    p = tmp_path / "out.txt"
    p.write_text("old")

    def boom(fh):
        fh.write("partial")
        raise RuntimeError("stop")

    with pytest.raises(RuntimeError):
        atomic_write(p, boom)
    assert p.read_text() == "old"
    assert os.listdir(tmp_path) == ["out.txt"]


def test_json_and_text_headers(tmp_path):
    write_json(tmp_path / "a.json", {"x": np.arange(3), "y": np.float64(0.5), 1: (2,)}, header="cfg")
    assert json.loads((tmp_path / "a.json").read_text()) == {"header": "cfg", "x": [0, 1, 2], "y": 0.5, "1": [2]}
    write_text(tmp_path / "b" / "c.tsv", lambda fh: fh.write("a\tb\n"), header="cfg")
    assert (tmp_path / "b" / "c.tsv").read_text() == "# cfg\na\tb\n"
    assert jsonable({"k": [np.int64(3)]}) == {"k": [3]}
