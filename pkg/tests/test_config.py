import numpy as np
import pytest

from exterior_ot.artifacts import write_density_csv
from exterior_ot.config import ConfigError, load_config, parse_config, read_density_csv
from exterior_ot.domain import Ball, GridSpec, mass, rasterize

BASIC = """\
[grid]
dim = 1
spacing = 0.05
half_width = 2.5

[cost]
kind = power
p = 1

[density]
shape = ball
radius = 1

[task]
name = solve

[output]
dir = results
"""


def test_basic_config(tmp_path):
    cfg = parse_config(BASIC, base=tmp_path)
    assert cfg.task == "solve" and cfg.grid.size == 100
    assert mass(cfg.density) == pytest.approx(2.0)
    assert cfg.out_dir == (tmp_path / "results").resolve()
    assert cfg.describe()["cost"] == {"kind": "power", "p": 1.0, "cap": None}


def test_overrides_and_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("EXTERIOR_OT_OUT", str(tmp_path / "env"))
    cfg = parse_config(BASIC, base=tmp_path, overrides={"seed": 4, "threads": 2})
    assert cfg.out_dir == (tmp_path / "env").resolve() and cfg.seed == 4 and cfg.threads == 2
    cfg = parse_config(BASIC, base=tmp_path, overrides={"out": tmp_path / "flag"})
    assert cfg.out_dir == (tmp_path / "flag").resolve()


@pytest.mark.parametrize("text,line,fragment", [
    (BASIC.replace("p = 1", "p = one"), 8, "bad value"),
    (BASIC.replace("radius = 1", "radius = 1\ncolour = red"), 13, "unknown key"),
    (BASIC + "[extra]\nx = 1\n", 19, "unknown section"),
    (BASIC.replace("name = solve", "name = fly"), 15, "task must be one of"),
    ("dim = 1\n" + BASIC, 1, "[section] header"),
    (BASIC.replace("half_width = 2.5", "half_width = 2.5\nhalf_width = 3"), 5, "duplicate key"),
])
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text, source="exp.ini")
    assert info.value.line == line and fragment in str(info.value)
    assert str(info.value).startswith(f"exp.ini:{line}: ")


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config("/nonexistent/exp.ini")


def test_shape_outside_grid_is_a_config_error():
    with pytest.raises(ConfigError, match="exceeds grid extent"):
        parse_config(BASIC.replace("radius = 1", "radius = 4"))


def test_density_csv_round_trip(tmp_path):
    grid = GridSpec.centered((12, 10), 0.25)
    f = rasterize(Ball((0.0, 0.0), 1.0), grid)
    path = write_density_csv(tmp_path / "f.csv", f)
    back = read_density_csv(path, grid)
    np.testing.assert_array_equal(back.values, f.values)
    text = BASIC.replace("shape = ball\nradius = 1", f"shape = file\nfile = {path.name}")
    text = text.replace("dim = 1\nspacing = 0.05\nhalf_width = 2.5", "shape = 12, 10\nspacing = 0.25")
    cfg = parse_config(text, base=tmp_path)
    np.testing.assert_array_equal(cfg.density.values, f.values)
