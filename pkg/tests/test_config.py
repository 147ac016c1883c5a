import pytest

from nullcone.config import ConfigError, GridConfig, load_config, parse_config

GOOD = """\
[grid]
u0 = -80
ub0 = 0
ub_max = 4
n_u = 16
n_ub = 16
L = 4
background = minkowski
M = 0
s = 5
data_profile = peeling

[run]
seed = 3
quadrature = trapezoid
"""


def test_parse_good_config():
    cfg = parse_config(GOOD)
    assert cfg.grid.u0 == -80 and cfg.grid.n_ub == 16 and cfg.grid.L == 4
    assert cfg.grid.u1 == -20 and cfg.seed == 3 and cfg.quadrature == "trapezoid"
    assert cfg.as_dict()["grid"]["u_max"] == -20


def test_defaults():
    g = GridConfig()
    assert (g.n_u, g.n_ub, g.L, g.s) == (64, 64, 8, 5.0) and g.u1 == g.u0 / 4


@pytest.mark.parametrize("text,line,key", [
    (GOOD.replace("L = 4", "Lmax = 4"), 7, "Lmax"),
    (GOOD.replace("n_u = 16", "n_u = many"), 5, "n_u"),
    (GOOD.replace("background = minkowski", "background = kerr"), 8, "background"),
    (GOOD.replace("M = 0", "M = 1"), 9, "M"),
    (GOOD.replace("s = 5", "s = 3"), 10, "s"),
    (GOOD.replace("ub_max = 4", "ub_max = -1"), 4, "ub_max"),
    (GOOD.replace("ub0 = 0", "ub0 = -30"), 3, "ub0"),
    (GOOD.replace("n_ub = 16", "n_ub = 2"), 6, "n_ub"),
    (GOOD.replace("u0 = -80", "u0 = nan"), 2, "u0"),
])
def test_errors_carry_line_and_key(text, line, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line and exc.value.key == key
    assert f"line {line}" in str(exc.value) and repr(key) in str(exc.value)


@pytest.mark.parametrize("text", ["", "# only a comment\n", "[run]\nseed = 1\n",
                                  "u0 = 1\n", "[grid]\nu0 = 1\nu0 = 2\n", "[plot]\nx = 1\n"])
def test_structural_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.cfg")


BACKGROUND = """\
[background]
M = 2
a = 0
r_min = 20
r_max = 2000
n_samples = 30
"""


def test_background_section():
    cfg = parse_config(BACKGROUND, require="background")
    assert (cfg.background.M, cfg.background.r_min, cfg.background.n_samples) == (2.0, 20.0, 30)
    with pytest.raises(ConfigError, match=r"\[grid\] section is required"):
        parse_config(BACKGROUND)


@pytest.mark.parametrize("old,new,line,key", [
    ("M = 2", "M = 0", 2, "M"),
    ("a = 0", "a = 3", 3, "a"),
    ("r_max = 2000", "r_max = 5", 5, "r_max"),
    ("n_samples = 30", "n_samples = 1", 6, "n_samples"),
])
def test_background_errors(old, new, line, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(BACKGROUND.replace(old, new), require="background")
    assert exc.value.line == line and exc.value.key == key


def test_inline_comments():
    cfg = parse_config("[grid]\nu0 = -80   # first cone\nL = 4 ; band limit\n")
    assert cfg.grid.u0 == -80.0 and cfg.grid.L == 4
