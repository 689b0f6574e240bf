"""Config parsing, coercion, and merge precedence."""

import pytest

from shiftreg.config import (
    DEFAULTS, KEY_REGISTRY, coerce, merge_config, parse_value, read_config_file,
)
from shiftreg.errors import ConfigError


def test_parse_value_json_and_bare_strings():
    assert parse_value("3") == 3
    assert parse_value("0.25") == 0.25
    assert parse_value("true") is True
    assert parse_value("null") is None
    assert parse_value("[1, 2, 3]") == [1, 2, 3]
    assert parse_value('"gam_l"') == "gam_l"
    assert parse_value("gam_l") == "gam_l"      # bare string, same result
    assert parse_value("  cov  ") == "cov"


def test_coerce_accepts_valid_values():
    assert coerce("K", 199) == 199
    assert coerce("theta", 1) == 1.0
    assert isinstance(coerce("theta", 1), float)
    assert coerce("fitter", "gam_nl") == "gam_nl"
    assert coerce("standardize", True) is True
    assert coerce("window", [0, 1, 0, 1]) == [0, 1, 0, 1]
    assert coerce("nw.bandwidth", 2) == 2.0
    assert coerce("nw.bandwidth", [0.1, 0.2]) == [0.1, 0.2]
    assert coerce("tail", None) is None


def test_coerce_unknown_key_lists_known_ones():
    with pytest.raises(ConfigError, match="unknown config key 'fitterr'"):
        coerce("fitterr", "lm")
    with pytest.raises(ConfigError, match="known keys: .*K.*fitter"):
        coerce("fitterr", "lm")


@pytest.mark.parametrize("key,value", [
    ("K", 1.5),
    ("K", True),           # bool is not an acceptable int
    ("K", "199"),
    ("theta", "half"),
    ("standardize", 1),
    ("window", "0,1,0,1"),
    ("fitter", "ols"),     # not in choices
    ("statistic", "pearson"),
    ("tail", "two_sided"),
    ("interest", None),    # not nullable
    ("nw.bandwidth", "cv"),
])
def test_coerce_rejects_bad_values(key, value):
    with pytest.raises(ConfigError):
        coerce(key, value)


def test_every_default_passes_its_own_registry_entry():
    for key, value in DEFAULTS.items():
        assert key in KEY_REGISTRY
        assert coerce(key, value) == value or value is None


def test_read_config_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text(
        "# a comment line\n"
        "\n"
        "fitter = gam_l\n"
        "K = 99\n"
        "theta = 0.5\n"
        "window = [0, 2, 0, 2]\n"
        "dcov.center = true\n"
        "study.label = \"pilot run\"\n"
    )
    cfg = read_config_file(str(path))
    assert cfg == {
        "fitter": "gam_l",
        "K": 99,
        "theta": 0.5,
        "window": [0, 2, 0, 2],
        "dcov.center": True,
        "study.label": "pilot run",
    }


def test_read_config_file_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.conf"
    path.write_text("fitter = lm\nno separator here\n")
    with pytest.raises(ConfigError, match=r"bad\.conf:2"):
        read_config_file(str(path))

    path.write_text("fitter = lm\nKK = 3\n")
    with pytest.raises(ConfigError, match="unknown config key 'KK'"):
        read_config_file(str(path))

    path.write_text("K = 19.5\n")
    with pytest.raises(ConfigError, match="expects an integer"):
        read_config_file(str(path))


def test_merge_precedence_defaults_file_cli():
    file_cfg = {"fitter": "gam_l", "K": 99}
    merged = merge_config(file_cfg, {"K": 499, "seed": None})
    assert merged["K"] == 499            # CLI beats file
    assert merged["fitter"] == "gam_l"   # file beats default
    assert merged["seed"] == 0           # None override means "not given"
    assert merged["statistic"] == "cov"  # untouched default

    assert merge_config(None, {})["K"] == DEFAULTS["K"]


def test_merge_coerces_cli_overrides():
    with pytest.raises(ConfigError):
        merge_config(None, {"fitter": "ols"})
    merged = merge_config(None, {"theta": 0})
    assert merged["theta"] == 0.0 and isinstance(merged["theta"], float)
