import copy

import pytest
import yaml

from encctl.config import ConfigError, config_from_dict, load_config, save_config

REFERENCE = "configs/unstable2.yaml"


@pytest.fixture
def reference_dict():
    with open(REFERENCE) as fh:
        return yaml.safe_load(fh)


def test_reference_config_loads():
    cfg = load_config(REFERENCE)
    assert cfg.design.gamma_c == 1e-6
    assert cfg.design.tau_c_seconds == 1.5768e9
    assert cfg.plant_model().n == 2
    assert cfg.prior_model().Lambda.shape == (4, 4)


def test_roundtrip(tmp_path):
    cfg = load_config(REFERENCE)
    path = tmp_path / "again.yaml"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_missing_field_is_named(tmp_path, reference_dict):
    del reference_dict["design"]["gamma_c"]
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(reference_dict, sort_keys=False))
    with pytest.raises(ConfigError, match=r"line \d+: missing required field design.gamma_c"):
        load_config(path)


def test_unknown_field_reports_its_line(tmp_path):
    text = "plant:\n  A_p: [[1.0]]\n  B_p: [[1.0]]\n  L: [[1.0]]\n  X: 3\ndesign: {gamma_c: 0.1, tau_c_seconds: 1, upsilon_flops: 1}\n"
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError, match="line 5: unknown field plant.X"):
        load_config(path)


def test_yaml_syntax_error_has_line(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("plant:\n  A_p: [[1.0]\n")
    with pytest.raises(ConfigError, match="line"):
        load_config(path)


def test_plain_exponent_notation_is_numeric(reference_dict):
    reference_dict["design"]["gamma_c"] = "1e-6"
    assert config_from_dict(reference_dict).design.gamma_c == 1e-6


@pytest.mark.parametrize(
    "section, key, value, message",
    [
        ("plant", "B_p", [[0.0], [1.0], [2.0]], "rows"),
        ("plant", "L", [[1.0]], "2x2"),
        ("design", "gamma_c", -1.0, "positive"),
        ("design", "gain", "lqr", "cheap"),
        ("design", "poles", [0.5], "poles"),
        ("crypto", "mode", "hybrid", "mode"),
        ("crypto", "key_bits", 4, "key_bits"),
        ("sim", "T", -1, "sim.T"),
        ("prior", "mu", [0.0], "prior.mu"),
        ("output", "formats", ["xlsx"], "formats"),
    ],
)
def test_validation_errors(reference_dict, section, key, value, message):
    bad = copy.deepcopy(reference_dict)
    bad[section][key] = value
    if key == "poles":
        bad["design"]["gain"] = "poles"
    with pytest.raises(ConfigError, match=message):
        config_from_dict(bad)


def test_optional_sections_default(reference_dict):
    minimal = {"plant": reference_dict["plant"], "design": {k: reference_dict["design"][k] for k in ("gamma_c", "tau_c_seconds", "upsilon_flops")}}
    cfg = config_from_dict(minimal)
    assert cfg.crypto.mode == "dynamic" and cfg.sim.T == 100
    with pytest.raises(ConfigError, match="missing required section 'design'"):
        config_from_dict({"plant": reference_dict["plant"]})
