import pytest

from app.config import RunConfig, parse_config_text, parse_lr_mult, resolve_run_config
from app.errors import ConfigError


def test_parse_reports_unknown_keys_with_line_numbers():
    values, problems = parse_config_text("# comment\nepochs = 3\n\nbogus = 1\nno equals sign\n")
    assert values == {"epochs": "3"}
    assert problems[0].startswith("line 4:") and "bogus" in problems[0]
    assert problems[1].startswith("line 5:")


def test_dashes_and_comments():
    values, problems = parse_config_text("wls-lambda = 0   # identity\n")
    assert values == {"wls_lambda": "0"}
    assert not problems


def test_merge_order(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("epochs = 7\nseed = 1\nlr = 0.5\n", encoding="utf-8")
    config = resolve_run_config(path, {"seed": "9", "lr": None})
    assert (config.epochs, config.seed, config.lr) == (7, 9, 0.5)


def test_every_bad_key_is_listed(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("epochs = zero\nmystery = 1\nmomentum = 2\n", encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        resolve_run_config(path, {"unknown_flag": "1"})
    text = "\n".join(info.value.problems)
    for key in ("mystery", "unknown_flag"):
        assert key in text
    assert "epochs" in text and "momentum" in text


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        resolve_run_config(tmp_path / "nope.cfg")


def test_resolved_text_is_sorted_and_stable():
    config = RunConfig(epochs=3, fixed_crops=True)
    lines = config.to_text().splitlines()
    assert lines == sorted(lines)
    assert "fixed_crops = true" in lines
    assert config.checksum() == RunConfig(epochs=3, fixed_crops=True).checksum()
    assert config.checksum() != RunConfig(epochs=4, fixed_crops=True).checksum()


def test_train_config_projection():
    config = RunConfig(channel_set="base", layer_lr_mult="conv1:0.1, fc2:2", wls_lambda=0.5)
    cfg = config.train_config()
    assert cfg.channel_set == "base"
    assert cfg.layer_lr_mult == {"conv1": 0.1, "fc2": 2.0}
    assert cfg.wls.lam == 0.5
    assert config.train_config("rgb").channel_set == "rgb"


def test_lr_mult_parsing():
    assert parse_lr_mult("") == {}
    with pytest.raises(ValueError):
        parse_lr_mult("conv1")
    with pytest.raises(ValueError):
        RunConfig(layer_lr_mult="conv1=0.1")


def test_stage_list_and_path_validation(tmp_path):
    config = RunConfig(stages="detail, base,rgb", index=str(tmp_path / "none.csv"))
    assert config.stage_list() == ["detail", "base", "rgb"]
    ok, message = config.validate_paths()
    assert not ok and "none.csv" in message
