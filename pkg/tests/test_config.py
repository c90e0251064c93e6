from pathlib import Path

import pytest

from dme_driver.config import RunConfig, dump_run_config, get_settings, load_run_config
from dme_driver.exceptions import ContractError
from dme_driver.models.training import AblationMode


def test_committed_preset_loads():
    config = load_run_config(Path(__file__).parent.parent / "configs" / "table3.toml")
    assert config.seed == 7
    assert config.data.scenes == 256
    assert config.data.eval_scenes == 64


def test_unknown_key_is_rejected(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text("seed = 1\n[train]\nepochz = 3\n", encoding="utf-8")
    with pytest.raises(ContractError, match="invalid config"):
        load_run_config(path)


def test_bad_value_is_rejected(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text("[model]\ndim = 0\n", encoding="utf-8")
    with pytest.raises(ContractError):
        load_run_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ContractError, match="cannot read config"):
        load_run_config(tmp_path / "absent.toml")


def test_dump_and_load(tmp_path):
    config = RunConfig(seed=3).with_ablation(AblationMode.GT_TEXT, tmp_path / "gt")
    path = tmp_path / "config.toml"
    dump_run_config(config, path)
    assert load_run_config(path) == config


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("DME_API_TOKEN", "secret")
    monkeypatch.setenv("DME_DEBUG", "true")
    get_settings.cache_clear()
    try:
        settings = get_settings()
        assert settings.auth_headers == {"Authorization": "Bearer secret"}
        assert settings.debug
    finally:
        get_settings.cache_clear()


def test_no_token_no_header(monkeypatch):
    monkeypatch.delenv("DME_API_TOKEN", raising=False)
    get_settings.cache_clear()
    try:
        assert get_settings().auth_headers == {}
    finally:
        get_settings.cache_clear()
