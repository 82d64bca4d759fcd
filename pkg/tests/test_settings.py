import pytest
from pydantic import ValidationError

from config.settings import DEFAULT_CONFIG_FILE, Settings, load_settings
from models.exceptions import ConfigError


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    monkeypatch.delenv("COMPACTA_CONFIG", raising=False)
    monkeypatch.delenv("COMPACTA_OUTPUT_DIR", raising=False)


def test_shipped_defaults_match_builtin_defaults():
    assert DEFAULT_CONFIG_FILE.exists()
    loaded = load_settings()
    assert loaded == Settings()
    assert loaded.enumeration_cap == 100000
    assert loaded.limit_tolerance == 1e-3
    assert loaded.output_dir is None


def test_missing_file_falls_back(tmp_path, caplog):
    loaded = load_settings(str(tmp_path / "absent.yaml"))
    assert loaded == Settings()
    assert "not found" in caplog.text


def test_sectioned_overrides(tmp_path):
    config = tmp_path / "settings.yaml"
    config.write_text("enumeration:\n  cap: 50\nrsk:\n  row_cap: 4\nunrelated:\n  key: 1\n")
    loaded = load_settings(str(config))
    assert loaded.enumeration_cap == 50
    assert loaded.row_cap == 4
    assert loaded.samples == Settings().samples


def test_environment_variables(tmp_path, monkeypatch):
    config = tmp_path / "env.yaml"
    config.write_text("sampling:\n  samples: 77\n")
    monkeypatch.setenv("COMPACTA_CONFIG", str(config))
    monkeypatch.setenv("COMPACTA_OUTPUT_DIR", str(tmp_path / "out"))
    loaded = load_settings()
    assert loaded.samples == 77
    assert loaded.output_dir == str(tmp_path / "out")


def test_invalid_values_are_rejected(tmp_path):
    config = tmp_path / "bad.yaml"
    config.write_text("absolute:\n  limit_tolerance: -1\n")
    with pytest.raises(ValidationError):
        load_settings(str(config))


@pytest.mark.parametrize("text", [
    "enumeration: [cap: 1\n",
    "- cap: 1\n- samples: 2\n",
    "sampling: 500\n",
])
def test_malformed_files_raise_config_error(tmp_path, text):
    config = tmp_path / "broken.yaml"
    config.write_text(text)
    with pytest.raises(ConfigError):
        load_settings(str(config))
