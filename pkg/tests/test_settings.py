import pytest

from utils.settings import Settings, load_settings


def test_environment_overrides(monkeypatch) -> None:
    monkeypatch.setenv("RELIC_K_MAX", "4")
    monkeypatch.setenv("RELIC_PARALLEL", "no")
    monkeypatch.setenv("RELIC_LOG_LEVEL", "debug")
    settings = load_settings()
    assert settings.k_max == 4
    assert not settings.parallel
    assert settings.log_level == "DEBUG"


def test_invalid_setting(monkeypatch) -> None:
    monkeypatch.setenv("RELIC_COOPER_CAP", "many")
    with pytest.raises(ValueError):
        load_settings()


def test_depth_must_be_positive(monkeypatch) -> None:
    monkeypatch.setenv("RELIC_K_MAX", "0")
    with pytest.raises(ValueError):
        load_settings()


def test_override_ignores_none() -> None:
    s = Settings().override(k_max=None, port=8080)
    assert s.k_max == 10
    assert s.port == 8080
