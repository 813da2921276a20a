import logging

import pytest

from config import Config, RunConfig
from errors import ConfigError
from logging_config import (
    LogContext, StructuredFormatter, clear_log_context, get_log_context, log_check_result,
    set_log_context, setup_logging,
)


def test_run_config_defaults():
    config = RunConfig(command="verify")
    assert config.seed == Config.SEED
    assert config.to_dict()["command"] == "verify"


@pytest.mark.parametrize("kwargs", [
    {"command": "plot"},
    {"command": "verify", "samples": 0},
    {"command": "verify", "n": 0},
    {"command": "verify", "workers": 0},
    {"command": "verify", "output_format": "xml"},
])
def test_run_config_rejects(kwargs):
    with pytest.raises(ConfigError):
        RunConfig(**kwargs)


def test_validate_accepts_defaults():
    Config.validate()


def test_validate_rejects_bad_values(monkeypatch):
    monkeypatch.setattr(Config, "CC_STEPS", 0)
    with pytest.raises(ConfigError, match="HQ_CC_STEPS"):
        Config.validate()


def test_validate_rejects_flat_penalty_schedule(monkeypatch):
    monkeypatch.setattr(Config, "CC_MU_GROWTH", 1.0)
    with pytest.raises(ConfigError):
        Config.validate()


def test_seed_override():
    assert Config.get_seed(7) == 7
    assert Config.get_seed() == Config.SEED


def test_log_context_nests_and_restores():
    clear_log_context()
    set_log_context(command="verify")
    with LogContext(check="haar"):
        assert get_log_context() == {"command": "verify", "check": "haar"}
    assert get_log_context() == {"command": "verify"}
    clear_log_context()
    assert get_log_context() == {}


def test_structured_formatter_prefixes_context():
    record = logging.LogRecord("hq", logging.INFO, __file__, 1, "solved", None, None)
    record.seed = 3
    record.restart = 1
    text = StructuredFormatter(fmt="%(message)s").format(record)
    assert text == "[seed=3 | restart=1] solved"


def test_setup_logging_replaces_its_handler():
    setup_logging("INFO")
    setup_logging("DEBUG")
    root = logging.getLogger()
    assert [h.get_name() for h in root.handlers].count("hq-console") == 1
    assert root.level == logging.DEBUG
    setup_logging("WARNING")


def test_failed_checks_log_at_warning(caplog):
    logger = logging.getLogger("hq.test")
    with caplog.at_level(logging.INFO, logger="hq.test"):
        log_check_result(logger, "haar", "fail", 1.2, 0.01)
        log_check_result(logger, "jacobi", "pass")
    assert [r.levelno for r in caplog.records] == [logging.WARNING, logging.INFO]
