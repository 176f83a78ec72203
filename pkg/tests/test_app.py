import logging

import pytest

from core.app import FairPostApp
from core.errors import EXIT_OK, EXIT_USAGE
from core.module_manager import ModuleManager
from main import build_application
from modules.logging_handler import RunLogHandler, get_recent_logs, run_log_handler

COMMANDS = {"split", "calibrate", "fit", "apply", "audit", "bound", "oracle-check", "bayes-rule", "synth"}


def test_every_module_registers_its_commands():
    application = build_application()
    assert set(application.commands) == COMMANDS
    assert len(application.manager) == 5
    assert "<Module metrics (enabled)" in " ".join(application.manager.summary())


def test_duplicate_command_is_rejected():
    application = build_application()
    module = application.manager.get_module("metrics")
    with pytest.raises(RuntimeError):
        module.register(application)


def test_disabled_module_commands_are_refused(tmp_path):
    application = build_application()
    instance = tmp_path / "two.txt"
    instance.write_text("0.5 0.9 1 0 1\n0.5 0.1 0 0 0\n")
    assert application.manager.disable_module("metrics")
    try:
        assert application.run(["bound", "--instance", str(instance)]) == EXIT_USAGE
    finally:
        application.manager.enable_module("metrics")
    assert application.run(["bound", "--instance", str(instance)]) == EXIT_OK
    assert not application.manager.disable_module("unknown")


def test_manager_registers_late_modules():
    manager = ModuleManager()
    application = FairPostApp(manager).setup()
    assert application.commands == []
    from modules.metrics.module import metrics_module

    manager.register_module(metrics_module)
    manager.register_module(metrics_module)
    assert application.commands == ["audit", "bound"]


def test_run_log_handler_counts_levels():
    handler = RunLogHandler()
    logger = logging.getLogger("fairpost.test")
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG)
    try:
        handler.reset()
        logger.info("fit started")
        logger.warning("score clamped")
        logger.error("group unknown")
    finally:
        logger.removeHandler(handler)
    assert handler.counts["INFO"] == 1
    assert handler.warning_count == 2
    summary = get_recent_logs()
    assert "score clamped" in summary and "fit started" not in summary
    handler.reset()
    assert get_recent_logs() == "No recent warnings."


def test_warnings_are_summarized_on_stderr(cli, write_csv, capsys):
    data = write_csv("scored.csv", "score,group,sensitive\n1.5,a,1\n0.2,a,0\n")
    root = logging.getLogger()
    root.addHandler(run_log_handler)
    try:
        assert cli("audit", "--input", data, "--out", data.parent / "report.txt") == EXIT_OK
    finally:
        root.removeHandler(run_log_handler)
    assert "clamped" in capsys.readouterr().err
