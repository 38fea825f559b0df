"""Tests for logging setup."""

import logging

from app.core.logging import ColoredFormatter, get_logger, setup_logging


class TestColoredFormatter:
    """Test console coloring."""

    def test_colors_level(self):
        record = logging.makeLogRecord({"levelname": "ERROR", "msg": "bad index"})
        text = ColoredFormatter(fmt="%(levelname)s %(message)s").format(record)
        assert text == "\033[31mERROR\033[0m bad index"

    def test_record_left_unchanged(self):
        """Test formatting does not rewrite the record other handlers see."""
        record = logging.makeLogRecord({"levelname": "WARNING", "msg": "clamping"})
        ColoredFormatter(fmt="%(levelname)s %(message)s").format(record)
        assert record.levelname == "WARNING"


class TestSetupLogging:
    """Test handler wiring."""

    def test_file_has_no_color_codes(self, tmp_path, capsys):
        """Test the log file stays plain while the console is colored."""
        log_file = tmp_path / "nhq.log"
        setup_logging(level="INFO", log_file=log_file)
        get_logger("tests").warning("pool clamped")
        for handler in logging.getLogger("nhq").handlers:
            handler.flush()

        assert "\033[33mWARNING" in capsys.readouterr().err
        text = log_file.read_text(encoding="utf-8")
        assert "| WARNING  |" in text
        assert "\033[" not in text
