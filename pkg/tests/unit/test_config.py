"""Unit tests for settings and key=value config files."""

import pytest

from varda.cli.commands import load_config
from varda.config import (
    Settings,
    apply_overrides,
    flatten,
    format_value,
    parse_value,
    read_kv_file,
    write_kv_lines,
)
from varda.errors import ConfigError
from varda.networks import NetConfig
from varda.trainer import TrainConfig


class TestSettings:
    """Tests for environment settings."""

    def test_defaults(self, monkeypatch):
        """Test the values used when nothing is set."""
        for name in ("VARDA_THREADS", "VARDA_DTYPE", "VARDA_LOG_LEVEL"):
            monkeypatch.delenv(name, raising=False)
        settings = Settings()
        assert settings.threads == 1
        assert settings.dtype == "float64"
        assert settings.log_level == "INFO"

    def test_reads_environment(self, monkeypatch):
        """Test that environment variables are picked up."""
        monkeypatch.setenv("VARDA_THREADS", "4")
        monkeypatch.setenv("VARDA_DTYPE", "float32")
        settings = Settings()
        assert settings.threads == 4
        assert settings.dtype == "float32"

    @pytest.mark.parametrize("name, value", [("VARDA_THREADS", "0"), ("VARDA_DTYPE", "float16")])
    def test_invalid_environment(self, monkeypatch, name, value):
        """Test that out-of-range settings are rejected."""
        monkeypatch.setenv(name, value)
        with pytest.raises(ConfigError):
            Settings()


class TestKvFiles:
    """Tests for reading and writing key=value files."""

    def test_read_skips_comments_and_blanks(self, tmp_path):
        """Test that comments and blank lines are ignored and lines are kept."""
        path = tmp_path / "run.cfg"
        path.write_text("# header\n\nlr = 1e-3  # faster\nweights.alpha3=0.5\n")
        entries = read_kv_file(path)
        assert entries == {"lr": ("1e-3", 3), "weights.alpha3": ("0.5", 4)}

    def test_missing_equals(self, tmp_path):
        """Test that a line without '=' names its line number."""
        path = tmp_path / "run.cfg"
        path.write_text("lr=1\nbatch_size 4\n")
        with pytest.raises(ConfigError) as info:
            read_kv_file(path)
        assert info.value.line == 2
        assert "line 2" in str(info.value)

    def test_duplicate_key(self, tmp_path):
        """Test that a repeated key is rejected at its second occurrence."""
        path = tmp_path / "run.cfg"
        path.write_text("seed=1\nlr=1\nseed=2\n")
        with pytest.raises(ConfigError) as info:
            read_kv_file(path)
        assert info.value.line == 3

    def test_empty_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("=3\n")
        with pytest.raises(ConfigError):
            read_kv_file(path)

    def test_write_lines_sorted(self):
        """Test rendering of bools, sequences and None."""
        lines = write_kv_lines({"b": True, "a": (1, 2), "c": None})
        assert lines == ["a=1,2", "b=true", "c=none"]
        assert format_value(False) == "false"


class TestParseValue:
    """Tests for typed parsing of raw config strings."""

    def test_scalars(self):
        """Test ints, floats, bools and strings."""
        assert parse_value("3", int) == 3
        assert parse_value("1e-4", float) == 1e-4
        assert parse_value("yes", bool) is True
        assert parse_value("0", bool) is False
        assert parse_value("sliced", str) == "sliced"

    def test_optional(self):
        """Test that 'none' maps to None only for optional fields."""
        assert parse_value("none", float | None) is None
        assert parse_value("2.5", float | None) == 2.5

    def test_sequences(self):
        assert parse_value("1,2,3", tuple[int, ...]) == (1, 2, 3)
        assert parse_value("0.5,1", list[float]) == [0.5, 1.0]

    @pytest.mark.parametrize("raw, annotation", [("x", int), ("1.5.2", float), ("maybe", bool)])
    def test_unparsable(self, raw, annotation):
        """Test that bad values raise with the line they came from."""
        with pytest.raises(ConfigError) as info:
            parse_value(raw, annotation, line=7)
        assert info.value.line == 7


class TestOverrides:
    """Tests for applying config entries onto dataclasses."""

    def test_nested_keys(self):
        """Test that dotted keys reach nested dataclasses."""
        config = TrainConfig()
        consumed = apply_overrides(
            config, {"lr": ("1e-3", 1), "weights.alpha3": ("0.5", 2), "other": ("1", 3)}
        )
        assert consumed == {"lr", "weights.alpha3"}
        assert config.lr == 1e-3
        assert config.weights.alpha3 == 0.5

    def test_flatten(self):
        """Test that flatten yields dotted keys for nested fields."""
        flat = flatten(TrainConfig())
        assert flat["weights.alpha1"] == 1.0
        assert flat["batch_size"] == 10
        assert "weights" not in flat

    def test_load_config_sections(self, tmp_path):
        """Test that prefixed sections route keys to the right objects."""
        path = tmp_path / "run.cfg"
        path.write_text("iterations=7\nnet.decoder_depth=0\nnet.conditioning=without_label\n")
        config, net = TrainConfig(), NetConfig()
        load_config(path, {"": config, "net.": net})
        assert config.iterations == 7
        assert net.decoder_depth == 0
        assert net.conditioning == "without_label"

    def test_load_config_unknown_key(self, tmp_path):
        """Test that the first unknown key is reported with its line."""
        path = tmp_path / "run.cfg"
        path.write_text("iterations=7\n\nlearning_rate=1\nbogus=2\n")
        with pytest.raises(ConfigError) as info:
            load_config(path, {"": TrainConfig()})
        assert info.value.line == 3
        assert "learning_rate" in str(info.value)

    def test_load_config_without_file(self):
        """Test that no path leaves the defaults alone."""
        config = TrainConfig()
        load_config(None, {"": config})
        assert config == TrainConfig()
