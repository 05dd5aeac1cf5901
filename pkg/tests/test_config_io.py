"""
Tests del formato clave = valor y de la precedencia de configuración
"""
import pytest

from zenotrap.models.models import EngineSelection, MeasurementMode, RunConfig
from zenotrap.utils.config_io import (
    ENV_CONFIG,
    build_config,
    parse_config_text,
    parse_line,
    render_config,
    resolve_config,
)
from zenotrap.utils.errors import ConfigError


class TestParsing:

    def test_comments_and_blank_lines(self):
        text = "# header\n\nn = 2   # level\nengine=analytic\n"
        assert parse_config_text(text) == {"n": "2", "engine": "analytic"}

    def test_missing_separator(self):
        with pytest.raises(ConfigError, match=":3:"):
            parse_config_text("n = 1\n\nlength 12\n", source="run.cfg")

    def test_empty_key(self):
        with pytest.raises(ConfigError, match="empty key"):
            parse_line(" = 3")

    def test_comment_only_line(self):
        assert parse_line("   # nothing") is None

    def test_hash_inside_value_is_kept(self):
        assert parse_line("output = runs/fig#3.csv") == ("output", "runs/fig#3.csv")
        assert parse_line("output = runs/fig#3.csv   # trailing note") == ("output", "runs/fig#3.csv")
        assert parse_line("#n = 2") is None
        assert parse_line("n = 2\t# tab-separated note") == ("n", "2")


class TestBuild:

    def test_string_values_are_coerced(self):
        config = build_config({"n": "3", "taus": "1e-5, 2e-5, 4e-5", "protocol_mode": "interior_projection"})
        assert config.n == 3
        assert config.taus == [1e-5, 2e-5, 4e-5]
        assert config.protocol_mode == MeasurementMode.INTERIOR_PROJECTION

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="colour"):
            build_config({"colour": "red"})

    def test_invalid_value(self):
        with pytest.raises(ConfigError, match="n"):
            build_config({"n": "0"})

    def test_cross_field_rule(self):
        with pytest.raises(ConfigError, match="t_min"):
            build_config({"t_min": "0.1", "t_max": "0.01"})

    def test_empty_output_path(self):
        assert build_config({"output_path": ""}).output_path is None


class TestPrecedence:

    def test_env_file_set(self, tmp_path):
        env_file = tmp_path / "env.cfg"
        env_file.write_text("n = 2\nparticles = 3\nengine = tdse\n")
        cli_file = tmp_path / "cli.cfg"
        cli_file.write_text("n = 4\n")
        config = resolve_config(str(cli_file), ["particles=5"], environ={ENV_CONFIG: str(env_file)})
        assert config.n == 4
        assert config.particles == 5
        assert config.engine == EngineSelection.TDSE

    def test_later_overrides_win(self):
        config = resolve_config(None, ["n=2", "n=3"], environ={})
        assert config.n == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            resolve_config(str(tmp_path / "absent.cfg"), environ={})

    def test_override_without_equals(self):
        with pytest.raises(ConfigError):
            resolve_config(None, ["n"], environ={})


class TestRender:

    def test_every_key_in_declaration_order(self):
        text = render_config(RunConfig())
        keys = [line.split("=")[0].strip() for line in text.splitlines() if line and not line.startswith("#")]
        assert keys == list(RunConfig.model_fields)

    def test_round_trip(self):
        config = build_config({"n": "2", "taus": "1e-5,3e-5,9e-5", "output_format": "json", "t": "0.0025"})
        assert build_config(parse_config_text(render_config(config))) == config
