"""Config parsing, validation and canonical round-tripping."""

import dataclasses

import pytest

from q3dtherm.config import (
    BenchmarkConfig,
    ConfigError,
    apply_overrides,
    canonical_text,
    config_hash,
    parse_config,
    parse_config_text,
    validate_config,
    write_resolved,
)


class TestParsing:
    def test_empty_text_yields_defaults(self):
        assert parse_config_text("") == BenchmarkConfig()

    def test_comments_and_blank_lines_are_ignored(self):
        text = "\n# a comment\n  \nq_hat = 2.0e6  # trailing note\n"
        assert parse_config_text(text) == dataclasses.replace(
            BenchmarkConfig(), q_hat=2.0e6)

    def test_types_are_converted_per_key(self):
        config = parse_config_text(
            "refinement_level = 2\n"
            "adapt_time = 5e-3\n"
            "profile_times = 1e-3 5e-3\n"
            "output_dir = results\n")
        assert config.refinement_level == 2
        assert config.adapt_time == pytest.approx(5e-3)
        assert config.profile_times == (1e-3, 5e-3)
        assert config.output_dir == "results"

    def test_adapt_time_none_disables_adaptation(self):
        assert parse_config_text("adapt_time = none\n").adapt_time is None

    def test_unknown_key_reports_line_number(self):
        with pytest.raises(ConfigError, match="line 2: unknown key 'qhat'"):
            parse_config_text("degree = 4\nqhat = 1.0\n")

    def test_duplicate_key_reports_line_number(self):
        with pytest.raises(ConfigError, match="line 3: duplicate key 'degree'"):
            parse_config_text("degree = 4\n\ndegree = 5\n")

    def test_missing_separator_reports_line_number(self):
        with pytest.raises(ConfigError, match="line 1: expected"):
            parse_config_text("degree 4\n")

    def test_unparsable_value_names_the_key(self):
        with pytest.raises(ConfigError, match="invalid value for 'dt'"):
            parse_config_text("dt = fast\n")

    def test_parse_config_reads_a_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("t_end = 2e-3\n", encoding="utf-8")
        assert parse_config(path).t_end == pytest.approx(2e-3)


class TestValidation:
    @pytest.mark.parametrize("assignment, fragment", [
        ("cable_width = 0", "cable_width"),
        ("insulation_thickness = -1e-5", "insulation_thickness"),
        ("n_cables = 0", "n_cables"),
        ("q_hat = -1.0", "q_hat"),
        ("z_q = 1.5", "z_q"),
        ("quenched_cable = 4", "quenched_cable"),
        ("refinement_level = -1", "refinement_level"),
        ("num_elements = 0", "num_elements"),
        ("degree = 0", "degree"),
        ("oracle_layers = 1", "oracle_layers"),
        ("dt = 0", "dt"),
        ("t_end = -1e-3", "t_end"),
        ("t_end = 2.5e-4", "multiple of dt"),
        ("adapt_time = 0.5", "adapt_time"),
        ("adapt_threshold = 0", "adapt_threshold"),
        ("adapt_threshold = 1.5", "adapt_threshold"),
        ("profile_times = 0.5", "profile_times"),
    ])
    def test_invariant_violations_name_the_key(self, assignment, fragment):
        with pytest.raises(ConfigError, match=fragment):
            parse_config_text(assignment + "\n")

    def test_adapt_time_must_align_with_dt(self):
        with pytest.raises(ConfigError, match="adapt_time"):
            parse_config_text("adapt_time = 1.5e-4\n")

    def test_zero_insulation_is_allowed(self):
        config = parse_config_text("insulation_thickness = 0\n")
        assert config.insulation_thickness == 0.0

    def test_validate_returns_the_config(self):
        config = BenchmarkConfig()
        assert validate_config(config) is config


class TestCanonicalForm:
    def test_round_trip_is_identity(self):
        config = dataclasses.replace(
            BenchmarkConfig(), q_hat=1.23456789012345e6, adapt_time=5e-3,
            profile_times=(1e-3, 5e-3, 1e-2), output_dir="artifacts")
        assert parse_config_text(canonical_text(config)) == config

    def test_defaults_round_trip(self):
        assert parse_config_text(canonical_text(BenchmarkConfig())) \
            == BenchmarkConfig()

    def test_every_field_appears_once(self):
        text = canonical_text(BenchmarkConfig())
        keys = [line.split("=")[0].strip() for line in text.strip().splitlines()]
        assert keys == [f.name for f in dataclasses.fields(BenchmarkConfig)]

    def test_hash_is_stable_and_value_sensitive(self):
        base = config_hash(BenchmarkConfig())
        assert base == config_hash(BenchmarkConfig())
        assert len(base) == 64
        changed = dataclasses.replace(BenchmarkConfig(), degree=9)
        assert config_hash(changed) != base

    def test_write_resolved_embeds_the_hash(self, tmp_path):
        config = BenchmarkConfig()
        path = tmp_path / "config_resolved.txt"
        write_resolved(config, path)
        body = path.read_text(encoding="utf-8")
        first, rest = body.split("\n", 1)
        assert config_hash(config) in first
        assert parse_config_text(rest) == config


class TestOverrides:
    def test_overrides_stack_on_parsed_config(self):
        config = parse_config_text("degree = 6\n")
        updated = apply_overrides(config, ["q_hat=2e6", "t_end = 5e-3"])
        assert updated.degree == 6
        assert updated.q_hat == pytest.approx(2e6)
        assert updated.t_end == pytest.approx(5e-3)

    def test_override_without_equals_sign_raises(self):
        with pytest.raises(ConfigError, match="key=value"):
            apply_overrides(BenchmarkConfig(), ["q_hat"])

    def test_override_unknown_key_raises(self):
        with pytest.raises(ConfigError, match="unknown key"):
            apply_overrides(BenchmarkConfig(), ["qhat=1.0"])

    def test_override_revalidates(self):
        with pytest.raises(ConfigError, match="z_q"):
            apply_overrides(BenchmarkConfig(), ["z_q=2.0"])
