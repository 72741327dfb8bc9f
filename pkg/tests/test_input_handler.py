"""Tests for input_handler.py - run configuration parsing and validation."""

from pathlib import Path

import pytest

from src.errors import ParseError, ValidationError
from src.input_handler import (
    RunConfig,
    get_validated_config,
    parse_config,
    parse_lines,
    validate_audit,
    validate_divisor,
    validate_grid,
    validate_schedule,
    validate_solver,
    validate_weight,
)
from src.weights import CUSTOM, PRODUCT, SECTION_POWER

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


class TestParseLines:
    """Tests for parse_lines."""

    def test_parses_typed_values(self):
        values = parse_lines(
            "grid.n_u = 33\n"
            "divisor.beta = 0.5  # conical angle\n"
            "\n"
            "schedule.eps_list = 1e-1, 1e-2\n"
            "audit.truncation = yes\n"
            "weight.monomials = 1, 2\n"
        )
        assert values == {
            "n_u": 33,
            "beta": 0.5,
            "eps_list": (0.1, 0.01),
            "truncation": True,
            "monomials": (1, 2),
        }

    def test_comment_only_text_is_empty(self):
        assert parse_lines("# nothing here\n   \n") == {}

    @pytest.mark.parametrize(
        "text,line,key",
        [
            ("grid.n_u 33", 1, None),
            ("\ngrid.colour = red", 2, "grid.colour"),
            ("grid.n_u = 33\ngrid.n_u = 65", 2, "grid.n_u"),
            ("divisor.beta =", 1, "divisor.beta"),
            ("grid.n_u = 32.5", 1, "grid.n_u"),
            ("audit.truncation = maybe", 1, "audit.truncation"),
            ("schedule.eps_list = ,", 1, "schedule.eps_list"),
        ],
    )
    def test_malformed_line_raises(self, text, line, key):
        with pytest.raises(ParseError) as exc:
            parse_lines(text)
        assert exc.value.line == line
        assert exc.value.key == key

    def test_error_message_names_line_and_key(self):
        with pytest.raises(ParseError, match=r"line 1, key 'grid\.colour'"):
            parse_lines("grid.colour = red")


class TestValidators:
    """Tests for the validate_* helpers."""

    @pytest.mark.parametrize("n", [7, 10])
    def test_grid_sizes(self, n):
        ok, msg = validate_grid(16.0, n, 65)
        assert ok is False
        assert "grid.n_u" in msg

    def test_valid_grid(self):
        assert validate_grid(16.0, 129, 65) == (True, "")

    def test_grid_needs_positive_u_max(self):
        assert validate_grid(0.0, 129, 65)[0] is False

    @pytest.mark.parametrize(
        "eps_list,eta_list",
        [
            ((), None),
            ((0.1, -0.01), None),
            ((0.01, 0.1), None),
            ((0.1, 0.01), (0.5,)),
            ((0.1, 0.01), (0.5, 0.0)),
        ],
    )
    def test_invalid_schedule(self, eps_list, eta_list):
        assert validate_schedule(eps_list, eta_list)[0] is False

    def test_valid_schedule(self):
        assert validate_schedule((0.1, 0.01), (0.2, 0.05)) == (True, "")

    @pytest.mark.parametrize(
        "args",
        [(0.0, None, None, 0.5), (0.5, 1.5, None, 0.5), (0.5, None, -1.0, 0.5), (0.5, None, None, 1.0)],
    )
    def test_invalid_divisor(self, args):
        assert validate_divisor(*args)[0] is False

    def test_valid_divisor(self):
        assert validate_divisor(1.0, 0.5, 2.0, 0.0) == (True, "")

    def test_weight_kind_listed_in_message(self):
        ok, msg = validate_weight("gaussian", 1.0, "zero")
        assert ok is False
        assert PRODUCT in msg

    def test_weight_p_and_point(self):
        assert validate_weight(SECTION_POWER, 0.0, "zero")[0] is False
        assert validate_weight(SECTION_POWER, 1.0, "north")[0] is False
        assert validate_weight(SECTION_POWER, 1.0, "infinity") == (True, "")

    def test_solver(self):
        assert validate_solver(1e-8, 40, "neumann") == (True, "")
        assert validate_solver(0.0, 40, "neumann")[0] is False
        assert validate_solver(1e-8, 0, "neumann")[0] is False
        assert validate_solver(1e-8, 40, "periodic")[0] is False

    def test_audit(self):
        assert validate_audit(0.9, 0.45, 4097) == (True, "")
        assert validate_audit(1.0, 0.45, 4097)[0] is False
        assert validate_audit(0.9, 0.0, 4097)[0] is False
        assert validate_audit(0.9, 0.45, 8)[0] is False


class TestGetValidatedConfig:
    """Tests for get_validated_config."""

    def test_defaults(self):
        cfg = get_validated_config({})
        assert cfg == RunConfig()
        assert cfg.weight_p == cfg.beta

    def test_collects_every_violation(self):
        with pytest.raises(ValidationError) as exc:
            get_validated_config({"n_u": 8, "mu": 1.5, "lateral": "periodic"})
        assert len(exc.value.violations) == 3

    def test_custom_weight_value_must_be_positive(self):
        with pytest.raises(ValidationError, match="weight.value"):
            get_validated_config({"weight_kind": CUSTOM, "weight_value": 0.0})

    def test_geometric_schedule(self):
        cfg = get_validated_config({"eps_start": 0.1, "eps_end": 0.001, "count": 3})
        assert cfg.eps_list == pytest.approx((0.1, 0.01, 0.001))

    def test_geometric_schedule_single_entry(self):
        assert get_validated_config({"eps_start": 0.1, "eps_end": 0.1, "count": 1}).eps_list == (0.1,)

    def test_geometric_schedule_incomplete(self):
        with pytest.raises(ValidationError, match="together"):
            get_validated_config({"eps_start": 0.1, "count": 3})

    def test_both_schedule_forms_rejected(self):
        with pytest.raises(ValidationError, match="either"):
            get_validated_config({"eps_list": (0.1,), "eps_start": 0.1, "eps_end": 0.01, "count": 2})

    def test_relative_paths_resolve_against_base_dir(self, tmp_path):
        cfg = get_validated_config(
            {"f_field": "f.csv", "audit_grids": ("grid_0.csv", "/abs/grid_1.csv")},
            base_dir=tmp_path,
        )
        assert cfg.f_field == str(tmp_path / "f.csv")
        assert cfg.audit_grids == (str(tmp_path / "grid_0.csv"), "/abs/grid_1.csv")


class TestRunConfig:
    """Tests for the RunConfig builders."""

    def test_refined_halves_spacing(self):
        cfg = RunConfig(n_u=33, n_t=17).refined(1)
        assert (cfg.n_u, cfg.n_t) == (65, 33)
        assert RunConfig().refined(0) == RunConfig()

    def test_extended_keeps_spacing(self):
        cfg = RunConfig(u_max=8.0, n_u=33).extended(2.0)
        assert cfg.u_max == pytest.approx(10.0)
        assert cfg.n_u == 41

    def test_divisor_uses_c_fraction_of_c_max(self):
        cfg = RunConfig(u_max=8.0, n_u=33, beta=1.0, c_fraction=0.25)
        assert cfg.divisor().c == pytest.approx(0.25)

    def test_explicit_c_wins(self):
        assert RunConfig(c=0.3).divisor().c == 0.3

    @pytest.mark.parametrize("kind", [PRODUCT, SECTION_POWER, CUSTOM])
    def test_weight_kind(self, kind):
        w = RunConfig(weight_kind=kind, p=0.5).weight()
        assert w.kind == kind
        assert w.p == 0.5

    def test_schedule_uses_weight_p(self):
        schedule = RunConfig(eps_list=(0.1, 0.01), p=0.5).schedule()
        assert schedule.p == 0.5
        assert [e.eps for e in schedule.entries] == [0.1, 0.01]

    def test_to_dict_lists_and_resolved_p(self):
        payload = RunConfig(eps_list=(0.1,)).to_dict()
        assert payload["eps_list"] == [0.1]
        assert payload["p"] == payload["beta"]


class TestParseConfig:
    """Tests for parse_config on files."""

    @pytest.mark.parametrize("name", ["conical.cfg", "shift.cfg"])
    def test_shipped_configs_parse(self, name):
        cfg = parse_config(CONFIGS / name)
        assert cfg.source.endswith(name)

    def test_conical_config_values(self):
        cfg = parse_config(CONFIGS / "conical.cfg")
        assert cfg.beta == 0.75
        assert cfg.eps_list == (0.1, 0.01, 0.001)
        assert cfg.weight_kind == PRODUCT

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            parse_config(tmp_path / "absent.cfg")

    def test_f_field_relative_to_config(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("f_field = data/f.csv\n", encoding="utf-8")
        assert parse_config(path).f_field == str(tmp_path.resolve() / "data" / "f.csv")

    def test_unknown_key_in_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("grid.n_u = 33\nweight.colour = blue\n", encoding="utf-8")
        with pytest.raises(ParseError) as exc:
            parse_config(path)
        assert exc.value.line == 2
