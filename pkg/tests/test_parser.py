"""Specification language: lexing, parsing, pretty-printing round trips."""

import random

import pytest

from streamwatch.ast_nodes import (
    Binary,
    Hold,
    Literal,
    Offset,
    OutputDecl,
    PacingAnnotation,
    TriggerDecl,
    Unary,
    WindowAggregate,
)
from streamwatch.errors import SpecParseError
from streamwatch.parser import parse
from streamwatch.pretty import pretty_print
from streamwatch.values import NS_PER_SEC, ValueType

import helpers

OVERVIEW = """
input altitude: Float
output average_alt @1Hz := altitude.aggregate(over: 60s, using: avg).defaults(to: 0.0)
trigger average_alt > 300.0
"""

FPD_EXCERPT = """
input rpm : Int64
input src : UInt8
constant ROTOR_1: UInt8 := 1
constant ROTOR_2: UInt8 := 2
constant eps_on: Float64 := 120.0
constant eps_on_per: Float64 := 0.75
output rpm_1 eval when src == ROTOR_1 with abs(rpm)
output rpm_2 eval when src == ROTOR_2 with abs(rpm)
output rpm_on_check @true := avg(rpm_1.hold(or: 0), rpm_2.hold(or: 0)) > eps_on
output rpm_on @1s := rpm_on_check.aggregate(over: 1s, using: avg, or: 0.0) > eps_on_per
"""

RCC_EXCERPT = """
/// Property 1: Log message increment
input seq_number: Int64
input lost_connection_to_master: Bool
input switch_to_secondary: Bool
input both_rc_disconnected: Bool
output valid_seq_number := seq_number = seq_number.offset(by: -1, or: -1) + 1
/// Property 7: RC fallback test
output main_fallback_valid_dyn
    spawn when lost_connection_to_master
    close when switch_to_secondary ∨ both_rc_disconnected
    eval @200ms with false
output main_fallback_valid @true := main_fallback_valid_dyn.hold(or: true)
trigger ¬main_fallback_valid
"""


class TestParsing:
    def test_overview_listing_shape(self):
        ast = parse(OVERVIEW)
        assert len(ast.inputs) == 1
        assert len(ast.outputs) == 1
        assert len(ast.triggers) == 1
        out = ast.outputs[0]
        assert out.pacing == PacingAnnotation(NS_PER_SEC)  # 1Hz -> 1s period
        win = out.body
        assert isinstance(win, WindowAggregate)
        assert win.duration_ns == 60 * NS_PER_SEC
        assert win.func == "avg"
        assert win.default == Literal(value=0.0)

    def test_empty_source_is_empty_spec(self):
        ast = parse("")
        assert ast.decls == []
        assert pretty_print(ast) == ""

    def test_float_alias_resolves(self):
        ast = parse("input altitude: Float")
        assert ast.inputs[0].ty is ValueType.FLOAT64

    def test_int_alias_resolves(self):
        ast = parse("input n: Int")
        assert ast.inputs[0].ty is ValueType.INT64

    def test_unpaced_self_reference_parses(self):
        # rejected later by well-formedness, not by the parser
        ast = parse("output x := x + 1")
        assert isinstance(ast.outputs[0].body, Binary)

    def test_eval_with_and_assign_are_interchangeable(self):
        a = parse("input x: Int64\noutput y := x + 1")
        b = parse("input x: Int64\noutput y eval with x + 1")
        assert a.outputs[0].body == b.outputs[0].body

    def test_unicode_and_ascii_connectives_equal(self):
        a = parse("input p: Bool\ninput q: Bool\noutput r := p ∧ ¬q")
        b = parse("input p: Bool\ninput q: Bool\noutput r := p and not q")
        assert a == b

    def test_single_and_double_equals_same_ast(self):
        a = parse("input x: Int64\noutput y := x = 1")
        b = parse("input x: Int64\noutput y := x == 1")
        assert a == b

    def test_window_inline_or_equals_defaults_suffix(self):
        a = parse("input x: Float64\noutput y @1s := x.aggregate(over: 5s, using: avg, or: 1.0)")
        b = parse("input x: Float64\noutput y @1s := x.aggregate(over: 5s, using: avg).defaults(to: 1.0)")
        assert a == b

    def test_rcc_excerpt_full_shape(self):
        ast = parse(RCC_EXCERPT)
        dyn = next(o for o in ast.outputs if o.name == "main_fallback_valid_dyn")
        assert dyn.spawn is not None and dyn.close is not None
        assert dyn.pacing == PacingAnnotation(200 * helpers.MS)
        assert dyn.body == Literal(value=False)
        seq = next(o for o in ast.outputs if o.name == "valid_seq_number")
        off = seq.body.right.left  # (seq == (offset + 1)): rhs of ==, lhs of +
        assert isinstance(off, Offset)
        assert off.offset == -1
        assert off.default == Unary(op="-", operand=Literal(value=1))

    def test_trigger_message_optional(self):
        ast = parse('input b: Bool\ntrigger b "boom"\ntrigger not b')
        assert ast.triggers[0].message == "boom"
        assert ast.triggers[1].message is None

    def test_comments_ignored(self):
        ast = parse("// a comment\ninput x: Int64 /// docs\noutput y := x")
        assert len(ast.decls) == 2

    def test_frequency_normalizes_to_period(self):
        a = parse("input x: Int64\noutput y @5Hz := x")
        assert a.outputs[0].pacing == PacingAnnotation(NS_PER_SEC // 5)

    def test_duration_units(self):
        for text, ns in [("500ms", 500 * 10**6), ("2s", 2 * 10**9), ("1min", 60 * 10**9), ("0.5s", 5 * 10**8)]:
            ast = parse(f"input x: Float64\noutput y @1s := x.aggregate(over: {text}, using: sum)")
            assert ast.outputs[0].body.duration_ns == ns, text


class TestParseErrors:
    def expect_error(self, text, at_line=None, needle=None):
        with pytest.raises(SpecParseError) as exc:
            parse(text)
        if at_line is not None:
            assert exc.value.line == at_line, str(exc.value)
        if needle is not None:
            assert needle in str(exc.value)
        return exc.value

    def test_unknown_character(self):
        err = self.expect_error("input x: Int64\noutput y := x $ 1", at_line=2)
        assert err.column > 0

    def test_unexpected_token_carries_expected_set(self):
        err = self.expect_error("outputs y := 1")
        assert err.expected  # the declaration keywords

    def test_duplicate_declaration_name(self):
        self.expect_error("input x: Int64\noutput x := 1", needle="duplicate")

    def test_positive_offset_rejected(self):
        self.expect_error(
            "input x: Int64\noutput y := x.offset(by: 1, or: 0)"
        )

    def test_zero_offset_rejected(self):
        self.expect_error(
            "input x: Int64\noutput y := x.offset(by: -0, or: 0)",
            needle="strictly negative",
        )

    def test_two_pacing_annotations_rejected(self):
        self.expect_error(
            "input x: Int64\noutput y @1s eval @2s with x",
            needle="pacing",
        )

    def test_fractional_frequency_rejected(self):
        self.expect_error("input x: Int64\noutput y @3Hz := 1", needle="3Hz")

    def test_zero_duration_rejected(self):
        self.expect_error(
            "input x: Float64\noutput y @1s := x.aggregate(over: 0s, using: sum)",
            needle="positive",
        )

    def test_unknown_window_function(self):
        self.expect_error(
            "input x: Float64\noutput y @1s := x.aggregate(over: 1s, using: median)",
            needle="median",
        )

    def test_unknown_function(self):
        self.expect_error("input x: Float64\noutput y := sin(x)", needle="sin")

    def test_unterminated_string(self):
        self.expect_error('input b: Bool\ntrigger b "oops')

    def test_window_double_default_rejected(self):
        self.expect_error(
            "input x: Float64\n"
            "output y @1s := x.aggregate(over: 1s, using: avg, or: 0.0).defaults(to: 1.0)"
        )

    def test_errors_never_raise_other_exceptions(self):
        # garbage inputs produce positioned diagnostics, not crashes
        rng = random.Random(7)
        alphabet = "inputoutr := @().,<>\n\"abc123 ∧"
        for _ in range(300):
            text = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 60)))
            try:
                parse(text)
            except SpecParseError as e:
                assert e.line >= 1 and e.column >= 1


class TestRoundTrip:
    PAPER_SPECS = [OVERVIEW, FPD_EXCERPT, RCC_EXCERPT, ""]

    @pytest.mark.parametrize("idx", range(len(PAPER_SPECS)))
    def test_listing_round_trip(self, idx):
        first = parse(self.PAPER_SPECS[idx])
        text = pretty_print(first)
        second = parse(text)
        assert first == second
        # and the printer is a fixpoint after one normalization
        assert pretty_print(second) == text

    def test_fuzzed_round_trips(self):
        rng = random.Random(20240811)
        for i in range(150):
            spec = helpers.fuzz_spec(rng)
            first = parse(spec)
            text = pretty_print(first)
            assert parse(text) == first, f"fuzz case {i}:\n{spec}\n--- printed:\n{text}"

    def test_parse_is_pure(self):
        assert parse(FPD_EXCERPT) == parse(FPD_EXCERPT)
