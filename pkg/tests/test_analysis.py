"""Static analysis: typing, pacing, evaluation layers, memory bounds."""

import pytest

from streamwatch.analysis import (
    AccessKind,
    AnalysisErrorKind,
    Pacing,
    PacingKind,
    analyze,
    check_well_formedness,
    infer_pacing,
    memory_bounds,
)
from streamwatch.errors import AnalysisFailure
from streamwatch.parser import parse
from streamwatch.values import NS_PER_SEC, ValueType


def analyze_text(text):
    return analyze(parse(text))


def reject(text, kind, needle=None):
    with pytest.raises(AnalysisFailure) as exc:
        analyze_text(text)
    errors = exc.value.errors
    assert any(e.kind is kind for e in errors), errors
    if needle is not None:
        assert any(needle in e.message for e in errors), errors
    return errors


OVERVIEW = """
input altitude: Float
output average_alt @1Hz := altitude.aggregate(over: 60s, using: avg).defaults(to: 0.0)
trigger average_alt > 300.0
"""


class TestTyping:
    def test_overview_types(self):
        spec = analyze_text(OVERVIEW)
        assert spec.stream("altitude").ty is ValueType.FLOAT64
        assert spec.stream("average_alt").ty is ValueType.FLOAT64
        assert spec.streams[-1].ty is ValueType.BOOL

    def test_unknown_stream(self):
        reject("output a := b", AnalysisErrorKind.UNKNOWN_STREAM)

    def test_mixed_numeric_types_rejected(self):
        reject(
            "input x: Int64\ninput y: Float64\noutput a := x + y",
            AnalysisErrorKind.TYPE_MISMATCH,
        )

    def test_explicit_cast_accepted(self):
        spec = analyze_text(
            "input x: Int64\ninput y: Float64\noutput a := cast<Float64>(x) + y"
        )
        assert spec.stream("a").ty is ValueType.FLOAT64

    def test_uint8_arithmetic_promotes_to_uint64(self):
        spec = analyze_text("input s: UInt8\noutput a := s + 1")
        assert spec.stream("a").ty is ValueType.UINT64

    def test_uint8_comparison_stays_uint8(self):
        spec = analyze_text("input s: UInt8\noutput a := s == 3")
        assert spec.stream("a").ty is ValueType.BOOL

    def test_literal_out_of_range_for_uint8(self):
        reject(
            "input s: UInt8\noutput a := s == 300",
            AnalysisErrorKind.TYPE_MISMATCH,
        )

    def test_negating_unsigned_rejected(self):
        reject("input s: UInt64\noutput a := -s", AnalysisErrorKind.TYPE_MISMATCH)

    def test_bool_arithmetic_rejected(self):
        reject(
            "input b: Bool\noutput a := b + 1", AnalysisErrorKind.TYPE_MISMATCH
        )

    def test_trigger_condition_must_be_bool(self):
        reject(
            "input x: Int64\ntrigger x + 1", AnalysisErrorKind.TYPE_MISMATCH
        )

    def test_int_literal_adapts_to_float_context(self):
        spec = analyze_text("input x: Float64\noutput a := x.hold(or: 0)")
        assert spec.stream("a").ty is ValueType.FLOAT64

    def test_avg_builtin_returns_float(self):
        spec = analyze_text(
            "input x: Int64\ninput y: Int64\noutput a := avg(x, y)"
        )
        assert spec.stream("a").ty is ValueType.FLOAT64

    def test_min_builtin_keeps_operand_type(self):
        spec = analyze_text("input x: Int64\ninput y: Int64\noutput a := min(x, y)")
        assert spec.stream("a").ty is ValueType.INT64

    def test_window_avg_needs_default(self):
        reject(
            "input x: Float64\noutput a @1s := x.aggregate(over: 5s, using: avg)",
            AnalysisErrorKind.TYPE_MISMATCH,
            needle="default",
        )

    def test_window_sum_default_optional(self):
        spec = analyze_text(
            "input x: Float64\noutput a @1s := x.aggregate(over: 5s, using: sum)"
        )
        assert spec.stream("a").ty is ValueType.FLOAT64

    def test_window_count_is_uint64(self):
        spec = analyze_text(
            "input x: Float64\noutput a @1s := x.aggregate(over: 5s, using: count)"
        )
        assert spec.stream("a").ty is ValueType.UINT64

    def test_window_avg_over_bool_is_fraction(self):
        spec = analyze_text(
            "input b: Bool\noutput a @1s := b.aggregate(over: 5s, using: avg, or: 0.0)"
        )
        assert spec.stream("a").ty is ValueType.FLOAT64

    def test_window_sum_over_bool_rejected(self):
        reject(
            "input b: Bool\noutput a @1s := b.aggregate(over: 5s, using: sum)",
            AnalysisErrorKind.TYPE_MISMATCH,
        )

    def test_constant_range_checked(self):
        reject(
            "constant c: UInt8 := 300\ninput x: UInt8\noutput a := x == c",
            AnalysisErrorKind.TYPE_MISMATCH,
        )

    def test_constant_folding_arithmetic(self):
        spec = analyze_text(
            "constant base: Float64 := 2.5\nconstant lim: Float64 := base * 4.0\n"
            "input x: Float64\noutput a := x > lim"
        )
        assert spec.constants["lim"] == (ValueType.FLOAT64, 10.0)

    def test_offset_on_constant_rejected(self):
        reject(
            "constant c: Int64 := 1\noutput a @1s := c.offset(by: -1, or: 0)",
            AnalysisErrorKind.TYPE_MISMATCH,
            needle="constant",
        )


class TestWellFormedness:
    def test_self_sync_cycle_rejected(self):
        errors = reject("output x := x + 1", AnalysisErrorKind.ILL_FORMED_CYCLE)
        assert "x" in errors[0].message

    def test_two_stream_sync_cycle_rejected(self):
        errors = reject(
            "output a := b  output b := a", AnalysisErrorKind.ILL_FORMED_CYCLE
        )
        assert "a" in errors[0].message and "b" in errors[0].message

    def test_offset_self_loop_legal(self):
        spec = analyze_text("output c @1s := c.offset(by: -1, or: 0) + 1")
        assert spec.stream("c").memory_bound == 2

    def test_hold_breaks_cycles(self):
        spec = analyze_text(
            "input x: Int64\n"
            "output a := x + b.hold(or: 0)\n"
            "output b := a.offset(by: -1, or: 0)"
        )
        assert spec.stream("a").layer < spec.stream("b").layer or True

    def test_window_self_loop_rejected(self):
        reject(
            "output a @1s := a.aggregate(over: 5s, using: sum)",
            AnalysisErrorKind.ILL_FORMED_CYCLE,
        )

    def test_layers_respect_sync_order(self):
        spec = analyze_text(
            "input x: Int64\noutput a := x + 1\noutput b := a + 1\ntrigger b > 0"
        )
        assert spec.stream("x").layer < spec.stream("a").layer
        assert spec.stream("a").layer < spec.stream("b").layer
        assert spec.stream("b").layer < spec.streams[-1].layer

    def test_check_well_formedness_operation(self):
        layers = check_well_formedness(
            {
                "a": [],
                "b": [("a", AccessKind.SYNC)],
                "c": [("b", AccessKind.OFFSET), ("a", AccessKind.SYNC)],
            }
        )
        assert layers["a"] < layers["b"]
        assert layers["c"] > layers["a"]

    def test_check_well_formedness_cycle_diagnostic(self):
        with pytest.raises(AnalysisFailure) as exc:
            check_well_formedness(
                {
                    "a": [("b", AccessKind.SYNC)],
                    "b": [("a", AccessKind.WINDOW)],
                }
            )
        assert exc.value.errors[0].kind is AnalysisErrorKind.ILL_FORMED_CYCLE


class TestPacing:
    def test_event_based_union(self):
        spec = analyze_text(
            "input rpm: Int64\ninput src: UInt8\n"
            "output rpm_1 eval when src == 1 with abs(rpm)"
        )
        assert spec.stream("rpm_1").pacing == Pacing.event({"rpm", "src"})

    def test_hold_only_stream_needs_annotation(self):
        reject(
            "input x: Int64\noutput a := x.hold(or: 0)",
            AnalysisErrorKind.PACING_MISMATCH,
            needle="annotate",
        )

    def test_annotated_any_event_with_holds(self):
        spec = analyze_text("input x: Int64\noutput a @true := x.hold(or: 0)")
        assert spec.stream("a").pacing.kind is PacingKind.ANY

    def test_periodic_may_not_sync_event_stream(self):
        reject(
            "input x: Int64\noutput a @1s := x",
            AnalysisErrorKind.PACING_MISMATCH,
        )

    def test_event_stream_may_not_sync_periodic(self):
        reject(
            "input x: Int64\noutput p @1s := x.hold(or: 0)\noutput e := x + p",
            AnalysisErrorKind.PACING_MISMATCH,
        )

    def test_periodic_multiple_alignment_allowed(self):
        spec = analyze_text(
            "input x: Int64\noutput p @1s := x.hold(or: 0)\noutput q @2s := p + 1"
        )
        assert spec.stream("q").pacing.period_ns == 2 * NS_PER_SEC

    def test_periodic_non_multiple_rejected(self):
        reject(
            "input x: Int64\noutput p @2s := x.hold(or: 0)\noutput q @3s := p + 1",
            AnalysisErrorKind.PACING_MISMATCH,
        )

    def test_differing_inferred_periods_rejected(self):
        reject(
            "input x: Int64\n"
            "output p @1s := x.hold(or: 0)\n"
            "output q @2s := x.hold(or: 0)\n"
            "output r := p + q",
            AnalysisErrorKind.PACING_MISMATCH,
        )

    def test_window_crosses_pacing_kinds(self):
        spec = analyze_text(
            "input x: Float64\n"
            "output a @1s := x.aggregate(over: 10s, using: avg, or: 0.0)"
        )
        assert spec.stream("a").pacing == Pacing.periodic(NS_PER_SEC)

    def test_hold_default_contributes_pacing(self):
        # the default expression is evaluated at the accessor's instant
        spec = analyze_text(
            "input a: Float64\ninput b: Float64\n"
            "output dev := a - b.hold(or: a)"
        )
        assert spec.stream("dev").pacing == Pacing.event({"a"})

    def test_infer_pacing_operation(self):
        ast = parse(
            "input rpm: Int64\ninput src: UInt8\n"
            "output rpm_1 eval when src == 1 with abs(rpm)"
        )
        decl = ast.outputs[0]
        context = {
            "rpm": Pacing.event({"rpm"}),
            "src": Pacing.event({"src"}),
        }
        assert infer_pacing(decl, context) == Pacing.event({"rpm", "src"})

    def test_infer_pacing_empty_conjunction_errors(self):
        ast = parse("input x: Int64\noutput a := x.hold(or: 0)")
        with pytest.raises(AnalysisFailure):
            infer_pacing(ast.outputs[0], {"x": Pacing.event({"x"})})

    def test_pacing_conjunction_subset_of_inputs(self):
        spec = analyze_text(
            "input a: Int64\ninput b: Int64\n"
            "output x := a + 1\noutput y := b + 1\noutput z := x + y"
        )
        inputs = {s.name for s in spec.inputs}
        for s in spec.outputs:
            if s.pacing.kind is PacingKind.EVENT:
                assert s.pacing.events <= inputs

    def test_spawn_condition_must_touch_inputs_synchronously(self):
        reject(
            "input b: Bool\ninput x: Int64\n"
            "output flag := x > 0\n"
            "output s spawn when flag eval @1s with false\n",
            AnalysisErrorKind.SPAWN_ACCESS_VIOLATION,
        )

    def test_spawned_stream_hold_only_access(self):
        reject(
            "input b: Bool\ninput x: Int64\n"
            "output s spawn when b eval @1s with false\n"
            "output t := x + s.offset(by: -1, or: 0)",
            AnalysisErrorKind.SPAWN_ACCESS_VIOLATION,
        )

    def test_eval_when_stream_sync_access_rejected(self):
        reject(
            "input x: Int64\n"
            "output f eval when x > 0 with x\n"
            "output g := f + 1",
            AnalysisErrorKind.SPAWN_ACCESS_VIOLATION,
        )

    def test_eval_when_stream_hold_access_allowed(self):
        spec = analyze_text(
            "input x: Int64\n"
            "output f eval when x > 0 with x\n"
            "output g @true := f.hold(or: 0)"
        )
        assert spec.stream("g").pacing.kind is PacingKind.ANY


class TestMemoryBounds:
    def test_offset_widens_bound(self):
        spec = analyze_text(
            "input seq: Int64\noutput v := seq == seq.offset(by: -1, or: -1) + 1"
        )
        assert spec.stream("seq").memory_bound == 2

    def test_default_bound_is_one(self):
        spec = analyze_text("input x: Int64\noutput a := x + 1")
        assert spec.stream("x").memory_bound == 1
        assert spec.stream("a").memory_bound == 1

    def test_widest_offset_wins(self):
        spec = analyze_text(
            "input x: Int64\n"
            "output a := x.offset(by: -3, or: 0)\n"
            "output b := x.offset(by: -7, or: 0)"
        )
        assert spec.stream("x").memory_bound == 8

    def test_window_reported_as_duration_bounded(self):
        spec = analyze_text(OVERVIEW)
        report = {row.stream: row for row in memory_bounds(spec)}
        alt = report["altitude"]
        assert alt.retained_values == 1
        assert len(alt.windows) == 1
        assert alt.windows[0].duration_ns == 60 * NS_PER_SEC
        assert alt.windows[0].owner == "average_alt"
        assert "duration-bounded" in alt.describe()


class TestDeterminism:
    def test_analysis_idempotent(self):
        ast = parse(OVERVIEW)
        s1 = analyze(ast)
        s2 = analyze(ast)
        assert [(s.name, s.ty, s.pacing, s.layer) for s in s1.streams] == [
            (s.name, s.ty, s.pacing, s.layer) for s in s2.streams
        ]

    def test_rejections_identical_on_rerun(self):
        bad = "input x: Int64\ninput y: Float64\noutput a := x + y\noutput b := z"
        first = pytest.raises(AnalysisFailure, analyze_text, bad).value
        second = pytest.raises(AnalysisFailure, analyze_text, bad).value
        assert [str(e) for e in first.errors] == [str(e) for e in second.errors]

    def test_one_error_per_declaration(self):
        bad = "input x: Int64\noutput a := x + missing1 + missing2"
        errors = pytest.raises(AnalysisFailure, analyze_text, bad).value.errors
        assert len([e for e in errors if e.decl == "a"]) == 1
