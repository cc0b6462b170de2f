"""Corpus case definitions: spec + CSV fixtures + expected NDJSON output.

Each case replays its fixtures through the standard pipeline and must
reproduce its golden verdict files byte for byte (see ``verify_case`` and
the ``streamwatch corpus`` subcommand).
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from importlib import resources

from ..adapter import EventFactory, MappingConfig, TimeMode, build_field_mapping
from ..analysis import TypedSpecification, analyze
from ..formats import NdjsonFormat
from ..parser import parse
from ..pipeline import Pipeline, RunSummary
from .geofence import GeofencePolygon, generate_geofence_spec


def _data_path(name: str):
    return resources.files("streamwatch.corpus").joinpath("data", name)


def _read_text(name: str) -> str:
    return _data_path(name).read_text(encoding="utf-8")


@dataclass(frozen=True)
class CorpusFixture:
    trace: str  # CSV fixture file name
    golden: str  # expected NDJSON file name
    description: str = ""


@dataclass(frozen=True)
class CorpusCase:
    name: str
    spec_file: str | None  # None: spec is generated (geofence)
    fixtures: tuple[CorpusFixture, ...]
    description: str = ""

    def spec_text(self) -> str:
        if self.spec_file is not None:
            return _read_text(self.spec_file)
        fence = GeofencePolygon.from_file(str(_data_path("geofence_fence.txt")))
        return generate_geofence_spec(fence, horizon_s=30.0)

    def typed(self) -> TypedSpecification:
        return analyze(parse(self.spec_text()))


def corpus_fpd() -> CorpusCase:
    return CorpusCase(
        name="fpd",
        spec_file="fpd.spec",
        fixtures=(
            CorpusFixture(
                "fpd_flight.csv",
                "fpd_flight.golden.ndjson",
                "idle, spin-up, climb, a mid-flight telemetry sag "
                "(no clear phase), landing",
            ),
        ),
        description="flight-phase detection from per-rotor rpm telemetry",
    )


def corpus_rcc() -> CorpusCase:
    return CorpusCase(
        name="rcc",
        spec_file="rcc.spec",
        fixtures=(
            CorpusFixture(
                "rcc_clean.csv", "rcc_clean.golden.ndjson",
                "incrementing sequence numbers, no fallback episodes",
            ),
            CorpusFixture(
                "rcc_gap.csv", "rcc_gap.golden.ndjson",
                "one sequence-number gap",
            ),
            CorpusFixture(
                "rcc_fast_fallback.csv", "rcc_fast_fallback.golden.ndjson",
                "switch to secondary 150ms after losing the master: no "
                "watchdog trigger",
            ),
            CorpusFixture(
                "rcc_slow_fallback.csv", "rcc_slow_fallback.golden.ndjson",
                "no switch within 200ms: watchdog trigger",
            ),
            CorpusFixture(
                "rcc_boundary_fallback.csv",
                "rcc_boundary_fallback.golden.ndjson",
                "switch exactly at the 200ms deadline: the mitigation wins "
                "the tie, no trigger",
            ),
        ),
        description="remote-control computer checks: sequence increments "
        "and the 200ms fallback watchdog",
    )


def corpus_daa() -> CorpusCase:
    return CorpusCase(
        name="daa",
        spec_file="daa.spec",
        fixtures=(
            CorpusFixture(
                "daa_nominal.csv", "daa_nominal.golden.ndjson",
                "ADS-B and active surveillance agree",
            ),
            CorpusFixture(
                "daa_divergence.csv", "daa_divergence.golden.ndjson",
                "ADS-B jumps away from the active track: divergence trigger",
            ),
            CorpusFixture(
                "daa_stale.csv", "daa_stale.golden.ndjson",
                "active surveillance goes silent: staleness trigger at the "
                "third missed period",
            ),
        ),
        description="detect-and-avoid sensor cross-validation and "
        "freshness checks",
    )


def corpus_geofence() -> CorpusCase:
    return CorpusCase(
        name="geofence",
        spec_file=None,
        fixtures=(
            CorpusFixture(
                "geofence_flight.csv", "geofence_flight.golden.ndjson",
                "loiter inside the fence, drift toward an edge (predicted "
                "breach), cross it (breach)",
            ),
        ),
        description="generated geofence monitor over a five-vertex fence",
    )


def all_cases() -> list[CorpusCase]:
    return [corpus_fpd(), corpus_rcc(), corpus_daa(), corpus_geofence()]


class _ListSink:
    def __init__(self) -> None:
        self.lines: list[str] = []

    def write(self, line: str) -> None:
        self.lines.append(line)

    def close(self) -> None:
        pass


def run_fixture(
    case: CorpusCase, fixture: CorpusFixture
) -> tuple[list[str], RunSummary]:
    """Replay one fixture through the standard pipeline; returns the NDJSON
    verdict lines and the run summary."""
    from ..sources import CsvSource

    spec = case.typed()
    source = CsvSource.open(str(_data_path(fixture.trace)))
    mapping = build_field_mapping(
        spec.input_schema(), MappingConfig(), source.declared()
    )
    factory = EventFactory(mapping, time_mode=TimeMode.DATA)
    sink = _ListSink()
    pipeline = Pipeline(
        spec=spec,
        source=source,
        factory=factory,
        formatter=NdjsonFormat(),
        sink=sink,
    )
    summary = pipeline.run()
    return sink.lines, summary


def verify_case(case: CorpusCase) -> list[tuple[CorpusFixture, bool, str]]:
    """Replay every fixture and compare byte-for-byte with its golden."""
    results = []
    for fixture in case.fixtures:
        lines, summary = run_fixture(case, fixture)
        produced = "".join(line + "\n" for line in lines)
        expected = _read_text(fixture.golden)
        if produced == expected:
            results.append((fixture, True, f"{summary.verdicts} verdicts"))
        else:
            detail = _first_divergence(expected, produced)
            results.append((fixture, False, detail))
    return results


def _first_divergence(expected: str, produced: str) -> str:
    exp_lines = expected.splitlines()
    got_lines = produced.splitlines()
    for i, (e, g) in enumerate(zip(exp_lines, got_lines)):
        if e != g:
            return f"line {i + 1}: expected {e!r}, got {g!r}"
    if len(exp_lines) != len(got_lines):
        return (
            f"expected {len(exp_lines)} lines, got {len(got_lines)}"
        )
    return "outputs differ"


def refresh_goldens(case: CorpusCase) -> list[str]:
    """Regenerate golden files from the current engine (maintainer use)."""
    written = []
    for fixture in case.fixtures:
        lines, _ = run_fixture(case, fixture)
        path = _data_path(fixture.golden)
        with open(str(path), "w", encoding="utf-8") as fh:
            fh.write("".join(line + "\n" for line in lines))
        written.append(fixture.golden)
    return written
