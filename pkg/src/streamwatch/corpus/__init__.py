"""Executable reference specifications with fixtures and expected outputs."""

from .cases import (
    CorpusCase,
    all_cases,
    corpus_daa,
    corpus_fpd,
    corpus_geofence,
    corpus_rcc,
    run_fixture,
    verify_case,
)
from .geofence import (
    GeofencePolygon,
    GeofenceStreams,
    generate_geofence_spec,
)

__all__ = [
    "CorpusCase",
    "GeofencePolygon",
    "GeofenceStreams",
    "all_cases",
    "corpus_daa",
    "corpus_fpd",
    "corpus_geofence",
    "corpus_rcc",
    "generate_geofence_spec",
    "run_fixture",
    "verify_case",
]
