"""Detection pipelines built on longest-run statistics."""
from .anomaly import AnomalyScenario, plant_and_test_anomaly, random_chain
from .msra import (MsraThresholds, SignificanceGraph, build_significance_graph,
                   compute_thresholds, longest_significant_path, msra_test, sample_scene)
from .tracking import TrackConfig, TrackScene, simulate_track, track_test

__all__ = [
    "AnomalyScenario", "plant_and_test_anomaly", "random_chain",
    "MsraThresholds", "SignificanceGraph", "build_significance_graph", "compute_thresholds",
    "longest_significant_path", "msra_test", "sample_scene",
    "TrackConfig", "TrackScene", "simulate_track", "track_test",
]
