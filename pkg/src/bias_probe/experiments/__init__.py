"""Synthetic world, Experiments A-D and the projection diagnostic."""

from .core import experiment_a, experiment_b, experiment_c, kfold_predictions, kfold_splits
from .data import check_disjoint, labeled_faces
from .election import (
    ElectionRace,
    RaceConfig,
    experiment_d,
    load_races,
    save_races,
    scramble_races,
    synthesize_races,
)
from .projection import projection_diagnostic
from .world import LabeledFace, Origin, World, WorldConfig, build_world

__all__ = [
    "ElectionRace", "LabeledFace", "Origin", "RaceConfig", "World", "WorldConfig", "build_world",
    "check_disjoint", "experiment_a", "experiment_b", "experiment_c", "experiment_d",
    "kfold_predictions", "kfold_splits", "labeled_faces", "load_races", "projection_diagnostic",
    "save_races", "scramble_races", "synthesize_races",
]
