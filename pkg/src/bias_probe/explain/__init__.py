"""Superpixel segmentation, local surrogate explanations and heatmaps."""

from .cohort import Region, cohort, default_region, synthetic_face
from .heatmap import Heatmap, aggregate_heatmap, hottest, iou, render_explanation, save_heatmap
from .image import Image, load_png, save_png
from .lime import Explanation, lime_explain
from .scorers import ForestScorer, PatchEmbedder, SubprocessScorer
from .slic import BACKEND, Segmentation, is_connected, slic

__all__ = [
    "BACKEND", "Explanation", "ForestScorer", "Heatmap", "Image", "PatchEmbedder", "Region",
    "Segmentation", "SubprocessScorer", "aggregate_heatmap", "cohort", "default_region",
    "hottest", "iou", "is_connected", "lime_explain", "load_png", "render_explanation",
    "save_heatmap", "save_png", "slic", "synthetic_face",
]
