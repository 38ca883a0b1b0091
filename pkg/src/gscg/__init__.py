"""Geo-semantic contextual graphs: perception rasters in, attributed scene
graphs out, plus a context-aware object classifier and the riddle game."""

__version__ = "0.1.0"

from .classifier import ABLATION_CONFIGS, AblationConfig, GraphObjectClassifier, ModelDims
from .color import ciede2000, dominant_colors, rgb_to_lab
from .dataset import Sample, load_dataset, save_dataset
from .describe import build_round, describe_object
from .graph import GSCG, build_graph, deserialize, load_graph, save_graph, serialize
from .pointcloud import extract_instance_cloud, pca_geometry
from .scene_io import CameraIntrinsics, SceneBundle, back_project, load_bundle, write_bundle
from .training import EvalReport, TrainConfig, ablation_sweep, evaluate, load_model, save_model, train

__all__ = [
    "ABLATION_CONFIGS",
    "AblationConfig",
    "CameraIntrinsics",
    "EvalReport",
    "GSCG",
    "GraphObjectClassifier",
    "ModelDims",
    "Sample",
    "SceneBundle",
    "TrainConfig",
    "ablation_sweep",
    "back_project",
    "build_graph",
    "build_round",
    "ciede2000",
    "describe_object",
    "deserialize",
    "dominant_colors",
    "evaluate",
    "extract_instance_cloud",
    "load_bundle",
    "load_dataset",
    "load_graph",
    "load_model",
    "pca_geometry",
    "rgb_to_lab",
    "save_dataset",
    "save_graph",
    "save_model",
    "serialize",
    "train",
    "write_bundle",
]
