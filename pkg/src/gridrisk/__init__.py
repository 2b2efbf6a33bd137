"""Feeder-line operational risk assessment with BiGAN-learned features."""
from ._accel import JIT_ENABLED
from .bigan import TrainConfig, ModelShape, train_segment
from .config import RunConfig
from .index import RiskLevel, n_phi, t_pvalue
from .ingest import SpatioTemporalMatrix, load_matrix_csv

__version__ = "0.1.0"

__all__ = [
    "JIT_ENABLED", "ModelShape", "RiskLevel", "RunConfig", "SpatioTemporalMatrix", "TrainConfig",
    "load_matrix_csv", "n_phi", "t_pvalue", "train_segment",
]
