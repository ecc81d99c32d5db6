from labnet.model.blocks import (
    Beamformer,
    CovarianceEncoder,
    CrfEstimator,
    DoaEstimator,
    init_recurrent_orthogonal,
)
from labnet.model.config import ModelConfig
from labnet.model.net import (
    ForwardOutputs,
    LabNet,
    SeparationResult,
    build_model,
    decode_locations,
    labnet_forward,
    location_embedding,
)
from labnet.model.ops import (
    apply_beamforming,
    apply_crf,
    covariance_features,
    covariance_raw,
)

__all__ = [
    "Beamformer",
    "CovarianceEncoder",
    "CrfEstimator",
    "DoaEstimator",
    "ForwardOutputs",
    "LabNet",
    "ModelConfig",
    "SeparationResult",
    "apply_beamforming",
    "apply_crf",
    "build_model",
    "covariance_features",
    "covariance_raw",
    "decode_locations",
    "init_recurrent_orthogonal",
    "labnet_forward",
    "location_embedding",
]
