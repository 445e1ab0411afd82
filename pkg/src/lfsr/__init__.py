"""Light-field 4x super-resolution: reference generation, per-view
texture-transfer SR, and EPI-constrained refinement."""

from . import numcore
from .ahqrg import ahqrg_forward, init_ahqrg_weights
from .errors import DimensionError, FormatError, IngestionError, StateError
from .lightfield import (
    EPISlice,
    LightField,
    angular_conv,
    central_view,
    degrade_lf,
    epi_extract,
    extract_view,
    load_lightfield,
    psnr,
    save_lightfield,
    spatial_conv,
)
from .pipeline import (
    EvalReport,
    TrainConfig,
    evaluate_lf,
    superresolve_lf,
    train_stage,
    write_report_csv,
)
from .refine import epi_loss, init_refine_weights, refine_forward
from .synthdata import Layer, SceneSpec, make_dataset, synthesize_lf
from .ttsr import (
    AttentionMaps,
    TextureFeatures,
    extract_texture_features,
    hard_attention,
    init_ttsr_weights,
    relevance_embedding,
    soft_attention,
    transfer_textures,
    ttsr_forward,
)
from .weights import StageWeights, load_weights, save_weights

__version__ = "0.1.0"
