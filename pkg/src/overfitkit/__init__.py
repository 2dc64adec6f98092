"""Controllable-overfitting toolkit for teacher-student anomaly detection.

Quantifies overfitting (arq), measures class separability (radi, identical
to AUROC), models how separability moves with overfitting, locates the
optimal overfitting level, and supervises a training loop that exploits it
through progressive layer freezing.
"""

from .controller import (
    AllLayersFrozenError,
    ArqInterval,
    ControlDecision,
    ControllerState,
    Verdict,
    arq_in_interval,
    dual_control_step,
    estimate_radi_gradient,
    freeze_next_layer,
)
from .detector import ControlledOverfitDetector
from .distmodel import (
    DistributionModel,
    NoInteriorOptimumError,
    RadiGradient,
    ThetaStarResult,
    ThetaSweep,
    demo_model,
    load_model_config,
    radi_closed_form,
    radi_gradient,
    sample_scores,
    save_model_config,
    sigma_n,
    sweep,
    theta_star,
)
from .metrics import (
    GaussianParams,
    Histogram,
    PredictionPair,
    ScoreSet,
    auroc,
    compute_arq,
    fit_gaussian,
    histogram,
    radi_empirical,
    tvd,
    tvd_to_gaussian,
)
from .pipeline import (
    RunLog,
    SyntheticDataset,
    TrainConfig,
    make_synthetic_dataset,
    make_teacher_student,
    percentile_threshold,
    run_inference,
    run_overfit_stage,
    run_standard_stage,
    run_training,
)
from .scoreio import read_labeled_scores, read_scores, write_scores
from .seeding import derive_seed
from .toynet import (
    DivergenceError,
    Layer,
    NoiseSpec,
    ToyNetwork,
    anomaly_map,
    backward_and_step,
    finite_difference_gradcheck,
    forward,
    inject_gaussian_noise,
    load_checkpoint,
    random_network,
    save_checkpoint,
)

__version__ = "0.1.0"
