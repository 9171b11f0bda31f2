"""Fairness testing for tabular classifiers via latent boundary imitation.

The toolkit probes a black-box classifier for individual discrimination:
pairs of rows that differ only in protected attributes yet receive different
predictions. Instead of perturbing raw inputs, it fits a tabular generator,
imitates the classifier's decision boundary with a linear hyperplane in the
generator's latent space, and decodes candidates on and around that plane,
which keeps the generated test cases close to the data distribution.
"""

from .boundary import (
    AuxConfig,
    AuxDataset,
    PegasosSVC,
    SurrogateBoundary,
    SvmConfig,
    boundary_auc,
    build_aux,
    distance,
    fit_boundary,
)
from .bridge import BridgeChannel, BridgeGenerator, BridgeModel
from .errors import LimiError
from .generator import GaussianCopula, fit_copula, sample_latents
from .metrics import (
    FairnessReport,
    NaturalnessReport,
    ann_distance,
    aod,
    atn,
    atn_protocol,
    contingency_similarity,
    egs,
    fairness_report,
    if_o,
    if_r,
    ks_complement,
    pearson_similarity,
    spd,
    tv_complement,
)
from .models import (
    LogisticClassifier,
    MlpClassifier,
    MlpConfig,
    Prediction,
    TabularModel,
    predict,
    retrain,
    train_logreg,
    train_mlp,
)
from .pipeline import RetrainConfig, RunConfig
from .probe import (
    DiscriminatoryPair,
    IterativeProbeConfig,
    ProbeConfig,
    ProbeStats,
    ProtectedHyperplane,
    candidates,
    is_discriminatory,
    iterative_probe,
    latent_flip,
    project,
    random_baseline,
    run,
)
from .schema import (
    ColumnSpec,
    Dataset,
    Schema,
    encode,
    encode_rows,
    load_csv,
    protected_variants,
    sample_uniform,
)

__version__ = "0.1.0"

__all__ = [
    "AuxConfig", "AuxDataset", "BridgeChannel", "BridgeGenerator",
    "BridgeModel", "ColumnSpec", "Dataset", "DiscriminatoryPair",
    "FairnessReport", "GaussianCopula", "IterativeProbeConfig",
    "LimiError", "LogisticClassifier", "MlpClassifier", "MlpConfig",
    "NaturalnessReport", "PegasosSVC", "Prediction", "ProbeConfig",
    "ProbeStats", "ProtectedHyperplane", "RetrainConfig", "RunConfig",
    "Schema", "SurrogateBoundary", "SvmConfig", "TabularModel",
    "ann_distance", "aod", "atn", "atn_protocol", "boundary_auc",
    "build_aux", "candidates", "contingency_similarity", "distance",
    "egs", "encode", "encode_rows", "fairness_report", "fit_boundary",
    "fit_copula", "if_o", "if_r", "is_discriminatory", "iterative_probe",
    "ks_complement", "latent_flip", "load_csv", "pearson_similarity",
    "predict", "project", "protected_variants", "random_baseline",
    "retrain", "run", "sample_latents", "sample_uniform", "spd",
    "train_logreg", "train_mlp", "tv_complement",
]
