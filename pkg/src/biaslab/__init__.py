"""Bias laboratory: generate biased hiring data, train a classifier, explain it."""

from .datagen import (
    DEFAULT_FAVORED,
    INVITE_THRESHOLD,
    NO_BIAS,
    SKILLS,
    UNIVERSITIES,
    Applicant,
    BiasSpec,
    CovariateShift,
    Dataset,
    Decision,
    Imbalance,
    LabeledExample,
    NoBias,
    SelectionBias,
    conditional_university_share,
    generate,
    hr_decision,
    load_dataset,
    save_dataset,
)
from .lrp import LrpConfig, RelevanceVector, explain, explain_applicant, mean_group_relevance
from .model import (
    EvalMetrics,
    NetworkParams,
    TrainConfig,
    TrainReport,
    encode,
    evaluate,
    forward,
    load_model,
    save_model,
    train,
)

__version__ = "0.1.0"
