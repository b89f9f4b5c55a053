"""toxaudit: toxicity classification and identity-bias auditing.

Train a class-weighted TF-IDF logistic-regression toxicity classifier and
audit any classifier's prediction scores for unintended identity bias:
subgroup/BPSN/BNSP AUC with a generalized-mean combined score, FPED/FNED
error-rate gaps, counterfactual token gaps, and pinned AUC.
"""

from .corpus import (
    Comment,
    Corpus,
    CsvSchema,
    SplitSpec,
    SubgroupSlice,
    SynthSpec,
    binarize_target,
    parse_csv,
    split,
    subgroup_members,
    synth_corpus,
    write_csv,
)
from .errors import (
    ConfigError,
    CsvParseError,
    DataError,
    SchemaError,
    ToxauditError,
    TrainingDivergedError,
    UndefinedMetricError,
)
from .fairmetrics import (
    BiasReport,
    ConfusionCounts,
    CounterfactualGenerator,
    ErrorRateGaps,
    ScoreConfig,
    ScoredExample,
    SubgroupAucs,
    bnsp_auc,
    bpsn_auc,
    confusion_at,
    ctf_gap,
    final_score,
    fped_fned,
    mean_ctf_gap,
    pinned_auc,
    power_mean,
    roc_auc,
    subgroup_auc,
)
from .logreg import (
    AdamHyper,
    AdamState,
    LogRegModel,
    TrainConfig,
    adam_step,
    balanced_class_weights,
    grid_search,
    predict_proba,
    sigmoid,
    train,
    weighted_cross_entropy,
)
from .report import (
    EdaSummary,
    PredictionFile,
    evaluate,
    import_predictions,
    render_report,
    render_stats,
    stats,
    weighted_toxicity,
)
from .textprep import CleanConfig, clean, expand_contractions, tokenize
from .tfidf import SparseVector, Vocabulary, fit, idf, tf, transform

__version__ = "0.1.0"
