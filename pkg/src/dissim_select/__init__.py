"""Writer-independent signature verification with BPSO feature selection.

Signatures are compared in a dissimilarity space (elementwise absolute
feature differences). A binary particle swarm selects the dissimilarity
dimensions by minimizing the user-threshold EER of a linear SVM, with
optional validation on a held-out writer set to control overfitting.
"""

from .classifier import FeatureMask, SvmHyper, TrainedModel, score, train
from .data import (
    Dataset,
    Label,
    SignatureRecord,
    SplitCounts,
    WriterSplit,
    load_feature_file,
    select_samples,
    split_writers,
    write_feature_file,
)
from .dichotomy import (
    DissimilaritySample,
    PairKind,
    Polarity,
    ReferenceSet,
    build_training_set,
    build_trials,
    dissimilarity,
    fuse_scores,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateMaskError,
    DimensionError,
    DissimSelectError,
    MetricError,
    ParseError,
    SchemaError,
)
from .experiment import ExperimentConfig, ExperimentReport, emit_report, run_experiment
from .metrics import EerResult, ScoredTrial, Truth, eer_global, eer_user
from .optimizer import (
    ArchiveEntry,
    FitnessContext,
    Particle,
    Strategy,
    SwarmConfig,
    fitness,
    merge_archive,
    run,
    transfer,
    update_particle,
)
from .prototypes import CondensedSet, condense
from .synthetic import GeneratorConfig, generate

__version__ = "0.1.0"
