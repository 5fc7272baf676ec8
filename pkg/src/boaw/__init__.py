"""Bag-of-audio-words pipeline for continuous affect prediction.

Frame-level features are stacked with temporal context, quantized against a
codebook (random sample, k-means, or the code layer of a capped-ReLU
autoencoder), pooled into per-segment histograms, and regressed onto
continuous affect traces with a linear epsilon-SVR. Agreement is scored
with the Concordance Correlation Coefficient, optionally after rescaling
predictions from training-label statistics.
"""

from .autoencoder import AeConfig, AeModel, encode, init_model, load_model, save_model, train
from .bag import (
    BagHistogram,
    MultipleN,
    SegmenterConfig,
    SoftThreshold,
    assign_soft,
    assign_top_n,
    build_histogram,
    extract_segment_features,
    l2_normalize,
    read_feature_csv,
    score_frames,
    write_feature_csv,
)
from .codebook import (
    CodebookMethod,
    VectorCodebook,
    assign_scores,
    assign_scores_batch,
    fit_kmeans,
    fit_random,
    load_codebook,
    save_codebook,
)
from .errors import BoawError, ConfigError, DataError, NumericalError
from .experiment import (
    CodebookKind,
    ExperimentConfig,
    ResultRow,
    Split,
    SweepCache,
    config_from_mapping,
    parse_config_file,
    run_experiment,
    run_experiment_detailed,
    run_sweep,
)
from .framestack import (
    EdgeMode,
    StackedSequence,
    TurnStrategy,
    apply_turn_strategy,
    frame_role,
    stack_frames,
)
from .ingest import (
    AnnotationTrack,
    Dimension,
    FrameSequence,
    Role,
    SyntheticSpec,
    TurnTrack,
    generate_synthetic,
    load_session,
    parse_annotations,
    parse_frames,
    parse_turns,
    write_corpus,
)
from .metrics import Scaling, SdDirection, apply_scaling, ccc, pearson, scale_min_max, scale_sd_ratio
from .regress import SvrConfig, SvrModel, load_svr, save_svr, svr_fit, svr_objective, svr_predict
from .report import emit_report, read_report_csv

__version__ = "0.1.0"
