"""taalkit: tabla stroke sequence analysis and few-shot transcription tools.

The package covers three strands that share one data model:

- tala identification from stroke sequences, by sliding Needleman-Wunsch
  alignment against theka rotations and by stroke-ratio cosine matching;
- transcription post-processing: frame-label smoothing, onset extraction,
  the 3% No-stroke rule, and collar-based onset F1;
- model-agnostic meta-learning of a small surrogate stroke classifier,
  with an exact second-order outer gradient on top of a purpose-built
  reverse-mode autodiff core.

A simulator generates clean and corrupted synthetic performances so the
identification pipeline can be evaluated end to end, and ``taalkit.cli``
exposes the whole thing as a command line.
"""

from .alignment import (
    GAP_PENALTY,
    MATCH_SCORE,
    MISMATCH_SCORE,
    MatchResult,
    RankedResult,
    TalaScore,
    batch_nw_scores,
    identify_tala_nw,
    lcs_baseline_score,
    nw_align,
    nw_score,
    nw_score_matrix,
    sliding_match_score,
)
from .autodiff import Tensor, central_difference, grad, log_softmax, logsumexp, softmax
from .maml import (
    AdaptResult,
    DivergenceError,
    MamlConfig,
    MetaTrainResult,
    PairedComparison,
    inner_adapt,
    meta_gradients,
    meta_test_adapt,
    meta_train,
    meta_update,
    paired_few_shot_eval,
    query_objective,
)
from .postproc import (
    DEFAULT_COLLAR_SECONDS,
    NO_STROKE_AMPLITUDE_FRACTION,
    FrameLabelSequence,
    OnsetAnnotation,
    OnsetEvaluation,
    label_no_stroke,
    onset_f1,
    onsets_from_frames,
    read_onsets_csv,
    smooth_labels,
    write_onsets_csv,
)
from .ratio import cosine_similarity, identify_tala_ratio
from .simulate import NoiseSpec, PerformanceSpec, corrupt, generate_performance
from .surrogate import (
    FrozenFeatureMap,
    SurrogateModel,
    class_weights,
    class_weights_from_labels,
    flatten_params,
    head_logits,
    init_head,
    load_model,
    param_shapes,
    save_model,
    sgd_step,
    unflatten_params,
    wce_loss,
    wce_loss_probs,
)
from .talas import (
    NO_STROKE,
    StrokeLabel,
    StrokeSequence,
    TalaDefinition,
    builtin_talas,
    get_tala,
    stroke_histogram,
)
from .tasks import FewShotTask, SyntheticTaskConfig, synth_task_source, take_tasks

__version__ = "0.1.0"

__all__ = [
    "GAP_PENALTY",
    "MATCH_SCORE",
    "MISMATCH_SCORE",
    "NO_STROKE",
    "NO_STROKE_AMPLITUDE_FRACTION",
    "DEFAULT_COLLAR_SECONDS",
    "AdaptResult",
    "DivergenceError",
    "FewShotTask",
    "FrameLabelSequence",
    "FrozenFeatureMap",
    "MamlConfig",
    "MatchResult",
    "MetaTrainResult",
    "NoiseSpec",
    "OnsetAnnotation",
    "OnsetEvaluation",
    "PairedComparison",
    "PerformanceSpec",
    "RankedResult",
    "StrokeLabel",
    "StrokeSequence",
    "SurrogateModel",
    "SyntheticTaskConfig",
    "TalaDefinition",
    "TalaScore",
    "Tensor",
    "batch_nw_scores",
    "builtin_talas",
    "central_difference",
    "class_weights",
    "class_weights_from_labels",
    "corrupt",
    "cosine_similarity",
    "flatten_params",
    "generate_performance",
    "get_tala",
    "grad",
    "head_logits",
    "identify_tala_nw",
    "identify_tala_ratio",
    "init_head",
    "inner_adapt",
    "label_no_stroke",
    "lcs_baseline_score",
    "load_model",
    "log_softmax",
    "logsumexp",
    "meta_gradients",
    "meta_test_adapt",
    "meta_train",
    "meta_update",
    "nw_align",
    "nw_score",
    "nw_score_matrix",
    "onset_f1",
    "onsets_from_frames",
    "paired_few_shot_eval",
    "param_shapes",
    "query_objective",
    "read_onsets_csv",
    "save_model",
    "sgd_step",
    "sliding_match_score",
    "smooth_labels",
    "softmax",
    "stroke_histogram",
    "synth_task_source",
    "take_tasks",
    "unflatten_params",
    "wce_loss",
    "wce_loss_probs",
    "write_onsets_csv",
]
