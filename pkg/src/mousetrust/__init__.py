"""Continuous authentication from mouse dynamics.

Pipeline: Table-format event CSVs -> cleaned traces -> per-event kinematics
-> 9-component feature frames -> fixed-length windows -> from-scratch
GRU/LSTM or CART/random-forest classifiers -> ROC/F1 evaluation, plus a
seeded synthetic trace generator and a streaming trust-decision engine.
"""

from .errors import DataError, MousetrustError, NumericError, ParseError
from .events import (
    Button,
    MouseEvent,
    Trace,
    clean_trace,
    parse_event_line,
    parse_events,
    read_events_csv,
    serialize_events,
    write_events_csv,
)
from .experiment import (
    ExperimentConfig,
    ExperimentReport,
    derive_seed,
    emit_report,
    run_experiment,
)
from .forest import (
    DecisionTree,
    RandomForest,
    TreeConfig,
    fit_forest,
    fit_tree,
    forest_predict,
    forest_predict_matrix,
    tree_predict,
    tree_predict_matrix,
)
from .kinematics import (
    FEATURE_NAMES,
    FEATURE_WIDTH,
    FeatureFrame,
    KinematicRecord,
    KinematicsBuilder,
    NormStats,
    apply_normalizer,
    derive_kinematics,
    fit_norm_stats,
    fit_normalizer,
    normalize_rows,
    to_feature_frame,
    trace_to_frame,
)
from .metrics import (
    EvalReport,
    balanced_accuracy,
    confusion_counts,
    evaluate,
    evaluate_scores,
    f1_score,
    roc_auc,
    roc_curve,
)
from .rnn import (
    RnnConfig,
    RnnModel,
    gradient_check,
    score_window,
    score_windows,
    train_rnn,
)
from .stream import (
    AuthSession,
    DecisionUpdate,
    SessionPolicy,
    new_session,
    replay,
)
from .synthgen import (
    GenSpec,
    UserProfile,
    device_quantum,
    expected_pause_fraction,
    generate_trace,
    mean_focal_distance,
    sample_profile,
    session_id,
    user_of,
)
from .windowing import (
    FoldPlan,
    LabeledSet,
    Window,
    flatten_window,
    label_windows,
    make_windows,
    session_folds,
    stratified_folds,
)

__version__ = "0.1.0"
