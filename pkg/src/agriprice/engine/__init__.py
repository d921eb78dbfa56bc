from .engine import (  # noqa: F401
    CellResult,
    EvaluationReport,
    ModelSpec,
    order_grid_from_suggestion,
    preprocess,
    render_table,
    report_to_csv,
    run_experiment,
    select_best,
    train_and_test,
    tune,
)
from .artifacts import ArtifactStore, build_artifact, frame_fingerprint  # noqa: F401
from .forecasters import (  # noqa: F401
    FAMILY_ORDER,
    MODES,
    MULTIVARIATE,
    UNIVARIATE,
    make_forecaster,
    restore_forecaster,
)
