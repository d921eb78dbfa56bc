"""Exception hierarchy shared by the library, the engine, the service and the CLI.

Two branches matter operationally: ``DataError`` (bad inputs, bad files,
degenerate series) and ``ModelError`` (estimation or numeric failures).
The CLI maps them to exit codes 3 and 4; the service maps specific
subclasses to HTTP statuses.  Every error carries a stable ``code`` string
for machine-readable reporting.
"""


class AgripriceError(Exception):
    code = "error"


class DataError(AgripriceError):
    code = "data_error"


class ModelError(AgripriceError):
    code = "model_error"


# --- core series / scaling / splitting ---

class TooShortError(DataError):
    code = "too_short"


class ConstantColumnError(DataError):
    code = "constant_column"


class UnknownColumnError(DataError):
    code = "unknown_column"


class AnchorMismatchError(DataError):
    code = "anchor_mismatch"


class LengthMismatchError(DataError):
    code = "length_mismatch"


class EmptyInputError(DataError):
    code = "empty_input"


# --- ingestion ---

class ParseError(DataError):
    code = "parse_error"


class UnknownCommodityError(DataError):
    code = "unknown_commodity"


class EmptyFileError(DataError):
    code = "empty_file"


class AllMissingColumnError(DataError):
    code = "all_missing_column"


class InvalidSpecError(DataError):
    code = "invalid_spec"


# --- stationarity analysis ---

class SingularRegressionError(ModelError):
    code = "singular_regression"


class ConstantSeriesError(DataError):
    code = "constant_series"


class NumericalBreakdownError(ModelError):
    code = "numerical_breakdown"


class NoStationaryTransformError(ModelError):
    code = "no_stationary_transform"


# --- model fitting ---

class NonConvergenceError(ModelError):
    code = "non_convergence"


class DegenerateSeriesError(DataError):
    code = "degenerate_series"


class DegenerateInputError(DataError):
    code = "degenerate_input"


class DimensionMismatchError(DataError):
    code = "dimension_mismatch"


class ShapeMismatchError(DataError):
    code = "shape_mismatch"


class SingularSystemError(ModelError):
    code = "singular_system"


class EmptyDataError(DataError):
    code = "empty_data"


class NonFiniteLossError(ModelError):
    code = "non_finite_loss"


class HorizonTooLargeError(DataError):
    code = "horizon_too_large"


# --- engine / artifacts ---

class GridExhaustedError(ModelError):
    code = "grid_exhausted"


class EmptyReportError(DataError):
    code = "empty_report"


class CorruptArtifactError(DataError):
    code = "corrupt_artifact"


class VersionMismatchError(DataError):
    code = "version_mismatch"
