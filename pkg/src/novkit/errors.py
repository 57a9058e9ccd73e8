"""Exception taxonomy shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericError -> 3.
"""


class NovkitError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(NovkitError):
    """Invalid or inconsistent pipeline configuration."""


class DataError(NovkitError):
    """Malformed, missing, or contract-violating input data."""


class CorpusFormatError(DataError):
    """A corpus line failed to parse; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class VectorStoreError(DataError):
    """Vector store file is corrupt or internally inconsistent."""


class MissingVectorError(DataError):
    """Entities without embeddings under the strict missing-vector policy."""

    def __init__(self, keys):
        self.keys = sorted(keys)
        preview = ", ".join(self.keys[:10])
        more = "" if len(self.keys) <= 10 else f" (+{len(self.keys) - 10} more)"
        super().__init__(f"no embedding vector for {len(self.keys)} entities: {preview}{more}")


class NumericError(NovkitError):
    """Numerical failure: rank deficiency, non-convergence, degenerate data."""


class RankDeficiencyError(NumericError):
    """Design matrix is not full column rank; names the dependent columns."""

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"design matrix is rank deficient; dependent columns: {self.columns}")


class ConvergenceError(NumericError):
    """An iterative fitter hit its iteration cap; carries the last iterate."""

    def __init__(self, message: str, last_coefficients=None):
        super().__init__(message)
        self.last_coefficients = last_coefficients


class DegenerateGroupError(NumericError):
    """A group is too small or has zero variance for the requested statistic."""
