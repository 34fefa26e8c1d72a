"""Exception hierarchy.

Three families map onto the CLI exit codes: configuration problems (2),
data problems (3) and numeric failures (4).
"""


class ConfigError(ValueError):
    """Invalid task or CLI configuration."""


class DataError(ValueError):
    """Problem with an input dataset or its shape."""


class MissingFile(DataError, FileNotFoundError):
    pass


class ColumnCountMismatch(DataError):
    pass


class NonNumericCell(DataError):
    def __init__(self, row: int, col: int, value: str = ""):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"non-numeric cell at row {row}, column {col}: {value!r}")


class ShapeMismatch(DataError):
    pass


class IndexOutOfRange(DataError, IndexError):
    pass


class EmptyData(DataError):
    pass


class TargetTooSmall(DataError):
    pass


class NeedTwoRegressors(ValueError):
    pass


class EmptyEnsemble(ValueError):
    pass


class NumericError(ArithmeticError):
    """Numerical failure during training or solving."""


class NonFiniteLoss(NumericError):
    pass


class SingularSystem(NumericError):
    pass
