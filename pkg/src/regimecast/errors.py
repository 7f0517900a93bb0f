"""Exception hierarchy shared across the pipeline.

Every domain failure raises a subclass of :class:`RegimecastError`, so the CLI
can map any of them to exit code 1 while programmatic callers catch precisely.
"""


class RegimecastError(Exception):
    """Base class for all domain errors."""


# --- ingestion ---------------------------------------------------------------

class EmptyFile(RegimecastError):
    pass


class RaggedRows(RegimecastError):
    def __init__(self, row, expected, got):
        self.row = row
        self.expected = expected
        self.got = got
        super().__init__(f"row {row} has {got} columns, expected {expected}")


class NonNumericCell(RegimecastError):
    def __init__(self, row, col, value):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"cell at row {row}, col {col} is not numeric: {value!r}")


class DuplicateHeader(RegimecastError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"duplicate column header: {name!r}")


class MissingValue(RegimecastError):
    def __init__(self, row, col):
        self.row = row
        self.col = col
        super().__init__(f"non-finite value at row {row}, col {col}")


# --- grid --------------------------------------------------------------------

class IntervalTooLong(RegimecastError):
    pass


class ZeroStride(RegimecastError):
    pass


class EmptyCandidates(RegimecastError):
    pass


class IndexOutOfRange(RegimecastError):
    pass


# --- AR fitting --------------------------------------------------------------

class TooShort(RegimecastError):
    pass


class SingularDesign(RegimecastError):
    pass


class SeedTooShort(RegimecastError):
    pass


# --- clustering --------------------------------------------------------------

class EmptyCluster(RegimecastError):
    pass


# --- narrative ---------------------------------------------------------------

class InsufficientHistory(RegimecastError):
    pass


# --- selection ---------------------------------------------------------------

class Transport(RegimecastError):
    pass


class ParseFailure(RegimecastError):
    def __init__(self, raw):
        self.raw = raw
        super().__init__(f"unparseable selector reply: {raw!r}")


class OutOfRangeModel(RegimecastError):
    def __init__(self, model_id, library_size):
        self.model_id = model_id
        self.library_size = library_size
        super().__init__(
            f"reply names model {model_id}, library has {library_size} models"
        )


# --- metrics -----------------------------------------------------------------

class LengthMismatch(RegimecastError):
    pass


class EmptyInput(RegimecastError):
    pass


# --- synthesis ---------------------------------------------------------------

class UnstableModel(RegimecastError):
    def __init__(self, spectral_radius):
        self.spectral_radius = spectral_radius
        super().__init__(f"companion spectral radius {spectral_radius:.4f} >= 1")


class GenerationFailure(RegimecastError):
    pass
