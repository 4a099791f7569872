"""Exceptions shared across the estimators.

``EstimationError`` and its subclasses mark data-dependent failures that a
batch run should record and move past (an empty stratum, a singular
adjustment).  Plain ``ValueError`` subclasses mark contract violations by the
caller and are never swallowed by the experiment harness.
"""


class EstimationError(Exception):
    """A data-dependent estimation failure (recordable, not a bug)."""


class PositivityError(EstimationError):
    """Some (treatment, confounder) stratum is empty."""

    def __init__(self, detail=""):
        msg = "positivity violation"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class EmptyStratumError(EstimationError):
    """A conditional probability was requested against an empty stratum."""

    def __init__(self, detail=""):
        msg = "empty stratum"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class SingularAdjustmentError(EstimationError):
    """1 - eps - delta is (near) zero in some cell; the error matrix cannot be inverted."""

    def __init__(self, detail=""):
        msg = "singular adjustment"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class UnestimableCellError(EstimationError):
    """An error-rate cell had no support and a consumer required it."""


class DegenerateLabelsError(EstimationError):
    """Classifier training data contains only one label value."""

    def __init__(self, detail=""):
        msg = "degenerate labels"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class UnidentifiedJointError(EstimationError):
    """An exact functional conditioned on a zero-probability event."""

    def __init__(self, detail=""):
        msg = "unidentified at this joint"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class MissingFieldError(ValueError):
    """A row lacks a field the operation requires."""

    def __init__(self, detail=""):
        msg = "missing field"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class EmptyDatasetError(ValueError):
    """An operation that needs data received none."""

    def __init__(self, detail=""):
        msg = "empty dataset"
        super().__init__(f"{msg}: {detail}" if detail else msg)
