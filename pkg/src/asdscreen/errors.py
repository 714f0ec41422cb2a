"""Exception hierarchy shared by the whole pipeline.

Exit codes follow the CLI contract: 2 config, 3 data, 4 numeric.
"""

from __future__ import annotations


class AsdScreenError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 1


class ConfigError(AsdScreenError):
    exit_code = 2


class DataError(AsdScreenError):
    exit_code = 3


class NumericError(AsdScreenError):
    exit_code = 4


class CorpusError(DataError):
    """Problems acquiring or normalizing a corpus."""


class FetchError(CorpusError):
    """Network-level failure. Retriable; carries the logical endpoint name."""

    def __init__(self, message, endpoint, retriable=True):
        super().__init__(message)
        self.endpoint = endpoint
        self.retriable = retriable


class PayloadError(CorpusError):
    """A fetched or cached payload did not parse or lacks a required section."""

    def __init__(self, message, endpoint, byte_offset=None):
        super().__init__(message)
        self.endpoint = endpoint
        self.byte_offset = byte_offset


class ChatParseError(DataError):
    """Structural problem in a CHAT document. Carries the 1-based line number."""

    def __init__(self, message, line_no=None):
        super().__init__(message)
        self.line_no = line_no


class MorParseError(ChatParseError):
    """Malformed item on a %mor tier. Carries the item index within the tier."""

    def __init__(self, message, item_index, line_no=None):
        super().__init__(message, line_no=line_no)
        self.item_index = item_index


class FeatureError(DataError):
    """Feature extraction could not produce a required value."""


class UnknownSpeakerError(FeatureError):
    pass


class MissingMorphologyError(FeatureError):
    """An utterance needed a %mor tier and had none. Carries its line number."""

    def __init__(self, message, line_no=None):
        super().__init__(message)
        self.line_no = line_no


class PreprocessError(DataError):
    """Imputation, encoding, splitting, or resampling contract violation."""


class TrainError(NumericError):
    """Degenerate training input or undefined model quantity."""


class MetricError(NumericError):
    """A metric is undefined for the given inputs (e.g. single-class AUC)."""
