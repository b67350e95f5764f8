"""Exception and warning types shared across the pipeline."""


class AnxietyBandError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(AnxietyBandError):
    pass


class DataError(AnxietyBandError):
    pass


class InvalidCutoff(ConfigError):
    pass


class SegmentTooShort(DataError):
    pass


class NotAPeak(DataError):
    pass


class UnknownPhase(DataError):
    pass


class MissingLabel(DataError):
    pass


class InvalidItem(DataError):
    pass


class DegenerateCohort(DataError):
    pass


class DegenerateGroup(DataError):
    pass


class AllTied(DataError):
    pass


class TooFewRows(DataError):
    pass


class EmptyTestSet(DataError):
    pass


class ManifestMismatch(DataError):
    pass


class CorruptModel(DataError):
    pass


class VersionMismatch(CorruptModel):
    pass


class MissingArtifacts(DataError):
    pass


class ConstantSignalWarning(UserWarning):
    """Signal had zero range; normalization returned zeros."""


class ShortSegmentWarning(UserWarning):
    pass


class SingleClassWarning(UserWarning):
    pass


class NonConvergenceWarning(UserWarning):
    pass


class EmptySelectionWarning(UserWarning):
    pass
