"""Exception hierarchy shared across the package."""


class GaussAdaptError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(GaussAdaptError):
    """A configuration field violates its invariant.

    The first argument is the name of the offending field.
    """

    def __init__(self, field, message=""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)


class DimensionMismatch(GaussAdaptError):
    """Arrays that must share a dimension do not."""


class ClassIndexOutOfRange(GaussAdaptError):
    """A class index falls outside [0, K)."""


class SimplexViolation(GaussAdaptError):
    """A probability vector has negative mass or does not sum to one."""


class DegenerateInput(GaussAdaptError):
    """An input is degenerate beyond repair (e.g. an all-zero prior)."""


class SingularMatrix(GaussAdaptError):
    """A matrix that must be factorizable is numerically singular."""


class EmptyStream(GaussAdaptError):
    """An adapter was given zero samples."""


class BadMagic(GaussAdaptError):
    """A binary file does not start with the expected magic bytes."""


class VersionMismatch(GaussAdaptError):
    """A binary file declares an unsupported format version."""


class TruncatedFile(GaussAdaptError):
    """A binary file's actual byte length disagrees with its header."""


class NonFiniteValue(GaussAdaptError):
    """A loaded payload contains NaN or infinity."""


class ZeroNormRow(GaussAdaptError):
    """A feature row has zero norm and cannot be normalized."""


class MissingFile(GaussAdaptError):
    """A file referenced by a manifest does not exist."""


class JsonError(GaussAdaptError):
    """A JSON document failed to parse or validate."""


class SeparationInfeasible(GaussAdaptError):
    """Requested synthetic class-mean separation could not be achieved."""


class NoLabeledSamples(GaussAdaptError):
    """Scoring was requested but every sample is unlabeled."""


class OrderingRequiresOnline(GaussAdaptError):
    """Input-ordering experiments only make sense in online mode."""
