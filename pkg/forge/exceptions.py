"""Error hierarchy shared by every app.

Each error carries the process exit code the command line reports for it.
"""


class ForgeError(Exception):
    """Base class for all forge errors"""
    exit_code = 1


class InputError(ForgeError):
    """Bad input: arguments, datasets, configuration"""
    exit_code = 2


class ShapeError(InputError):
    """Array or image dimensions do not fit the operation"""


class IngestError(InputError):
    """A dataset directory could not be turned into samples"""


class TrainingError(InputError):
    """A training set cannot be trained on"""


class FormatError(ForgeError):
    """A file on disk does not match its declared format"""
    exit_code = 3


class NumericDomainError(ForgeError):
    """A value is outside the domain of a numeric operation (NaN, log of 0, ...)"""
    exit_code = 4


class OutputError(ForgeError):
    """Results could not be written"""
    exit_code = 5


EXIT_CODES = (
    (0, 'success'),
    (InputError.exit_code, 'input error (arguments, dataset, configuration, shapes)'),
    (FormatError.exit_code, 'format error (embedding/meta/manifest files)'),
    (NumericDomainError.exit_code, 'numeric domain error (NaN distances, zero probabilities)'),
    (OutputError.exit_code, 'I/O error (unwritable output directory)'),
)


def describe_exit_codes():
    return 'Exit codes: ' + '; '.join(f'{code} {text}' for code, text in EXIT_CODES) + '.'
