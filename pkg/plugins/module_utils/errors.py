# -*- coding: utf-8 -*-
from __future__ import absolute_import, division, print_function
__metaclass__ = type

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3


class KaczmarzError(Exception):
    exit_code = EXIT_USAGE

    def __init__(self, msg, **context):
        super(KaczmarzError, self).__init__(msg)
        self.msg = msg
        self.context = context


class DimensionError(KaczmarzError, ValueError):
    pass


class ZeroRowError(KaczmarzError, ValueError):
    pass


class InconsistentSystemError(KaczmarzError, ValueError):
    pass


class SizeGuardError(KaczmarzError):
    pass


class ConstraintKindError(KaczmarzError):
    pass


class EmptyGraphError(KaczmarzError):
    pass


class NoSelectableRowError(KaczmarzError):
    pass


class ConfigurationError(KaczmarzError):
    pass


class TraceError(KaczmarzError):
    pass


class RateOrderingError(KaczmarzError):
    pass


class ValidationFailure(KaczmarzError):
    exit_code = EXIT_VALIDATION


class DataFileError(KaczmarzError):
    exit_code = EXIT_IO
