#
# See the LICENSE file
#

#
# Exceptions raised by scherktools. The console app maps them to exit codes:
# parameter and schema problems exit with 2, solver failures with 3.
#

class ScherkError(Exception):
    pass

class ParameterError(ScherkError, ValueError):
    pass

class DomainError(ScherkError, ValueError):
    pass

class GridError(ScherkError):
    pass

class GeometryError(ScherkError):
    pass

class SchemaError(ScherkError):
    pass

class MeshError(ScherkError):
    pass

class NonConvergence(ScherkError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report

class BracketError(ScherkError):
    pass

class MonotonicityError(ScherkError):
    pass

class FixedPointDivergence(ScherkError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []

class UnresolvedCritical(ScherkError):
    pass

class NonRegularLevel(ScherkError):
    pass

class WindowTooSmall(ScherkError):
    pass
