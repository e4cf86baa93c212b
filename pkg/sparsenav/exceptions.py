"""Errors raised by the pipeline stages"""
__all__ = ['SparseNavError', 'DegenerateInputError', 'IndexOutOfRangeError', 'InstanceTooLargeError',
           'EmptyCloudError', 'EmptyMapError', 'NoGapError', 'PlanningFailureError',
           'InvalidSpecError', 'CloudParseError', 'FormatError']


class SparseNavError(Exception):
    """Base class of every pipeline error"""


class DegenerateInputError(SparseNavError):
    """Collinear/coincident points or another input with undefined geometry"""


class IndexOutOfRangeError(SparseNavError):
    """An index set refers to a point that is not in its ground set"""
    def __init__(self, name, index, size, *args) -> None:
        msg = f"{name}: index {index} out of range for a ground set of {size} points"
        super().__init__(msg, *args)

    def __str__(self):
        return self.args[0]


class InstanceTooLargeError(SparseNavError):
    """Exhaustive enumeration was requested on an instance that is too big"""
    def __init__(self, n1, candidates, *args) -> None:
        msg = f"brute force refused: |N1|={n1}, {candidates} candidate Y sets"
        super().__init__(msg, *args)

    def __str__(self):
        return self.args[0]


class EmptyCloudError(SparseNavError):
    """The point cloud holds no point"""


class EmptyMapError(SparseNavError):
    """No projected point is left to build the angular map from"""


class NoGapError(SparseNavError):
    """Every angular bin is covered, there is no exit direction"""


class PlanningFailureError(SparseNavError):
    """RRT did not reach the goal"""
    def __init__(self, iterations, nodes, *args) -> None:
        msg = f"goal not reached after {iterations} iterations ({nodes} tree nodes)"
        super().__init__(msg, *args)

    def __str__(self):
        return self.args[0]


class InvalidSpecError(SparseNavError):
    """The environment description is inconsistent"""


class CloudParseError(SparseNavError):
    """A cloud file row could not be parsed"""
    def __init__(self, source, lineno, reason, *args) -> None:
        msg = f"{source}: line {lineno}: {reason}"
        self.lineno = lineno
        super().__init__(msg, *args)

    def __str__(self):
        return self.args[0]


class FormatError(SparseNavError):
    """A plane, path, obstacle or episode file is malformed"""
