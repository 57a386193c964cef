class EuclidError(Exception):
    """Base class for Euclidean decoding problem errors."""


class InvalidInstance(EuclidError):
    pass


class InstanceSyntaxError(EuclidError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f'line {line}: {message}' if line else message)


class NoNeutralPartition(EuclidError):
    pass
