class CircuitError(Exception):
    """Base class for circuit construction, parsing and simulation errors."""


class CircuitSyntaxError(CircuitError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f'line {line}, column {column}: {message}' if line else message)


class InvalidCircuit(CircuitError):
    pass


class NondeterministicDetector(CircuitError):
    def __init__(self, message: str, detector: int | None = None):
        self.detector = detector
        super().__init__(message)


class InvalidLayout(CircuitError):
    pass


class UnknownNoiseModel(CircuitError):
    pass


class DemSyntaxError(CircuitError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f'line {line}: {message}' if line else message)


class UnannotatedDetector(CircuitError):
    def __init__(self, detector: int):
        self.detector = detector
        super().__init__(f'Detector D{detector} has no basis/color annotation.')
