class DecodingError(Exception):
    """Base class for decoder configuration and decoding errors."""


class InfeasibleMatching(DecodingError):
    pass


class RainbowViolation(DecodingError):
    def __init__(self, symptoms):
        self.symptoms = tuple(symptoms)
        super().__init__(
            f'Error with symptoms {list(self.symptoms)} has three symptoms but repeats a color '
            'and cannot be decomposed into other errors.'
        )


class DecompositionFailure(DecodingError):
    def __init__(self, symptoms):
        self.symptoms = tuple(symptoms)
        super().__init__(f'Error with symptoms {list(self.symptoms)} cannot be decomposed into basic errors.')


class ImmovableExcitation(DecodingError):
    def __init__(self, first: int, second: int):
        self.detectors = (first, second)
        super().__init__(f'No local way to drag an excitation between D{first} and D{second}.')


class MatchableColorViolation(DecodingError):
    def __init__(self, detectors):
        self.detectors = tuple(detectors)
        super().__init__(
            f'Detectors {list(self.detectors)} use all three colors inside a matchable region.'
        )


class LiftFailure(DecodingError):
    def __init__(self, message: str, shot: int | None = None):
        self.shot = shot
        super().__init__(f'shot {shot}: {message}' if shot is not None else message)
