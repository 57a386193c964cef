class BenchmarkError(Exception):
    """Base class for benchmark runs, statistics and footprint fits."""


class InsufficientData(BenchmarkError):
    pass


class NonDecreasing(BenchmarkError):
    def __init__(self, slope: float):
        self.slope = slope
        super().__init__(
            f'Logical error rate does not decrease with distance (fitted slope {slope:.4g}); '
            'there is no footprint to extrapolate.'
        )
