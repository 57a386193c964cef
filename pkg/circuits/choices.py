from django.db import models


class Color(models.IntegerChoices):
    # XOR of two distinct colors is the third one.
    RED = 1, 'Red'
    GREEN = 2, 'Green'
    BLUE = 3, 'Blue'


class Basis(models.TextChoices):
    X = 'X', 'X basis'
    Z = 'Z', 'Z basis'


class NoiseModel(models.TextChoices):
    UNIFORM = 'uniform', 'Uniform circuit noise'
    PHENOM = 'phenom', 'Phenomenological noise'
    TRANSIT = 'transit', 'Transit bit flip'


class CircuitFamily(models.TextChoices):
    TRANSIT = 'transit', 'Transit color code'
    PHENOM = 'phenom', 'Phenomenological color code'
    SUPERDENSE = 'superdense', 'Superdense color code'
    MIDOUT = 'midout', 'Middle-out color code'
    TORIC = 'toric', 'Toric color code'
    TORIC_ABLATED = 'toric_ablated', 'Ablated toric color code'
    REPETITION = 'rep', 'Repetition code'
    SURFACE = 'surface', 'Surface code'


def annotation_for(basis: str, color: int) -> int:
    """Encode (basis, color) as the 0..5 detector annotation."""
    return (0 if basis == Basis.X else 3) + int(color) - 1


def decode_annotation(value: int) -> tuple[str, int]:
    value = int(value)
    if not 0 <= value <= 5:
        raise ValueError(f'Annotation {value} is outside 0..5.')
    basis = Basis.X if value < 3 else Basis.Z
    return basis, Color(value % 3 + 1)
