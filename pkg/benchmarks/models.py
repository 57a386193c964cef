from django.db import models
from django.db.models import F, Q

from circuits.choices import Basis, CircuitFamily

from .harness import StatRow


class BenchmarkRun(models.Model):
    family = models.CharField(
        max_length=20,
        choices=CircuitFamily.choices,
        verbose_name='Circuit family',
    )
    distance = models.PositiveIntegerField(verbose_name='Code distance')
    rounds = models.PositiveIntegerField(verbose_name='Rounds')
    noise = models.FloatField(verbose_name='Noise strength')
    basis = models.CharField(
        max_length=1,
        choices=Basis.choices,
        default=Basis.Z,
        verbose_name='Memory basis',
    )
    shots = models.PositiveBigIntegerField(verbose_name='Shots')
    errors = models.PositiveBigIntegerField(verbose_name='Logical errors')
    seconds = models.FloatField(verbose_name='Decoding seconds')
    detections = models.PositiveBigIntegerField(default=0, verbose_name='Detection events')
    seed = models.BigIntegerField(default=0, verbose_name='Seed')
    created_at = models.DateTimeField(auto_now_add=True, verbose_name='Created at')

    class Meta:
        verbose_name = 'Benchmark run'
        verbose_name_plural = 'Benchmark runs'
        ordering = ['family', 'distance', 'noise', 'basis', 'created_at']
        constraints = [
            models.CheckConstraint(
                condition=Q(errors__lte=F('shots')),
                name='benchmark_errors_within_shots',
            ),
            models.CheckConstraint(
                condition=Q(seconds__gt=0),
                name='benchmark_positive_seconds',
            ),
        ]

    def __str__(self):
        return f'{self.family} d={self.distance} p={self.noise:g} {self.basis}: {self.errors}/{self.shots}'

    @property
    def error_rate(self) -> float:
        return self.errors / self.shots if self.shots else 0.0

    @classmethod
    def from_stat_row(cls, row: StatRow, seed: int = 0) -> 'BenchmarkRun':
        return cls(
            family=row.family,
            distance=row.d,
            rounds=row.rounds,
            noise=row.p,
            basis=row.basis,
            shots=row.shots,
            errors=row.errors,
            seconds=row.seconds,
            detections=row.detections,
            seed=seed,
        )

    def as_stat_row(self) -> StatRow:
        return StatRow(
            family=self.family,
            d=self.distance,
            rounds=self.rounds,
            p=self.noise,
            basis=self.basis,
            shots=self.shots,
            errors=self.errors,
            seconds=self.seconds,
            detections=self.detections,
        )
