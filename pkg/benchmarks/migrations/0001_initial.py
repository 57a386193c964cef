# Generated by Django 6.0.1 on 2026-02-03 09:42

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='BenchmarkRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('family', models.CharField(choices=[('transit', 'Transit color code'), ('phenom', 'Phenomenological color code'), ('superdense', 'Superdense color code'), ('midout', 'Middle-out color code'), ('toric', 'Toric color code'), ('toric_ablated', 'Ablated toric color code'), ('rep', 'Repetition code'), ('surface', 'Surface code')], max_length=20, verbose_name='Circuit family')),
                ('distance', models.PositiveIntegerField(verbose_name='Code distance')),
                ('rounds', models.PositiveIntegerField(verbose_name='Rounds')),
                ('noise', models.FloatField(verbose_name='Noise strength')),
                ('basis', models.CharField(choices=[('X', 'X basis'), ('Z', 'Z basis')], default='Z', max_length=1, verbose_name='Memory basis')),
                ('shots', models.PositiveBigIntegerField(verbose_name='Shots')),
                ('errors', models.PositiveBigIntegerField(verbose_name='Logical errors')),
                ('seconds', models.FloatField(verbose_name='Decoding seconds')),
                ('detections', models.PositiveBigIntegerField(default=0, verbose_name='Detection events')),
                ('seed', models.BigIntegerField(default=0, verbose_name='Seed')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='Created at')),
            ],
            options={
                'verbose_name': 'Benchmark run',
                'verbose_name_plural': 'Benchmark runs',
                'ordering': ['family', 'distance', 'noise', 'basis', 'created_at'],
                'constraints': [models.CheckConstraint(condition=models.Q(('errors__lte', models.F('shots'))), name='benchmark_errors_within_shots'), models.CheckConstraint(condition=models.Q(('seconds__gt', 0)), name='benchmark_positive_seconds')],
            },
        ),
    ]
