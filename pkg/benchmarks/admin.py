from django.contrib import admin

from .models import BenchmarkRun


@admin.register(BenchmarkRun)
class BenchmarkRunAdmin(admin.ModelAdmin):
    list_display = ('family', 'distance', 'rounds', 'noise', 'basis', 'shots', 'errors', 'seconds', 'created_at')
    list_filter = ('family', 'basis')
    search_fields = ('family',)
