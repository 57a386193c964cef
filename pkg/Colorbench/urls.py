from django.contrib import admin
from django.urls import path


urlpatterns = [
    # Benchmark runs are browsed through the admin
    path('admin/', admin.site.urls),
]
