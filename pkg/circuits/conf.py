from django.conf import settings


def setting(name: str, default):
    """Read a COLORBENCH_* setting, falling back when Django is not configured."""
    if not settings.configured:
        return default
    return getattr(settings, name, default)
