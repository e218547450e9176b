import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "fixlift.settings")
django.setup()
