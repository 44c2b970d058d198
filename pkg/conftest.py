import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "rfiqkd.settings")
django.setup()
