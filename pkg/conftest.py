import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'orbitdecoding.settings')
django.setup()
