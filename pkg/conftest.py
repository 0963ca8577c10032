import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'forge.settings')
django.setup()
