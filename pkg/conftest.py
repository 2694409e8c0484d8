"""
Configure Django before the test modules are collected, mirroring manage.py
"""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'sheetwalk.settings')
django.setup()
