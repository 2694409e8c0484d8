"""
Packaging for the sheetwalk experiment suite
"""
from pathlib import Path

from setuptools import find_packages, setup

BASE_DIR = Path(__file__).resolve().parent


def read_requirements():
    lines = (BASE_DIR / 'requirements.txt').read_text().splitlines()
    return [line.strip() for line in lines if line.strip() and not line.startswith('#')]


setup(
    name='sheetwalk',
    version='0.1.0',
    description='Uniform transport approximations of the Brownian sheet: couplings, rates and maximal inequalities',
    packages=find_packages(include=['sheetwalk', 'simulation', 'simulation.*', 'experiments', 'experiments.*']),
    python_requires='>=3.9',
    install_requires=read_requirements(),
    entry_points={
        'console_scripts': [
            'sheetwalk=sheetwalk.cli:main',
        ],
    },
)
