from setuptools import setup, find_packages

setup(
    name='courant-kit',
    version='0.1.0',
    packages=find_packages(exclude=['tests', 'examples', 'examples.*']),
    install_requires=[
        'sympy',
        'python-dotenv',
        'jsonschema',
        'pyyaml',
    ],
    extras_require={
        'test': ['pytest', 'hypothesis'],
    },
    entry_points={
        'console_scripts': [
            'courant-kit=src.courant_kit:main',
        ],
    },
)
