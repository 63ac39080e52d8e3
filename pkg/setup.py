from setuptools import setup, find_packages

setup(
    name="MetricMux",
    version="1.0.0",
    description="TeX font metric tools and a cached font build runner",
    packages=find_packages(exclude=["tests"]),
    install_requires=[
        "PyQt6>=6.0.0",
        "psutil>=5.8.0",
        "fonttools>=4.0.0",
        "numpy>=1.20.0",
    ],
    entry_points={
        'console_scripts': [
            'metricmux=metricmux.main:main',
        ],
    },
)
