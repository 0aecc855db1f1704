"""Image-folder to LCF feature exporter for frozen vision encoders."""

from . import cli, errors, export, lcf, models  # noqa: F401

__version__ = "0.1.0"
