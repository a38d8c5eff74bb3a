"""Posterior probability estimation by class-weight re-training."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("isoposterior")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0+unknown"
