"""Image-folder embedding exporter writing FSEB v1 files."""

__version__ = "0.1.0"
