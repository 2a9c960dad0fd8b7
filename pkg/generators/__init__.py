"""
Result Emission Package

- result_writer.py: CSV/JSON writers with fixed schemas and the run manifest
- plots.py: SVG quick-looks
"""

from .result_writer import ResultWriter, validate_output_directory
from .plots import render_plot

__all__ = ['ResultWriter', 'validate_output_directory', 'render_plot']
