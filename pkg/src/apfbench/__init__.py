"""Potential-field path planners and a Monte Carlo benchmark on lunar-analog terrain."""

__version__ = "0.1.0"
