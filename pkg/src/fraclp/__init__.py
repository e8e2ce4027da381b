"""Numerical toolkit for L_p estimates of alpha-stable parabolic square functions."""

__version__ = "0.1.0"
