"""High-order GLME inverse nonlinear Fourier transform."""

__version__ = "0.1.0"
