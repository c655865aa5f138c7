"""Modal observer-based output feedback for linear diffusion-reaction PDEs."""

__version__ = "0.1.0"
