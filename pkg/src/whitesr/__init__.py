"""Automatic regularisation-parameter selection for variational super-resolution
by minimising the whiteness of the residual."""

__version__ = "0.1.0"
