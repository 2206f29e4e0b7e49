"""gapcert: exact-rational certification of the radial NLS spectral-gap computation."""

__version__ = "0.1.0"
