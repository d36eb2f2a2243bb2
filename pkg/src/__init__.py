"""faceresp: unsupervised facial expression intensity responses from landmark sequences."""

__version__ = '0.1.0'
