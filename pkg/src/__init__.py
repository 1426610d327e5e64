"""relu-span: exact ReLU-network algebra and certified global approximation in Y."""

__version__ = "0.1.0"
