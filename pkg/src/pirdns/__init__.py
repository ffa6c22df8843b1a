"""Private DNS resolution on top of single-server PIR."""

__version__ = "0.1.0"
