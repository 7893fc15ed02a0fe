"""Version information for maskface-utils"""

__version__ = "0.1.0"
