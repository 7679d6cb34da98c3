"""Initialize wvlab"""
import logging

logging.basicConfig(level=logging.INFO)
logging.getLogger(__name__)

# Set package version here
__version__ = "0.1.0"

__all__ = ["__version__"]
