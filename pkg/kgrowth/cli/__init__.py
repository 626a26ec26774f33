"""
Batch command-line front end
"""

from .models import RunSpec, parse_config
from .runner import execute
from .main import main

__all__ = ["RunSpec", "parse_config", "execute", "main"]
