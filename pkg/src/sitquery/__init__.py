"""Situational query generation and evaluation over household scene graphs."""

__version__ = "0.1.0"

from sitquery.errors import SitQueryError

__all__ = ["SitQueryError", "__version__"]
