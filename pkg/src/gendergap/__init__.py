"""Geo-gender tagging of journal authorships and gender gap analytics."""

__version__ = "0.1.0"
