"""
Utility functions.
"""
