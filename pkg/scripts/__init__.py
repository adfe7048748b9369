"""Utility scripts"""

