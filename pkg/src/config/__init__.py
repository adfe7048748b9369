"""Configuration and dependency injection"""

