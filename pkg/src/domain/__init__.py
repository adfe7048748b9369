"""Domain layer - core data types, errors and interfaces"""
