"""Infrastructure layer - file storage and synthetic data"""
