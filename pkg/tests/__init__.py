"""Test suite for sigstack"""
