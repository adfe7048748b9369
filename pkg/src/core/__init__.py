"""Numerical engine - tensor algebra, signatures, gradients, kernels and networks"""
