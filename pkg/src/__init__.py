"""sigstack - path signatures as differentiable layers"""

__version__ = "0.1.0"
