"""Numerical laboratory for pulsating fronts in periodic reaction-diffusion media."""

from .kernels import BACKEND as KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND"]
__version__ = "0.1.0"
