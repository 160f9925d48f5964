"""Simulation laboratory for self-consuming generative-model training loops."""

__version__ = "0.1.0"

from . import bounds, diffusion, distributions, divergences, kernels, loop, mixing

__all__ = [
    "bounds",
    "diffusion",
    "distributions",
    "divergences",
    "kernels",
    "loop",
    "mixing",
    "__version__",
]
