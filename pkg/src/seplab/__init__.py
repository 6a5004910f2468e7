"""Desk-scale laboratory for source-channel separation experiments.

The package provides exact (rational) and floating-point tooling for finite
probability distributions, the method of types, distortion measures, channel
kernels, rate-distortion and compound-capacity optimization, random-coding
simulation, covering-packing duality checks, and multiuser replacement
experiments, together with a config-driven command line runner.
"""

__version__ = "0.1.0"

from .probability import Distribution, JointDistribution  # noqa: F401

__all__ = ["Distribution", "JointDistribution", "__version__"]
