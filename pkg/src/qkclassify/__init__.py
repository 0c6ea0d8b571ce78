"""Quantum-kernel classification toolkit: an exact statevector simulator,
entangling feature maps, fidelity kernels, an SMO support vector machine and
the surrounding text, feature-selection and evaluation pipeline."""

__version__ = "0.1.0"
