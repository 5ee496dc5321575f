"""Zero-rate holographic stabilizer codes under biased Pauli noise."""

__version__ = "0.1.0"
