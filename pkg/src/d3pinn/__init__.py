"""Domain-decomposed PINN training with interface-enhanced losses, operator
freezing, and classical RK4 time evolution."""

__version__ = "0.1.0"
