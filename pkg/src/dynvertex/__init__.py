"""Dynamic stochastic vertex models: weights, duality functions, exact checks and simulation."""

__version__ = "0.1.0"
