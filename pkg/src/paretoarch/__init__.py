"""Multi-objective discovery and rediscovery of composite forecasting architectures."""
