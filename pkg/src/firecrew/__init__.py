"""Multi-agent aerial firefighting: simulation, learning, and mediated control."""

__version__ = "0.1.0"
