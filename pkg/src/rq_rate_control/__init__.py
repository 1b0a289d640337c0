"""Rate-quality modeling and closed-loop rate control for learned video coding."""

__version__ = "0.1.0"
