"""Image-based visual servoing of a quadrotor through a window and onto a landing pad."""

__version__ = "0.1.0"
