"""Braille rendering engine and desk-scale simulator for mid-air ultrasonic haptics."""

__version__ = "0.1.0"
