"""Deceptive-walk detection from 3D skeletal gait sequences and gesture annotations."""

__version__ = "0.1.0"
