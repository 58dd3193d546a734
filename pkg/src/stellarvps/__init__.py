"""Self-consistent spherical stellar models: potential, Abel/Eddington transforms,
the inverse (density -> distribution) problem and the direct ANS solver."""

__version__ = "0.1.0"
