"""Minimum-fuel rendezvous planning on elliptical orbits via IRLS."""
