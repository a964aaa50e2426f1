"""Certified numerics for the Chow-Robbins coin-tossing game."""
