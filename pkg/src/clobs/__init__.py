"""Maximally classical observables of closed quantum systems."""
