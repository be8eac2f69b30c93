"""Minimum-energy preemptive deadline scheduling with a sleep state."""
