"""Benchmarking toolkit for synthetic smart-card trip data.

Scores synthetic trip datasets against a real reference along three
dimensions (representativeness, privacy, utility) at record, group, and
population levels, and ships statistical baseline generators so the full
benchmark loop runs end-to-end.
"""

__version__ = "0.1.0"
