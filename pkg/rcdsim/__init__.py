"""
rcdsim — Random Coordinate Descent in open multi-agent systems.

Event-driven simulator for pairwise RCD resource allocation under agent
replacements, with dynamical regret / benefit / potential benefit metrics
and closed-form bound evaluators.
"""

__version__ = "1.0.0"
