"""Distributed leader-follower formation control of unicycle robots.

Consensus estimation of the leader state, a shunting-neuron backstepping
kinematic controller and a learning sliding-mode torque controller, closed
into a deterministic fixed-step simulator.
"""

__version__ = "0.1.0"
