"""Asynchronous multi-agent reinforcement learning with macro-actions.

Agents act through temporally extended controllers that start and end at
different ticks.  The package provides the environment contract and three
benchmark domains, two replay structures with trajectory squeezing, a small
recurrent network core with hand-written gradients, four value-based and four
actor-critic learners, brute-force oracles, and a CLI training harness.
"""

__version__ = "0.1.0"
