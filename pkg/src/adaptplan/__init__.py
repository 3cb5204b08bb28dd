"""Planning agents that notice when their PDDL+ model stops matching the world and repair it."""

__version__ = "0.1.0"
