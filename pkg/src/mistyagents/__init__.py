"""Natural-language to robot-code pipeline: DSL, simulator, agents, benchmark."""

__version__ = "0.1.0"
