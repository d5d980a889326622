"""Physical models built on the engine."""
