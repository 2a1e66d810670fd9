"""Built-in task definitions."""
