"""Run orchestrator: validation, test, and ablation runs with resumable persistence."""
