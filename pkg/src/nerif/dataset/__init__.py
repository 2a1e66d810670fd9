"""Dataset manager: labeled manifests, balanced splits, and batching."""
