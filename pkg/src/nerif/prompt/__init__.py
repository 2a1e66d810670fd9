"""Prompt compiler: the seven-section scoring prompt and its ablation variants."""
