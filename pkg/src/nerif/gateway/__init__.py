"""VLM gateway: single-turn sessions against remote, scripted, and oracle backends.

Every call opens a fresh stateless session. Retries, rate limiting and the
concurrency cap are shared across threads.
"""
