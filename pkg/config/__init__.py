"""
Configuration package for the prompt-policy benchmark.

Settings live in settings.yaml (copied from settings.example.yaml) and are
loaded through src.config.
"""
