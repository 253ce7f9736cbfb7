"""
Storage Module
Datasets, checkpoints and reports under one output directory
"""

# Avoid circular import - import directly from json_storage module instead
__all__ = [
    "JSONStorage"
]
