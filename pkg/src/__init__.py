"""
Prompt-policy segmentation benchmark

A desk-scale setup for learning mask prompts with reinforcement learning:
synthetic scenes, a simulated promptable segmenter, a small recurrent
prompt policy trained with GRPO, and the segmentation metric suite used to
score it.
"""

__version__ = "0.1.0"
