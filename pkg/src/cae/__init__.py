"""Desk-scale causal action-effect pipeline.

Submodules:
    lexicon     result-verb mining from lexical-resource snapshots
    corpus      video-pool filtering and clip extraction from subtitles
    split       generalized zero-shot train/val/test assignment
    features    frame sampling, clip segmentation, synthetic visual features
    model       hierarchical cross-modal encoder, MAM/MEM training
    evalmetrics intrinsic metrics, generalization analysis, cloze probing
    cli         pipeline orchestration
    demo        bundled fixture generation
"""

__version__ = "0.1.0"
