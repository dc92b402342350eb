"""FMCW radar pipeline for recognising activities of daily living.

Stages: baseband simulation, range-map and micro-Doppler transforms,
Radon/power-burst segmentation, 2-D PCA features, k-NN classification
and a state-machine-gated forward/reverse decision over time.
"""

__version__ = "0.1.0"
