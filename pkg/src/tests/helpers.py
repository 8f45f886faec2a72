import numpy as np

from src.models.domain import FeatureSet, SampleLabels


def make_features(matrix, labels, target: str = "location") -> FeatureSet:
    """FeatureSet over arbitrary vectors; ``labels`` fill the ``target`` field"""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    return FeatureSet(
        matrix=matrix,
        labels=[SampleLabels(**{target: label}) for label in labels],
        bin_hz=1.0,
        first_bin_hz=1.0,
        sample_rate_hz=48000,
    )
