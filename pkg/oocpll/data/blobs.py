import numpy as np

from oocpll.data.types import OUT_OF_SPACE, LabeledExample, Source


def cluster_centers(c: int, d: int, separation: float) -> np.ndarray:
    """Place c centers evenly on a circle in the first two coordinates, adjacent centers `separation` apart."""
    radius = separation / (2.0 * np.sin(np.pi / c))
    angles = 2.0 * np.pi * np.arange(c) / c
    centers = np.zeros((c, d))
    centers[:, 0] = radius * np.cos(angles)
    centers[:, 1] = radius * np.sin(angles)
    return centers


def open_cluster_centers(open_classes: int, c: int, d: int, separation: float) -> np.ndarray:
    """Centers of the auxiliary clusters, on a circle of more than twice the in-distribution radius."""
    radius = 2.0 * separation / (2.0 * np.sin(np.pi / c)) + separation
    angles = 2.0 * np.pi * (np.arange(open_classes) + 0.5) / max(open_classes, 1)
    centers = np.zeros((open_classes, d))
    centers[:, 0] = radius * np.cos(angles)
    centers[:, 1] = radius * np.sin(angles)
    return centers


def synth_blobs(
    c: int,
    n_per_class: int,
    d: int,
    separation: float,
    open_classes: int,
    rng: np.random.Generator,
) -> tuple[list[LabeledExample], list[LabeledExample]]:
    """Sample unit-variance Gaussian clusters: c labeled in-distribution clusters plus `open_classes`
    auxiliary clusters lying outside the in-distribution hull.

    Examples are emitted cluster by cluster. Centers depend only on (c, d, separation), so repeated calls share
    them and can serve as validation or test draws.
    """
    if c < 2:
        raise ValueError(f"c must be at least 2, got {c}")
    if d < 2:
        raise ValueError(f"d must be at least 2, got {d}")
    if separation <= 0:
        raise ValueError(f"separation must be positive, got {separation}")
    if n_per_class < 0 or open_classes < 0:
        raise ValueError("n_per_class and open_classes must be non-negative")

    in_distribution = []
    for label, center in enumerate(cluster_centers(c, d, separation)):
        points = center + rng.standard_normal((n_per_class, d))
        in_distribution.extend(LabeledExample(point, label, Source.IN_DISTRIBUTION) for point in points)

    auxiliary = []
    for center in open_cluster_centers(open_classes, c, d, separation):
        points = center + rng.standard_normal((n_per_class, d))
        auxiliary.extend(LabeledExample(point, OUT_OF_SPACE, Source.AUXILIARY) for point in points)

    return in_distribution, auxiliary
