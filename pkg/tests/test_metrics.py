import math

import numpy as np
import pytest

from oocpll.data.types import OUT_OF_SPACE, PartialDataset, TruthType
from oocpll.selection.partition import Partition
from oocpll.training.metrics import confidence_delta, disambiguation_rate, selection_precision

TRUTH = np.array([TruthType.NORMAL, TruthType.CLOSED_SET, TruthType.OPEN_SET, TruthType.NORMAL])


def test_selection_precision_per_pool():
    partition = Partition(np.array([0]), np.array([1, 3]), np.array([2]), 0.5, 0.25, 4)
    assert selection_precision(partition, TRUTH) == {"normal": 1.0, "closed": 0.5, "open": 1.0}


def test_empty_pools_have_no_precision():
    precision = selection_precision(Partition.all_normal(4), TRUTH)
    assert precision["closed"] is None
    assert precision["open"] is None
    assert precision["normal"] == 0.5


def test_no_partition_means_no_precision():
    assert selection_precision(None, TRUTH) == {"normal": None, "closed": None, "open": None}


def test_confidence_delta_of_identical_tables():
    table = np.array([[0.5, 0.5], [1.0, 0.0]])
    assert confidence_delta(table, table.copy()) == 0.0


def test_confidence_delta_of_single_entry():
    assert confidence_delta(np.array([[0.3, 0.0]]), np.zeros((1, 2))) == pytest.approx(0.3)


def test_confidence_delta_of_swapped_rows():
    assert confidence_delta(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])) == pytest.approx(math.sqrt(2))


def test_confidence_delta_rejects_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        confidence_delta(np.zeros((2, 2)), np.zeros((3, 2)))


def test_disambiguation_rate_skips_open_set_examples():
    dataset = PartialDataset(
        features=np.zeros((3, 2)),
        true_labels=np.array([0, 1, OUT_OF_SPACE]),
        masks=np.ones((3, 2), dtype=bool),
        truth_type=np.array([TruthType.NORMAL, TruthType.CLOSED_SET, TruthType.OPEN_SET], dtype=np.int8),
        c=2,
    )
    active = np.array([[0.8, 0.2], [0.9, 0.1], [0.0, 1.0]])
    assert disambiguation_rate(active, dataset) == 0.5
