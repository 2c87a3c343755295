import math

import numpy as np
import pytest

from oocpll.losses.partial_ce import confidence_entropy, decoupled_ce, wooden_ce

PROBS = np.array([0.7, 0.2, 0.1])
MASK = np.array([True, True, False])


def random_pairs(rng, n, c):
    probs = rng.dirichlet(np.ones(c), size=n)
    masks = rng.random((n, c)) < 0.5
    masks[np.arange(n), rng.integers(0, c, n)] = True
    return probs, masks


def test_decoupled_example():
    l_c, lbar_c = decoupled_ce(PROBS, MASK)
    assert l_c == pytest.approx((-math.log(0.7) - math.log(0.2)) / 2, abs=1e-4)
    assert lbar_c == pytest.approx(2.3026, abs=1e-4)


def test_wooden_example():
    l_w, lbar_w = wooden_ce(PROBS, MASK)
    assert l_w == pytest.approx(0.3567, abs=1e-4)
    assert lbar_w == pytest.approx(2.3026, abs=1e-4)


@pytest.mark.parametrize("loss", [decoupled_ce, wooden_ce])
def test_uniform_output_gives_log_c(loss):
    l, lbar = loss(np.full(3, 1 / 3), np.array([True, False, False]))
    assert l == pytest.approx(math.log(3))
    assert lbar == pytest.approx(math.log(3))


@pytest.mark.parametrize("loss", [decoupled_ce, wooden_ce, confidence_entropy])
def test_full_candidate_set_gives_infinite_non_candidate_loss(loss):
    _, lbar = loss(PROBS, np.ones(3, dtype=bool))
    assert lbar == math.inf


def test_rejects_unnormalized_probabilities():
    with pytest.raises(ValueError, match="sum to 1"):
        wooden_ce(np.array([0.5, 0.4, 0.2]), MASK)


def test_rejects_empty_candidate_set():
    with pytest.raises(ValueError, match="at least one"):
        decoupled_ce(PROBS, np.zeros(3, dtype=bool))


def test_wooden_is_minus_log_of_best_candidate(rng):
    probs, masks = random_pairs(rng, 10000, 10)
    l_w, _ = wooden_ce(probs, masks)
    expected = -np.log(np.where(masks, probs, 0.0).max(axis=1))
    np.testing.assert_allclose(l_w, expected, rtol=0, atol=1e-12)


def test_wooden_ignores_candidate_set_size_at_fixed_best_candidate():
    probs = np.array([0.4, 0.1, 0.1, 0.1, 0.1, 0.2])
    small = np.array([True, False, False, False, False, False])
    large = np.array([True, True, True, True, False, True])
    assert wooden_ce(probs, small)[0] == wooden_ce(probs, large)[0]
    # the decoupled loss does change with the set size
    assert decoupled_ce(probs, small)[0] != decoupled_ce(probs, large)[0]


def test_wooden_never_grows_on_a_superset(rng):
    probs, masks = random_pairs(rng, 1000, 8)
    superset = masks | (rng.random(masks.shape) < 0.3)
    assert (wooden_ce(probs, superset)[0] <= wooden_ce(probs, masks)[0]).all()


def test_sharper_best_candidate_never_increases_wooden_loss():
    sharper = np.array([0.85, 0.1, 0.05])
    assert wooden_ce(sharper, MASK)[0] <= wooden_ce(PROBS, MASK)[0]


def test_batch_and_single_agree(rng):
    probs, masks = random_pairs(rng, 5, 4)
    l_batch, lbar_batch = decoupled_ce(probs, masks)
    for i in range(5):
        l, lbar = decoupled_ce(probs[i], masks[i])
        assert l == l_batch[i]
        assert lbar == lbar_batch[i]


def test_entropy_examples():
    assert confidence_entropy(PROBS, np.array([True, False, False]))[0] == pytest.approx(0.0)
    assert confidence_entropy(np.full(4, 0.25), np.ones(4, dtype=bool))[0] == pytest.approx(math.log(4))
    assert confidence_entropy(PROBS, MASK)[0] == pytest.approx(0.5297, abs=1e-4)


def test_entropy_is_bounded_by_log_set_size(rng):
    probs, masks = random_pairs(rng, 500, 6)
    entropy, _ = confidence_entropy(probs, masks)
    assert (entropy >= -1e-12).all()
    assert (entropy <= np.log(masks.sum(axis=1)) + 1e-12).all()
