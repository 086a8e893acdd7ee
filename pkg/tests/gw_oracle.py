"""Independent branching-law oracles for the tests.

Probabilities are built by exhaustive enumeration over root degrees and
ordered subtree-size compositions (sum over all offspring-sequence
products), never from the closed-form law under test.
"""
import math
from functools import lru_cache


def subtree_total_pmf(offspring_mean: float, n: int) -> float:
    """P(total size, root included, of one tree with Poisson(offspring_mean)
    offspring = n), by exhaustive enumeration."""
    mu = offspring_mean

    @lru_cache(maxsize=None)
    def f(m: int) -> float:
        if m < 1:
            return 0.0
        if m == 1:
            return math.exp(-mu)  # the root has no children
        rest = m - 1
        total = 0.0
        for k in range(1, rest + 1):
            p_k = math.exp(-mu) * mu**k / math.factorial(k)
            total += p_k * comp(rest, k)
        return total

    @lru_cache(maxsize=None)
    def comp(m: int, k: int) -> float:
        # sum over ordered compositions m = m_1 + ... + m_k of prod f(m_i)
        if k == 1:
            return f(m)
        return sum(f(j) * comp(m - j, k - 1) for j in range(1, m - k + 2))

    return f(n)


def added_mass_pmf(root_mean: float, offspring_mean: float, n: int) -> float:
    """P(one-shot cascade adds n particles): a Poisson(root_mean) first
    generation, each member founding an independent tree."""
    if n == 0:
        return math.exp(-root_mean)
    total = 0.0
    for k in range(1, n + 1):
        p_k = math.exp(-root_mean) * root_mean**k / math.factorial(k)
        total += p_k * _comp_subtrees(root_mean, offspring_mean, n, k)
    return total


@lru_cache(maxsize=None)
def _comp_subtrees(root_mean: float, offspring_mean: float, m: int, k: int) -> float:
    if k == 1:
        return subtree_total_pmf(offspring_mean, m)
    return sum(
        subtree_total_pmf(offspring_mean, j)
        * _comp_subtrees(root_mean, offspring_mean, m - j, k - 1)
        for j in range(1, m - k + 2)
    )


def added_mass_class_probs(root_mean: float, offspring_mean: float, n_classes: int):
    """Probabilities of added mass 0, 1, ..., n_classes-2, and >= n_classes-1."""
    probs = [added_mass_pmf(root_mean, offspring_mean, n) for n in range(n_classes - 1)]
    probs.append(1.0 - sum(probs))
    return probs
