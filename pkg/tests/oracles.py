"""Independent reference implementations used only by the tests.

Nothing here shares code with the package: Shapley values come from
averaging marginal contributions over every ordering, and logistic IG
from its closed form.
"""

import itertools
import math

import numpy as np


def coalition_point(explicand, baseline, members):
    x = np.array(baseline, dtype=float)
    for i in members:
        x[i] = explicand[i]
    return x


def permutation_bshap(f, explicand, baseline):
    """Average of marginal contributions over all m! orderings."""
    m = len(explicand)
    memo = {}

    def v(S):
        key = frozenset(S)
        if key not in memo:
            memo[key] = f(coalition_point(explicand, baseline, key))
        return memo[key]

    phi = [[] for _ in range(m)]
    for order in itertools.permutations(range(m)):
        seen = []
        for i in order:
            phi[i].append(v(seen + [i]) - v(seen))
            seen.append(i)
    return np.array([math.fsum(p) / len(p) for p in phi])


def permutation_group_shapley(f, explicand, baseline, blocks):
    """Shapley value of the block game, by enumerating block orderings."""
    l = len(blocks)
    phi = [[] for _ in range(l)]
    for order in itertools.permutations(range(l)):
        present = []
        for g in order:
            before = f(coalition_point(explicand, baseline, present))
            present = present + list(blocks[g])
            phi[g].append(f(coalition_point(explicand, baseline, present)) - before)
    return np.array([math.fsum(p) / len(p) for p in phi])


def permutation_owen(f, explicand, baseline, blocks):
    """Owen value: average over orderings that keep every block contiguous."""
    m = len(explicand)
    phi = [[] for _ in range(m)]
    for block_order in itertools.permutations(range(len(blocks))):
        for inner in itertools.product(*(itertools.permutations(blocks[g]) for g in block_order)):
            seen = []
            for i in itertools.chain.from_iterable(inner):
                before = f(coalition_point(explicand, baseline, seen))
                seen.append(i)
                phi[i].append(f(coalition_point(explicand, baseline, seen)) - before)
    return np.array([math.fsum(p) / len(p) for p in phi])


def _sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z))


def logistic_ig(bias, w, explicand, baseline):
    """Closed form of IG for sigma(bias + w.x) on a straight path.

    The logit is affine in t, so the path integral of sigma' is
    (sigma(z1) - sigma(z0)) / (z1 - z0).
    """
    w = np.asarray(w, dtype=float)
    d = np.asarray(explicand, dtype=float) - np.asarray(baseline, dtype=float)
    z0 = bias + float(w @ np.asarray(baseline, dtype=float))
    z1 = bias + float(w @ np.asarray(explicand, dtype=float))
    if abs(z1 - z0) < 1e-12:
        avg = _sigmoid(z0) * (1.0 - _sigmoid(z0))
    else:
        avg = (_sigmoid(z1) - _sigmoid(z0)) / (z1 - z0)
    return d * w * avg


def ordering_bshap(f, explicand, baseline):
    """All m! orderings again, with the marginal sums done in numpy.

    Coalition values are tabulated once by bit mask; each ordering then
    contributes v(prefix + i) - v(prefix) to player i.
    """
    m = len(explicand)
    table = np.array([
        f(coalition_point(explicand, baseline, [i for i in range(m) if mask >> i & 1]))
        for mask in range(1 << m)
    ])
    orders = np.array(list(itertools.permutations(range(m))))
    bits = 1 << orders
    after = np.cumsum(bits, axis=1)
    before = after - bits
    marg = table[after] - table[before]
    phi = np.zeros(m)
    np.add.at(phi, orders.ravel(), marg.ravel())
    return phi / len(orders)
