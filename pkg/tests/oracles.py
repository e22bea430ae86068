"""Independent reference computations used to check the implementation.

Nothing here imports the code under test's algorithms; the oracles work on
plain Python lists with exact rational arithmetic where it matters.
"""

from fractions import Fraction
from itertools import product


def sweep_eer(genuine, skilled):
    """EER by exhaustive thresholding at midpoints of the sorted scores.

    Thresholds are every midpoint between consecutive distinct scores, plus
    one below the minimum and one above the maximum. Rates are counted
    directly and kept as exact fractions; the crossing is found by scanning
    for the first threshold where FAR <= FRR and interpolating linearly from
    the previous one.
    """
    genuine = [Fraction(x) for x in genuine]
    skilled = [Fraction(x) for x in skilled]
    values = sorted(set(genuine) | set(skilled))
    thresholds = [values[0] - 1]
    thresholds += [(a + b) / 2 for a, b in zip(values, values[1:])]
    thresholds.append(values[-1] + 1)
    points = []
    for t in thresholds:
        frr = Fraction(sum(1 for g in genuine if g < t), len(genuine))
        far = Fraction(sum(1 for s in skilled if s >= t), len(skilled))
        points.append((far, frr))
    prev = None
    for far, frr in points:
        if far == frr:
            return frr
        if far < frr:
            pfar, pfrr = prev
            alpha = (pfar - pfrr) / ((pfar - pfrr) - (far - frr))
            return pfrr + alpha * (frr - pfrr)
        prev = (far, frr)
    raise AssertionError("rates never crossed")


def sweep_user_eer(trials):
    """Mean of per-writer sweep EERs; ``trials`` is ``[(writer, is_genuine, score)]``."""
    by_writer = {}
    for writer, is_genuine, s in trials:
        g, k = by_writer.setdefault(writer, ([], []))
        (g if is_genuine else k).append(s)
    eers = [sweep_eer(g, k) for g, k in by_writer.values()]
    return sum(eers, Fraction(0)) / len(eers)


def one_nn_labels(store_points, store_labels, points):
    """1-NN by squared Euclidean distance; ties to the earliest store point.

    Distances are screened in floating point and any candidates within a
    relative 1e-9 of the best are compared again with exact rationals, so
    rounding can never decide which neighbour is nearest.
    """
    exact_store = [[Fraction(v) for v in q] for q in store_points]
    out = []
    for p in points:
        approx = [sum((a - b) ** 2 for a, b in zip(p, q)) for q in store_points]
        lo = min(approx)
        close = [i for i, d in enumerate(approx) if d <= lo * (1 + 1e-9) + 1e-300]
        if len(close) > 1:
            fp = [Fraction(v) for v in p]
            exact = [sum((a - b) ** 2 for a, b in zip(fp, exact_store[i])) for i in close]
            best = close[exact.index(min(exact))]
        else:
            best = close[0]
        out.append(store_labels[best])
    return out


def all_nonempty_masks(dim):
    for bits in product((0, 1), repeat=dim):
        if any(bits):
            yield bits
