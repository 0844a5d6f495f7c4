"""AHP priority vector and weighted-arithmetic-average scheme selection.

An expert pairwise matrix over the features yields a priority vector ``q``.
Each candidate weight scheme (row of the decision matrix) is scored by
``Y @ q`` and the highest score wins.

Feature order matters: pairwise files and scheme tables are re-indexed to
``feature_engine.FEATURES`` by name before any arithmetic.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .feature_engine import FEATURES

log = logging.getLogger(__name__)

# Saaty random consistency index by matrix order
RANDOM_INDEX = {1: 0.0, 2: 0.0, 3: 0.58, 4: 0.90, 5: 1.12, 6: 1.24, 7: 1.32, 8: 1.41, 9: 1.45, 10: 1.49}


class NonReciprocalMatrix(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Priority:
    q: np.ndarray
    cr: float
    lambda_max: float


def check_reciprocal(A, tol=1e-9):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonReciprocalMatrix("pairwise matrix must be square")
    if np.any(A <= 0):
        raise NonReciprocalMatrix("pairwise entries must be positive")
    if not np.allclose(np.diag(A), 1.0, atol=tol):
        raise NonReciprocalMatrix("diagonal must be 1")
    if not np.allclose(A * A.T, 1.0, atol=tol):
        i, j = np.unravel_index(np.argmax(np.abs(A * A.T - 1.0)), A.shape)
        raise NonReciprocalMatrix(f"a[{i},{j}] * a[{j},{i}] = {A[i, j] * A[j, i]:.6g} != 1")
    if np.any(A < 1 / 9 - tol) or np.any(A > 9 + tol):
        log.warning("pairwise entries outside the 1/9..9 scale")
    return A


def ahp_priority(A, method="geometric"):
    """Priority vector and consistency ratio of a reciprocal pairwise matrix.

    ``method='geometric'`` uses normalised row geometric means;
    ``'column'`` averages the rows of the column-normalised matrix.
    """
    A = check_reciprocal(A)
    n = len(A)
    if method == "geometric":
        g = np.exp(np.mean(np.log(A), axis=1))
        q = g / g.sum()
    elif method == "column":
        q = np.mean(A / A.sum(axis=0), axis=1)
        q = q / q.sum()
    else:
        raise ValueError(f"unknown method {method!r}")
    lam = float(np.mean((A @ q) / q))
    if n <= 2:
        cr = 0.0
    else:
        cr = max(0.0, (lam - n) / ((n - 1) * RANDOM_INDEX[n]))
    if cr > 0.10:
        log.warning("pairwise matrix consistency ratio %.3f exceeds 0.10", cr)
    return Priority(q=q, cr=cr, lambda_max=lam)


def waa_scores(Y, q):
    """Scheme scores ``D = Y @ q``."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    q = np.asarray(q, dtype=float)
    if Y.shape[1] != len(q):
        raise DimensionMismatch(f"decision matrix has {Y.shape[1]} columns, priority vector {len(q)}")
    return Y @ q


def select_scheme(D):
    """Index of the best score (lowest index on ties) and whether a tie occurred."""
    D = np.asarray(D, dtype=float)
    if D.size == 0:
        raise ValueError("no scheme scores")
    best = int(np.argmax(D))
    tie = int(np.sum(D == D[best])) > 1
    if tie:
        log.info("scheme scores tie at %.6g; picking index %d", D[best], best)
    return best, tie


def decision_matrix(schemes, features=FEATURES):
    return np.array([[s.as_dict()[f] for f in features] for s in schemes])


@dataclass
class Decision:
    names: list
    scores: np.ndarray
    selected: int
    tie: bool
    priority: Priority


def decide(schemes, A, method="geometric"):
    """Score weight schemes against a pairwise matrix in FEATURES order."""
    pr = ahp_priority(A, method)
    D = waa_scores(decision_matrix(schemes), pr.q)
    best, tie = select_scheme(D)
    return Decision([s.name for s in schemes], D, best, tie, pr)


def _number(text):
    return float(Fraction(text.strip()))


def load_pairwise(path, features=FEATURES):
    """Read a labelled pairwise grid and reorder it to ``features``.

    First row: blank corner then column feature names; each following row:
    row feature name then entries (``"1/7"`` style fractions accepted).
    """
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    delim = "\t" if "\t" in lines[0] else ","
    header = [h.strip() for h in lines[0].split(delim)][1:]
    names, rows = [], []
    for ln in lines[1:]:
        cells = ln.split(delim)
        names.append(cells[0].strip())
        rows.append([_number(c) for c in cells[1:]])
    if names != header:
        raise DimensionMismatch(f"row labels {names} differ from column labels {header}")
    if sorted(header) != sorted(features):
        raise DimensionMismatch(f"pairwise features {header} do not match {list(features)}")
    A = np.array(rows)
    order = [header.index(f) for f in features]
    return A[np.ix_(order, order)]


def write_decision(decision, path):
    with open(path, "w") as fh:
        fh.write("scheme,score,selected,cr\n")
        for i, (name, d) in enumerate(zip(decision.names, decision.scores)):
            fh.write(f"{name},{d:.6f},{int(i == decision.selected)},{decision.priority.cr:.6f}\n")
