"""Natural cubic spline bases with data-driven knot placement."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class SplineBasis:
    """Knot layout for a natural cubic basis.

    ``boundary`` holds the outermost pair of knots; the basis is linear
    beyond them.  With m interior knots the basis spans m + 1 columns, the
    intercept being handled by the model, not the basis.
    """

    interior_knots: tuple
    boundary: tuple

    def __post_init__(self):
        lo, hi = self.boundary
        ks = tuple(float(k) for k in self.interior_knots)
        object.__setattr__(self, "interior_knots", ks)
        object.__setattr__(self, "boundary", (float(lo), float(hi)))
        allk = self.all_knots
        if len(allk) < 2 or any(a >= b for a, b in zip(allk, allk[1:])):
            raise ConfigurationError(f"knots must be strictly increasing, got {allk}")

    @property
    def all_knots(self):
        return (self.boundary[0],) + self.interior_knots + (self.boundary[1],)

    @property
    def dimension(self):
        return len(self.interior_knots) + 1


def basis_from_quantiles(x, n_knots=6):
    """Place ``n_knots`` knots at equally spaced quantiles of x.

    The extreme pair becomes the boundary; ties among quantiles (heavily
    discrete x) are rejected.
    """
    if n_knots < 2:
        raise ConfigurationError("need at least 2 knots")
    x = np.asarray(x, dtype=float)
    probs = np.arange(1, n_knots + 1) / (n_knots + 1.0)
    ks = np.quantile(x, probs)
    if np.any(np.diff(ks) <= 0):
        raise ConfigurationError(
            f"quantile knots are not distinct for n_knots={n_knots}"
        )
    return SplineBasis(tuple(ks[1:-1]), (ks[0], ks[-1]))


def natural_spline_design(x, basis):
    """Evaluate the natural cubic basis at x; returns an (n, dimension) array.

    Columns follow the truncated-power construction: the identity map first,
    then one cubic term per non-boundary knot, each corrected so every
    column is exactly linear outside the boundary knots.
    """
    x = np.asarray(x, dtype=float)
    ks = np.asarray(basis.all_knots)
    K = ks.size

    def d(k):
        # (x - ks[k])_+^3 relative to the last knot, slope-normalized
        return (
            np.maximum(x - ks[k], 0.0) ** 3 - np.maximum(x - ks[-1], 0.0) ** 3
        ) / (ks[-1] - ks[k])

    cols = [x]
    dlast = d(K - 2)
    for k in range(K - 2):
        cols.append(d(k) - dlast)
    return np.column_stack(cols)
