"""Least-squares log-log fits used as the evidence object of every scan."""

from dataclasses import dataclass, field, asdict

import numpy as np


@dataclass
class FitReport:
    """Result of fitting ``log2(y) = slope * log2(x) + intercept``.

    ``max_residual`` is the largest absolute deviation of a sample from the
    fitted line in log2 units.  ``flags`` collects qualitative findings
    (e.g. ``"identically zero"``) that make the slope meaningless.
    """

    slope: float
    intercept: float
    max_residual: float
    samples: int
    flags: list = field(default_factory=list)
    x: np.ndarray = None
    y: np.ndarray = None

    def to_dict(self):
        d = asdict(self)
        d.pop("x")
        d.pop("y")
        return d


def loglog_fit(x, y, min_samples=8):
    """Fit a line to ``(log2 x, log2 y)``.

    Raises ValueError for fewer than ``min_samples`` usable points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if ok.sum() < min_samples:
        raise ValueError(f"fit needs at least {min_samples} positive samples, got {ok.sum()}")
    lx, ly = np.log2(x[ok]), np.log2(y[ok])
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return FitReport(float(coef[0]), float(coef[1]), float(np.max(np.abs(resid))),
                     int(ok.sum()), [], x[ok], y[ok])
