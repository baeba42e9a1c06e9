"""Small statistical helpers used across test modules."""

import math


def binomial_band(n: int, p: float, z: float = 4.0) -> tuple[float, float]:
    """Return (lo, hi) bounds on a count of successes at z sigmas."""
    mu = n * p
    sd = math.sqrt(n * p * (1.0 - p))
    return mu - z * sd, mu + z * sd


def assert_binomial(count: int, n: int, p: float, z: float = 4.0, label: str = "") -> None:
    lo, hi = binomial_band(n, p, z)
    assert lo <= count <= hi, (
        f"{label or 'count'}={count} outside {z} sigma band [{lo:.1f}, {hi:.1f}] "
        f"for n={n}, p={p}"
    )


def assert_pmf_close(counts: dict, n: int, pmf: dict, z: float = 4.0, label: str = "") -> None:
    """Check empirical counts against an exact pmf, every support point at z sigmas.

    Counts for outcomes outside the pmf support must be zero.
    """
    for outcome, c in counts.items():
        if outcome not in pmf:
            assert c == 0, f"{label}: impossible outcome {outcome} seen {c} times"
    for outcome, p in pmf.items():
        assert_binomial(counts.get(outcome, 0), n, p, z, f"{label}[{outcome}]")
