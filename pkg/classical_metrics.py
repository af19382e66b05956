"""Exhaustive error metrics (ED, MED, NMED, ER) of the adder designs.

Every metric is an exact ``Fraction``. The reference output is (a+b) mod 2^n for
designs without carry-out and a+b for designs with carry-out; cin is always 0.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, List, Optional

import numpy as np

from adder_library import AdderFamily, AdderSpec, eval_array, parse_family

logger = logging.getLogger(__name__)

MAX_METRICS_BITS = 8

Oracle = Callable[[int, int], int]


@dataclass(frozen=True)
class MetricsReport:
    family: AdderFamily
    n: int
    med: Fraction
    nmed: Fraction
    error_rate: Fraction
    s_max: int
    total_inputs: int


def error_distance(s_exact: int, s_approx: int) -> int:
    return abs(s_exact - s_approx)


def exact_reference(spec: AdderSpec, a, b):
    """Exact sum the design is scored against; works on ints and numpy arrays."""
    if spec.has_cout:
        return a + b
    return (a + b) % (1 << spec.n)


def max_reference(spec: AdderSpec) -> int:
    top = (1 << spec.n) - 1
    return 2 * top if spec.has_cout else top


def _operand_grid(n: int):
    values = np.arange(1 << n, dtype=np.int64)
    a, b = np.meshgrid(values, values, indexing="ij")
    return a.ravel(), b.ravel()


def compute_metrics(family, n: int, oracle: Optional[Oracle] = None) -> MetricsReport:
    """Brute-forces the error metrics of ``family`` over all 4^n operand pairs.

    Args:
        family: Adder family or its CLI name.
        n: Bit width, 1..8.
        oracle: Optional replacement for the design's classical semantics, called as
            oracle(a, b). Defaults to the vectorised eval_classical.

    Raises:
        ValueError: If n is outside 1..8 or the family is unknown.
    """
    family = parse_family(family)
    if not 1 <= n <= MAX_METRICS_BITS:
        raise ValueError(f"Metrics sweep supports 1 <= n <= {MAX_METRICS_BITS}, got {n}")
    spec = AdderSpec(family, n)

    a, b = _operand_grid(n)
    if oracle is None:
        approx = eval_array(spec, a, b)
    else:
        approx = np.fromiter((oracle(int(x), int(y)) for x, y in zip(a, b)), dtype=np.int64, count=a.size)

    distances = np.abs(exact_reference(spec, a, b) - approx)
    total = int(a.size)
    s_max = max_reference(spec)
    med = Fraction(int(distances.sum()), total)
    report = MetricsReport(
        family=family,
        n=n,
        med=med,
        nmed=med / s_max,
        error_rate=Fraction(int(np.count_nonzero(distances)), total),
        s_max=s_max,
        total_inputs=total,
    )
    logger.debug(f"[Metrics] {spec.label}: NMED={float(report.nmed):.4f} ER={float(report.error_rate):.4f}")
    return report


def sweep(families: Iterable, n_range: Iterable[int], workers: Optional[int] = None) -> List[MetricsReport]:
    """One report per (family, n), ordered family-major as given."""
    cells = [(parse_family(f), int(n)) for f in families for n in n_range]
    if any(n > MAX_METRICS_BITS for _, n in cells):
        raise ValueError(f"Metrics sweep supports n <= {MAX_METRICS_BITS}")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        reports = list(executor.map(lambda cell: compute_metrics(*cell), cells))
    logger.info(f"[Metrics] Swept {len(reports)} cells")
    return reports
