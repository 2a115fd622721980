"""Closed-form bounds and the bound-vs-measurement comparison.

Explicit constants. The guessing-event exponent composes the martingale
tail exp(-N m^2 / 8K^2) at margin m = delta - 4n/sqrt(K) with the choice
K = (8n/delta)^2, where m = delta/2:

    N (delta/2)^2 / (8 K^2) = N delta^6 / (2^17 n^4).

The final trace-distance bound is sqrt(2^J * exp(-N delta^6 / (2^17 n^4))),
i.e. 2^(J/2) exp(-N delta^6 / (2^18 n^4)).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

GUESSING_EXPONENT_DENOM = 2**17
MAIN_EXPONENT_DENOM = 2**18


def azuma_tail_bound(N: float, delta: float, K: float) -> float:
    """exp(-N delta^2 / 8K^2): tail of a score with per-round range [-K, K]."""
    if N < 0 or delta < 0 or K <= 0:
        raise ValueError("need N >= 0, delta >= 0, K > 0")
    return math.exp(-N * delta**2 / (8 * K**2))


def gk_value_bound(n: int, K: float) -> float:
    if n < 1 or K <= 0:
        raise ValueError("need n >= 1 and K > 0")
    return 4 * n / math.sqrt(K)


def optimal_k(n: int, delta: float) -> float:
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    return (8 * n / delta) ** 2


def guessing_event_bound(N: float, delta: float, n: int) -> float:
    """Bound on P(S = S' and succ and succ') in the mirrored protocol."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    return math.exp(-N * delta**6 / (GUESSING_EXPONENT_DENOM * n**4))


def main_theorem_bound(N: float, delta: float, n: int, J: int) -> float:
    """Bound on the distance of the output from uniform, given success."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    return 2.0 ** (J / 2) * math.exp(-N * delta**6 / (MAIN_EXPONENT_DENOM * n**4))


def trace_distance_max(J: int) -> float:
    """Largest possible ||rho_VE - U_V (x) rho_E||_1 for a J-bit V: 2 (1 - 2^-J)."""
    if J < 0:
        raise ValueError("J must be >= 0")
    return 2.0 * (1.0 - 2.0**-J)


def guessing_event_bound_composed(N: float, delta: float, n: int) -> float:
    """Same quantity, built from its two ingredients."""
    K = optimal_k(n, delta)
    return azuma_tail_bound(N, delta - gk_value_bound(n, K), K)


# ---------------------------------------------------------------------------


@dataclass
class BoundReport:
    name: str
    parameters: dict
    bound: float
    measured: float
    sigma: float = 0.0
    ci_lo: float | None = None
    ci_hi: float | None = None
    trivial_max: float = 1.0
    verdict: str = field(init=False)

    def __post_init__(self):
        if self.bound >= self.trivial_max:
            self.verdict = "vacuous"
        elif self.measured - 3 * self.sigma > self.bound:
            self.verdict = "violated"
        else:
            self.verdict = "holds"

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    CSV_FIELDS = ("name", "parameters", "bound", "measured", "sigma", "ci_lo", "ci_hi", "verdict")

    def csv_row(self) -> list:
        return [
            self.name,
            json.dumps(self.parameters, sort_keys=True),
            repr(self.bound),
            repr(self.measured),
            repr(self.sigma),
            "" if self.ci_lo is None else repr(self.ci_lo),
            "" if self.ci_hi is None else repr(self.ci_hi),
            self.verdict,
        ]


def compare(
    name: str,
    measured: float,
    bound: float,
    parameters: dict | None = None,
    sigma: float = 0.0,
    trivial_max: float = 1.0,
    ci: tuple[float, float] | None = None,
) -> BoundReport:
    """Verdict of a measured quantity against its bound; "violated" only beyond 3 sigma."""
    if not math.isfinite(bound) or not math.isfinite(measured):
        raise ValueError("bound and measurement must be finite")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    lo, hi = ci if ci is not None else (None, None)
    return BoundReport(name, dict(parameters or {}), float(bound), float(measured), float(sigma), lo, hi, trivial_max)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BoundReport.CSV_FIELDS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()
