"""Acceptance rule for fitted resonances."""
from __future__ import annotations

import math
from typing import NamedTuple

from ..data import FitResult

MAX_STD_ERROR = 1e3
QUALITY_KEYS = ("q_i", "q_c")


class QCVerdict(NamedTuple):
    accepted: bool
    reason: str


def qc_filter(result: FitResult, max_std_error: float = MAX_STD_ERROR) -> QCVerdict:
    """Reject unconverged fits, std_errors above ``max_std_error`` or non-positive Q."""
    if not result.converged:
        return QCVerdict(False, "fit did not converge")
    for key in QUALITY_KEYS:
        value = result.params.get(key)
        if value is not None and not (value > 0 and math.isfinite(value)):
            return QCVerdict(False, f"{key} = {value:g} is not a positive finite number")
    for key, err in result.std_errors.items():
        if not math.isfinite(err) or err > max_std_error:
            return QCVerdict(False, f"std_error of {key} = {err:g} exceeds {max_std_error:g}")
    return QCVerdict(True, "accepted")
