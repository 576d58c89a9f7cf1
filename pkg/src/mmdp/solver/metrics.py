"""Benchmark metrics for samplers."""

from __future__ import annotations

import math
import warnings


def tts(p: float, p_opt: float, t_c: float) -> float:
    """Time to reach the optimum with cumulative probability ``p``.

    ``t_c * log(1 - p) / log(1 - p_opt)``; undefined for p_opt in {0, 1}.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"target probability {p} must lie in (0, 1)")
    if not 0.0 < p_opt < 1.0:
        raise ValueError(f"p_opt = {p_opt} leaves TTS undefined")
    if p == p_opt:
        return t_c
    return t_c * math.log1p(-p) / math.log1p(-p_opt)


def residual_energy(e_min: float, e_opt: float) -> float:
    """Relative gap (e_min - e_opt) / e_opt."""
    if e_opt == 0:
        raise ValueError("residual energy is undefined for a zero ground energy")
    if e_opt < 0:
        warnings.warn("negative ground energy: residual energy sign is inverted", stacklevel=2)
    return (e_min - e_opt) / e_opt
