"""
Machine-readable reports for hypothesis checks and reconstructions.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd


@dataclass
class ConditionReport:
    """
    Outcome of one numerical hypothesis check.

    passed is margin > threshold. Strict conditions use threshold 0, the
    strict-convexity check uses +1e−6, and the non-strict inequality of
    G²(r²/2) ≥ |ξ|² uses −1e−8.

    Attributes:
        condition_id: Tag of the checked condition
        margin: Worst-case signed slack
        threshold: Pass threshold for the margin
        witnesses: Worst samples as dicts (x, xi, t, value)
        samples: Number of samples evaluated
        indeterminate: No admissible samples were found
        related: Sub-checks reported alongside
        extras: Additional scalars and arrays
    """

    condition_id: str
    margin: float
    threshold: float = 0.0
    witnesses: list = field(default_factory=list)
    samples: int = 0
    indeterminate: bool = False
    related: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.indeterminate or np.isnan(self.margin):
            return False
        return bool(self.margin > self.threshold)

    @classmethod
    def from_samples(
        cls,
        condition_id: str,
        values: np.ndarray,
        x: Optional[np.ndarray] = None,
        xi: Optional[np.ndarray] = None,
        t: Optional[np.ndarray] = None,
        threshold: float = 0.0,
        n_witnesses: int = 3,
    ) -> "ConditionReport":
        """Report whose margin is the minimum of sampled slack values."""
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            return cls(condition_id, np.nan, threshold, indeterminate=True)
        order = np.argsort(values, kind="stable")[:n_witnesses]
        witnesses = []
        for k in order:
            w = {"value": float(values[k])}
            if x is not None:
                w["x"] = tuple(float(v) for v in np.asarray(x)[k])
            if xi is not None:
                w["xi"] = tuple(float(v) for v in np.asarray(xi)[k])
            if t is not None:
                w["t"] = float(np.asarray(t)[k])
            witnesses.append(w)
        return cls(condition_id, float(values[order[0]]), threshold, witnesses, int(values.size))

    def worst_witness(self) -> str:
        if not self.witnesses:
            return ""
        w = self.witnesses[0]
        parts = []
        for key in ("x", "xi", "t"):
            if key in w:
                v = w[key]
                parts.append(f"{key}=" + (f"({v[0]:.6g} {v[1]:.6g})" if isinstance(v, tuple) else f"{v:.6g}"))
        parts.append(f"value={w['value']:.6g}")
        return " ".join(parts)

    def to_row(self) -> dict:
        return {
            "id": self.condition_id,
            "passed": self.passed,
            "margin": self.margin,
            "threshold": self.threshold,
            "samples": self.samples,
            "indeterminate": self.indeterminate,
            "worst_witness": self.worst_witness(),
        }

    def flatten(self) -> list["ConditionReport"]:
        """This report followed by all related reports, depth first."""
        out = [self]
        for sub in self.related:
            out.extend(sub.flatten())
        return out

    def to_text(self) -> str:
        status = "INDETERMINATE" if self.indeterminate else ("PASS" if self.passed else "FAIL")
        lines = [
            f"[{self.condition_id}] {status}",
            f"  margin    = {self.margin:.17g}",
            f"  threshold = {self.threshold:.3g}",
            f"  samples   = {self.samples}",
        ]
        for w in self.witnesses:
            lines.append(f"  witness   : {w}")
        for key, value in self.extras.items():
            if np.isscalar(value):
                lines.append(f"  {key} = {value}")
        return "\n".join(lines)


def conditions_frame(reports: list[ConditionReport]) -> pd.DataFrame:
    """One row per condition, related checks included."""
    rows = [r.to_row() for rep in reports for r in rep.flatten()]
    return pd.DataFrame(rows, columns=["id", "passed", "margin", "threshold", "samples", "indeterminate", "worst_witness"])


@dataclass
class ReconstructionReport:
    """
    Per-iteration record of an inverse solve.

    Attributes:
        iterations: Completed iterations
        rel_error_history: ‖F_k − F*‖/‖F*‖ on K when the truth is known
        residual_history: Boundary-data misfit per iteration
        condition_reports: Preflight checks
        stability_ratio: ‖F‖_L²(K) / ‖w_tt‖_L²([0,T]×∂Ω)
        stop_reason: Why the iteration ended
        best_iteration: 1-based index of the returned iterate, when not the last
    """

    iterations: int = 0
    rel_error_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    condition_reports: list = field(default_factory=list)
    stability_ratio: float = np.nan
    stop_reason: str = ""
    best_iteration: Optional[int] = None
    extras: dict = field(default_factory=dict)

    def record(self, residual: float, rel_error: Optional[float] = None) -> None:
        self.iterations += 1
        self.residual_history.append(float(residual))
        if rel_error is not None:
            self.rel_error_history.append(float(rel_error))

    @property
    def final_rel_error(self) -> float:
        """Relative error of the returned iterate."""
        if not self.rel_error_history:
            return np.nan
        if self.best_iteration and self.best_iteration <= len(self.rel_error_history):
            return self.rel_error_history[self.best_iteration - 1]
        return self.rel_error_history[-1]

    def history_frame(self) -> pd.DataFrame:
        n = self.iterations
        rel = self.rel_error_history + [np.nan] * (n - len(self.rel_error_history))
        return pd.DataFrame(
            {"iteration": np.arange(1, n + 1), "residual": self.residual_history, "rel_error": rel}
        )
