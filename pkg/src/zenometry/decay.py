"""Dephasing decay exponents.

A pure-dephasing channel multiplies single-qubit coherences by
``exp(-gamma(t))``.  The shape of the exponent fixes the physics: ``gamma``
linear in ``t`` is the memoryless (semigroup) channel, ``gamma`` quadratic in
``t`` is the short-time Zeno regime of a non-Markovian bath, and tabulated
samples cover channels that were measured rather than modelled.  Every model
satisfies ``gamma(0) = 0`` and is non-decreasing in time.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["DecayModel", "Markovian", "Quadratic", "Tabulated"]


def _check_time(t: float) -> float:
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"time must be finite and non-negative, got {t!r}")
    return t


class DecayModel:
    """Decay exponent ``gamma(t)`` together with its instantaneous rate."""

    def gamma_at(self, t: float) -> float:
        """Decay exponent at time ``t >= 0``."""
        raise NotImplementedError

    def dgamma_dt(self, t: float) -> float:
        """Instantaneous dephasing rate ``d(gamma)/dt``."""
        raise NotImplementedError

    def coherence_factor(self, t: float) -> float:
        """``exp(-gamma(t))``: equals 1 at ``t = 0``, non-increasing after."""
        return math.exp(-self.gamma_at(t))


@dataclass(frozen=True)
class Markovian(DecayModel):
    """``gamma(t) = rate * t``, the semigroup (memoryless) family."""

    rate: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.rate) or self.rate < 0.0:
            raise ValueError("rate must be finite and non-negative")

    def gamma_at(self, t: float) -> float:
        return self.rate * _check_time(t)

    def dgamma_dt(self, t: float) -> float:
        _check_time(t)
        return self.rate


@dataclass(frozen=True)
class Quadratic(DecayModel):
    """``gamma(t) = coefficient * t**2``, the short-time Zeno family."""

    coefficient: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.coefficient) or self.coefficient < 0.0:
            raise ValueError("coefficient must be finite and non-negative")

    def gamma_at(self, t: float) -> float:
        t = _check_time(t)
        return self.coefficient * t * t

    def dgamma_dt(self, t: float) -> float:
        return 2.0 * self.coefficient * _check_time(t)


class Tabulated(DecayModel):
    """Piecewise-linear ``gamma(t)`` through measured ``(t, gamma)`` samples.

    A leading ``(0, 0)`` sample is prepended when the table starts later, so
    ``gamma(0) = 0`` always holds.  Queries beyond the last sample are
    rejected rather than extrapolated.  The rate is the segment slope, and at
    an interior knot it is the mean of the two adjacent slopes; the rate is
    only defined strictly inside the sampled range.
    """

    def __init__(self, samples) -> None:
        pts = [(float(t), float(g)) for t, g in samples]
        if pts and pts[0][0] > 0.0:
            pts.insert(0, (0.0, 0.0))
        if len(pts) < 2:
            raise ValueError("need at least two samples to define a segment")
        times = np.array([p[0] for p in pts])
        gammas = np.array([p[1] for p in pts])
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(gammas))):
            raise ValueError("samples must be finite")
        if times[0] != 0.0 or gammas[0] != 0.0:
            raise ValueError("first sample must be (0, 0)")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("sample times must be strictly increasing")
        if np.any(np.diff(gammas) < 0.0):
            raise ValueError("gamma samples must be non-decreasing")
        times.setflags(write=False)
        gammas.setflags(write=False)
        self._times = times
        self._gammas = gammas

    @property
    def samples(self) -> tuple[tuple[float, float], ...]:
        return tuple(zip(self._times.tolist(), self._gammas.tolist()))

    @property
    def t_max(self) -> float:
        return float(self._times[-1])

    def gamma_at(self, t: float) -> float:
        t = _check_time(t)
        if t > self.t_max:
            raise ValueError(
                f"t={t!r} outside the sampled range [0, {self.t_max!r}]"
            )
        return float(np.interp(t, self._times, self._gammas))

    def dgamma_dt(self, t: float) -> float:
        t = _check_time(t)
        if t <= 0.0 or t >= self.t_max:
            raise ValueError(
                "rate is defined strictly inside the sampled range"
            )
        slopes = np.diff(self._gammas) / np.diff(self._times)
        hits = np.nonzero(self._times == t)[0]
        if hits.size:
            k = int(hits[0])
            return float(0.5 * (slopes[k - 1] + slopes[k]))
        seg = int(np.searchsorted(self._times, t)) - 1
        return float(slopes[seg])

    def __repr__(self) -> str:
        return f"Tabulated({list(self.samples)!r})"

    @classmethod
    def from_csv(cls, path) -> "Tabulated":
        """Load samples from a CSV file with exact header ``t,gamma``."""
        rows: list[tuple[float, float]] = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip() for c in header] != ["t", "gamma"]:
                raise ValueError(f"{path}: expected header 't,gamma'")
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 2:
                    raise ValueError(f"{path}:{lineno}: expected two columns")
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    raise ValueError(
                        f"{path}:{lineno}: could not parse {row!r} as numbers"
                    ) from None
        try:
            return cls(rows)
        except ValueError as exc:
            raise ValueError(f"{path}: {exc}") from None
