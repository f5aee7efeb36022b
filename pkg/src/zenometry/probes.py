"""Probe states, dephasing evolution, and parity measurement.

Two probe strategies over N qubits: a GHZ state read out through the global
parity ``X^(x)N``, whose fringe oscillates at ``N * omega * t`` and decays as
``exp(-N gamma(t))``, and independent ``|+>`` qubits read out one at a time,
oscillating at ``omega * t`` and decaying as ``exp(-gamma(t))``.  Fusion
imperfections are modelled by a white-noise GHZ state whose parity visibility
is ``v**(N/2)``.

Besides the closed-form fringe, a dense density-matrix path evolves states
through the same channel with explicit Kraus operators; it shares no algebra
with the analytic expressions and exists to cross-check them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .decay import DecayModel
from .fringes import FringeDataset, estimates_from_counts
from .rng import FRINGE_SETTINGS, substream

__all__ = [
    "ORACLE_MAX_QUBITS",
    "CapacityError",
    "ProbeSpec",
    "WhiteNoiseGhzParams",
    "DensityMatrix",
    "ghz_density_matrix",
    "evolve_oracle",
    "parity_expectation_dm",
    "parity_expectation_analytic",
    "sample_fringe",
    "synthetic_fringe",
    "witness_expectation",
    "witness_from_settings",
    "fidelity_bound",
]

# Dense evolution is exact but exponential in N; keep it to 4096x4096.
ORACLE_MAX_QUBITS = 12

_STRATEGIES = ("ghz", "product")


class CapacityError(ValueError):
    """Raised when a dense density-matrix exceeds the supported qubit count."""


@dataclass(frozen=True)
class ProbeSpec:
    """Probe strategy, qubit count, and initial fringe visibility."""

    strategy: str
    n_qubits: int
    visibility: float = 1.0

    def __post_init__(self) -> None:
        if self.strategy not in _STRATEGIES:
            raise ValueError(f"strategy must be one of {_STRATEGIES}")
        if int(self.n_qubits) < 1:
            raise ValueError("n_qubits must be >= 1")
        object.__setattr__(self, "n_qubits", int(self.n_qubits))
        v = float(self.visibility)
        if not 0.0 <= v <= 1.0:
            raise ValueError("visibility must lie in [0, 1]")
        object.__setattr__(self, "visibility", v)

    @property
    def fringe_frequency(self) -> int:
        """N for the GHZ parity fringe, 1 for the per-qubit product fringe."""
        return self.n_qubits if self.strategy == "ghz" else 1


@dataclass(frozen=True)
class WhiteNoiseGhzParams:
    """GHZ preparation diluted by white noise from imperfect fusion."""

    n_qubits: int
    fusion_visibility: float

    def __post_init__(self) -> None:
        if int(self.n_qubits) < 1:
            raise ValueError("n_qubits must be >= 1")
        object.__setattr__(self, "n_qubits", int(self.n_qubits))
        v = float(self.fusion_visibility)
        if not 0.0 <= v <= 1.0:
            raise ValueError("fusion visibility must lie in [0, 1]")
        object.__setattr__(self, "fusion_visibility", v)

    @property
    def parity_visibility(self) -> float:
        """Visibility of the N-qubit parity fringe: ``v**(N/2)``."""
        return self.fusion_visibility ** (self.n_qubits / 2.0)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated dense N-qubit density matrix (read-only storage).

    The constructor checks shape, unit trace, and Hermiticity to 1e-12.
    Positivity is not verified here because it needs a full eigendecomposition;
    call :meth:`min_eigenvalue` when that check matters.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex).copy()
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        dim = m.shape[0]
        n = dim.bit_length() - 1
        if dim < 2 or 2**n != dim:
            raise ValueError("dimension must be a power of two, at least 2")
        if n > ORACLE_MAX_QUBITS:
            raise CapacityError(
                f"{n} qubits exceeds the dense-matrix capacity of "
                f"{ORACLE_MAX_QUBITS}"
            )
        if abs(np.trace(m) - 1.0) > 1e-12:
            raise ValueError("trace must equal 1 within 1e-12")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("matrix must be Hermitian within 1e-12")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def to_csv(self, path) -> None:
        """Flat dump of every entry as ``row,col,re,im`` (debugging aid)."""
        lines = ["row,col,re,im"]
        for i in range(self.dim):
            for j in range(self.dim):
                z = self.matrix[i, j]
                lines.append(f"{i},{j},{z.real!r},{z.imag!r}")
        Path(path).write_text("\n".join(lines) + "\n")


def ghz_density_matrix(params: WhiteNoiseGhzParams) -> DensityMatrix:
    """White-noise GHZ state ``V |GHZ><GHZ| + (1 - V) I / 2**N``.

    The mixing weight is the parity visibility ``V = v**(N/2)``, so the
    parity fringe of the returned state has amplitude exactly ``V``.
    """
    n = params.n_qubits
    if n > ORACLE_MAX_QUBITS:
        raise CapacityError(
            f"{n} qubits exceeds the dense-matrix capacity of {ORACLE_MAX_QUBITS}"
        )
    dim = 2**n
    v = params.parity_visibility
    rho = np.zeros((dim, dim), dtype=complex)
    np.fill_diagonal(rho, (1.0 - v) / dim)
    rho[0, 0] += 0.5 * v
    rho[-1, -1] += 0.5 * v
    rho[0, -1] += 0.5 * v
    rho[-1, 0] += 0.5 * v
    return DensityMatrix(rho)


def _apply_single_qubit(rho: np.ndarray, ops, qubit: int, n: int) -> np.ndarray:
    """Apply ``sum_k op_k rho op_k^dagger`` acting on one qubit."""
    dim = rho.shape[0]
    left = 2**qubit
    right = dim // (2 * left)
    t = rho.reshape(left, 2, right, left, 2, right)
    out = np.zeros_like(t)
    for op in ops:
        out += np.einsum("xa,iajkbl,yb->ixjkyl", op, t, op.conj())
    return out.reshape(dim, dim)


def evolve_oracle(dm: DensityMatrix, model: DecayModel, omega: float,
                  t: float) -> DensityMatrix:
    """Evolve a state by phase accumulation plus independent dephasing.

    Each qubit picks up the phase ``diag(exp(-i omega t / 2),
    exp(+i omega t / 2))`` and then passes through the dephasing channel with
    Kraus operators ``sqrt((1 + f)/2) I`` and ``sqrt((1 - f)/2) Z`` where
    ``f = exp(-gamma(t))``.  Deliberately element-wise and independent of the
    closed-form fringe expressions.
    """
    omega = float(omega)
    if not math.isfinite(omega):
        raise ValueError("omega must be finite")
    f = model.coherence_factor(t)
    half = 0.5 * omega * float(t)
    phase = np.array([[np.exp(-1j * half), 0.0], [0.0, np.exp(1j * half)]])
    k0 = math.sqrt((1.0 + f) / 2.0) * np.eye(2)
    k1 = math.sqrt((1.0 - f) / 2.0) * np.array([[1.0, 0.0], [0.0, -1.0]])
    n = dm.n_qubits
    rho = np.array(dm.matrix, dtype=complex)
    for q in range(n):
        rho = _apply_single_qubit(rho, (phase,), q, n)
    for q in range(n):
        rho = _apply_single_qubit(rho, (k0, k1), q, n)
    return DensityMatrix(rho)


def parity_expectation_dm(dm: DensityMatrix) -> float:
    """``Tr(rho X^(x)N)``: the sum of the anti-diagonal of ``rho``."""
    total = complex(np.trace(np.fliplr(dm.matrix)))
    if abs(total.imag) > 1e-12:
        raise ValueError("parity expectation came out complex")
    return total.real


def parity_expectation_analytic(spec: ProbeSpec, model: DecayModel,
                                omega: float, t: float) -> float:
    """Closed-form fringe ``V0 exp(-m gamma(t)) cos(m omega t)``.

    ``m`` is the fringe frequency: N for a GHZ probe (all qubits dephase and
    accumulate phase together), 1 for each qubit of a product probe.
    """
    omega = float(omega)
    if not math.isfinite(omega):
        raise ValueError("omega must be finite")
    m = spec.fringe_frequency
    gamma = model.gamma_at(t)
    return spec.visibility * math.exp(-m * gamma) * math.cos(m * omega * float(t))


def _fringe_probabilities(spec: ProbeSpec, model: DecayModel, t: float,
                          theta) -> tuple[np.ndarray, np.ndarray]:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size < 1:
        raise ValueError("theta grid must be a non-empty 1-D array")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta values must be finite")
    m = spec.fringe_frequency
    amplitude = spec.visibility * math.exp(-m * model.gamma_at(t))
    expectation = amplitude * np.cos(m * theta)
    return theta, expectation


def sample_fringe(spec: ProbeSpec, model: DecayModel, t: float, theta_grid,
                  shots_per_setting: int, seed: int) -> FringeDataset:
    """Simulate one fringe scan with Poisson/binomial counting noise.

    Setting ``j`` gets its own counter-based stream ``(seed, j)``: first the
    recorded event number ``M_j ~ Poisson(shots_per_setting)``, then
    ``n+ ~ Binomial(M_j, (1 + <P>(theta_j)) / 2)``.  A zero-event draw leaves
    the setting missing.  Fully deterministic given the seed, regardless of
    evaluation order.
    """
    shots = int(shots_per_setting)
    if shots < 1:
        raise ValueError("shots_per_setting must be >= 1")
    if seed is None:
        raise ValueError("sampling requires a seed")
    theta, expectation = _fringe_probabilities(spec, model, t, theta_grid)
    p_plus = np.clip((1.0 + expectation) / 2.0, 0.0, 1.0)
    n_plus = np.zeros(theta.size, dtype=np.int64)
    n_total = np.zeros(theta.size, dtype=np.int64)
    for j in range(theta.size):
        gen = substream(seed, FRINGE_SETTINGS, j)
        events = int(gen.poisson(shots))
        n_total[j] = events
        if events:
            n_plus[j] = int(gen.binomial(events, p_plus[j]))
    estimate, stderr = estimates_from_counts(n_plus, n_total)
    return FringeDataset(
        strategy=spec.strategy,
        n_qubits=spec.n_qubits,
        interrogation_time=float(t),
        visibility=spec.visibility,
        theta=theta,
        n_plus=n_plus,
        n_total=n_total,
        estimate=estimate,
        stderr=stderr,
        seed=int(seed),
    )


def synthetic_fringe(spec: ProbeSpec, model: DecayModel, t: float,
                     theta_grid) -> FringeDataset:
    """Noiseless fringe (the infinite-shot limit); stderr is zero."""
    theta, expectation = _fringe_probabilities(spec, model, t, theta_grid)
    zeros = np.zeros(theta.size, dtype=np.int64)
    return FringeDataset(
        strategy=spec.strategy,
        n_qubits=spec.n_qubits,
        interrogation_time=float(t),
        visibility=spec.visibility,
        theta=theta,
        n_plus=zeros,
        n_total=zeros,
        estimate=expectation,
        stderr=np.zeros(theta.size),
    )


def witness_expectation(dm: DensityMatrix) -> float:
    """GHZ stabilizer witness ``3 - (<X^(x)N> + 1) - 2 (p_0..0 + p_1..1)``.

    Negative values certify GHZ-class entanglement.  The result lies in
    [-1, 3]; it needs two measurement settings, global X parity and the
    computational-basis corner populations.
    """
    if dm.n_qubits < 2:
        raise ValueError("the witness is undefined for a single qubit")
    parity = parity_expectation_dm(dm)
    p0 = dm.matrix[0, 0].real
    p1 = dm.matrix[-1, -1].real
    return 3.0 - (parity + 1.0) - 2.0 * (p0 + p1)


def witness_from_settings(x_expectation: float, p_all_zero: float,
                          p_all_one: float) -> float:
    """Witness value from the two measured settings directly."""
    x = float(x_expectation)
    p0 = float(p_all_zero)
    p1 = float(p_all_one)
    if not math.isfinite(x) or abs(x) > 1.0:
        raise ValueError("parity expectation must lie in [-1, 1]")
    for p in (p0, p1):
        if not math.isfinite(p) or not 0.0 <= p <= 1.0:
            raise ValueError("populations must lie in [0, 1]")
    if p0 + p1 > 1.0 + 1e-12:
        raise ValueError("corner populations cannot exceed 1 in total")
    return 3.0 - (x + 1.0) - 2.0 * (p0 + p1)


def fidelity_bound(witness_value: float) -> float:
    """Lower bound ``(1 - <W>) / 2`` on the GHZ fidelity, clipped to [0, 1]."""
    w = float(witness_value)
    if not math.isfinite(w) or w < -1.0 or w > 3.0:
        raise ValueError("witness value must lie in [-1, 3]")
    return min(max((1.0 - w) / 2.0, 0.0), 1.0)
