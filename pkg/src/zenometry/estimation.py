"""Frequency estimation from parity fringes.

The figure of merit is the per-total-time variance ``d2omega_t``
(``Delta^2 omega * T``).  Error propagation through one fringe point gives

    d2omega_t = t * (1 - <P>**2) / (R * |d<P>/d omega|**2)

evaluated at the working point ``theta_w = pi / (2 m)`` (first odd quarter
fringe), where ``m`` is the fringe frequency and ``R`` counts independent
repetitions folded into one recorded fringe (1 for a GHZ probe, N for the N
single-qubit fringes of a product probe).  The slope ``d<P>/d omega`` is
obtained either from a cosine fit or from a five-point finite-difference
stencil on the raw estimates; both routes are kept because they fail
differently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .decay import DecayModel, Markovian, Quadratic, Tabulated
from .fringes import FringeDataset, estimates_from_counts
from .probes import ProbeSpec
from .rng import MONTE_CARLO_TRIALS, substream

__all__ = [
    "FitError",
    "FitResult",
    "SensitivityResult",
    "MonteCarloErrors",
    "SENSITIVITY_CSV_HEADER",
    "working_point",
    "optimal_time",
    "optimal_time_for_probe",
    "sensitivity_closed_form",
    "closed_form_result",
    "fit_fringe",
    "stencil_derivative",
    "derivative_wrt_omega",
    "sensitivity_from_fringe",
    "monte_carlo_errorbar",
    "apply_monte_carlo_errors",
    "noise_subtract",
]

_MAX_ITERATIONS = 100
_STEP_TOLERANCE = 1e-10
_TIME_TOLERANCE = 1e-12
_DEGENERATE_SLOPE = 1e-9


class FitError(RuntimeError):
    """Fit failed to converge; carries the last iterate for diagnosis."""

    def __init__(self, message: str, last_amplitude: float | None = None,
                 last_phase: float | None = None, iterations: int = 0) -> None:
        super().__init__(message)
        self.last_amplitude = last_amplitude
        self.last_phase = last_phase
        self.iterations = iterations


def working_point(fringe_frequency: int) -> float:
    """First odd quarter-fringe phase ``pi / (2 m)``: maximal slope."""
    m = int(fringe_frequency)
    if m < 1:
        raise ValueError("fringe frequency must be >= 1")
    return math.pi / (2.0 * m)


def optimal_time(model: DecayModel, n: int) -> float:
    """Interrogation time solving ``2 N t dgamma/dt = 1``.

    Closed forms: ``1 / (2 N rate)`` for the linear family and
    ``sqrt(1 / (4 N c))`` for the quadratic one.  Tabulated models are solved
    by bisection on the sampled range to an interval of 1e-12; if the rate
    never grows large enough the root is not bracketed and that is an error.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(model, Markovian):
        if model.rate <= 0.0:
            raise ValueError("a zero-rate channel has no finite optimum")
        return 1.0 / (2.0 * n * model.rate)
    if isinstance(model, Quadratic):
        if model.coefficient <= 0.0:
            raise ValueError("a zero-coefficient channel has no finite optimum")
        return math.sqrt(1.0 / (4.0 * n * model.coefficient))
    if isinstance(model, Tabulated):
        return _optimal_time_tabulated(model, n)
    raise TypeError(f"unsupported decay model {type(model).__name__}")


def _optimal_time_tabulated(model: Tabulated, n: int) -> float:
    samples = model.samples
    t_hi = model.t_max
    # One-sided limit at the right edge uses the last segment's slope.
    (t0, g0), (t1, g1) = samples[-2], samples[-1]
    edge_rate = (g1 - g0) / (t1 - t0)
    if 2.0 * n * t_hi * edge_rate - 1.0 < 0.0:
        raise ValueError(
            "optimal time not bracketed by the sampled range; extend the table"
        )
    lo, hi = 0.0, t_hi  # g(0) = -1 analytically, g(t_hi) >= 0 from the edge
    while hi - lo > _TIME_TOLERANCE:
        mid = 0.5 * (lo + hi)
        if 2.0 * n * mid * model.dgamma_dt(mid) - 1.0 < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def optimal_time_for_probe(spec: ProbeSpec, model: DecayModel) -> float:
    """Optimum for the probe as operated: N joint qubits or one at a time."""
    return optimal_time(model, spec.n_qubits if spec.strategy == "ghz" else 1)


def sensitivity_closed_form(spec: ProbeSpec, model: DecayModel, t: float) -> float:
    """Ideal-operating-point ``d2omega_t`` for a fringe of amplitude
    ``V0 exp(-m gamma(t))`` read at its steepest phase.

    GHZ: ``1 / (N**2 t V0**2 exp(-2 N gamma(t)))``;
    product: ``1 / (N t V0**2 exp(-2 gamma(t)))``.
    """
    t = float(t)
    if t <= 0.0:
        raise ValueError("interrogation time must be positive")
    n = spec.n_qubits
    gamma = model.gamma_at(t)
    v0 = spec.visibility
    if v0 <= 0.0:
        raise ValueError("visibility must be positive for a finite variance")
    if spec.strategy == "ghz":
        return 1.0 / (n * n * t * v0 * v0 * math.exp(-2.0 * n * gamma))
    return 1.0 / (n * t * v0 * v0 * math.exp(-2.0 * gamma))


SENSITIVITY_CSV_HEADER = ("N", "strategy", "t_opt", "d2omegaT", "fisher",
                          "stderr_fisher")


@dataclass(frozen=True)
class SensitivityResult:
    """One evaluated operating point of one probe."""

    strategy: str
    n_qubits: int
    time: float
    amplitude: float | None
    expectation_at_working_point: float
    derivative_omega: float
    d2omega_t: float
    stderr_amplitude: float | None = None
    stderr_derivative: float | None = None
    stderr_d2omega_t: float | None = None
    stderr_fisher: float | None = None

    def __post_init__(self) -> None:
        if self.d2omega_t <= 0.0 or not math.isfinite(self.d2omega_t):
            raise ValueError("d2omega_t must be finite and positive")

    @property
    def fisher_per_photon(self) -> float:
        """Information per probe photon, ``1 / (N * d2omega_t)``."""
        return 1.0 / (self.n_qubits * self.d2omega_t)

    def to_csv_row(self) -> tuple:
        return (self.n_qubits, self.strategy, self.time, self.d2omega_t,
                self.fisher_per_photon, self.stderr_fisher)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "n_qubits": self.n_qubits,
            "time": self.time,
            "amplitude": self.amplitude,
            "expectation_at_working_point": self.expectation_at_working_point,
            "derivative_omega": self.derivative_omega,
            "d2omega_t": self.d2omega_t,
            "fisher_per_photon": self.fisher_per_photon,
            "stderr_amplitude": self.stderr_amplitude,
            "stderr_derivative": self.stderr_derivative,
            "stderr_d2omega_t": self.stderr_d2omega_t,
            "stderr_fisher": self.stderr_fisher,
        }


def closed_form_result(spec: ProbeSpec, model: DecayModel, t: float) -> SensitivityResult:
    """Analytic working-point evaluation packaged like the fringe pipeline."""
    d2 = sensitivity_closed_form(spec, model, t)
    m = spec.fringe_frequency
    amplitude = spec.visibility * math.exp(-m * model.gamma_at(t))
    return SensitivityResult(
        strategy=spec.strategy,
        n_qubits=spec.n_qubits,
        time=float(t),
        amplitude=amplitude,
        expectation_at_working_point=0.0,
        derivative_omega=-m * amplitude * float(t),
        d2omega_t=d2,
    )


@dataclass(frozen=True)
class FitResult:
    """Weighted cosine fit ``A cos(m theta + phi)`` to one fringe."""

    amplitude: float
    phase: float
    covariance: np.ndarray
    residuals: np.ndarray
    iterations: int
    weighted: bool

    @property
    def amplitude_stderr(self) -> float:
        return float(math.sqrt(max(self.covariance[0, 0], 0.0)))

    @property
    def phase_stderr(self) -> float:
        return float(math.sqrt(max(self.covariance[1, 1], 0.0)))


def fit_fringe(data: FringeDataset) -> FitResult:
    """Fit ``A cos(m theta + phi)`` to the usable points of a fringe.

    Inverse-variance weights when every usable point carries a positive
    stderr, unweighted otherwise.  Gauss-Newton with the analytic Jacobian,
    started from the largest |estimate| and the projection phase; stops when
    the step norm drops below 1e-10, and fails (with the last iterate
    attached) after 100 iterations.  The result is canonicalized to
    ``A >= 0`` and ``phi`` in (-pi, pi]; the covariance is evaluated at the
    canonical parameters, scaled by the residual variance in the unweighted
    case.
    """
    mask = data.usable
    theta = data.theta[mask]
    y = data.estimate[mask]
    se = data.stderr[mask]
    if theta.size < 5:
        raise ValueError("need at least 5 usable points to fit")
    m = data.fringe_frequency
    if theta[-1] - theta[0] < math.pi / m - 1e-12:
        raise ValueError("usable points must span at least half a period")
    weighted = bool(np.all(se > 0.0))
    w = 1.0 / se**2 if weighted else np.ones(theta.size)

    amplitude = float(np.max(np.abs(y)))
    if amplitude == 0.0:
        amplitude = 1e-6
    phase = math.atan2(-float(np.sum(y * np.sin(m * theta))),
                       float(np.sum(y * np.cos(m * theta))))

    converged = False
    iterations = 0
    for iterations in range(1, _MAX_ITERATIONS + 1):
        arg = m * theta + phase
        model_vals = amplitude * np.cos(arg)
        r = y - model_vals
        jac = np.column_stack((np.cos(arg), -amplitude * np.sin(arg)))
        jw = jac * w[:, None]
        hess = jac.T @ jw
        grad = jw.T @ r
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            raise FitError("normal equations are singular", amplitude, phase,
                           iterations) from None
        amplitude += float(step[0])
        phase += float(step[1])
        if float(np.linalg.norm(step)) < _STEP_TOLERANCE:
            converged = True
            break
    if not converged:
        raise FitError(
            f"no convergence after {_MAX_ITERATIONS} iterations",
            amplitude, phase, iterations,
        )

    if amplitude < 0.0:
        amplitude = -amplitude
        phase += math.pi
    phase = math.remainder(phase, 2.0 * math.pi)
    if phase <= -math.pi:
        phase = math.pi

    arg = m * theta + phase
    fitted = amplitude * np.cos(arg)
    residuals = y - fitted
    jac = np.column_stack((np.cos(arg), -amplitude * np.sin(arg)))
    jw = jac * w[:, None]
    hess = jac.T @ jw
    try:
        covariance = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        raise FitError("covariance is singular at the solution", amplitude,
                       phase, iterations) from None
    if not weighted:
        dof = theta.size - 2
        covariance = covariance * (float(np.sum(residuals**2)) / dof)
    covariance.setflags(write=False)
    residuals.setflags(write=False)
    return FitResult(
        amplitude=amplitude,
        phase=phase,
        covariance=covariance,
        residuals=residuals,
        iterations=iterations,
        weighted=weighted,
    )


def stencil_derivative(samples, h: float) -> float:
    """Five-point central first derivative at the middle sample.

    ``samples`` is ordered ``[f(x-2h), f(x-h), f(x), f(x+h), f(x+2h)]``; the
    middle value carries zero weight but is required to be present and
    finite.  Exact for polynomials through degree 4; the truncation error is
    ``h**4 f^(5)(xi) / 30``.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.shape != (5,):
        raise ValueError("need exactly five samples")
    if not np.all(np.isfinite(arr)):
        raise ValueError("stencil samples must be finite")
    h = float(h)
    if not math.isfinite(h) or h <= 0.0:
        raise ValueError("step must be finite and positive")
    return float((-arr[4] + 8.0 * arr[3] - 8.0 * arr[1] + arr[0]) / (12.0 * h))


def derivative_wrt_omega(dtheta_derivative: float, t: float) -> float:
    """Chain rule from phase slope to frequency slope: multiply by ``t``."""
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise ValueError("time must be finite and non-negative")
    return float(dtheta_derivative) * t


def _stencil_at_working_point(data: FringeDataset, theta_w: float) -> tuple[float, float]:
    """Expectation and d/dtheta at ``theta_w`` from the raw estimates."""
    theta = data.theta
    idx = int(np.argmin(np.abs(theta - theta_w)))
    if abs(theta[idx] - theta_w) > 1e-9:
        raise ValueError("the grid does not contain the working point")
    if idx < 2 or idx > theta.size - 3:
        raise ValueError("working point too close to the grid edge for a stencil")
    h = float(theta[idx + 1] - theta[idx])
    offsets = theta[idx - 2: idx + 3] - theta[idx]
    expected = h * np.arange(-2, 3)
    if np.max(np.abs(offsets - expected)) > 1e-9:
        raise ValueError("the grid is not uniform around the working point")
    window = data.estimate[idx - 2: idx + 3]
    if not np.all(np.isfinite(window)):
        raise ValueError("missing estimates inside the stencil window")
    return float(data.estimate[idx]), stencil_derivative(window, h)


def sensitivity_from_fringe(data: FringeDataset, t: float,
                            method: str = "fit") -> SensitivityResult:
    """Evaluate ``d2omega_t`` from one recorded fringe.

    ``method="fit"`` reads the expectation and slope off the fitted cosine;
    ``method="stencil"`` differentiates the raw estimates with the five-point
    stencil centred on the working point (which must then sit on the grid
    with two uniform neighbours on each side).  A slope smaller than 1e-9 in
    magnitude is degenerate and rejected.
    """
    t = float(t)
    if not math.isfinite(t) or t <= 0.0:
        raise ValueError("interrogation time must be positive")
    m = data.fringe_frequency
    theta_w = working_point(m)
    if not (data.theta[0] - 1e-12 <= theta_w <= data.theta[-1] + 1e-12):
        raise ValueError("the dataset does not cover the working point")
    amplitude: float | None
    if method == "fit":
        fit = fit_fringe(data)
        arg = m * theta_w + fit.phase
        expectation = fit.amplitude * math.cos(arg)
        dtheta = -m * fit.amplitude * math.sin(arg)
        amplitude = fit.amplitude
    elif method == "stencil":
        expectation, dtheta = _stencil_at_working_point(data, theta_w)
        amplitude = None
    else:
        raise ValueError("method must be 'fit' or 'stencil'")
    domega = derivative_wrt_omega(dtheta, t)
    if abs(domega) < _DEGENERATE_SLOPE:
        raise ValueError("slope at the working point is degenerate")
    variance = 1.0 - expectation * expectation
    if variance <= 0.0:
        raise ValueError("projection-noise variance vanished at the working point")
    repetitions = 1 if data.strategy == "ghz" else data.n_qubits
    d2 = t * variance / (repetitions * domega * domega)
    return SensitivityResult(
        strategy=data.strategy,
        n_qubits=data.n_qubits,
        time=t,
        amplitude=amplitude,
        expectation_at_working_point=expectation,
        derivative_omega=domega,
        d2omega_t=d2,
    )


@dataclass(frozen=True)
class MonteCarloErrors:
    """Spread of pipeline outputs over count-resampled replicas."""

    amplitude: float | None
    derivative: float
    d2omega_t: float
    fisher: float
    failed_trials: int
    trials: int


def monte_carlo_errorbar(data: FringeDataset, t: float, trials: int,
                         seed: int, method: str = "fit") -> MonteCarloErrors:
    """Parametric-bootstrap error bars for the fringe pipeline.

    Each trial resamples every setting's port counts from Poisson laws with
    means equal to the observed counts, rebuilds estimates (re-applying any
    recorded noise division), and re-runs :func:`sensitivity_from_fringe`.
    Trials draw from independent counter-based streams ``(seed, trial)``, so
    the result is deterministic and order-independent.  Trials whose pipeline
    fails are dropped; more than 10% of them failing is an error.
    """
    trials = int(trials)
    if trials < 100:
        raise ValueError("need at least 100 trials for stable error bars")
    if seed is None:
        raise ValueError("resampling requires a seed")
    if not np.any(data.n_total > 0):
        raise ValueError("dataset carries no counts to resample")
    n_minus = data.n_total - data.n_plus
    amplitudes: list[float] = []
    derivatives: list[float] = []
    variances: list[float] = []
    fishers: list[float] = []
    failed = 0
    for trial in range(trials):
        gen = substream(seed, MONTE_CARLO_TRIALS, trial)
        plus = gen.poisson(data.n_plus).astype(np.int64)
        minus = gen.poisson(n_minus).astype(np.int64)
        total = plus + minus
        estimate, stderr = estimates_from_counts(plus, total)
        clamped = None
        if data.noise_divisor is not None:
            scaled = estimate / data.noise_divisor
            with np.errstate(invalid="ignore"):
                clamped = np.abs(scaled) > 1.0
            estimate = np.clip(scaled, -1.0, 1.0)
            stderr = stderr / data.noise_divisor
        replica = data.replace(n_plus=plus, n_total=total, estimate=estimate,
                               stderr=stderr, clamped=clamped)
        try:
            result = sensitivity_from_fringe(replica, t, method=method)
        except (ValueError, FitError):
            failed += 1
            continue
        if result.amplitude is not None:
            amplitudes.append(result.amplitude)
        derivatives.append(result.derivative_omega)
        variances.append(result.d2omega_t)
        fishers.append(result.fisher_per_photon)
    if failed > 0.1 * trials:
        raise RuntimeError(
            f"{failed} of {trials} resampling trials failed; "
            "the dataset is too fragile for error bars"
        )
    def spread(values: list[float]) -> float:
        return float(np.std(np.asarray(values), ddof=1))
    return MonteCarloErrors(
        amplitude=spread(amplitudes) if amplitudes else None,
        derivative=spread(derivatives),
        d2omega_t=spread(variances),
        fisher=spread(fishers),
        failed_trials=failed,
        trials=trials,
    )


def apply_monte_carlo_errors(result: SensitivityResult,
                             errors: MonteCarloErrors) -> SensitivityResult:
    """Attach resampling spreads to a pipeline result."""
    return replace(
        result,
        stderr_amplitude=errors.amplitude,
        stderr_derivative=errors.derivative,
        stderr_d2omega_t=errors.d2omega_t,
        stderr_fisher=errors.fisher,
    )


def noise_subtract(data: FringeDataset, v0: float) -> FringeDataset:
    """Divide estimates and errors by the t=0 visibility ``V0``.

    Rescaled estimates that leave [-1, 1] are clamped and flagged.  The
    divisor is recorded on the dataset (composing with any earlier division)
    so resampling reproduces the subtraction.
    """
    v0 = float(v0)
    if not 0.0 < v0 <= 1.0:
        raise ValueError("V0 must lie in (0, 1]")
    scaled = data.estimate / v0
    with np.errstate(invalid="ignore"):
        clamped = np.abs(scaled) > 1.0
    divisor = v0 if data.noise_divisor is None else data.noise_divisor * v0
    return data.replace(
        estimate=np.clip(scaled, -1.0, 1.0),
        stderr=data.stderr / v0,
        clamped=clamped,
        noise_divisor=divisor,
    )
