"""Complex nonlinear least squares for circuit parameters (Levenberg-Marquardt).

The optimizer works on log-parameters so values stay positive; results and the
public ``residuals``/``jacobian`` helpers use linear parameters.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .circuit import (CircuitModel, DegenerateCircuit, circuit_impedance, parameter_names,
                      parameters, with_parameters)
from .spectrum import Spectrum

LAMBDA_CEILING = 1e10
# largest change of any log-parameter in one step (factor e); keeps the
# undamped first steps from jumping onto flat plateaus such as Rct -> inf
MAX_LOG_STEP = 1.0


class Weighting(str, enum.Enum):
    UNIT = "unit"
    PROPORTIONAL = "proportional"


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class FitProblem:
    template: CircuitModel
    target: Spectrum
    free: tuple = ()            # parameter names; empty -> every R, C and Q
    weighting: Weighting = Weighting.PROPORTIONAL

    def __post_init__(self):
        names = parameter_names(self.template)
        free = tuple(self.free) or tuple(n for n in names if not n.startswith("alpha"))
        unknown = [n for n in free if n not in names]
        if unknown:
            raise ValueError(f"unknown free parameter(s): {unknown}")
        if not free:
            raise ValueError("a fit needs at least one free parameter")
        object.__setattr__(self, "free", free)
        object.__setattr__(self, "weighting", Weighting(self.weighting))
        p = parameters(self.template)
        if any(p[n] <= 0 for n in free):
            raise ValueError("free parameters must be positive")

    @property
    def initial(self) -> np.ndarray:
        p = parameters(self.template)
        return np.array([p[n] for n in self.free])

    def model(self, p) -> CircuitModel:
        return with_parameters(self.template, dict(zip(self.free, map(float, p))))


@dataclass
class FitResult:
    params: np.ndarray
    names: tuple
    cost: float
    iterations: int
    converged: bool
    covariance_diag: Optional[np.ndarray] = None
    cost_history: list = field(default_factory=list)   # cost after every accepted step
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "params": dict(zip(self.names, self.params.tolist())),
            "cost": self.cost, "iterations": self.iterations, "converged": self.converged,
            "covariance_diag": None if self.covariance_diag is None
            else dict(zip(self.names, self.covariance_diag.tolist())),
            "cost_history": self.cost_history, "message": self.message,
        }


def _weights(prob: FitProblem) -> np.ndarray:
    if prob.weighting is Weighting.UNIT:
        return np.ones(len(prob.target))
    mag = np.abs(prob.target.values)
    if np.any(mag == 0):
        raise ValueError("proportional weighting needs a target without zero-magnitude points")
    return 1.0 / mag


def residuals(p, prob: FitProblem) -> np.ndarray:
    """Weighted model-minus-target: real parts first, then imaginary parts."""
    p = np.asarray(p, dtype=float)
    if p.shape != (len(prob.free),):
        raise ValueError(f"expected {len(prob.free)} parameters, got shape {p.shape}")
    if np.any(~np.isfinite(p)) or np.any(p <= 0):
        raise ValueError("parameters must be finite and positive")
    z = circuit_impedance(prob.model(p), prob.target.grid.omega)
    w = _weights(prob)
    d = (z - prob.target.values) * w
    return np.concatenate([d.real, d.imag])


def jacobian(p, prob: FitProblem, r0: np.ndarray | None = None) -> np.ndarray:
    """Forward differences with step max(1e-6 |p_k|, 1e-12)."""
    p = np.asarray(p, dtype=float)
    r0 = residuals(p, prob) if r0 is None else r0
    J = np.empty((r0.size, p.size))
    for k in range(p.size):
        h = max(1e-6 * abs(p[k]), 1e-12)
        q = p.copy()
        q[k] += h
        J[:, k] = (residuals(q, prob) - r0) / h
    return J


def _cost(r: np.ndarray) -> float:
    return float(r @ r)


def _try_residuals(p, prob):
    try:
        r = residuals(p, prob)
    except (ValueError, DegenerateCircuit):
        return None
    return r if np.all(np.isfinite(r)) else None


def fit_circuit(prob: FitProblem, p0: Sequence[float] | None = None, max_iter: int = 200,
                lambda0: float = 1e-3, tol_step: float = 1e-10,
                tol_grad: float = 1e-10) -> FitResult:
    """Marquardt-scaled LM on log-parameters.

    Solves (J'J + lam diag(J'J)) d = -J'r; accepted steps divide lam by 10,
    rejected ones multiply it by 10.  Running out of iterations is not an
    error: the best point so far comes back with ``converged=False``.
    """
    p = prob.initial if p0 is None else np.asarray(p0, dtype=float).copy()
    if p.shape != (len(prob.free),) or np.any(~(p > 0)):
        raise ValueError("p0 must be positive and match the free parameters")
    r = _try_residuals(p, prob)
    if r is None:
        raise FitError("initial parameters give an invalid model")
    x = np.log(p)
    cost = _cost(r)
    history = [cost]
    lam = lambda0
    converged, message, it = False, "iteration limit reached", 0

    for it in range(1, max_iter + 1):
        # Jacobian in log space: dr/dlog(p) = dr/dp * p
        J = jacobian(p, prob, r) * p
        g = J.T @ r
        if np.max(np.abs(g)) < tol_grad:
            converged, message, it = True, "gradient below tolerance", it - 1
            break
        A = J.T @ J
        dA = np.diag(A).copy()
        dA[dA == 0] = 1.0
        accepted = False
        while not accepted:
            try:
                delta = np.linalg.solve(A + lam * np.diag(dA), -g)
            except np.linalg.LinAlgError:
                delta = None
            if delta is None or not np.all(np.isfinite(delta)):
                if lam > LAMBDA_CEILING:
                    raise FitError("singular normal equations at the damping ceiling")
                lam *= 10.0
                continue
            if np.linalg.norm(delta) < tol_step * (1.0 + np.linalg.norm(x)):
                converged, message = True, "step below tolerance"
                break
            big = np.max(np.abs(delta))
            if big > MAX_LOG_STEP:
                delta = delta * (MAX_LOG_STEP / big)
            # halve until the trial model is valid (e.g. CPE exponent back inside [0, 1])
            step = delta
            r_new = None
            for _ in range(30):
                r_new = _try_residuals(np.exp(x + step), prob)
                if r_new is not None:
                    break
                step = step / 2.0
            new_cost = _cost(r_new) if r_new is not None else np.inf
            if new_cost < cost:
                x = x + step
                p = np.exp(x)
                r, cost = r_new, new_cost
                history.append(cost)
                lam = max(lam / 10.0, 1e-15)
                accepted = True
            else:
                lam *= 10.0
                if lam > LAMBDA_CEILING:
                    message = "stalled: no decrease at maximum damping"
                    break
        if converged or not accepted:
            break

    return FitResult(p, prob.free, cost, it, converged,
                     _covariance_diag(p, prob, r), history, message)


def _covariance_diag(p, prob, r) -> Optional[np.ndarray]:
    m, n = r.size, p.size
    if m <= n:
        return None
    J = jacobian(p, prob, r)
    try:
        cov = np.linalg.inv(J.T @ J) * (_cost(r) / (m - n))
    except np.linalg.LinAlgError:
        return None
    d = np.diag(cov)
    return d if np.all(np.isfinite(d)) else None
