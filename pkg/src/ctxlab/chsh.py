"""Maximal CHSH value of a pure two-qubit state.

With T_ij = <sigma_i (x) sigma_j>, the CHSH value for unit vectors
a1, a2, b1, b2 is  a1.T(b1 + b2) + a2.T(b1 - b2).  ``optimize_chsh``
maximizes it by alternating exact updates of the Alice and Bob directions
from several random starts; ``horodecki_bmax`` gives the closed form
2 sqrt(l1 + l2) from the two largest eigenvalues of T^T T and serves as the
independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quantum as qc
from .haar import SeedSpec

AXES = "xyz"
TSIRELSON = 2 * math.sqrt(2)
AGREEMENT_TOL = 1e-4
DEFAULT_RESTARTS = 8
MAX_SWEEPS = 500
CONVERGENCE_TOL = 1e-12
# slack on the per-sweep monotonicity check
ASCENT_TOL = 1e-12

_PAULI_PAIRS = [[qc.tensor(qc.pauli(i), qc.pauli(j)) for j in AXES] for i in AXES]


@dataclass(frozen=True)
class MeasurementSettings:
    a1: qc.BlochDirection
    a2: qc.BlochDirection
    b1: qc.BlochDirection
    b2: qc.BlochDirection

    @classmethod
    def from_vectors(cls, a1, a2, b1, b2) -> "MeasurementSettings":
        return cls(*(qc.BlochDirection.from_vector(w) for w in (a1, a2, b1, b2)))

    def angles(self) -> tuple[float, ...]:
        """(thetaA1, phiA1, thetaA2, phiA2, thetaB1, phiB1, thetaB2, phiB2)."""
        return tuple(x for d in (self.a1, self.a2, self.b1, self.b2) for x in (d.theta, d.phi))

    @classmethod
    def from_angles(cls, angles) -> "MeasurementSettings":
        a = list(angles)
        if len(a) != 8:
            raise ValueError(f"expected 8 angles, got {len(a)}")
        return cls(*(qc.BlochDirection(a[2 * k], a[2 * k + 1]) for k in range(4)))


@dataclass(frozen=True)
class OptResult:
    b_max: float
    settings: MeasurementSettings
    restarts_used: int
    oracle_value: float
    sweeps: int = 0

    @property
    def agrees(self) -> bool:
        return abs(self.b_max - self.oracle_value) <= AGREEMENT_TOL


def correlation_matrix(psi) -> np.ndarray:
    """3x3 real matrix T with T[i, j] = <psi| sigma_i (x) sigma_j |psi>."""
    psi = qc.check_state(psi)
    return np.array([[qc.expectation(psi, op) for op in row] for row in _PAULI_PAIRS])


def correlation_matrices(states) -> np.ndarray:
    """Batched :func:`correlation_matrix`, shape (n, 3, 3)."""
    states = np.asarray(states, dtype=complex)
    out = np.empty((states.shape[0], 3, 3))
    for i, row in enumerate(_PAULI_PAIRS):
        for j, op in enumerate(row):
            out[:, i, j] = qc.expectations(states, op)
    return out


def jacobi_eigenvalues(a, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm is below ``tol`` (scaled
    by the matrix norm when that exceeds one).  Returned in descending order.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(a**2) - np.sum(np.diag(a) ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))[::-1]


def horodecki_bmax(psi) -> float:
    """Closed-form CHSH maximum 2 sqrt(l1 + l2) of a pure two-qubit state."""
    t = correlation_matrix(psi)
    lam = jacobi_eigenvalues(t.T @ t)
    return 2.0 * math.sqrt(max(0.0, lam[0] + lam[1]))


def chsh_value(t: np.ndarray, a1, a2, b1, b2) -> float:
    """a1.T(b1 + b2) + a2.T(b1 - b2)."""
    return float(a1 @ t @ (b1 + b2) + a2 @ t @ (b1 - b2))


def _unit_rows(v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Normalize rows; a vanishing row is replaced by a random unit vector."""
    out = np.empty_like(v)
    n = np.linalg.norm(v, axis=1)
    for k in range(v.shape[0]):
        if n[k] > 1e-300:
            out[k] = v[k] / n[k]
        else:
            w = rng.standard_normal(3)
            out[k] = w / np.linalg.norm(w)
    return out


def _random_units(rng: np.random.Generator, count: int) -> np.ndarray:
    return _unit_rows(rng.standard_normal((count, 3)), rng)


class AscentViolation(RuntimeError):
    """An alternating update lowered the objective."""


def ascend(t: np.ndarray, b1: np.ndarray, b2: np.ndarray, rng: np.random.Generator,
           max_sweeps: int = MAX_SWEEPS, tol: float = CONVERGENCE_TOL, trace=None):
    """Alternating exact maximization from a batch of starting Bob directions.

    ``b1``, ``b2`` have shape (R, 3), one row per restart.  Each sweep sets
    a1 = T(b1+b2)/|.|, a2 = T(b1-b2)/|.|, then b1 = T^T(a1+a2)/|.|,
    b2 = T^T(a1-a2)/|.|.  Returns (values, a1, a2, b1, b2, sweeps).
    ``trace``, if a list, receives the objective after every half-step.
    """
    def objective(a1, a2, b1, b2):
        return np.einsum("ri,ij,rj->r", a1, t, b1 + b2) + np.einsum("ri,ij,rj->r", a2, t, b1 - b2)

    a1 = _unit_rows((t @ (b1 + b2).T).T, rng)
    a2 = _unit_rows((t @ (b1 - b2).T).T, rng)
    prev = objective(a1, a2, b1, b2)
    active = np.ones(len(prev), dtype=bool)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        b1n = _unit_rows((t.T @ (a1 + a2).T).T, rng)
        b2n = _unit_rows((t.T @ (a1 - a2).T).T, rng)
        mid = objective(a1, a2, b1n, b2n)
        a1n = _unit_rows((t @ (b1n + b2n).T).T, rng)
        a2n = _unit_rows((t @ (b1n - b2n).T).T, rng)
        cur = objective(a1n, a2n, b1n, b2n)
        if trace is not None:
            trace.append((prev.copy(), mid.copy(), cur.copy()))
        if np.any(mid < prev - ASCENT_TOL) or np.any(cur < mid - ASCENT_TOL):
            raise AscentViolation(f"objective decreased in sweep {sweeps}")
        # converged restarts keep their state
        a1[active], a2[active] = a1n[active], a2n[active]
        b1[active], b2[active] = b1n[active], b2n[active]
        delta = cur - prev
        prev = np.where(active, cur, prev)
        active &= delta > tol
        if not active.any():
            break
    return prev, a1, a2, b1, b2, sweeps


def optimize_chsh(psi, restarts: int = DEFAULT_RESTARTS, seed: SeedSpec | None = None) -> OptResult:
    """Maximize |CHSH| over the eight measurement angles for ``psi``.

    The sign of the CHSH expression flips with (a1, a2) -> (-a1, -a2), so
    maximizing the signed value covers the absolute value.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    psi = qc.check_state(psi)
    rng = (seed or SeedSpec(0, 0)).generator()
    t = correlation_matrix(psi)
    b1 = _random_units(rng, restarts)
    b2 = _random_units(rng, restarts)
    values, a1, a2, b1, b2, sweeps = ascend(t, b1, b2, rng)
    best = int(np.argmax(values))
    settings = MeasurementSettings.from_vectors(a1[best], a2[best], b1[best], b2[best])
    return OptResult(
        b_max=float(values[best]),
        settings=settings,
        restarts_used=restarts,
        oracle_value=horodecki_bmax(psi),
        sweeps=sweeps,
    )
