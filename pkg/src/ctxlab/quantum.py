"""Dense linear algebra for two-qubit pure states and 4x4 observables.

States are complex numpy vectors of length 4 in the computational basis
|00>, |01>, |10>, |11>, with the first tensor factor acting on qubit A.
Operators are plain complex ndarrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
IMAG_TOL = 1e-10
NORM_TOL = 1e-12
COMMUTE_TOL = 1e-10
# State files may carry a few digits of rounding; anything worse is rejected.
FILE_NORM_TOL = 1e-6

_PAULI = {
    "0": np.array([[1, 0], [0, 1]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

I2 = _PAULI["0"]
I4 = np.eye(4, dtype=complex)


class QuantumError(ValueError):
    """Raised for invalid states or observables."""


def pauli(axis) -> np.ndarray:
    """Return sigma_0 (identity) or the Pauli matrix for ``axis`` in {0, x, y, z}."""
    key = str(axis).lower()
    if key not in _PAULI:
        raise QuantumError(f"unknown Pauli axis {axis!r}")
    return _PAULI[key].copy()


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; ``a`` acts on qubit A (the most significant bit)."""
    return np.kron(a, b)


def pauli_product(label: str) -> np.ndarray:
    """``pauli_product("zx")`` is sigma_z (x) sigma_x."""
    if len(label) != 2:
        raise QuantumError(f"two-qubit Pauli label expected, got {label!r}")
    return tensor(pauli(label[0]), pauli(label[1]))


def product(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Left-to-right matrix product of a non-empty operator list."""
    if len(ops) == 0:
        raise QuantumError("product of an empty operator list")
    return reduce(np.matmul, ops)


def is_hermitian(o: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(o - o.conj().T)) <= tol)


def is_dichotomic(o: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    """Hermitian with o @ o = I, i.e. spectrum in {+1, -1}."""
    eye = np.eye(o.shape[0])
    return is_hermitian(o, tol) and bool(np.max(np.abs(o @ o - eye)) <= tol)


def commutes(a: np.ndarray, b: np.ndarray, tol: float = COMMUTE_TOL) -> bool:
    return bool(np.max(np.abs(a @ b - b @ a)) <= tol)


def check_state(psi, tol: float = NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (4,):
        raise QuantumError(f"two-qubit state must have 4 amplitudes, got shape {psi.shape}")
    norm2 = float(np.vdot(psi, psi).real)
    if abs(norm2 - 1.0) > tol:
        raise QuantumError(f"state is not normalized (|psi|^2 = {norm2!r})")
    return psi


def expectation(psi, o: np.ndarray) -> float:
    """Return <psi|O|psi> for a normalized state and Hermitian operator.

    The imaginary part must vanish to within 1e-10; it is checked rather than
    silently dropped.
    """
    psi = check_state(psi)
    if not is_hermitian(o):
        raise QuantumError("expectation requires a Hermitian operator")
    value = np.vdot(psi, o @ psi)
    if abs(value.imag) > IMAG_TOL:
        raise QuantumError(f"expectation has imaginary part {value.imag!r}")
    return float(value.real)


def expectations(states: np.ndarray, o: np.ndarray) -> np.ndarray:
    """Vectorized <psi|O|psi> over the rows of ``states`` (shape (n, 4)).

    Same contract as :func:`expectation`, checked on the whole batch.
    """
    states = np.asarray(states, dtype=complex)
    if states.ndim != 2 or states.shape[1] != 4:
        raise QuantumError(f"expected an (n, 4) array of states, got {states.shape}")
    norms = np.einsum("ni,ni->n", states.conj(), states).real
    if states.shape[0] and np.max(np.abs(norms - 1.0)) > NORM_TOL:
        raise QuantumError("batch contains an unnormalized state")
    if not is_hermitian(o):
        raise QuantumError("expectation requires a Hermitian operator")
    values = np.einsum("ni,ij,nj->n", states.conj(), o, states)
    if states.shape[0] and np.max(np.abs(values.imag)) > IMAG_TOL:
        raise QuantumError("expectation has a non-negligible imaginary part")
    return values.real.copy()


@dataclass(frozen=True)
class BlochDirection:
    """A point on the Bloch sphere; ``theta`` in [0, pi], ``phi`` in [0, 2 pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise QuantumError(f"theta={self.theta!r} outside [0, pi]")
        if not (0.0 <= self.phi < 2 * math.pi):
            raise QuantumError(f"phi={self.phi!r} outside [0, 2 pi)")

    @property
    def vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    @classmethod
    def from_vector(cls, w) -> "BlochDirection":
        """Recover angles from a (not necessarily normalized) 3-vector.

        theta = arccos(w_z), phi = atan2(w_y, w_x) wrapped into [0, 2 pi);
        phi is set to 0 at the poles.
        """
        w = np.asarray(w, dtype=float)
        n = float(np.linalg.norm(w))
        if n == 0.0:
            raise QuantumError("cannot take the direction of a zero vector")
        x, y, z = w / n
        theta = math.acos(min(1.0, max(-1.0, z)))
        if math.hypot(x, y) <= 1e-15:
            phi = 0.0
        else:
            phi = math.atan2(y, x) % (2 * math.pi)
            # -0.0 % 2pi and tiny negatives can round to exactly 2pi
            if phi >= 2 * math.pi:
                phi = 0.0
        return cls(theta, phi)


def direction_observable(d: BlochDirection) -> np.ndarray:
    """w . sigma for the unit vector w of ``d``.

    The lower-right entry is -cos(theta); with +cos(theta) on both diagonal
    entries the matrix would be neither traceless nor dichotomic.
    """
    wx, wy, wz = d.vector
    return wx * _PAULI["x"] + wy * _PAULI["y"] + wz * _PAULI["z"]


def vector_observable(w) -> np.ndarray:
    """w . sigma for an arbitrary real 3-vector ``w`` (no normalization)."""
    wx, wy, wz = w
    return wx * _PAULI["x"] + wy * _PAULI["y"] + wz * _PAULI["z"]


# -- state files ---------------------------------------------------------


def parse_state_line(line: str, lineno: int = 0) -> np.ndarray:
    parts = line.split()
    if len(parts) != 8:
        raise QuantumError(f"line {lineno}: expected 8 floats, got {len(parts)}")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise QuantumError(f"line {lineno}: {exc}") from None
    psi = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
    norm = math.sqrt(float(np.vdot(psi, psi).real))
    if abs(norm - 1.0) > FILE_NORM_TOL:
        raise QuantumError(f"line {lineno}: state norm {norm!r} deviates from 1 by more than {FILE_NORM_TOL}")
    return psi / norm


def read_states(path) -> tuple[np.ndarray, int | None]:
    """Read a state file; return (states of shape (n, 4), master_seed or None).

    Lines starting with ``#`` are comments; a ``master_seed=<int>`` token in
    a comment is picked up.
    """
    seed = None
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            for tok in s.lstrip("#").replace(",", " ").split():
                if tok.startswith("master_seed="):
                    seed = int(tok.split("=", 1)[1])
            continue
        rows.append(parse_state_line(s, lineno))
    states = np.array(rows, dtype=complex).reshape(-1, 4)
    return states, seed


def format_state(psi) -> str:
    return " ".join(f"{repr(float(z.real))} {repr(float(z.imag))}" for z in np.asarray(psi, dtype=complex))


def write_states(path, states: Iterable, master_seed: int | None = None) -> None:
    with open(path, "w") as fh:
        if master_seed is not None:
            fh.write(f"# ctxlab-states master_seed={int(master_seed)}\n")
        for psi in states:
            fh.write(format_state(psi) + "\n")
