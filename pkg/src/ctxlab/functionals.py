"""Correlation functionals: Peres-Mermin square, the C functional, CHSH, and
the 18-observable Cabello inequality.

A functional is a signed list of contexts over indexed dichotomic
observables.  Its classical (noncontextual / local) bound is found by
enumerating all 2**n deterministic +-1 assignments.  A quantum realization
attaches a 4x4 operator to each index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import quantum as qc

MAX_ENUMERATION = 24
REALIZATION_TOL = 1e-10


class FunctionalError(ValueError):
    pass


class RealizationError(FunctionalError):
    pass


@dataclass(frozen=True)
class ContextTerm:
    sign: int
    members: tuple[int, ...]

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise FunctionalError(f"term sign must be +1 or -1, got {self.sign!r}")
        if not self.members:
            raise FunctionalError("context term has no members")
        if len(set(self.members)) != len(self.members):
            raise FunctionalError(f"duplicate observable in term {self.members}")


@dataclass(frozen=True)
class InequalityFunctional:
    name: str
    n_observables: int
    terms: tuple[ContextTerm, ...]
    labels: tuple[str, ...] = ()
    classical_bound: int | None = field(default=None, compare=False)

    def __post_init__(self):
        for t in self.terms:
            if max(t.members) >= self.n_observables or min(t.members) < 0:
                raise FunctionalError(f"{self.name}: term {t.members} references an index outside 0..{self.n_observables - 1}")
        if self.labels and len(self.labels) != self.n_observables:
            raise FunctionalError(f"{self.name}: {len(self.labels)} labels for {self.n_observables} observables")
        if self.classical_bound is None and self.n_observables <= MAX_ENUMERATION:
            object.__setattr__(self, "classical_bound", classical_bound(self))

    @property
    def n_assignments(self) -> int:
        return 2**self.n_observables


def _functional(name, labels, terms) -> InequalityFunctional:
    index = {lab: i for i, lab in enumerate(labels)}
    return InequalityFunctional(
        name=name,
        n_observables=len(labels),
        terms=tuple(ContextTerm(s, tuple(index[m] for m in ms)) for s, ms in terms),
        labels=tuple(labels),
    )


def classical_bound(f: InequalityFunctional) -> int:
    """Max of sum(sign * prod(v[members])) over v in {-1, +1}^n.

    Exact integer arithmetic; the 2**n assignments are processed in blocks
    of bit patterns so memory stays bounded for n up to 24.
    """
    n = f.n_observables
    if n > MAX_ENUMERATION:
        raise FunctionalError(f"{f.name}: refusing to enumerate 2**{n} assignments")
    # bit i of the assignment index set -> v_i = -1; a product of members is
    # -1 iff the parity of the masked bits is odd
    masks = [(t.sign, sum(1 << m for m in t.members)) for t in f.terms]
    best = None
    block = 1 << min(n, 16)
    for lo in range(0, 1 << n, block):
        a = np.arange(lo, lo + block, dtype=np.int64)
        total = np.zeros(block, dtype=np.int64)
        for sign, mask in masks:
            parity = (np.bitwise_count(a & mask) & 1).astype(np.int64)
            total += sign * (1 - 2 * parity)
        m = int(total.max())
        best = m if best is None else max(best, m)
    return best


@dataclass(frozen=True)
class OperatorRealization:
    observables: tuple[np.ndarray, ...]

    def validate(self, f: InequalityFunctional, tol: float = REALIZATION_TOL) -> None:
        if len(self.observables) != f.n_observables:
            raise RealizationError(f"{f.name}: {len(self.observables)} operators for {f.n_observables} observables")
        for i, o in enumerate(self.observables):
            if not qc.is_dichotomic(o, tol):
                raise RealizationError(f"{f.name}: observable {i} is not Hermitian with O^2 = I")
        for t in f.terms:
            for p, i in enumerate(t.members):
                for j in t.members[p + 1:]:
                    if not qc.commutes(self.observables[i], self.observables[j], tol):
                        raise RealizationError(f"{f.name}: observables {i} and {j} share a context but do not commute")

    def context_operators(self, f: InequalityFunctional) -> list[tuple[int, np.ndarray]]:
        return [(t.sign, qc.product([self.observables[m] for m in t.members])) for t in f.terms]


def evaluate(f: InequalityFunctional, r: OperatorRealization, psi) -> float:
    """Quantum value sum(sign * <psi|product of context|psi>)."""
    r.validate(f)
    psi = qc.check_state(psi)
    return math.fsum(sign * qc.expectation(psi, op) for sign, op in r.context_operators(f))


def evaluate_many(f: InequalityFunctional, r: OperatorRealization, states) -> np.ndarray:
    """Vectorized :func:`evaluate` over an (n, 4) array of states."""
    r.validate(f)
    states = np.asarray(states, dtype=complex)
    total = np.zeros(states.shape[0])
    for sign, op in r.context_operators(f):
        total += sign * qc.expectations(states, op)
    return total


# -- built-in functionals ---------------------------------------------------

# Observable layout of the square, row-major: O_ij at row i, column j.
PM_LABELS = ("11", "12", "13", "21", "22", "23", "31", "32", "33")
PM_PAULIS = {
    "11": "z0", "12": "0z", "13": "zz",
    "21": "0x", "22": "x0", "23": "xx",
    "31": "zx", "32": "xz", "33": "yy",
}
PM_TERMS = [
    (+1, ("11", "12", "13")),
    (+1, ("21", "22", "23")),
    (+1, ("31", "32", "33")),
    (+1, ("11", "21", "31")),
    (+1, ("12", "22", "32")),
    (-1, ("13", "23", "33")),
]

# O_33 replaced by the identity: drop it from its row and column.
C_LABELS = PM_LABELS[:-1]
C_TERMS = [(s, tuple(m for m in ms if m != "33")) for s, ms in PM_TERMS]

CHSH_LABELS = ("A1", "A2", "B1", "B2")
CHSH_TERMS = [
    (+1, ("A1", "B1")),
    (+1, ("A1", "B2")),
    (+1, ("A2", "B1")),
    (-1, ("A2", "B2")),
]

# Observable O_ij is shared by bases i and j; one context per basis.
CABELLO_LABELS = (
    "12", "16", "17", "18", "23", "28", "29", "34", "37",
    "39", "45", "47", "48", "56", "58", "59", "67", "69",
)
CABELLO_TERMS = [(-1, tuple(lab for lab in CABELLO_LABELS if str(b) in lab)) for b in range(1, 10)]


def _pm_realization(labels) -> OperatorRealization:
    return OperatorRealization(tuple(qc.pauli_product(PM_PAULIS[lab]) for lab in labels))


def build_pm():
    f = _functional("pm", PM_LABELS, PM_TERMS)
    r = _pm_realization(PM_LABELS)
    r.validate(f)
    return f, r


def build_c():
    f = _functional("c", C_LABELS, C_TERMS)
    r = _pm_realization(C_LABELS)
    r.validate(f)
    return f, r


def chsh_functional() -> InequalityFunctional:
    return _functional("chsh", CHSH_LABELS, CHSH_TERMS)


def build_chsh(settings):
    """CHSH functional with A_k = w(a_k).sigma (x) I and B_k = I (x) w(b_k).sigma."""
    f = chsh_functional()
    a1, a2, b1, b2 = settings.a1, settings.a2, settings.b1, settings.b2
    obs = (
        qc.tensor(qc.direction_observable(a1), qc.I2),
        qc.tensor(qc.direction_observable(a2), qc.I2),
        qc.tensor(qc.I2, qc.direction_observable(b1)),
        qc.tensor(qc.I2, qc.direction_observable(b2)),
    )
    r = OperatorRealization(obs)
    r.validate(f)
    return f, r


def cabello18_functional() -> InequalityFunctional:
    return _functional("cabello18", CABELLO_LABELS, CABELLO_TERMS)


DEFAULT_CABELLO_FILE = "cabello18.txt"


def _read_cabello_file(path) -> dict[int, list[np.ndarray]]:
    if path is None:
        text = resources.files("ctxlab.data").joinpath(DEFAULT_CABELLO_FILE).read_text()
    else:
        p = Path(path)
        if not p.is_file():
            raise RealizationError(f"realization file not found: {p}")
        text = p.read_text()
    bases: dict[int, list[np.ndarray]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 9:
            raise RealizationError(f"line {lineno}: expected basis id and 8 floats, got {len(parts)} fields")
        try:
            basis = int(parts[0])
            vals = [float(x) for x in parts[1:]]
        except ValueError as exc:
            raise RealizationError(f"line {lineno}: {exc}") from None
        v = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
        norm = np.linalg.norm(v)
        if norm == 0:
            raise RealizationError(f"line {lineno}: zero vector")
        bases.setdefault(basis, []).append(v / norm)
    return bases


def _same_ray(u, v, tol) -> bool:
    return abs(abs(np.vdot(u, v)) - 1.0) <= tol


def build_cabello18(path=None, tol: float = REALIZATION_TOL):
    """Load the 18-observable realization and validate it.

    ``path`` defaults to the bundled data file.  The nine bases must be
    labelled 1..9, each orthonormal, and every vector must occur in exactly
    two bases; the vector shared by bases i < j becomes O_ij = 2|v><v| - I.
    Every context product must equal -I.
    """
    f = cabello18_functional()
    bases = _read_cabello_file(path)
    if sorted(bases) != list(range(1, 10)) or any(len(v) != 4 for v in bases.values()):
        raise RealizationError(f"expected bases 1..9 with 4 vectors each, got {{{', '.join(f'{b}: {len(v)}' for b, v in sorted(bases.items()))}}}")
    for b, vecs in bases.items():
        gram = np.array([[np.vdot(u, v) for v in vecs] for u in vecs])
        if np.max(np.abs(gram - np.eye(4))) > tol:
            raise RealizationError(f"basis {b} is not orthonormal")

    vectors: dict[str, np.ndarray] = {}
    for b in range(1, 10):
        for v in bases[b]:
            owners = [c for c in range(1, 10) if any(_same_ray(v, u, tol) for u in bases[c])]
            if len(owners) != 2:
                raise RealizationError(f"a vector of basis {b} appears in {len(owners)} bases, expected exactly 2")
            vectors[f"{owners[0]}{owners[1]}"] = v
    if sorted(vectors) != sorted(CABELLO_LABELS):
        raise RealizationError(f"basis sharing pattern {sorted(vectors)} does not match the inequality's contexts")

    obs = tuple(2 * np.outer(vectors[lab], vectors[lab].conj()) - qc.I4 for lab in CABELLO_LABELS)
    r = OperatorRealization(obs)
    r.validate(f, tol)
    for _, op in r.context_operators(f):
        if np.max(np.abs(op + qc.I4)) > tol:
            raise RealizationError("a context product differs from -I")
    return f, r


def build(name: str, settings=None):
    """Look up a built-in functional by name: pm, c, chsh, cabello18."""
    if name == "pm":
        return build_pm()
    if name == "c":
        return build_c()
    if name == "cabello18":
        return build_cabello18()
    if name == "chsh":
        if settings is None:
            return chsh_functional(), None
        return build_chsh(settings)
    raise FunctionalError(f"unknown inequality {name!r}")


FUNCTIONAL_NAMES = ("pm", "c", "cabello18", "chsh")

