"""Pauli product-basis measurements on small qubit registers.

A basis label is a string over {x, y, z}, one local axis per qubit; qubit 0
is the leftmost character and the most significant bit of the computational
index.  Outcomes are tuples of +1/-1 spins, and outcome (s_0, ..., s_{n-1})
maps to the rotated-basis index whose bit k is 0 for s_k = +1.  Datasets
carry a full grid of 2^n outcome records per basis (zero-probability
outcomes included), sorted by basis label and then by outcome index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import jsonio
from .states import DensityMatrix, StateVector, matrix_of, qubit_count

_SQ2 = 1.0 / np.sqrt(2.0)
_ROTATIONS = {
    "z": np.eye(2, dtype=np.complex128),
    "x": _SQ2 * np.array([[1, 1], [1, -1]], dtype=np.complex128),
    "y": _SQ2 * np.array([[1, -1j], [1, 1j]], dtype=np.complex128),
}
for _mat in _ROTATIONS.values():
    _mat.setflags(write=False)

#: Record probabilities may undershoot zero by at most this much before clamping.
PROBABILITY_FLOOR = -1e-12
#: Per-basis probabilities must sum to one within this tolerance.
BASIS_SUM_ATOL = 1e-9


def local_rotation(axis: str) -> np.ndarray:
    """Unitary whose rows are the bras of the axis eigenstates, ordered (+1, -1).

    Measuring the rotated state in the computational basis is equivalent to
    measuring the original state along the given Pauli axis.
    """
    if axis not in _ROTATIONS:
        raise ValueError(f"invalid measurement axis {axis!r}; expected one of x, y, z")
    return _ROTATIONS[axis].copy()


def validate_basis(basis: str, n_qubits: int) -> None:
    if len(basis) != n_qubits or any(c not in "xyz" for c in basis):
        raise ValueError(
            f"basis {basis!r} is not a length-{n_qubits} string over x, y, z"
        )


@lru_cache(maxsize=None)
def spin_table(n_qubits: int) -> np.ndarray:
    """(2^n, n) table of +1/-1 spins; row i is the outcome at basis index i."""
    dim = 2**n_qubits
    idx = np.arange(dim)[:, None]
    bits = (idx >> (n_qubits - 1 - np.arange(n_qubits))) & 1
    table = (1 - 2 * bits).astype(np.int8)
    table.setflags(write=False)
    return table


def outcome_index(outcome) -> int:
    """Basis index of an outcome tuple (+1 maps to bit 0, qubit 0 is the MSB)."""
    idx = 0
    for s in outcome:
        if s not in (1, -1):
            raise ValueError(f"outcome entries must be +1 or -1, got {s!r}")
        idx = (idx << 1) | (s == -1)
    return idx


def index_outcome(index: int, n_qubits: int) -> tuple[int, ...]:
    return tuple(int(s) for s in spin_table(n_qubits)[index])


def outcome_string(outcome) -> str:
    return "".join("+" if s == 1 else "-" for s in outcome)


def parse_outcome(text: str) -> tuple[int, ...]:
    if any(c not in "+-" for c in text):
        raise ValueError(f"invalid outcome string {text!r}")
    return tuple(1 if c == "+" else -1 for c in text)


def rotate_vector(amplitudes, basis: str, adjoint: bool = False) -> np.ndarray:
    """Apply the product of local basis rotations to a state vector.

    One two-branch pass per qubit; the full 2^n x 2^n unitary is never formed.
    """
    vec = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    n = len(basis)
    if vec.size != 2**n:
        raise ValueError(f"vector length {vec.size} does not match basis {basis!r}")
    for k, axis in enumerate(basis):
        if axis == "z":
            continue
        u = _ROTATIONS[axis]
        if adjoint:
            u = u.conj().T
        left = 1 << k
        right = vec.size >> (k + 1)
        vec = np.einsum("uv,avc->auc", u, vec.reshape(left, 2, right)).reshape(-1)
    return vec


def rotate_matrix(entries, basis: str) -> np.ndarray:
    """Conjugate a density matrix into the measurement frame of ``basis``."""
    mat = np.asarray(entries, dtype=np.complex128)
    n = len(basis)
    if mat.shape != (2**n, 2**n):
        raise ValueError(f"matrix shape {mat.shape} does not match basis {basis!r}")
    t = mat.reshape((2,) * (2 * n))
    for k, axis in enumerate(basis):
        if axis == "z":
            continue
        u = _ROTATIONS[axis]
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [k])), 0, k)
        t = np.moveaxis(np.tensordot(u.conj(), t, axes=([1], [n + k])), 0, n + k)
    return t.reshape(mat.shape)


def probabilities_vector(amplitudes, basis: str) -> np.ndarray:
    """Outcome probabilities of a pure state measured in ``basis``."""
    rotated = rotate_vector(amplitudes, basis)
    return np.abs(rotated) ** 2


def probabilities_matrix(entries, basis: str) -> np.ndarray:
    """Outcome probabilities of a (possibly raw Hermitian) matrix in ``basis``."""
    return np.real(np.diag(rotate_matrix(entries, basis)))


def projector_probabilities(rho, basis: str) -> dict[tuple[int, ...], float]:
    """Map from outcome tuple to probability for one measurement basis."""
    mat = matrix_of(rho)
    n = qubit_count(mat.shape[0])
    validate_basis(basis, n)
    probs = probabilities_matrix(mat, basis)
    table = spin_table(n)
    return {tuple(int(s) for s in table[i]): float(probs[i]) for i in range(probs.size)}


def generate_basis_set(n_qubits: int, mode: str = "full", seed: int = 0) -> list[str]:
    """All 3^n bases, or a seeded random subset of about 3n(3/2)^n of them.

    The compressed subset is drawn uniformly without replacement and always
    contains the all-z basis; output is sorted and duplicate-free.
    """
    if n_qubits < 1:
        raise ValueError("n_qubits must be at least 1")
    labels = ["".join(t) for t in itertools.product("xyz", repeat=n_qubits)]
    if mode == "full":
        return labels
    if mode != "compressed":
        raise ValueError(f"unknown basis-set mode {mode!r}")
    total = len(labels)
    count = min(total, round(3 * n_qubits * 1.5**n_qubits))
    all_z = "z" * n_qubits
    pool = [b for b in labels if b != all_z]
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(pool), size=count - 1, replace=False) if count > 1 else []
    return sorted([all_z] + [pool[i] for i in picked])


@dataclass(frozen=True)
class MeasurementRecord:
    basis: str
    outcome: tuple[int, ...]
    probability: float
    shots: int | None = None


@dataclass(frozen=True)
class MeasurementDataset:
    """Projective measurement statistics, grouped per basis.

    ``probabilities[b, i]`` is the probability of outcome index ``i`` in
    ``bases[b]``.  ``counts`` carries per-outcome shot counts in sampled mode
    and is None in exact mode.
    """

    n_qubits: int
    bases: tuple[str, ...]
    probabilities: np.ndarray
    counts: np.ndarray | None
    mode: str
    seed: int | None = None

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be at least 1")
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown dataset mode {self.mode!r}")
        dim = 2**self.n_qubits
        bases = tuple(self.bases)
        for basis in bases:
            validate_basis(basis, self.n_qubits)
        if list(bases) != sorted(set(bases)):
            raise ValueError("bases must be sorted and duplicate-free")
        probs = np.array(self.probabilities, dtype=float)
        if probs.shape != (len(bases), dim):
            raise ValueError(
                f"probabilities shape {probs.shape} does not match "
                f"({len(bases)}, {dim})"
            )
        if probs.size and probs.min() < PROBABILITY_FLOOR:
            raise ValueError("a record probability is below the negativity floor")
        probs = np.clip(probs, 0.0, None)
        if probs.size:
            sums = probs.sum(axis=1)
            if np.abs(sums - 1.0).max() > BASIS_SUM_ATOL:
                raise ValueError("per-basis probabilities do not sum to 1")
        counts = self.counts
        if counts is not None:
            counts = np.array(counts, dtype=np.int64)
            if counts.shape != probs.shape or counts.min() < 0:
                raise ValueError("invalid shot-count array")
            counts.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "counts", counts)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def n_records(self) -> int:
        return self.probabilities.size

    def basis_row(self, basis: str) -> np.ndarray:
        try:
            return self.probabilities[self.bases.index(basis)]
        except ValueError:
            raise KeyError(f"basis {basis!r} not present in dataset") from None

    def record(self, index: int) -> MeasurementRecord:
        b, i = divmod(index, self.dim)
        return MeasurementRecord(
            self.bases[b],
            index_outcome(i, self.n_qubits),
            float(self.probabilities[b, i]),
            int(self.counts[b, i]) if self.counts is not None else None,
        )

    def records(self) -> list[MeasurementRecord]:
        return [self.record(i) for i in range(self.n_records)]

    @classmethod
    def from_records(
        cls,
        n_qubits: int,
        records,
        mode: str = "exact",
        seed: int | None = None,
    ) -> "MeasurementDataset":
        dim = 2**n_qubits
        by_basis: dict[str, dict[int, MeasurementRecord]] = {}
        for rec in records:
            by_basis.setdefault(rec.basis, {})[outcome_index(rec.outcome)] = rec
        bases = sorted(by_basis)
        probs = np.zeros((len(bases), dim))
        counts = np.zeros((len(bases), dim), dtype=np.int64)
        have_counts = False
        for b, basis in enumerate(bases):
            rows = by_basis[basis]
            if len(rows) != dim:
                raise ValueError(
                    f"basis {basis!r} lists {len(rows)} outcomes, expected {dim}"
                )
            for i, rec in rows.items():
                probs[b, i] = rec.probability
                if rec.shots is not None:
                    counts[b, i] = rec.shots
                    have_counts = True
        return cls(
            n_qubits, tuple(bases), probs, counts if have_counts else None, mode, seed
        )

    def save_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            header = {"n_qubits": self.n_qubits, "mode": self.mode, "seed": self.seed}
            fh.write(jsonio.dumps(header))
            fh.write("\n")
            for rec in self.records():
                fh.write(
                    jsonio.dumps(
                        {
                            "basis": rec.basis,
                            "outcome": outcome_string(rec.outcome),
                            "p": rec.probability,
                            "shots": rec.shots,
                        }
                    )
                )
                fh.write("\n")

    @classmethod
    def load_jsonl(cls, path) -> "MeasurementDataset":
        with open(path, "r", encoding="utf-8") as fh:
            lines = [line for line in fh if line.strip()]
        if not lines:
            raise ValueError(f"dataset file {path} is empty")
        header = jsonio.loads(lines[0])
        records = []
        for line in lines[1:]:
            doc = jsonio.loads(line)
            records.append(
                MeasurementRecord(
                    doc["basis"],
                    parse_outcome(doc["outcome"]),
                    float(doc["p"]),
                    int(doc["shots"]) if doc.get("shots") is not None else None,
                )
            )
        seed = header.get("seed")
        return cls.from_records(
            int(header["n_qubits"]),
            records,
            mode=header.get("mode", "exact"),
            seed=int(seed) if seed is not None else None,
        )


def _sorted_unique_bases(bases, n_qubits: int) -> list[str]:
    out = sorted(set(bases))
    if not out:
        raise ValueError("at least one basis is required")
    for basis in out:
        validate_basis(basis, n_qubits)
    return out


def exact_dataset(rho, bases) -> MeasurementDataset:
    """Exact outcome probabilities of ``rho`` over the given bases."""
    mat = matrix_of(rho)
    n = qubit_count(mat.shape[0])
    basis_list = _sorted_unique_bases(bases, n)
    probs = np.stack([probabilities_matrix(mat, basis) for basis in basis_list])
    return MeasurementDataset(n, tuple(basis_list), probs, None, "exact", None)


def sample_dataset(rho, bases, shots_per_basis: int, seed: int) -> MeasurementDataset:
    """Empirical frequencies from multinomial sampling, reproducible per seed."""
    if shots_per_basis < 1:
        raise ValueError("shots_per_basis must be at least 1")
    mat = matrix_of(rho)
    n = qubit_count(mat.shape[0])
    basis_list = _sorted_unique_bases(bases, n)
    rng = np.random.default_rng(seed)
    counts = np.zeros((len(basis_list), 2**n), dtype=np.int64)
    for b, basis in enumerate(basis_list):
        p = np.clip(probabilities_matrix(mat, basis), 0.0, None)
        counts[b] = rng.multinomial(shots_per_basis, p / p.sum())
    probs = counts / float(shots_per_basis)
    return MeasurementDataset(n, tuple(basis_list), probs, counts, "sampled", int(seed))


def w_state(n_qubits: int) -> StateVector:
    """Equal superposition of all single-excitation computational states."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be at least 1")
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    for k in range(n_qubits):
        amps[1 << (n_qubits - 1 - k)] = 1.0
    return StateVector.normalized(amps)


def bell_states() -> tuple[StateVector, StateVector, StateVector, StateVector]:
    """The four two-qubit Bell states (phi+, phi-, psi+, psi-)."""
    phi_p = StateVector.normalized([1, 0, 0, 1])
    phi_m = StateVector.normalized([1, 0, 0, -1])
    psi_p = StateVector.normalized([0, 1, 1, 0])
    psi_m = StateVector.normalized([0, 1, -1, 0])
    return phi_p, phi_m, psi_p, psi_m


def bell_mixture(eigenvalues=(0.9, 0.09, 0.009, 0.001)) -> DensityMatrix:
    """Mixture of the four Bell states with the given weights."""
    p = np.asarray(eigenvalues, dtype=float)
    if p.shape != (4,) or p.min() < 0 or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("eigenvalues must be four nonnegative numbers summing to 1")
    basis = np.column_stack([s.amplitudes for s in bell_states()])
    return DensityMatrix.from_eigensystem(p, basis)


def make_w_mixture(
    n_qubits: int,
    spectrum,
    seed: int,
    perturbation: float = 0.25,
) -> DensityMatrix:
    """Mixed state whose dominant eigenstate is a perturbed W state.

    The requested leading eigenvalues are reproduced exactly; the remaining
    probability mass is spread uniformly over the rest of the spectrum.  The
    eigenbasis is the W-state-anchored orthonormal basis rotated by a seeded
    random unitary with rotation angle at most ``perturbation`` radians, so
    ``perturbation=0`` yields an unperturbed W-state dominant eigenstate.
    """
    dim = 2**n_qubits
    requested = np.asarray(spectrum, dtype=float)
    if requested.ndim != 1 or requested.size < 1 or requested.size > dim:
        raise ValueError("spectrum must be a nonempty vector of at most dim entries")
    if requested.min() < 0 or requested.sum() > 1 + 1e-12:
        raise ValueError("spectrum entries must be nonnegative and sum to at most 1")
    if np.any(np.diff(requested) > 1e-12):
        raise ValueError("spectrum must be non-increasing")
    leftover = max(1.0 - requested.sum(), 0.0)
    n_rest = dim - requested.size
    if n_rest == 0:
        if leftover > 1e-12:
            raise ValueError("a full-length spectrum must sum to 1")
        rest = np.empty(0)
    else:
        rest = np.full(n_rest, leftover / n_rest)
        if rest.size and rest[0] > requested[-1] + 1e-12:
            raise ValueError(
                "uniform remainder exceeds the smallest requested eigenvalue"
            )
    eigenvalues = np.concatenate([requested, rest])

    anchor = np.column_stack([w_state(n_qubits).amplitudes, np.eye(dim)])
    q, _ = np.linalg.qr(anchor)
    overlap = complex(np.vdot(w_state(n_qubits).amplitudes, q[:, 0]))
    if overlap.real < 0:
        q = -q

    if perturbation != 0.0:
        rng = np.random.default_rng(seed)
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        herm = 0.5 * (g + g.conj().T)
        herm /= np.abs(np.linalg.eigvalsh(herm)).max()
        hv, hw = np.linalg.eigh(herm)
        unitary = (hw * np.exp(1j * perturbation * hv)) @ hw.conj().T
        q = unitary @ q

    return DensityMatrix.from_eigensystem(eigenvalues, q)
