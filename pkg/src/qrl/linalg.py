"""Complex linear algebra primitives for qubit density matrices.

Matrices are plain ``numpy`` arrays (dense) or ``scipy.sparse`` CSR arrays
(sparse-by-row).  Basis index ``i`` of an n-qubit space is read big-endian:
qubit 1 is the most significant bit, so ``kron(a, b)`` places ``a`` on the
leading qubits and tracing out the last qubit pairs rows ``2i`` and ``2i+1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .config import TOL_HERM, TOL_ORTHO, TOL_PSD, TOL_TRACE, caps
from .errors import CapacityError, DomainError, InvariantViolation

Matrix = Union[np.ndarray, sp.sparray, sp.spmatrix]

STORAGES = ("dense", "sparse", "diagonal")


def is_sparse(a) -> bool:
    return sp.issparse(a)


def qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise DomainError(f"dimension {dim} is not a power of two")
    return n


def _check_dim(dim: int, what: str = "matrix") -> None:
    limit = caps().max_dim
    if dim > limit:
        raise CapacityError(f"{what} dimension {dim} exceeds cap {limit}", required=dim)


def max_abs(a) -> float:
    if is_sparse(a):
        return float(abs(a).max()) if a.nnz else 0.0
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def max_abs_diff(a, b) -> float:
    if is_sparse(a) or is_sparse(b):
        return max_abs(sp.csr_array(a) - sp.csr_array(b))
    return max_abs(np.asarray(a) - np.asarray(b))


def hermitian_defect(a) -> float:
    if is_sparse(a):
        return max_abs(a - a.conj().T)
    a = np.asarray(a)
    return max_abs(a - a.conj().T)


# ---------------------------------------------------------------------------
# Kronecker product and partial trace


def kron(a, b, convention: str = "standard"):
    """Kronecker product.

    ``standard`` is ``(a⊗b)[i*rb + r, j*cb + c] = a[i, j] * b[r, c]``.
    ``swapped`` swaps the roles of the factors so that the first factor varies
    fastest: ``[a1, b1] ⊗ [a2, b2] = [a1a2, b1a2, a1b2, b1b2]``.
    """
    if convention == "swapped":
        a, b = b, a
    elif convention != "standard":
        raise DomainError(f"unknown kron convention {convention!r}")
    rows = (a.shape[0] if a.ndim else 1) * (b.shape[0] if b.ndim else 1)
    _check_dim(rows, "kron")
    if is_sparse(a) or is_sparse(b):
        return sp.kron(sp.csr_array(a), sp.csr_array(b), format="csr")
    return np.kron(a, b)


def kron_all(factors: Sequence, convention: str = "standard"):
    out = factors[0]
    for f in factors[1:]:
        out = kron(out, f, convention)
    return out


def partial_trace_matrix(a, k: int = 1):
    """Trace out the last ``k`` qubits of a dense or sparse square matrix."""
    dim = a.shape[0]
    n = qubits_of(dim)
    if k < 0 or k > n:
        raise DomainError(f"cannot trace {k} qubits out of {n}")
    if k == 0:
        return a.copy()
    t = 1 << k
    keep = dim // t
    if is_sparse(a):
        c = sp.coo_array(a)
        mask = (c.row % t) == (c.col % t)
        out = sp.coo_array(
            (c.data[mask], (c.row[mask] // t, c.col[mask] // t)), shape=(keep, keep)
        )
        return out.tocsr()
    a = np.asarray(a)
    return np.einsum("ajbj->ab", a.reshape(keep, t, keep, t))


# ---------------------------------------------------------------------------
# Density matrices


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density matrix on ``qubits`` qubits.

    ``data`` is a dense 2-D array, a sparse CSR array, or for ``diagonal``
    storage the 1-D vector of diagonal weights.
    """

    data: object
    qubits: int
    storage: str

    def __post_init__(self):
        if self.storage not in STORAGES:
            raise DomainError(f"unknown storage {self.storage!r}")
        dim = self.data.shape[0]
        if dim != 1 << self.qubits:
            raise DomainError(f"dimension {dim} does not match {self.qubits} qubits")
        if self.storage == "diagonal":
            if self.data.ndim != 1:
                raise DomainError("diagonal storage needs a 1-D weight vector")
        elif self.data.shape != (dim, dim):
            raise DomainError("density matrix must be square")

    @property
    def dim(self) -> int:
        return 1 << self.qubits

    def diagonal(self) -> np.ndarray:
        if self.storage == "diagonal":
            return np.asarray(self.data, dtype=float)
        return np.real(np.asarray(self.data.diagonal()))

    def to_dense(self) -> np.ndarray:
        if self.dim > caps().dense_dim:
            raise CapacityError(
                f"dense materialization of dimension {self.dim} exceeds cap {caps().dense_dim}",
                required=self.dim,
            )
        if self.storage == "dense":
            return np.asarray(self.data)
        if self.storage == "sparse":
            return self.data.toarray()
        return np.diag(np.asarray(self.data, dtype=complex))

    def to_sparse(self):
        if self.storage == "sparse":
            return self.data
        if self.storage == "diagonal":
            return sp.diags_array(np.asarray(self.data, dtype=complex), format="csr")
        return sp.csr_array(self.data)

    def matrix(self):
        """Dense or sparse 2-D form, whichever is native."""
        if self.storage == "diagonal":
            return self.to_sparse()
        return self.data

    def trace(self) -> complex:
        if self.storage == "diagonal":
            return complex(np.sum(self.data))
        return complex(self.data.diagonal().sum())

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in descending order."""
        if self.storage == "diagonal":
            vals = np.asarray(self.data, dtype=float)
        elif self.storage == "sparse":
            vals = sparse_block_eigvalsh(self.data)
        else:
            vals = np.linalg.eigvalsh(self.data)
        return np.sort(vals)[::-1]

    def validate(self, psd: bool = True) -> "DensityMatrix":
        if self.storage == "diagonal":
            w = np.asarray(self.data)
            if np.iscomplexobj(w) and max_abs(w.imag) > TOL_HERM:
                raise InvariantViolation("diagonal weights must be real")
        else:
            h = hermitian_defect(self.data)
            if h > TOL_HERM:
                raise InvariantViolation(f"not Hermitian: defect {h:.3e}")
        tr = self.trace()
        if abs(tr - 1) > TOL_TRACE:
            raise InvariantViolation(f"trace {tr.real:.12g} differs from 1")
        if psd:
            low = float(self.eigenvalues()[-1])
            if low < -TOL_PSD:
                raise InvariantViolation(f"negative eigenvalue {low:.3e}")
        return self


def density(data, storage: str | None = None, check: bool = True) -> DensityMatrix:
    """Wrap an array as a ``DensityMatrix`` and validate it."""
    if storage is None:
        if is_sparse(data):
            storage = "sparse"
        elif np.ndim(data) == 1:
            storage = "diagonal"
        else:
            storage = "dense"
    if storage == "sparse":
        data = sp.csr_array(data, dtype=complex)
    elif storage == "dense":
        data = np.asarray(data, dtype=complex)
    else:
        data = np.asarray(data, dtype=float)
    rho = DensityMatrix(data, qubits_of(data.shape[0]), storage)
    return rho.validate() if check else rho


def density_kron(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    if a.storage == b.storage == "diagonal":
        _check_dim(a.dim * b.dim, "kron")
        return DensityMatrix(np.kron(a.data, b.data), a.qubits + b.qubits, "diagonal")
    if a.storage == b.storage == "dense":
        return DensityMatrix(kron(a.data, b.data), a.qubits + b.qubits, "dense")
    return DensityMatrix(kron(a.to_sparse(), b.to_sparse()), a.qubits + b.qubits, "sparse")


def partial_trace_last(rho: DensityMatrix, k: int = 1) -> DensityMatrix:
    """Trace out the last ``k`` qubits: ``σ[i, j] = Σ_b ρ[2i+b, 2j+b]`` for k=1."""
    if not isinstance(rho, DensityMatrix):
        rho = density(rho, check=False)
    if rho.qubits < 1 or k > rho.qubits:
        raise DomainError(f"cannot trace {k} qubit(s) out of {rho.qubits}")
    if rho.storage == "diagonal":
        w = np.asarray(rho.data).reshape(-1, 1 << k).sum(axis=1)
        return DensityMatrix(w, rho.qubits - k, "diagonal")
    return DensityMatrix(partial_trace_matrix(rho.data, k), rho.qubits - k, rho.storage)


def trace_distance_max(a: DensityMatrix, b: DensityMatrix) -> float:
    """Entrywise max deviation between two density matrices of equal size."""
    if a.qubits != b.qubits:
        raise DomainError("qubit counts differ")
    if a.storage == b.storage == "diagonal":
        return max_abs(np.asarray(a.data) - np.asarray(b.data))
    if "sparse" in (a.storage, b.storage) or "diagonal" in (a.storage, b.storage):
        return max_abs(a.to_sparse() - b.to_sparse())
    return max_abs(a.data - b.data)


# ---------------------------------------------------------------------------
# Spectral tools


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    values: np.ndarray  # descending
    vectors: np.ndarray  # columns paired with values

    def reconstruct(self) -> np.ndarray:
        v = self.vectors
        return (v * self.values) @ v.conj().T


def _canonical_phase(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-8)
        if idx.size:
            lead = col[idx[0]]
            out[:, j] = col * (abs(lead) / lead)
    return out


def _lex_key(col: np.ndarray) -> tuple:
    r = np.round(col, 10) + 0.0  # normalise -0.0
    return tuple(x for z in r for x in (-z.real, -z.imag))


def hermitian_eig(a, tie_tol: float = 1e-10) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Eigenvectors get a fixed phase (first non-negligible entry real positive);
    within a group of tied eigenvalues the vectors are ordered by descending
    lexicographic order of their entries rounded to 10 decimals.
    """
    if is_sparse(a):
        if a.shape[0] > caps().dense_dim:
            raise CapacityError("sparse input too large for dense eigensolver", required=a.shape[0])
        a = a.toarray()
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("eigendecomposition needs a square matrix")
    h = hermitian_defect(a)
    if h > TOL_HERM:
        raise DomainError(f"matrix is not Hermitian (defect {h:.3e})")
    vals, vecs = np.linalg.eigh((a + a.conj().T) / 2)
    vals = vals[::-1].copy()
    vecs = _canonical_phase(vecs[:, ::-1])
    order = []
    start = 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[start] - vals[i] > tie_tol * max(1.0, abs(vals[start])):
            group = list(range(start, i))
            group.sort(key=lambda j: _lex_key(vecs[:, j]))
            order.extend(group)
            start = i
    order = np.array(order, dtype=int)
    return SpectralDecomposition(vals[order], np.ascontiguousarray(vecs[:, order]))


def _component_blocks(a):
    """Split a sparse Hermitian matrix into its connected diagonal blocks.

    Yields ``(members, blocks)`` per block size: ``members[c]`` lists the basis
    indices of component ``c`` and ``blocks[c]`` is its dense sub-matrix.
    """
    c = sp.coo_array(a)
    dim = a.shape[0]
    pattern = sp.coo_array((np.ones(c.nnz), (c.row, c.col)), shape=a.shape)
    _, labels = connected_components(pattern, directed=False)
    sizes = np.bincount(labels)
    order = np.argsort(labels, kind="stable")
    starts = np.cumsum(sizes) - sizes
    pos = np.empty(dim, dtype=np.int64)
    pos[order] = np.arange(dim) - starts[labels[order]]
    for s in np.unique(sizes):
        comps = np.flatnonzero(sizes == s)
        slot = np.full(len(sizes), -1, dtype=np.int64)
        slot[comps] = np.arange(len(comps))
        members = np.empty((len(comps), s), dtype=np.int64)
        node_mask = sizes[labels] == s
        nodes = np.flatnonzero(node_mask)
        members[slot[labels[nodes]], pos[nodes]] = nodes
        blocks = np.zeros((len(comps), s, s), dtype=complex)
        emask = node_mask[c.row]
        r, col, v = c.row[emask], c.col[emask], c.data[emask]
        np.add.at(blocks, (slot[labels[r]], pos[r], pos[col]), v)
        yield members, blocks


def sparse_block_eigvalsh(a) -> np.ndarray:
    """All eigenvalues of a sparse Hermitian matrix via its connected blocks."""
    c = sp.coo_array(a)
    if np.all(c.row == c.col):
        return np.real(np.asarray(a.diagonal()))
    parts = [np.linalg.eigvalsh(blocks).ravel() for _, blocks in _component_blocks(a)]
    return np.concatenate(parts) if parts else np.zeros(0)


def sparse_spectral_projector(a, threshold: float = 1e-12):
    """Sparse projector onto the eigenvectors of ``a`` with eigenvalue > threshold."""
    rows, cols, vals = [], [], []
    for members, blocks in _component_blocks(a):
        w, v = np.linalg.eigh(blocks)
        keep = (w > threshold).astype(float)
        p = np.einsum("cik,ck,cjk->cij", v, keep, v.conj())
        s = members.shape[1]
        rows.append(np.repeat(members, s, axis=1).ravel())
        cols.append(np.tile(members, (1, s)).ravel())
        vals.append(p.ravel())
    r, c, v = (np.concatenate(x) for x in (rows, cols, vals))
    nz = np.abs(v) > 1e-15
    return sp.coo_array((v[nz], (r[nz], c[nz])), shape=a.shape).tocsr()


def projector_from(vectors, dim: int | None = None, tol: float = TOL_ORTHO) -> np.ndarray:
    """Projector ``Σ |v⟩⟨v|`` onto the span of an orthonormal list."""
    vecs = np.asarray(vectors, dtype=complex)
    if vecs.size == 0:
        if dim is None:
            raise DomainError("empty vector list needs an explicit dimension")
        return np.zeros((dim, dim), dtype=complex)
    if vecs.ndim == 1:
        vecs = vecs[None, :]
    if dim is not None and vecs.shape[1] != dim:
        raise DomainError(f"vectors have dimension {vecs.shape[1]}, expected {dim}")
    gram = vecs.conj() @ vecs.T
    dev = np.abs(gram - np.eye(len(vecs)))
    if dev.max() > tol:
        i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
        i, j = sorted((int(i), int(j)))
        raise DomainError(f"vectors {i} and {j} are not orthonormal (deviation {dev[i, j]:.3e})")
    return vecs.T @ vecs.conj()


def trace_inner(rho, p) -> float:
    """Real part of ``Tr(ρ p)``; the imaginary part must vanish within 1e-9.

    ``p`` may be a 1-D array, read as a diagonal matrix.
    """
    if not isinstance(rho, DensityMatrix):
        rho = density(rho, check=False)
    p_diag = np.ndim(p) == 1 and not is_sparse(p)
    if p.shape[0] != rho.dim or (not p_diag and p.shape != (rho.dim, rho.dim)):
        raise DomainError(f"dimension mismatch: state {rho.dim}, operator {p.shape}")
    if rho.storage == "diagonal":
        d = np.asarray(p) if p_diag else np.asarray(p.diagonal())
        t = complex(np.dot(rho.data, d))
    elif p_diag:
        t = complex(np.dot(np.asarray(rho.data.diagonal()), p))
    elif rho.storage == "sparse" or is_sparse(p):
        t = complex(sp.csr_array(rho.data).multiply(sp.csr_array(p).T).sum())
    else:
        t = complex(np.einsum("ij,ji->", rho.data, np.asarray(p)))
    if abs(t.imag) > 1e-9:
        raise InvariantViolation(f"Tr(rho p) has imaginary part {t.imag:.3e}")
    return t.real


class ComplementEig(NamedTuple):
    value: float
    vector: np.ndarray | None
    full: bool


def top_eigvec_in_complement(a, basis) -> ComplementEig:
    """Largest eigenpair of ``a`` compressed to the orthocomplement of ``basis``."""
    a = a.toarray() if is_sparse(a) else np.asarray(a, dtype=complex)
    dim = a.shape[0]
    b = np.asarray(basis, dtype=complex).reshape(-1, dim)
    k = b.shape[0]
    if k >= dim:
        return ComplementEig(0.0, None, True)
    if k:
        # rows k.. of the right singular vectors span the complement of span(basis)
        _, _, vh = np.linalg.svd(b.conj(), full_matrices=True)
        comp = vh[k:].conj().T
    else:
        comp = np.eye(dim, dtype=complex)
    compressed = comp.conj().T @ a @ comp
    dec = hermitian_eig((compressed + compressed.conj().T) / 2, tie_tol=1e-12)
    vec = comp @ dec.vectors[:, 0]
    vec = _canonical_phase(vec[:, None])[:, 0]
    return ComplementEig(float(dec.values[0]), vec / np.linalg.norm(vec), False)


# ---------------------------------------------------------------------------
# Matrix JSON


def matrix_to_json(a, storage: str | None = None) -> dict:
    if storage is None:
        storage = "sparse" if is_sparse(a) else "dense"
    dim = a.shape[0]
    if storage == "sparse":
        c = sp.coo_array(a)
        order = np.lexsort((c.col, c.row))
        entries = [
            [int(c.row[i]), int(c.col[i]), float(c.data[i].real), float(c.data[i].imag)]
            for i in order
        ]
    else:
        dense = a.toarray() if is_sparse(a) else np.asarray(a, dtype=complex)
        entries = [[float(z.real), float(z.imag)] for z in dense.ravel()]
    return {"dim": dim, "storage": storage, "entries": entries}


def matrix_from_json(obj: dict):
    try:
        dim = int(obj["dim"])
        storage = obj["storage"]
        entries = obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed matrix JSON: {exc}") from exc
    if storage == "dense":
        if len(entries) != dim * dim:
            raise DomainError(f"dense matrix needs {dim * dim} entries, got {len(entries)}")
        arr = np.array([complex(re, im) for re, im in entries], dtype=complex)
        return arr.reshape(dim, dim)
    if storage == "sparse":
        if not entries:
            return sp.csr_array((dim, dim), dtype=complex)
        e = np.asarray(entries, dtype=float)
        rows, cols = e[:, 0].astype(int), e[:, 1].astype(int)
        if rows.min() < 0 or cols.min() < 0 or rows.max() >= dim or cols.max() >= dim:
            raise DomainError("sparse index out of range")
        return sp.coo_array((e[:, 2] + 1j * e[:, 3], (rows, cols)), shape=(dim, dim)).tocsr()
    raise DomainError(f"unknown storage {storage!r}")
