"""Sparse Ising problem representation and energy algebra.

The energy of a spin configuration s in {-1,+1}^d is

    E(s) = offset + s^T J s + h^T s

with J real symmetric and zero on the diagonal.  J is stored as an
upper-triangular triplet list (i, j, w) with i < j; the symmetric double
counting (each pair contributes twice to s^T J s) is applied inside the
energy and matvec kernels.  Instances are immutable after construction
and safe to share between workers.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


def _as_index_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        rounded = np.asarray(values, dtype=np.float64)
        if not np.all(rounded == np.round(rounded)):
            raise ValueError(f"{name} indices must be integers")
        arr = rounded.astype(np.int64)
    return arr.astype(np.int64).ravel()


class IsingModel:
    """Immutable sparse Ising instance: couplings J, fields h, constant offset."""

    __slots__ = ("d", "offset", "fields", "coup_i", "coup_j", "coup_w",
                 "_csr", "_row_abs")

    def __init__(self, d: int, couplings: Iterable = (), fields=None,
                 offset: float = 0.0, *, strict: bool = False):
        triples = list(couplings)
        if triples:
            arr = np.asarray(triples, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise ValueError("couplings must be (i, j, weight) triples")
            rows, cols, w = arr[:, 0], arr[:, 1], arr[:, 2]
        else:
            rows = cols = w = np.empty(0)
        self._init_from_arrays(d, rows, cols, w, fields, offset, strict)

    @classmethod
    def from_arrays(cls, d: int, rows, cols, weights, fields=None,
                    offset: float = 0.0, *, strict: bool = False) -> "IsingModel":
        """Fast constructor from parallel index/weight arrays."""
        self = cls.__new__(cls)
        self._init_from_arrays(d, rows, cols, weights, fields, offset, strict)
        return self

    def _init_from_arrays(self, d, rows, cols, weights, fields, offset, strict):
        d = int(d)
        if d < 0:
            raise ValueError("spin count must be non-negative")
        ci = _as_index_array(rows, "row")
        cj = _as_index_array(cols, "col")
        w = np.asarray(weights, dtype=np.float64).ravel()
        if not (ci.size == cj.size == w.size):
            raise ValueError("coupling arrays must have equal length")
        if w.size:
            if not np.all(np.isfinite(w)):
                raise ValueError("coupling weights must be finite")
            if ci.min(initial=0) < 0 or cj.min(initial=0) < 0 \
                    or ci.max(initial=-1) >= d or cj.max(initial=-1) >= d:
                raise ValueError("coupling index out of range")
            if np.any(ci == cj):
                raise ValueError("self couplings (i == i) are not allowed")
            # canonical upper-triangular storage
            lo = np.minimum(ci, cj)
            hi = np.maximum(ci, cj)
            order = np.lexsort((hi, lo))
            lo, hi, w = lo[order], hi[order], w[order]
            key = lo * d + hi
            uniq, inverse = np.unique(key, return_inverse=True)
            if uniq.size != key.size:
                if strict:
                    raise ValueError("duplicate coupling (i, j) pair")
                merged = np.bincount(inverse, weights=w, minlength=uniq.size)
                lo = (uniq // d).astype(np.int64)
                hi = (uniq % d).astype(np.int64)
                w = merged
            keep = w != 0.0
            if not np.all(keep):
                lo, hi, w = lo[keep], hi[keep], w[keep]
            ci, cj = lo, hi
        else:
            ci = np.empty(0, dtype=np.int64)
            cj = np.empty(0, dtype=np.int64)
            w = np.empty(0, dtype=np.float64)

        if fields is None:
            h = np.zeros(d)
        else:
            h = np.asarray(fields, dtype=np.float64).ravel().copy()
        if h.shape != (d,):
            raise ValueError(f"fields must have length {d}, got {h.shape}")
        if h.size and not np.all(np.isfinite(h)):
            raise ValueError("fields must be finite")
        offset = float(offset)
        if not np.isfinite(offset):
            raise ValueError("offset must be finite")

        for a in (ci, cj, w, h):
            a.flags.writeable = False
        self.d = d
        self.offset = offset
        self.fields = h
        self.coup_i = ci
        self.coup_j = cj
        self.coup_w = w
        self._csr = None
        self._row_abs = None

    # -- derived structure -------------------------------------------------

    @property
    def num_couplings(self) -> int:
        return int(self.coup_w.size)

    @property
    def couplings(self) -> list[tuple[int, int, float]]:
        """Couplings as a sorted list of (i, j, weight) tuples."""
        return [(int(i), int(j), float(w))
                for i, j, w in zip(self.coup_i, self.coup_j, self.coup_w)]

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric CSR form of J (both triangles materialized)."""
        if self._csr is None:
            rows = np.concatenate([self.coup_i, self.coup_j])
            cols = np.concatenate([self.coup_j, self.coup_i])
            vals = np.concatenate([self.coup_w, self.coup_w])
            self._csr = sp.csr_matrix((vals, (rows, cols)), shape=(self.d, self.d))
        return self._csr

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """J @ x for a dense vector x."""
        return self.adjacency().dot(x)

    @property
    def row_abs_sums(self) -> np.ndarray:
        """Per-spin total coupling mass sum_j |J_ij|."""
        if self._row_abs is None:
            absw = np.abs(self.coup_w)
            acc = np.bincount(self.coup_i, weights=absw, minlength=self.d) \
                + np.bincount(self.coup_j, weights=absw, minlength=self.d)
            acc.flags.writeable = False
            self._row_abs = acc
        return self._row_abs

    @property
    def degrees(self) -> np.ndarray:
        """Structural degree of each spin (count of stored couplings touching it)."""
        return np.bincount(self.coup_i, minlength=self.d) \
            + np.bincount(self.coup_j, minlength=self.d)

    # -- misc ----------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, IsingModel):
            return NotImplemented
        return (self.d == other.d
                and self.offset == other.offset
                and np.array_equal(self.coup_i, other.coup_i)
                and np.array_equal(self.coup_j, other.coup_j)
                and np.array_equal(self.coup_w, other.coup_w)
                and np.array_equal(self.fields, other.fields))

    __hash__ = None

    def __repr__(self) -> str:
        return (f"IsingModel(d={self.d}, couplings={self.num_couplings}, "
                f"offset={self.offset!r})")


def as_spin_vector(d: int, s) -> np.ndarray:
    """Validate and convert a configuration to a float64 array of +/-1."""
    arr = np.asarray(s, dtype=np.float64).ravel()
    if arr.shape != (d,):
        raise ValueError(f"configuration has length {arr.size}, expected {d}")
    if arr.size and not np.all(np.abs(arr) == 1.0):
        raise ValueError("configuration entries must be exactly -1 or +1")
    return arr


def as_flip_indices(d: int, flips) -> np.ndarray:
    """Validate a flip set: unique indices inside [0, d)."""
    if isinstance(flips, (set, frozenset)):
        idx = np.fromiter(sorted(flips), dtype=np.int64, count=len(flips))
    else:
        idx = _as_index_array(flips, "flip")
    if idx.size:
        if idx.min() < 0 or idx.max() >= d:
            raise ValueError("flip index out of range")
        if np.unique(idx).size != idx.size:
            raise ValueError("flip set contains duplicate indices")
    return idx


def energy(model: IsingModel, s) -> float:
    """E(s) = offset + 2 sum_{i<j} J_ij s_i s_j + h . s."""
    sv = as_spin_vector(model.d, s)
    quad = 2.0 * float(np.dot(model.coup_w, sv[model.coup_i] * sv[model.coup_j]))
    return model.offset + quad + float(np.dot(model.fields, sv))


def apply_flips(s, flips) -> np.ndarray:
    """Negate exactly the entries listed in the flip set (involution)."""
    arr = np.array(s, dtype=np.float64).ravel()
    idx = as_flip_indices(arr.size, flips)
    arr[idx] = -arr[idx]
    return arr


def flip_delta(model: IsingModel, s, flips) -> float:
    """Energy change E(flip(s, F)) - E(s) in closed form.

    Uses the local-field expression -4 sum_{i in F} s_i (J s)_i
    - 2 sum_{i in F} h_i s_i, plus the +8 sum_{i<j in F} J_ij s_i s_j
    correction for coupled pairs inside the flip set (those pair terms
    are invariant under the joint flip, but the local-field sum counts
    them as if they changed).
    """
    sv = as_spin_vector(model.d, s)
    idx = as_flip_indices(model.d, flips)
    if idx.size == 0:
        return 0.0
    js = model.matvec(sv)
    delta = -4.0 * float(np.dot(sv[idx], js[idx])) \
        - 2.0 * float(np.dot(model.fields[idx], sv[idx]))
    if idx.size > 1 and model.num_couplings:
        in_f = np.zeros(model.d, dtype=bool)
        in_f[idx] = True
        both = in_f[model.coup_i] & in_f[model.coup_j]
        if np.any(both):
            delta += 8.0 * float(np.dot(
                model.coup_w[both],
                sv[model.coup_i[both]] * sv[model.coup_j[both]]))
    return delta


def dense_matvec(model: IsingModel, x) -> np.ndarray:
    """J @ x using the stored symmetric couplings."""
    xv = np.asarray(x, dtype=np.float64).ravel()
    if xv.shape != (model.d,):
        raise ValueError(f"vector has length {xv.size}, expected {model.d}")
    return model.matvec(xv)
