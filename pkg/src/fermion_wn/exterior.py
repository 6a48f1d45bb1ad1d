"""Sparse antisymmetric tensor algebra over a finite set of mode ids.

Tensors are stored in wedge coordinates: an element of degree ``n`` is
``sum_I c_I e_{i1} ^ ... ^ e_{in}`` over strictly increasing index tuples
``I``, where ``e_I^`` is the antisymmetrized tensor product with the
``1/n!`` normalisation.  The full-tensor component of ``e_I^`` at an
ordering of ``I`` is therefore ``sign / n!``.  The ``1/n!`` never enters a
stored coefficient; it only appears in the inner product.

Dense helpers (``to_dense``, ``antisymmetrize`` on arrays,
``contract_right`` on arrays) expand everything into full tensors and are
used as brute-force references for the sparse routines.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

Key = tuple[int, ...]

_ZERO_TOL = 0.0


def permutation_sign(seq: Iterable[int]) -> int:
    """Sign of the permutation sorting ``seq``; 0 if ``seq`` has repeats."""
    items = list(seq)
    if len(set(items)) != len(items):
        return 0
    sign = 1
    # cycle decomposition on the rank positions
    order = sorted(range(len(items)), key=items.__getitem__)
    seen = [False] * len(items)
    for start in range(len(items)):
        if seen[start]:
            continue
        length = 0
        pos = start
        while not seen[pos]:
            seen[pos] = True
            pos = order[pos]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def merge_sign(first: Key, second: Key) -> int:
    """Sign of concatenating two increasing tuples and sorting the result.

    Returns 0 when the tuples share an element.
    """
    if set(first) & set(second):
        return 0
    # count inversions between the blocks: pairs (a in first, b in second) with a > b
    inversions = 0
    j = 0
    for a in first:
        while j < len(second) and second[j] < a:
            j += 1
        inversions += j
    return -1 if inversions % 2 else 1


def _clean(coeffs: Mapping, tol: float = _ZERO_TOL) -> dict:
    return {k: complex(v) for k, v in coeffs.items() if abs(v) > tol}


@dataclass(frozen=True)
class AntisymTensor:
    """Element of the ``degree``-th exterior power in wedge coordinates.

    Parameters
    ----------
    degree : int
        Number of tensor slots.
    coeffs : dict
        Map from strictly increasing ``degree``-tuples of mode ids to
        complex coefficients.  Zeros are not stored.
    """

    degree: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, val in self.coeffs.items():
            key = tuple(int(i) for i in key)
            if len(key) != self.degree:
                raise ValueError(f"key {key} does not have degree {self.degree}")
            if any(a >= b for a, b in zip(key, key[1:])):
                raise ValueError(f"key {key} is not strictly increasing")
            if val != 0:
                clean[key] = complex(val)
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def zero(cls, degree: int) -> "AntisymTensor":
        return cls(degree, {})

    @classmethod
    def scalar(cls, value: complex) -> "AntisymTensor":
        return cls(0, {(): value} if value != 0 else {})

    @classmethod
    def basis(cls, *modes: int) -> "AntisymTensor":
        """Return ``e_{m1} ^ ... ^ e_{mk}`` (modes in any order)."""
        sign = permutation_sign(modes)
        if sign == 0:
            return cls.zero(len(modes))
        return cls(len(modes), {tuple(sorted(modes)): sign})

    @classmethod
    def vector(cls, coords: Mapping[int, complex] | np.ndarray) -> "AntisymTensor":
        """Degree-1 tensor from a coordinate map or a dense array."""
        if isinstance(coords, np.ndarray):
            coords = {i: c for i, c in enumerate(coords) if c != 0}
        return cls(1, {(int(i),): c for i, c in coords.items()})

    def __add__(self, other: "AntisymTensor") -> "AntisymTensor":
        if other.degree != self.degree:
            raise ValueError("degree mismatch in addition")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return AntisymTensor(self.degree, out)

    def __neg__(self) -> "AntisymTensor":
        return AntisymTensor(self.degree, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: "AntisymTensor") -> "AntisymTensor":
        return self + (-other)

    def __mul__(self, scalar: complex) -> "AntisymTensor":
        return AntisymTensor(self.degree, {k: scalar * v for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def modes(self) -> set[int]:
        return {i for key in self.coeffs for i in key}

    def max_abs_diff(self, other: "AntisymTensor") -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self.coeffs.get(k, 0) - other.coeffs.get(k, 0)) for k in keys), default=0.0)


@dataclass(frozen=True)
class BiKernel:
    """Kernel separately antisymmetric in its outgoing and incoming slots.

    ``coeffs[(S, T)] = c`` stands for ``c * e_S^ (x) e_T^`` with ``S`` the
    increasing tuple of outgoing modes and ``T`` the incoming ones.  The
    incoming slots are functionals: they are contracted through a
    :class:`PairingTable` when the kernel acts on a vector.
    """

    out_degree: int
    in_degree: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (out_key, in_key), val in self.coeffs.items():
            out_key = tuple(int(i) for i in out_key)
            in_key = tuple(int(i) for i in in_key)
            if len(out_key) != self.out_degree or len(in_key) != self.in_degree:
                raise ValueError("kernel key has the wrong bidegree")
            for key in (out_key, in_key):
                if any(a >= b for a, b in zip(key, key[1:])):
                    raise ValueError(f"kernel key {key} is not strictly increasing")
            if val != 0:
                clean[(out_key, in_key)] = clean.get((out_key, in_key), 0) + complex(val)
        object.__setattr__(self, "coeffs", {k: v for k, v in clean.items() if v != 0})

    @classmethod
    def from_general(cls, out_degree: int, in_degree: int, entries: Mapping) -> "BiKernel":
        """Project arbitrary ordered-slot entries onto the alt(out, in) form.

        ``entries`` maps ``(s_tuple, t_tuple)`` in any slot order (repeats
        allowed) to full-tensor components; the result is the separately
        antisymmetrized kernel in wedge coordinates.
        """
        acc: dict = {}
        for (s, t), val in entries.items():
            ss, st = permutation_sign(s), permutation_sign(t)
            if ss == 0 or st == 0 or val == 0:
                continue
            key = (tuple(sorted(s)), tuple(sorted(t)))
            acc[key] = acc.get(key, 0) + ss * st * val
        return cls(out_degree, in_degree, acc)

    def __add__(self, other: "BiKernel") -> "BiKernel":
        if (other.out_degree, other.in_degree) != (self.out_degree, self.in_degree):
            raise ValueError("bidegree mismatch in addition")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return BiKernel(self.out_degree, self.in_degree, out)

    def __mul__(self, scalar: complex) -> "BiKernel":
        return BiKernel(self.out_degree, self.in_degree, {k: scalar * v for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "BiKernel":
        return self * -1

    def max_abs_diff(self, other: "BiKernel") -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self.coeffs.get(k, 0) - other.coeffs.get(k, 0)) for k in keys), default=0.0)

    @classmethod
    def from_antisym(cls, tensor: AntisymTensor, out_degree: int) -> "BiKernel":
        """Reinterpret a fully antisymmetric tensor as a kernel.

        The first ``out_degree`` slots become outgoing.  Only meaningful
        when one side is empty, which is how pair kernels are built.
        """
        in_degree = tensor.degree - out_degree
        if out_degree == tensor.degree:
            return cls(out_degree, 0, {(k, ()): v for k, v in tensor.coeffs.items()})
        if out_degree == 0:
            return cls(0, in_degree, {((), k): v for k, v in tensor.coeffs.items()})
        raise ValueError("mixed split of an antisymmetric tensor needs from_general")


@dataclass(frozen=True)
class PairingTable:
    """Bilinear pairing ``<e_a, e_b> = (J e_a, e_b)`` for a basis permuted by ``J``.

    ``partner[a]`` is the mode ``b`` with ``J e_a = weight_conj * e_b``;
    ``weight[a] = <e_a, e_partner[a]>`` is a unit-modulus number.
    """

    partner: tuple
    weight: tuple

    def __post_init__(self):
        partner = tuple(int(p) for p in self.partner)
        weight = tuple(complex(w) for w in self.weight)
        n = len(partner)
        if len(weight) != n:
            raise ValueError("partner and weight lengths differ")
        for a, b in enumerate(partner):
            if not 0 <= b < n or partner[b] != a:
                raise ValueError("pairing partner map is not an involution")
            if abs(abs(weight[a]) - 1) > 1e-12:
                raise ValueError("pairing weights must have unit modulus")
            if abs(weight[b] - weight[a]) > 1e-12:
                raise ValueError("pairing is not symmetric: weight[partner[a]] != weight[a]")
        object.__setattr__(self, "partner", partner)
        object.__setattr__(self, "weight", weight)

    @classmethod
    def identity(cls, n_modes: int) -> "PairingTable":
        return cls(tuple(range(n_modes)), (1.0,) * n_modes)

    @property
    def n_modes(self) -> int:
        return len(self.partner)

    def matrix(self) -> np.ndarray:
        """Dense matrix ``P[a, b] = <e_a, e_b>``."""
        mat = np.zeros((self.n_modes, self.n_modes), dtype=complex)
        for a, (b, w) in enumerate(zip(self.partner, self.weight)):
            mat[a, b] = w
        return mat

    def pair(self, f: np.ndarray, g: np.ndarray) -> complex:
        """Bilinear ``<f, g>`` of two coordinate vectors."""
        return complex(f @ self.matrix() @ g)

    def dual_coordinates(self, f: np.ndarray) -> np.ndarray:
        """Coordinates ``h_b = <f, e_b>`` so that ``<f, g> = sum_b h_b g_b``."""
        out = np.zeros(self.n_modes, dtype=complex)
        out[list(self.partner)] = np.asarray(f, dtype=complex) * np.asarray(self.weight)
        return out


# ---------------------------------------------------------------------------
# Dense brute-force representation (reference implementations)
# ---------------------------------------------------------------------------


def to_dense(tensor: AntisymTensor, n_modes: int) -> np.ndarray:
    """Full ``n_modes**degree`` array of an antisymmetric tensor."""
    n = tensor.degree
    out = np.zeros((n_modes,) * n, dtype=complex)
    norm = 1.0 / math.factorial(n)
    for key, c in tensor.coeffs.items():
        for perm in itertools.permutations(range(n)):
            idx = tuple(key[p] for p in perm)
            out[idx] += permutation_sign(perm) * c * norm
    return out


def kernel_to_dense(kernel: BiKernel, n_modes: int) -> np.ndarray:
    """Full array of a kernel, outgoing slots first."""
    p, q = kernel.out_degree, kernel.in_degree
    out = np.zeros((n_modes,) * (p + q), dtype=complex)
    norm = 1.0 / (math.factorial(p) * math.factorial(q))
    for (s, t), c in kernel.coeffs.items():
        for ps in itertools.permutations(range(p)):
            for pt in itertools.permutations(range(q)):
                idx = tuple(s[i] for i in ps) + tuple(t[i] for i in pt)
                out[idx] += permutation_sign(ps) * permutation_sign(pt) * c * norm
    return out


def _antisymmetrize_dense(arr: np.ndarray) -> AntisymTensor:
    n = arr.ndim
    n_modes = arr.shape[0] if n else 0
    if n == 0:
        return AntisymTensor.scalar(complex(arr))
    coeffs = {}
    for key in itertools.combinations(range(n_modes), n):
        total = 0j
        for perm in itertools.permutations(range(n)):
            total += permutation_sign(perm) * arr[tuple(key[p] for p in perm)]
        if total != 0:
            coeffs[key] = total
    return AntisymTensor(n, coeffs)


def _antisymmetrize_sparse(degree: int, entries: Mapping[Key, complex]) -> AntisymTensor:
    coeffs: dict = {}
    for idx, val in entries.items():
        sign = permutation_sign(idx)
        if sign == 0 or val == 0:
            continue
        key = tuple(sorted(idx))
        coeffs[key] = coeffs.get(key, 0) + sign * val
    return AntisymTensor(degree, coeffs)


def antisymmetrize(general, degree: int | None = None) -> AntisymTensor:
    """Antisymmetrizer ``(1/n!) sum_sigma sign(sigma) T^sigma`` in wedge coordinates.

    Parameters
    ----------
    general : ndarray or dict or AntisymTensor
        A dense full tensor, or a sparse map from (arbitrary) index tuples
        to full-tensor components.  An :class:`AntisymTensor` is returned
        unchanged, which makes the operation idempotent by construction on
        the sparse side.
    degree : int, optional
        Required for an empty sparse map.

    Returns
    -------
    AntisymTensor
        The projection; the wedge coefficient on ``I`` equals
        ``sum_sigma sign(sigma) T(sigma(I))``.
    """
    if isinstance(general, AntisymTensor):
        return general
    if isinstance(general, (np.ndarray, np.generic)):
        return _antisymmetrize_dense(np.asarray(general))
    if degree is None:
        degree = len(next(iter(general))) if general else 0
    return _antisymmetrize_sparse(degree, general)


# ---------------------------------------------------------------------------
# Sparse algebra
# ---------------------------------------------------------------------------


def wedge(a: AntisymTensor, b: AntisymTensor) -> AntisymTensor:
    """Wedge product ``A(a (x) b)`` in wedge coordinates."""
    out: dict = {}
    for ka, ca in a.coeffs.items():
        for kb, cb in b.coeffs.items():
            sign = merge_sign(ka, kb)
            if sign == 0:
                continue
            key = tuple(sorted(ka + kb))
            out[key] = out.get(key, 0) + sign * ca * cb
    return AntisymTensor(a.degree + b.degree, out)


def inner_product(a: AntisymTensor, b: AntisymTensor) -> complex:
    """Hermitian inner product, conjugate-linear in ``a``."""
    if a.degree != b.degree:
        raise ValueError("inner product of tensors with different degrees")
    total = sum(np.conj(c) * b.coeffs.get(k, 0) for k, c in a.coeffs.items())
    return complex(total) / math.factorial(a.degree)


def weighted_norm(a: AntisymTensor, p: float, eigenvalues) -> float:
    """``|A^p a|_0`` with ``A e_j = eigenvalues[j] e_j``; ``p`` may be negative."""
    lam = np.asarray(eigenvalues, dtype=float)
    total = 0.0
    for key, c in a.coeffs.items():
        scale = float(np.prod(lam[list(key)] ** p)) if key else 1.0
        total += abs(c * scale) ** 2
    return math.sqrt(total / math.factorial(a.degree))


def _contract_dense(F: np.ndarray, g: np.ndarray, m: int, pmat: np.ndarray, left: bool) -> np.ndarray:
    if m > min(F.ndim, g.ndim):
        raise ValueError("contraction order exceeds a tensor degree")
    if m == 0:
        return np.multiply.outer(F, g)
    # pair g's contracted slots through the pairing matrix first
    g_slots = list(range(m)) if left else list(range(g.ndim - m, g.ndim))
    gp = g
    for ax in g_slots:
        gp = np.moveaxis(np.tensordot(pmat, gp, axes=([1], [ax])), 0, ax)
    f_axes = list(range(m)) if left else list(range(F.ndim - m, F.ndim))
    return np.tensordot(F, gp, axes=(f_axes, g_slots))


def _contract_sparse(F: Mapping, g: Mapping, m: int, pairing: PairingTable, left: bool) -> dict:
    out: dict = {}
    g_index: dict = {}
    for gk, gv in g.items():
        cut = gk[:m] if left else gk[len(gk) - m:]
        rest = gk[m:] if left else gk[: len(gk) - m]
        g_index.setdefault(cut, []).append((rest, gv))
    for fk, fv in F.items():
        cut = fk[:m] if left else fk[len(fk) - m:]
        free = fk[m:] if left else fk[: len(fk) - m]
        target = tuple(pairing.partner[i] for i in cut)
        w = np.prod([pairing.weight[i] for i in cut]) if cut else 1.0
        for rest, gv in g_index.get(target, ()):
            key = free + rest
            out[key] = out.get(key, 0) + fv * gv * w
    return {k: v for k, v in out.items() if v != 0}


def contract_right(F, g, m: int, pairing: PairingTable):
    """Right contraction ``F (x)_m g`` pairing the last ``m`` slots of both.

    Works on dense arrays (full tensors) or on sparse maps from index tuples
    to full-tensor components.  Contracted slots are paired through the
    bilinear form of ``pairing``; free slots are left untouched.
    """
    if isinstance(F, np.ndarray):
        return _contract_dense(F, np.asarray(g), m, pairing.matrix(), left=False)
    return _contract_sparse(F, g, m, pairing, left=False)


def contract_left(F, g, m: int, pairing: PairingTable):
    """Left contraction ``F (x)^m g`` pairing the first ``m`` slots of both."""
    if isinstance(F, np.ndarray):
        return _contract_dense(F, np.asarray(g), m, pairing.matrix(), left=True)
    return _contract_sparse(F, g, m, pairing, left=True)


def _kernel_items(F) -> tuple[int, int, list]:
    """Normalise the first argument of ``wedge_contract`` to (out, in, items)."""
    if isinstance(F, BiKernel):
        return F.out_degree, F.in_degree, [(s, t, c) for (s, t), c in F.coeffs.items()]
    raise TypeError("wedge_contract expects a BiKernel as its first argument")


def wedge_contract(F, g: AntisymTensor, m: int, pairing: PairingTable) -> AntisymTensor:
    """Antisymmetrized right contraction ``A(F (x)_m g)`` in wedge coordinates.

    Parameters
    ----------
    F : BiKernel or AntisymTensor
        A kernel whose ``m`` incoming slots are contracted.  An
        :class:`AntisymTensor` of degree ``d`` is read as a kernel with
        ``d - m`` outgoing and ``m`` incoming slots.
    g : AntisymTensor
        The vector contracted on its last ``m`` slots.
    m : int
        Number of contracted slots.
    pairing : PairingTable

    Notes
    -----
    For an outgoing key ``S``, incoming key ``T`` and vector key ``K`` the
    contribution is ``c d W(T) sgn(pi T) sgn((U, T')|K) sgn(S, U) (N-m)!/N!``
    where ``T'`` is the paired image of ``T``, ``U = K \\ T'`` and ``N`` the
    degree of ``g``.  This closed form is locked against the dense
    permutation-sum route in the tests.
    """
    if isinstance(F, AntisymTensor):
        if m > F.degree:
            raise ValueError("contraction order exceeds the kernel degree")
        split = F.degree - m
        full = {}
        for key, c in F.coeffs.items():
            # an antisymmetric tensor contributes every split of its key
            for out_pos in itertools.combinations(range(F.degree), split):
                s = tuple(key[i] for i in out_pos)
                t = tuple(key[i] for i in range(F.degree) if i not in out_pos)
                sign = permutation_sign(out_pos + tuple(i for i in range(F.degree) if i not in out_pos))
                full[(s, t)] = full.get((s, t), 0) + sign * c * math.factorial(split) * math.factorial(m) / math.factorial(F.degree)
        F = BiKernel(split, m, full)
    p, q, items = _kernel_items(F)
    if q != m:
        raise ValueError("kernel incoming degree must equal the contraction order")
    n = g.degree
    if m > n:
        return AntisymTensor.zero(p + n - m)
    scale = math.factorial(n - m) / math.factorial(n)
    out: dict = {}
    for s, t, c in items:
        paired = [pairing.partner[i] for i in t]
        eps = permutation_sign(paired)
        tprime = tuple(sorted(paired))
        w = np.prod([pairing.weight[i] for i in t]) if t else 1.0
        tset = set(tprime)
        for key, d in g.coeffs.items():
            if not tset.issubset(key):
                continue
            u = tuple(i for i in key if i not in tset)
            sign_k = permutation_sign(u + tprime)
            sign_m = merge_sign(s, u)
            if sign_m == 0:
                continue
            rkey = tuple(sorted(s + u))
            out[rkey] = out.get(rkey, 0) + c * d * w * eps * sign_k * sign_m * scale
    return AntisymTensor(p + n - m, out)


def dense_wedge_contract(F_dense: np.ndarray, g: AntisymTensor, m: int, pairing: PairingTable) -> AntisymTensor:
    """Reference ``A(F (x)_m g)`` by full-tensor expansion and permutation sums."""
    n_modes = pairing.n_modes
    g_dense = to_dense(g, n_modes)
    return _antisymmetrize_dense(contract_right(F_dense, g_dense, m, pairing))
