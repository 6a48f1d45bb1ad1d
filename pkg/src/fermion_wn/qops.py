"""Quantized operators on truncated Fock vectors.

Conventions
-----------
* ``a+(f) v = f ^ v``.
* ``a(f)`` contracts the *first* slot of ``v`` with ``f`` through the
  bilinear pairing ``<f, g> = (Jf, g)``, times the degree.  On basis
  vectors ``a(e_t) = w_t a_{J t}`` with ``a_j`` the plain annihilator.
  This choice satisfies ``{a+(f), a(g)} = <g, f>``.
* A kernel of bidegree ``(p, q)`` with wedge coefficients ``c[S, T]`` acts
  as ``sum c[S, T] a+_{S1} ... a+_{Sp} a(e_{T1}) ... a(e_{Tq})``.  For pair
  kernels (``p = 2l``, ``q = 2m``) this is the integral kernel operator
  ``Xi_{l,m}``; the definitional route through
  :func:`fermion_wn.exterior.wedge_contract` differs from the naive
  trailing-slot contraction by the orientation sign ``(-1)^m``, see
  :func:`apply_ikop`.
* One-body kernels (bidegree ``(1, 1)``) are admitted in a
  :class:`KernelOperator` so that second-quantized operators ``dGamma(B)``
  and operator compositions close under the same data type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .exterior import AntisymTensor, BiKernel, PairingTable, permutation_sign, wedge, wedge_contract
from .fock import FockVector, apply_creator_batch, apply_monomial, combine


# ---------------------------------------------------------------------------
# Elementary operators
# ---------------------------------------------------------------------------


def _coords(f, n_modes: int) -> np.ndarray:
    if isinstance(f, AntisymTensor):
        if f.degree != 1:
            raise ValueError("one-particle vector must have degree 1")
        arr = np.zeros(n_modes, dtype=complex)
        for (i,), c in f.coeffs.items():
            arr[i] = c
        return arr
    if isinstance(f, dict):
        arr = np.zeros(n_modes, dtype=complex)
        for i, c in f.items():
            arr[int(i)] = c
        return arr
    arr = np.asarray(f, dtype=complex)
    if arr.shape != (n_modes,):
        raise ValueError(f"one-particle vector must have {n_modes} coordinates")
    return arr


def _linear_combination(v: FockVector, coeffs: np.ndarray, single: Callable) -> tuple[list, list]:
    keys, amps = [], []
    for j in np.flatnonzero(coeffs):
        k, a = single(v.keys, v.amps, int(j))
        keys.append(k)
        amps.append(a * coeffs[j])
    return keys, amps


def _finish(v: FockVector, keys: list, amps: list) -> FockVector:
    k, a = combine(keys, amps)
    return v.with_arrays(k, a).truncate_to(v.max_particles)


def create(f, v: FockVector) -> FockVector:
    """Creation operator ``a+(f)``; components above the cap are dropped and flagged."""
    coeffs = _coords(f, v.n_modes)
    from .fock import apply_creator

    return _finish(v, *_linear_combination(v, coeffs, apply_creator))


def annihilate_plain(g, v: FockVector) -> FockVector:
    """Antilinear annihilator ``sum_j conj(g_j) a_j`` (contraction with ``(g, .)``)."""
    coeffs = np.conj(_coords(g, v.n_modes))
    from .fock import apply_annihilator

    return _finish(v, *_linear_combination(v, coeffs, apply_annihilator))


def annihilate(f, v: FockVector, pairing: PairingTable) -> FockVector:
    """Annihilation operator ``a(f)``, linear in ``f``, through the pairing."""
    coeffs = pairing.dual_coordinates(_coords(f, v.n_modes))
    from .fock import apply_annihilator

    return _finish(v, *_linear_combination(v, coeffs, apply_annihilator))


def apply_j(f: np.ndarray, pairing: PairingTable) -> np.ndarray:
    """Complex structure ``J`` on coordinates: ``J e_a = conj(w_a) e_{partner(a)}``."""
    f = np.asarray(f, dtype=complex)
    out = np.zeros_like(f)
    out[list(pairing.partner)] = np.conj(f) * np.conj(np.asarray(pairing.weight))
    return out


def anticommutator_check(f, g, v: FockVector, pairing: PairingTable) -> float:
    """``||{a+(f), a(g)} v - <g, f> v||``."""
    f_c = _coords(f, v.n_modes)
    g_c = _coords(g, v.n_modes)
    lhs = create(f_c, annihilate(g_c, v, pairing)) + annihilate(g_c, create(f_c, v), pairing)
    return (lhs - v * pairing.pair(g_c, f_c)).norm()


def w_op(f, v: FockVector, pairing: PairingTable, check_norm: bool = True) -> FockVector:
    """``W(f) = a+(f) + a(Jf)``; an involution when ``(f, f) = 1``."""
    f_c = _coords(f, v.n_modes)
    if check_norm and abs(np.vdot(f_c, f_c) - 1) > 1e-12:
        raise ValueError("W(f) requires a unit vector f")
    return create(f_c, v) + annihilate(apply_j(f_c, pairing), v, pairing)


# ---------------------------------------------------------------------------
# Kernel operators
# ---------------------------------------------------------------------------


def to_plain_terms(kernel: BiKernel, pairing: PairingTable) -> list[tuple[tuple, tuple, complex]]:
    """Rewrite a kernel as ``(creators, annihilators, coeff)`` plain monomials.

    Annihilator tuples are sorted increasing; the sign of sorting the
    paired incoming modes is absorbed into the coefficient.
    """
    out = []
    for (s, t), c in kernel.coeffs.items():
        paired = [pairing.partner[i] for i in t]
        w = np.prod([pairing.weight[i] for i in t]) if t else 1.0
        out.append((s, tuple(sorted(paired)), complex(c * w * permutation_sign(paired))))
    return out


def from_plain_terms(out_degree: int, in_degree: int, terms: Iterable, pairing: PairingTable) -> BiKernel:
    """Inverse of :func:`to_plain_terms`; creator and annihilator tuples may be unordered."""
    coeffs: dict = {}
    for s, u, c in terms:
        sign_s = permutation_sign(s)
        if sign_s == 0 or c == 0:
            continue
        # a_{u1}..a_{uq} = prod(1/w_t) a(e_{t1})..a(e_{tq}) with t = J u, then sort t
        t = [pairing.partner[j] for j in u]
        sign_t = permutation_sign(t)
        if sign_t == 0:
            continue
        w = np.prod([pairing.weight[i] for i in t]) if t else 1.0
        key = (tuple(sorted(s)), tuple(sorted(t)))
        coeffs[key] = coeffs.get(key, 0) + c * sign_s * sign_t / w
    return BiKernel(out_degree, in_degree, coeffs)


def apply_plain_terms(terms: Sequence, v: FockVector) -> FockVector:
    keys, amps = [], []
    for s, u, c in terms:
        if c == 0:
            continue
        k, a = apply_monomial(v.keys, v.amps, s, u)
        if k.size:
            keys.append(k)
            amps.append(a * c)
    return _finish(v, keys, amps)


@dataclass(frozen=True)
class KernelOperator:
    """Finite sum ``sum_k Xi(kernel_k) + scalar``.

    Parameters
    ----------
    terms : tuple of BiKernel
        Pair kernels of bidegree ``(2l, 2m)`` and one-body kernels of
        bidegree ``(1, 1)``; every bidegree has even total parity so the
        operator preserves sectors.
    scalar : complex
    pairing : PairingTable
    """

    terms: tuple = ()
    scalar: complex = 0.0
    pairing: PairingTable | None = None

    def __post_init__(self):
        terms = tuple(self.terms)
        for k in terms:
            if (k.out_degree - k.in_degree) % 2:
                raise ValueError("kernel bidegree must have even difference")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "scalar", complex(self.scalar))

    @property
    def labelled_terms(self) -> list[tuple[float, float, BiKernel]]:
        """``(l, m, kernel)`` with ``l = out/2`` and ``m = in/2``."""
        return [(k.out_degree / 2, k.in_degree / 2, k) for k in self.terms]

    @cached_property
    def plain_terms(self) -> list:
        out = []
        for k in self.terms:
            out.extend(to_plain_terms(k, self.pairing))
        return out

    @cached_property
    def _groups(self) -> tuple:
        """Plain terms grouped by annihilator tuple and creator count."""
        groups: dict = {}
        for s, u, c in self.plain_terms:
            if c != 0:
                groups.setdefault((u, len(s)), []).append((s, c))
        out = []
        for (u, p), items in groups.items():
            creators = np.array([s for s, _ in items], dtype=np.int64).reshape(len(items), p)
            coeffs = np.array([c for _, c in items], dtype=complex)
            out.append((u, np.uint64(sum(1 << j for j in u)), creators, coeffs))
        masks = np.array([g[1] for g in out], dtype=np.uint64)
        return tuple(out), masks

    def apply(self, v: FockVector) -> FockVector:
        groups, masks = self._groups
        keys, amps = [], []
        if v.keys.size and groups:
            hit = ((v.keys[None, :] & masks[:, None]) == masks[:, None]).any(axis=1)
            for g in np.flatnonzero(hit):
                u, _, creators, coeffs = groups[g]
                k, a = apply_monomial(v.keys, v.amps, (), u)
                if k.size == 0:
                    continue
                if creators.shape[1] == 0:
                    keys.append(k)
                    amps.append(a * coeffs.sum())
                    continue
                k, a = apply_creator_batch(k, a, creators, coeffs)
                keys.append(k)
                amps.append(a)
        result = _finish(v, keys, amps)
        if self.scalar != 0:
            result = result + v * self.scalar
        return result

    def __add__(self, other: "KernelOperator") -> "KernelOperator":
        return KernelOperator(self.terms + other.terms, self.scalar + other.scalar, self.pairing or other.pairing)

    def __mul__(self, c: complex) -> "KernelOperator":
        return KernelOperator(tuple(k * c for k in self.terms), self.scalar * c, self.pairing)

    __rmul__ = __mul__

    def shifted(self, c: complex) -> "KernelOperator":
        return KernelOperator(self.terms, self.scalar + c, self.pairing)

    def grouped(self) -> dict[tuple[int, int], BiKernel]:
        """Merge terms of equal bidegree."""
        out: dict = {}
        for k in self.terms:
            key = (k.out_degree, k.in_degree)
            out[key] = out[key] + k if key in out else k
        return out


def _require_even(v: FockVector):
    if v.keys.size and (v.degrees & 1).any():
        raise ValueError("integral kernel operators act on the even sector only")


def apply_ikop(l: int, m: int, kernel: BiKernel, v: FockVector, pairing: PairingTable,
               route: str = "fast") -> FockVector:
    """Apply ``Xi_{l,m}(kernel)`` to an even vector.

    Parameters
    ----------
    l, m : int
        Pair indices; the kernel must have bidegree ``(2l, 2m)``.
    kernel : BiKernel
    v : FockVector
        Even-sector vector.
    pairing : PairingTable
    route : {'fast', 'definitional'}
        ``'fast'`` applies normal-ordered monomials on the occupation
        basis.  ``'definitional'`` evaluates, degree by degree,
        ``(-1)^m (N!/(N-2m)!) A(kernel (x)_{2m} v_N)`` with the sparse wedge
        contraction; the factor ``(-1)^m`` pairs the kernel's incoming
        slots with the vector's slots from the inside out, the orientation
        compatible with the canonical anticommutation relations.
    """
    if (kernel.out_degree, kernel.in_degree) != (2 * l, 2 * m):
        raise ValueError("kernel bidegree does not match (2l, 2m)")
    _require_even(v)
    if route == "fast":
        return KernelOperator((kernel,), 0.0, pairing).apply(v)
    if route != "definitional":
        raise ValueError("route must be 'fast' or 'definitional'")
    q = 2 * m
    orientation = (-1) ** m
    out = FockVector.zero(v.n_modes, v.max_particles)
    for degree, comp in v.components.items():
        if degree < q:
            continue
        factor = math.factorial(degree) / math.factorial(degree - q)
        res = wedge_contract(kernel, comp, q, pairing) * (factor * orientation)
        if res.degree > v.max_particles:
            lost = sum(abs(c) ** 2 for c in res.coeffs.values())
            out = out.with_arrays(out.keys, out.amps, lost, len(res.coeffs))
            continue
        out = out + FockVector.from_components(v.n_modes, {res.degree: res}, v.max_particles)
    return out.with_arrays(out.keys, out.amps, v.dropped, v.drop_events)


def pair_kernel(tensor: AntisymTensor, outgoing: bool) -> BiKernel:
    """Degree-2 tensor as a pair-creation (``outgoing``) or pair-annihilation kernel."""
    if tensor.degree != 2:
        raise ValueError("pair kernels are built from degree-2 tensors")
    return BiKernel.from_antisym(tensor, 2 if outgoing else 0)


def one_body_kernel(matrix: np.ndarray, pairing: PairingTable, tol: float = 0.0) -> BiKernel:
    """Kernel of ``dGamma(B) = sum_ij B_ij a+_i a_j`` (plain annihilators)."""
    B = np.asarray(matrix)
    rows, cols = np.nonzero(np.abs(B) > tol)
    terms = [((int(i),), (int(j),), B[i, j]) for i, j in zip(rows, cols)]
    return from_plain_terms(1, 1, terms, pairing)


def second_quantize(matrix: np.ndarray, pairing: PairingTable) -> KernelOperator:
    """``dGamma(B)`` as a kernel operator."""
    return KernelOperator((one_body_kernel(matrix, pairing),), 0.0, pairing)


def dgamma2(matrix: np.ndarray, pairing: PairingTable, tol: float = 0.0) -> BiKernel:
    """Bidegree-(2, 2) kernel ``(1 (x) dGamma(B)^(2))* tau``.

    Normalised so that ``Xi_{1,1}`` of the result equals ``dGamma(B)`` on
    two-particle vectors.  On a degree-``N`` vector it acts as
    ``(N - 1) dGamma(B)``, since a fixed two-body kernel cannot reproduce
    a one-body operator on every degree.
    """
    B = np.asarray(matrix)
    n = B.shape[0]
    # plain coefficients of the operator sum K a+a+aa equal to -1/2 (B(x)1 + 1(x)B)
    # summed over ordered slots; fold onto increasing tuples
    terms: dict = {}
    rows, cols = np.nonzero(np.abs(B) > tol)
    for i, j in zip(rows.tolist(), cols.tolist()):
        b = B[i, j]
        for spect in range(n):
            # (B (x) 1): a+_i a+_k a_j a_k ; (1 (x) B): a+_k a+_i a_k a_j
            for s, u in (((i, spect), (j, spect)), ((spect, i), (spect, j))):
                sign_s, sign_u = permutation_sign(s), permutation_sign(u)
                if sign_s == 0 or sign_u == 0:
                    continue
                key = (tuple(sorted(s)), tuple(sorted(u)))
                terms[key] = terms.get(key, 0) - 0.5 * b * sign_s * sign_u
    return from_plain_terms(2, 2, [(s, u, c) for (s, u), c in terms.items() if c != 0], pairing)


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------


def _normal_order(ann: tuple, cre: tuple) -> dict:
    """Normal-order ``a_{ann...} a+_{cre...}`` into ``{(creators, annihilators): coeff}``."""
    if not ann or not cre:
        return {(cre, ann): 1}
    *rest, last = ann
    rest = tuple(rest)
    out: dict = {}
    # move a_last through the creators: a_l a+_c = delta - a+_c a_l
    for k, c in enumerate(cre):
        if c == last:
            remaining = cre[:k] + cre[k + 1:]
            for key, val in _normal_order(rest, remaining).items():
                out[key] = out.get(key, 0) + (-1) ** k * val
    sign = (-1) ** len(cre)
    for (c2, a2), val in _normal_order(rest, cre).items():
        key = (c2, a2 + (last,))
        out[key] = out.get(key, 0) + sign * val
    return out


def compose_kernel_operators(left: KernelOperator, right: KernelOperator) -> KernelOperator:
    """Kernel operator equal to ``left . right`` (Wick composition).

    Every contraction order appears, including single-slot contractions,
    which produce one-body terms when two pair kernels meet.
    """
    pairing = left.pairing or right.pairing
    acc: dict = {}

    def add(s, u, c):
        ss, su = permutation_sign(s), permutation_sign(u)
        if ss == 0 or su == 0 or c == 0:
            return
        key = (tuple(sorted(s)), tuple(sorted(u)))
        acc[key] = acc.get(key, 0) + c * ss * su

    lterms = list(left.plain_terms) + ([((), (), left.scalar)] if left.scalar else [])
    rterms = list(right.plain_terms) + ([((), (), right.scalar)] if right.scalar else [])
    for s1, u1, c1 in lterms:
        for s2, u2, c2 in rterms:
            for (cre, ann), val in _normal_order(u1, s2).items():
                add(s1 + cre, ann + u2, c1 * c2 * val)
    scalar = acc.pop(((), ()), 0)
    by_degree: dict = {}
    for (s, u), c in acc.items():
        by_degree.setdefault((len(s), len(u)), []).append((s, u, c))
    kernels = tuple(from_plain_terms(p, q, items, pairing) for (p, q), items in sorted(by_degree.items()))
    return KernelOperator(tuple(k for k in kernels if k.coeffs), scalar, pairing)


def compose_ikop(l: int, m: int, kappa: BiKernel, lp: int, mp: int, lam: BiKernel,
                 pairing: PairingTable) -> KernelOperator:
    """Kernel-operator form of ``Xi_{l,m}(kappa) Xi_{l',m'}(lam)``.

    Parameters
    ----------
    l, m, lp, mp : int
        Pair indices, each in ``{0, 1}``.
    kappa, lam : BiKernel
    pairing : PairingTable

    Returns
    -------
    KernelOperator
        Terms indexed by the number ``k`` of single-slot contractions
        between the incoming slots of ``kappa`` and the outgoing slots of
        ``lam``; odd ``k`` yields kernels of odd bidegree such as one-body
        terms.
    """
    for idx in (l, m, lp, mp):
        if idx not in (0, 1):
            raise ValueError("compose_ikop supports pair indices 0 and 1")
    if (kappa.out_degree, kappa.in_degree) != (2 * l, 2 * m):
        raise ValueError("kappa bidegree does not match (2l, 2m)")
    if (lam.out_degree, lam.in_degree) != (2 * lp, 2 * mp):
        raise ValueError("lambda bidegree does not match (2l', 2m')")
    return compose_kernel_operators(KernelOperator((kappa,), 0, pairing), KernelOperator((lam,), 0, pairing))


# ---------------------------------------------------------------------------
# Field operators of the positive-energy representation
# ---------------------------------------------------------------------------


def split_full_vector(x: np.ndarray, n_modes: int) -> tuple[np.ndarray, np.ndarray]:
    """Split coordinates on ``K`` into positive part and negative part.

    The negative basis vector ``n_modes + j`` is ``Gamma e_j``.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != (2 * n_modes,):
        raise ValueError(f"vector in K must have {2 * n_modes} coordinates")
    return x[:n_modes], x[n_modes:]


def gamma_full(x: np.ndarray) -> np.ndarray:
    """``Gamma`` on ``K`` coordinates (swap halves and conjugate)."""
    x = np.asarray(x, dtype=complex)
    n = x.size // 2
    return np.concatenate([np.conj(x[n:]), np.conj(x[:n])])


def field_op(x: np.ndarray, v: FockVector) -> FockVector:
    """``pi(B(x)) = a+(P+ x) + a(J P+ Gamma x)``.

    With the negative basis ``Gamma e_j`` this is
    ``sum_j x+_j a+_j + sum_j x-_j a_j``.
    """
    xp, xm = split_full_vector(x, v.n_modes)
    return create(xp, v) + annihilate_plain(np.conj(xm), v)


def quadratic_op(x: np.ndarray, y: np.ndarray, pairing: PairingTable, j_full: np.ndarray | None = None) -> KernelOperator:
    """``pi(B(x) B(y))`` as scalar + pair creation + pair annihilation + one-body term.

    Parameters
    ----------
    x, y : ndarray
        Vectors in ``K`` (positive coordinates then ``Gamma``-image coordinates).
    pairing : PairingTable
        Pairing on the positive modes (``J`` restricted to ``H``).
    j_full : ndarray, optional
        Unused placeholder for API symmetry; ``J`` is read from ``pairing``.

    Notes
    -----
    ``lambda00 = (P Gamma x, P y)``, ``lambda10 = Px ^ Py``,
    ``lambda01 = PJ Gamma x ^ PJ Gamma y`` and the one-body part is
    ``dGamma(T)`` with ``T z = (P Gamma y, z) Px - (P Gamma x, z) Py``.
    """
    n = pairing.n_modes
    xp, xm = split_full_vector(x, n)
    yp, ym = split_full_vector(y, n)
    pgx = np.conj(xm)  # coordinates of P+ Gamma x
    pgy = np.conj(ym)
    scalar = complex(np.vdot(pgx, yp))
    lam10 = wedge(AntisymTensor.vector(xp), AntisymTensor.vector(yp))
    lam01 = wedge(AntisymTensor.vector(apply_j(pgx, pairing)), AntisymTensor.vector(apply_j(pgy, pairing)))
    T = np.outer(xp, np.conj(pgy)) - np.outer(yp, np.conj(pgx))
    terms = []
    if lam10.coeffs:
        terms.append(pair_kernel(lam10, True))
    if lam01.coeffs:
        terms.append(pair_kernel(lam01, False))
    one = one_body_kernel(T, pairing)
    if one.coeffs:
        terms.append(one)
    return KernelOperator(tuple(terms), scalar, pairing)


def quadratic_one_body_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Matrix of ``T(x, y)`` on the positive modes."""
    n = x.size // 2
    xp, xm = split_full_vector(x, n)
    yp, ym = split_full_vector(y, n)
    return np.outer(xp, ym) - np.outer(yp, xm)


# ---------------------------------------------------------------------------
# Operator words
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CarWord:
    """Linear combination of operator products.

    ``terms`` holds ``(coeff, factors)`` where ``factors`` is a tuple of
    ``(kind, payload)`` read as a product from left to right, so the last
    factor acts first.  Kinds: ``'create'`` (one-particle coordinates),
    ``'annihilate'`` (coordinates, uses the pairing), ``'w'``
    (coordinates), ``'field'`` (vector in ``K``), ``'kernel'``
    (:class:`KernelOperator`).
    """

    terms: tuple = ()
    pairing: PairingTable | None = None

    def __add__(self, other: "CarWord") -> "CarWord":
        return CarWord(self.terms + other.terms, self.pairing or other.pairing)

    def __mul__(self, c: complex) -> "CarWord":
        return CarWord(tuple((c * a, f) for a, f in self.terms), self.pairing)

    __rmul__ = __mul__

    def apply(self, v: FockVector) -> FockVector:
        total = FockVector.zero(v.n_modes, v.max_particles)
        for coeff, factors in self.terms:
            w = v
            for kind, payload in reversed(factors):
                w = _apply_factor(kind, payload, w, self.pairing)
            total = total + w * coeff
        return total


def _apply_factor(kind: str, payload, v: FockVector, pairing: PairingTable | None) -> FockVector:
    if kind == "create":
        return create(payload, v)
    if kind == "annihilate":
        return annihilate(payload, v, pairing)
    if kind == "w":
        return w_op(payload, v, pairing)
    if kind == "field":
        return field_op(payload, v)
    if kind == "kernel":
        return payload.apply(v)
    raise ValueError(f"unknown word factor {kind!r}")


def field_word(*vectors: np.ndarray, coeff: complex = 1.0) -> CarWord:
    """``coeff * pi(B(x1)) ... pi(B(xk))``."""
    return CarWord(((coeff, tuple(("field", np.asarray(x, complex)) for x in vectors)),))


def finite_rank_matrix(pairs: Sequence[tuple[np.ndarray, np.ndarray]], dim: int) -> np.ndarray:
    """Matrix of ``Y = sum_i (g_i, .) f_i`` on ``K``."""
    Y = np.zeros((dim, dim), dtype=complex)
    for f, g in pairs:
        Y += np.outer(np.asarray(f, complex), np.conj(np.asarray(g, complex)))
    return Y


def gamma_conjugate_matrix(Y: np.ndarray) -> np.ndarray:
    """Matrix of ``Gamma Y Gamma``."""
    n = Y.shape[0] // 2
    G = np.zeros_like(Y)
    G[:n, n:] = np.eye(n)
    G[n:, :n] = np.eye(n)
    return G @ np.conj(Y) @ G


def orthogonal_residual(Y: np.ndarray, complexified: bool = True) -> float:
    """Distance of ``Y`` from the (complexified) orthogonal algebra of ``(K, Gamma)``.

    The real algebra consists of self-adjoint ``Y`` with ``Gamma Y Gamma = -Y``;
    its complexification is tested through the self-adjoint and
    anti-self-adjoint parts separately.
    """
    if complexified:
        A = (Y + Y.conj().T) / 2
        B = (Y - Y.conj().T) / 2j
        return max(orthogonal_residual(A, False), orthogonal_residual(B, False))
    herm = np.abs(Y - Y.conj().T).max(initial=0.0)
    odd = np.abs(gamma_conjugate_matrix(Y) + Y).max(initial=0.0)
    return float(max(herm, odd))


def q_finite_rank(pairs: Sequence[tuple[np.ndarray, np.ndarray]], pairing: PairingTable | None = None,
                  tol: float = 1e-10, complexified: bool = True) -> CarWord:
    """Word ``1/2 sum_i pi(B(f_i)) pi(B(Gamma g_i))`` for ``Y = sum_i (g_i, .) f_i``.

    Raises
    ------
    ValueError
        If ``Y`` is not in the (complexified) orthogonal algebra.
    """
    pairs = [(np.asarray(f, complex), np.asarray(g, complex)) for f, g in pairs]
    if pairs:
        dim = pairs[0][0].size
        res = orthogonal_residual(finite_rank_matrix(pairs, dim), complexified)
        scale = max(1.0, max(np.abs(f).max() * np.abs(g).max() for f, g in pairs))
        if res > tol * scale:
            raise ValueError(f"Y is not in the orthogonal algebra (residual {res:.3e})")
    terms = tuple((0.5, (("field", f), ("field", gamma_full(g)))) for f, g in pairs)
    return CarWord(terms, pairing)


def h1_pairs(x: np.ndarray, y: np.ndarray) -> list:
    """Rank data of ``H1(x, y) z = 1/2 {(y,z)x + (x,z)y - (Gy,z)Gx - (Gx,z)Gy}``."""
    gx, gy = gamma_full(x), gamma_full(y)
    return [(0.5 * x, y), (0.5 * y, x), (-0.5 * gx, gy), (-0.5 * gy, gx)]


def h2_pairs(x: np.ndarray, y: np.ndarray) -> list:
    """Rank data of ``H2(x, y) z = i/2 {(x,z)y - (y,z)x + (Gx,z)Gy - (Gy,z)Gx}``."""
    gx, gy = gamma_full(x), gamma_full(y)
    return [(0.5j * y, x), (-0.5j * x, y), (0.5j * gy, gx), (-0.5j * gx, gy)]


def quadratic_pairs(x: np.ndarray, y: np.ndarray) -> list:
    """Rank data of ``Y = 1/2 (H1(x, Gy) + i H2(x, Gy))``, for which ``q(Y) = pi(B(x)B(y))`` up to a constant."""
    gy = gamma_full(y)
    return [(0.5 * f, g) for f, g in h1_pairs(x, gy)] + [(0.5j * f, g) for f, g in h2_pairs(x, gy)]


def commutator_pairs(X: np.ndarray, pairs: Sequence) -> list:
    """Rank data of ``[X, Y]`` for self-adjoint ``X``: ``sum |X f)(g| - |f)(X g|``."""
    out = []
    for f, g in pairs:
        out.append((X @ f, g))
        out.append((-f, X @ g))
    return out
