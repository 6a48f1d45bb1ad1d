"""Implementers of gauge-algebra actions on the truncated Fock space.

The even-sector operator is

    M = dGamma(P+ X P+) + Xi_{1,0}(kappa10) + Xi_{0,1}(kappa01),

with ``kappa10 = 1/2 sum_n P+ X P- Gamma e_n ^ e_n`` and
``kappa01 = 1/2 sum_n P+ J X J P- Gamma e_n ^ e_n``.  The odd sector uses the
conjugated operator ``M~`` built from the reflection ``w(e_1)`` and is
reached through ``W(e_1) M~ W(e_1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exterior import AntisymTensor, BiKernel, PairingTable, wedge, weighted_norm
from .fock import FockVector, random_fock_vector, sector_split
from .oneparticle import GaugeFunction, OneParticleModel, gauge_matrix_full
from .qops import (
    CarWord,
    KernelOperator,
    commutator_pairs,
    dgamma2,
    field_op,
    field_word,
    gamma_full,
    h1_pairs,
    h2_pairs,
    one_body_kernel,
    pair_kernel,
    q_finite_rank,
    w_op,
)

#: extra particle capacity granted inside verifications so that truncation is inert
HEADROOM = 6


def _pair_tensor(vectors: np.ndarray, scale: float = 0.5) -> AntisymTensor:
    """``scale * sum_n vectors[:, n] ^ e_n`` as a degree-2 tensor."""
    n = vectors.shape[0]
    coeffs = {}
    for i in range(n):
        for j in range(i + 1, n):
            c = scale * (vectors[i, j] - vectors[j, i])
            if c != 0:
                coeffs[(i, j)] = c
    return AntisymTensor(2, coeffs)


def reflection_matrix(model: OneParticleModel, mode: int = 0) -> np.ndarray:
    """Matrix of ``w(f) x = x - ((1 + Gamma) f, x) (1 + Gamma) f`` for ``f = e_mode``."""
    n = model.n_modes
    u = np.zeros(2 * n, dtype=complex)
    u[mode] = 1
    u[n + mode] = 1
    return np.eye(2 * n) - np.outer(u, u.conj())


def _apply_j(model: OneParticleModel, cols: np.ndarray) -> np.ndarray:
    return model.j_full_matrix() @ np.conj(cols)


@dataclass(frozen=True, eq=False)
class ImplementerBundle:
    """Kernel data of an implementer.

    Attributes
    ----------
    even_op : KernelOperator
        Even-sector operator (scalar 0).
    odd_conjugated_op : KernelOperator
        ``M~``; the odd-sector operator is ``W(e_1) M~ W(e_1)``.
    f_mode : int
        Position of ``e_1``.
    pairing : PairingTable
    generator : ndarray
        Full truncated ``pi(X)``.
    kernels : dict
        ``kappa11`` (two-body form, bidegree (2, 2)), ``kappa10``, ``kappa01`` and their odd counterparts.
    """

    even_op: KernelOperator
    odd_conjugated_op: KernelOperator
    f_mode: int
    pairing: PairingTable
    generator: np.ndarray
    kernels: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def f_vector(self) -> np.ndarray:
        e = np.zeros(self.pairing.n_modes, dtype=complex)
        e[self.f_mode] = 1
        return e

    def apply_odd(self, v: FockVector) -> FockVector:
        f = self.f_vector
        return w_op(f, self.odd_conjugated_op.apply(w_op(f, v, self.pairing)), self.pairing)

    def apply(self, v: FockVector, shift: complex = 0.0) -> FockVector:
        """Apply ``M_X = M+ (+) M-`` (plus ``shift`` times the identity) to a vector of any parity."""
        even, odd = sector_split(v)
        out = self.even_op.apply(even) + self.apply_odd(odd)
        if shift:
            out = out + v * shift
        return out

    def shifted(self, c: complex) -> "ImplementerBundle":
        return ImplementerBundle(self.even_op.shifted(c), self.odd_conjugated_op.shifted(c), self.f_mode,
                                 self.pairing, self.generator, self.kernels, self.diagnostics)

    def kernel_norms(self, p: float, eigenvalues: np.ndarray) -> dict:
        """Weighted norms ``|kappa|_p`` of the pair kernels."""
        return {name: weighted_norm(k, p, eigenvalues) for name, k in self.kernels.items()
                if isinstance(k, AntisymTensor)}


def build_even_kernels(model: OneParticleModel, gauge: GaugeFunction, X: np.ndarray | None = None):
    """Return ``(kappa11, kappa10, kappa01)``.

    ``kappa11`` is the bidegree-(2, 2) kernel of ``dGamma(P+ X P+)``;
    the pair kernels are degree-2 tensors.
    """
    n = model.n_modes
    if X is None:
        X = gauge_matrix_full(model, gauge)
    plus_plus = X[:n, :n]
    gamma_cols = X[:, n:]  # pi(X) Gamma e_n for every n
    k10 = _pair_tensor(gamma_cols[:n])
    jxj = _apply_j(model, X @ _apply_j(model, np.eye(2 * n)[:, n:]))
    k01 = _pair_tensor(jxj[:n])
    k11 = dgamma2(plus_plus, model.pairing)
    return k11, k10, k01


def build_odd_kernels(model: OneParticleModel, gauge: GaugeFunction, X: np.ndarray | None = None,
                      mode: int = 0, literal: bool = False) -> KernelOperator:
    """Conjugated odd-sector operator ``M~`` with ``W(e_1) M~ W(e_1) = M_X`` on odd vectors.

    Parameters
    ----------
    mode : int
        Position of the unit vector ``e_1`` defining ``w(e_1)``.
    literal : bool
        ``False`` (default) builds

        * ``kappa10 = -1/2 P+ X e_1 ^ e_1 + 1/2 sum_{n != 1} P+ wXw P- Gamma e_n ^ e_n``
        * ``kappa01 = 1/2 P+ JXJ e_1' ^ e_1' + 1/2 sum_{n != 1'} P+ J wXw J P- Gamma e_n ^ e_n``

        where ``e_1' = J e_1``.  ``True`` uses ``+1/2`` in ``kappa10`` and
        ``e_1`` in place of ``e_1'``; that variant fails the commutator
        identities and is kept for comparison.

    Notes
    -----
    The one-body part is ``dGamma(P+ wXw P+)`` and the scalar is
    ``(e_1, X e_1)``; with it the direct sum of the even operator and
    ``W M~ W`` also satisfies the single-field commutator.
    """
    n = model.n_modes
    if X is None:
        X = gauge_matrix_full(model, gauge)
    w = reflection_matrix(model, mode)
    wxw = w @ X @ w
    cols = wxw[:, n:].copy()
    cols[:, mode] = (1.0 if literal else -1.0) * X[:, mode]
    k10 = _pair_tensor(cols[:n])
    jxj = _apply_j(model, wxw @ _apply_j(model, np.eye(2 * n)[:, n:]))
    special = mode if literal else model.pairing.partner[mode]
    e_special = np.zeros((2 * n, 1), dtype=complex)
    e_special[special] = 1
    jxj[:, special] = _apply_j(model, X @ _apply_j(model, e_special))[:, 0]
    k01 = _pair_tensor(jxj[:n])
    one_body = one_body_kernel(wxw[:n, :n], model.pairing)
    terms = tuple(k for k in (one_body, pair_kernel(k10, True), pair_kernel(k01, False)) if k.coeffs)
    return KernelOperator(terms, X[mode, mode], model.pairing)


def exact_odd_conjugate(bundle_even: KernelOperator, model: OneParticleModel, X: np.ndarray, mode: int = 0) -> KernelOperator:
    """Reference ``W(e_1) M W(e_1) = M + pi(B(u) B(Xu))`` with ``u = e_1 + Gamma e_1``."""
    from .qops import quadratic_op

    n = model.n_modes
    u = np.zeros(2 * n, dtype=complex)
    u[mode] = 1
    u[n + mode] = 1
    return bundle_even + quadratic_op(u, X @ u, model.pairing)


def build_implementer(model: OneParticleModel, gauge: GaugeFunction, mode: int = 0,
                      literal_odd: bool = False) -> ImplementerBundle:
    """Assemble even and odd operators for ``pi(X)``."""
    X = gauge_matrix_full(model, gauge)
    n = model.n_modes
    k11, k10, k01 = build_even_kernels(model, gauge, X)
    one_body = one_body_kernel(X[:n, :n], model.pairing)
    terms = tuple(k for k in (one_body, pair_kernel(k10, True), pair_kernel(k01, False)) if k.coeffs)
    even = KernelOperator(terms, 0.0, model.pairing)
    odd = build_odd_kernels(model, gauge, X, mode, literal_odd)
    kernels = {"kappa11": k11, "kappa10": k10, "kappa01": k01}
    return ImplementerBundle(even, odd, mode, model.pairing, X, kernels)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def _raise_cap(v: FockVector) -> FockVector:
    return v.with_max_particles(v.max_particles + HEADROOM)


def _apply_m(bundle: ImplementerBundle, v: FockVector, shift: complex) -> FockVector:
    return bundle.apply(v, shift)


@dataclass(frozen=True)
class Residual:
    """Norm of an identity defect together with the truncation flag."""

    value: float
    leaked: bool

    def __float__(self):
        return self.value


def _residual(diff: FockVector, *parts: FockVector) -> Residual:
    leaked = any(p.drop_events > 0 for p in parts) or diff.drop_events > 0
    return Residual(diff.norm(), leaked)


def verify_quadratic_commutator(bundle: ImplementerBundle, model: OneParticleModel, x: np.ndarray, y: np.ndarray,
                                v: FockVector, shift: complex = 0.0) -> Residual:
    """``||[M, pi(B(x)B(y))] v - pi(B(Xx)B(y) + B(x)B(Xy)) v||``.

    ``v`` must have pure parity; the matching sector operator is used.
    """
    if v.parity() is None:
        raise ValueError("quadratic commutator is tested on a single sector")
    v = _raise_cap(v)
    X = bundle.generator
    word = field_word(x, y)
    rhs_word = field_word(X @ x, y) + field_word(x, X @ y)
    qv = word.apply(v)
    lhs = _apply_m(bundle, qv, shift) - word.apply(_apply_m(bundle, v, shift))
    rhs = rhs_word.apply(v)
    return _residual(lhs - rhs, qv, lhs, rhs)


def verify_single_commutator(bundle: ImplementerBundle, model: OneParticleModel, x: np.ndarray,
                             v: FockVector, shift: complex = 0.0) -> Residual:
    """``||M pi(B(x)) v - pi(B(x)) M v - pi(B(Xx)) v||`` for ``v`` of any parity."""
    v = _raise_cap(v)
    X = bundle.generator
    fv = field_op(x, v)
    lhs = _apply_m(bundle, fv, shift) - field_op(x, _apply_m(bundle, v, shift))
    rhs = field_op(X @ x, v)
    return _residual(lhs - rhs, fv, lhs, rhs)


def verify_q_commutator(bundle: ImplementerBundle, model: OneParticleModel, pairs: Sequence,
                        v: FockVector, shift: complex = 0.0) -> Residual:
    """``||M q(Y) v - q(Y) M v - q([X, Y]) v||`` with ``Y`` given by rank data."""
    v = _raise_cap(v)
    X = bundle.generator
    if not pairs:
        return Residual(0.0, False)
    qy = q_finite_rank(pairs, bundle.pairing)
    qad = q_finite_rank(commutator_pairs(X, pairs), bundle.pairing)
    yv = qy.apply(v)
    lhs = _apply_m(bundle, yv, shift) - qy.apply(_apply_m(bundle, v, shift))
    rhs = qad.apply(v)
    return _residual(lhs - rhs, yv, lhs, rhs)


def bulk_modes(model: OneParticleModel, bulk_radius: int) -> np.ndarray:
    """Positions in the ``K`` basis whose momenta lie within ``bulk_radius``."""
    inside = np.abs(model.full_momenta).max(axis=1) <= bulk_radius
    return np.flatnonzero(inside)


def random_bulk_vector(model: OneParticleModel, bulk_radius: int, rng: np.random.Generator, support: int = 3) -> np.ndarray:
    """Random vector of ``K`` supported on a few bulk modes."""
    idx = rng.choice(bulk_modes(model, bulk_radius), size=support, replace=False)
    x = np.zeros(2 * model.n_modes, dtype=complex)
    x[idx] = rng.normal(size=support) + 1j * rng.normal(size=support)
    return x


def random_pairs(model: OneParticleModel, bulk_radius: int, rng: np.random.Generator) -> list:
    """Rank data of a random ``Y = H1(x, y) + c H2(x', y')`` in the complexified orthogonal algebra."""
    x, y = random_bulk_vector(model, bulk_radius, rng, 2), random_bulk_vector(model, bulk_radius, rng, 2)
    x2, y2 = random_bulk_vector(model, bulk_radius, rng, 2), random_bulk_vector(model, bulk_radius, rng, 2)
    c = complex(rng.normal(), rng.normal())
    return h1_pairs(x, y) + [(c * f, g) for f, g in h2_pairs(x2, y2)]


@dataclass
class VerificationSummary:
    """Maxima of commutator residuals over a batch of random inputs."""

    max_residual: dict = field(default_factory=dict)
    count: dict = field(default_factory=dict)
    leaked: int = 0

    def record(self, name: str, res: Residual):
        self.max_residual[name] = max(self.max_residual.get(name, 0.0), res.value)
        self.count[name] = self.count.get(name, 0) + 1
        self.leaked += int(res.leaked)

    @property
    def worst(self) -> float:
        return max(self.max_residual.values(), default=0.0)


def run_verification(model: OneParticleModel, gauge: GaugeFunction, n_samples: int = 100, seed: int = 0,
                     bulk_radius: int = 5, max_particles: int = 4, keys_per_degree: int = 4,
                     bundle: ImplementerBundle | None = None, shift: complex = 0.0) -> VerificationSummary:
    """Run the quadratic (both sectors), single-field and q-level checks on random bulk inputs."""
    if bundle is None:
        bundle = build_implementer(model, gauge)
    rng = np.random.default_rng(seed)
    summary = VerificationSummary()
    for k in range(n_samples):
        sub = int(rng.integers(2 ** 31))
        x = random_bulk_vector(model, bulk_radius, rng)
        y = random_bulk_vector(model, bulk_radius, rng)
        for parity in ("even", "odd"):
            v = random_fock_vector(model.positive_modes, max_particles, parity, bulk_radius, seed=sub,
                                   keys_per_degree=keys_per_degree)
            summary.record(f"quadratic_{parity}", verify_quadratic_commutator(bundle, model, x, y, v, shift))
            summary.record(f"q_level_{parity}",
                           verify_q_commutator(bundle, model, random_pairs(model, bulk_radius, rng), v, shift))
        v = random_fock_vector(model.positive_modes, max_particles, "mixed", bulk_radius, seed=sub + 1,
                               keys_per_degree=keys_per_degree)
        summary.record("single", verify_single_commutator(bundle, model, x, v, shift))
    return summary
