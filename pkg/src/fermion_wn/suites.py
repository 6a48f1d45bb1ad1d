"""Randomized identity checks shared by the command line and the test suite.

Each suite returns a mapping from check name to the largest residual seen.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .exterior import (
    AntisymTensor,
    BiKernel,
    PairingTable,
    antisymmetrize,
    inner_product,
    permutation_sign,
    to_dense,
    wedge,
    weighted_norm,
)
from .fock import random_fock_vector
from .implementer import run_verification
from .oneparticle import GaugeFunction, build_model, Scenario
from .qops import (
    annihilate,
    annihilate_plain,
    apply_ikop,
    compose_ikop,
    create,
    dgamma2,
    pair_kernel,
    second_quantize,
    w_op,
)

#: eight-mode pairing mixing swapped pairs, fixed points and non-real weights
TOY_PAIRING = PairingTable((1, 0, 3, 2, 4, 5, 7, 6), (1j, 1j, -1, -1, 1, -1, np.exp(0.3j), np.exp(0.3j)))


def _cvec(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def random_tensor(rng: np.random.Generator, n_modes: int, degree: int, density: float = 1.0) -> AntisymTensor:
    """Random antisymmetric tensor with Gaussian wedge coefficients."""
    coeffs = {}
    for key in itertools.combinations(range(n_modes), degree):
        if density >= 1 or rng.random() < density:
            coeffs[key] = complex(rng.normal(), rng.normal())
    return AntisymTensor(degree, coeffs)


def random_kernel(rng: np.random.Generator, n_modes: int, out_degree: int, in_degree: int) -> BiKernel:
    """Random kernel with every (out, in) index pair populated."""
    entries = {}
    for s in itertools.combinations(range(n_modes), out_degree):
        for t in itertools.combinations(range(n_modes), in_degree):
            entries[(s, t)] = complex(rng.normal(), rng.normal())
    return BiKernel(out_degree, in_degree, entries)


def _rel(diff: float, scale: float) -> float:
    return diff / max(scale, 1.0)


def algebra_suite(seed: int = 0, n_modes: int = 6, n_pairs: int = 200) -> dict:
    """Exterior-algebra identities against dense brute force."""
    rng = np.random.default_rng(seed)
    out = {}

    worst = 0.0
    for degree in range(1, 4):
        dense = rng.normal(size=(n_modes,) * degree) + 1j * rng.normal(size=(n_modes,) * degree)
        once = to_dense(antisymmetrize(dense), n_modes)
        twice = to_dense(antisymmetrize(once), n_modes)
        worst = max(worst, float(np.abs(once - twice).max()))
    out["antisymmetrizer_idempotence"] = worst

    worst_assoc = worst_comm = worst_dense = 0.0
    for p, q, r in [(1, 1, 1), (1, 2, 1), (2, 1, 2), (0, 2, 1), (2, 2, 1)]:
        a, b, c = (random_tensor(rng, n_modes, d) for d in (p, q, r))
        left, right = wedge(wedge(a, b), c), wedge(a, wedge(b, c))
        worst_assoc = max(worst_assoc, left.max_abs_diff(right))
        swapped = wedge(b, a) * ((-1) ** (p * q))
        worst_comm = max(worst_comm, wedge(a, b).max_abs_diff(swapped))
        brute = antisymmetrize(np.multiply.outer(to_dense(a, n_modes), to_dense(b, n_modes)))
        worst_dense = max(worst_dense, wedge(a, b).max_abs_diff(brute))
    out["wedge_associativity"] = worst_assoc
    out["graded_commutativity"] = worst_comm
    out["wedge_vs_dense"] = worst_dense

    worst = 0.0
    for degree in range(1, 5):
        fs = [_cvec(rng, n_modes) for _ in range(degree)]
        gs = [_cvec(rng, n_modes) for _ in range(degree)]
        F, G = AntisymTensor.scalar(1.0), AntisymTensor.scalar(1.0)
        for f, g in zip(fs, gs):
            F, G = wedge(F, AntisymTensor.vector(f)), wedge(G, AntisymTensor.vector(g))
        gram = [[np.vdot(f, g) for g in gs] for f in fs]
        brute = 0j
        for perm in itertools.permutations(range(degree)):
            brute += permutation_sign(perm) * np.prod([gram[i][perm[i]] for i in range(degree)])
        brute /= math.factorial(degree)
        worst = max(worst, _rel(abs(inner_product(F, G) - brute), abs(brute)))
    out["determinant_inner_product"] = worst

    ones = np.ones(n_modes)
    worst = 0.0
    for _ in range(n_pairs):
        p, q = rng.integers(0, 4, size=2)
        if p + q > n_modes:
            continue
        a = random_tensor(rng, n_modes, int(p), density=0.6)
        b = random_tensor(rng, n_modes, int(q), density=0.6)
        lhs = weighted_norm(wedge(a, b), 0.0, ones)
        rhs = weighted_norm(a, 0.0, ones) * weighted_norm(b, 0.0, ones)
        worst = max(worst, lhs - rhs, 0.0)
    out["wedge_norm_inequality"] = worst
    return out


def car_suite(seed: int = 0, n_vectors: int = 50, pairing: PairingTable = TOY_PAIRING) -> dict:
    """Anticommutators on the basis of a toy pairing and the involution property of ``W``."""
    rng = np.random.default_rng(seed)
    n = pairing.n_modes
    eye = np.eye(n)
    pmat = pairing.matrix()
    v = random_fock_vector(n, 4, "mixed", seed=seed).with_max_particles(n)
    cre = [create(eye[i], v) for i in range(n)]
    ann = [annihilate(eye[i], v, pairing) for i in range(n)]
    worst_mixed = worst_cc = worst_aa = 0.0
    for i in range(n):
        for j in range(n):
            mixed = create(eye[i], ann[j]) + annihilate(eye[j], cre[i], pairing) - v * pmat[j, i]
            worst_mixed = max(worst_mixed, mixed.norm())
            worst_cc = max(worst_cc, (create(eye[i], cre[j]) + create(eye[j], cre[i])).norm())
            worst_aa = max(worst_aa, (annihilate(eye[i], ann[j], pairing)
                                      + annihilate(eye[j], ann[i], pairing)).norm())
    worst_w = 0.0
    for k in range(n_vectors):
        f = _cvec(rng, n)
        f /= np.linalg.norm(f)
        w = random_fock_vector(n, 4, "mixed", seed=seed + 1000 + k, keys_per_degree=6).with_max_particles(n)
        worst_w = max(worst_w, (w_op(f, w_op(f, w, pairing), pairing) - w).norm())
    return {
        "anticommutator_create_annihilate": worst_mixed,
        "anticommutator_create_create": worst_cc,
        "anticommutator_annihilate_annihilate": worst_aa,
        "w_involution": worst_w,
    }


def operators_suite(seed: int = 0, n_triples: int = 50, pairing: PairingTable = TOY_PAIRING,
                    n_modes: int = 6) -> dict:
    """Integral-kernel-operator identities on even vectors.

    Uses the first ``n_modes`` modes of ``pairing`` when they form a
    closed sub-pairing.
    """
    rng = np.random.default_rng(seed)
    sub = PairingTable(pairing.partner[:n_modes], pairing.weight[:n_modes])
    n = n_modes
    out = dict.fromkeys(["xi10_pair_creation", "xi01_pair_annihilation", "xi11_two_particle",
                         "one_body_dgamma", "route_agreement", "composition"], 0.0)
    for k in range(n_triples):
        v = random_fock_vector(n, 4, "even", seed=seed + k, keys_per_degree=5).with_max_particles(n)
        f, g = _cvec(rng, n), _cvec(rng, n)
        F, G = AntisymTensor.vector(f), AntisymTensor.vector(g)
        x10 = apply_ikop(1, 0, pair_kernel(wedge(F, G), True), v, sub)
        out["xi10_pair_creation"] = max(out["xi10_pair_creation"], (x10 - create(f, create(g, v))).norm())
        x01 = apply_ikop(0, 1, pair_kernel(wedge(F, G), False), v, sub)
        ref = annihilate(f, annihilate(g, v, sub), sub)
        out["xi01_pair_annihilation"] = max(out["xi01_pair_annihilation"], (x01 - ref).norm())

        B = np.outer(f, np.conj(g))
        two = random_fock_vector(n, 2, "even", seed=seed + 500 + k, min_degree=2).with_max_particles(n)
        xi11 = apply_ikop(1, 1, dgamma2(B, sub), two, sub)
        plain = create(f, annihilate_plain(g, two))
        out["xi11_two_particle"] = max(out["xi11_two_particle"], (xi11 - plain).norm())
        one_body = second_quantize(B, sub).apply(v)
        out["one_body_dgamma"] = max(out["one_body_dgamma"], (one_body - create(f, annihilate_plain(g, v))).norm())

        (l, m), (lp, mp) = [tuple(int(x) for x in rng.integers(0, 2, size=2)) for _ in range(2)]
        kappa = random_kernel(rng, n, 2 * l, 2 * m)
        lam = random_kernel(rng, n, 2 * lp, 2 * mp)
        fast = apply_ikop(l, m, kappa, v, sub)
        slow = apply_ikop(l, m, kappa, v, sub, route="definitional")
        out["route_agreement"] = max(out["route_agreement"], _rel((fast - slow).norm(), fast.norm()))
        composed = compose_ikop(l, m, kappa, lp, mp, lam, sub).apply(v)
        sequential = apply_ikop(l, m, kappa, apply_ikop(lp, mp, lam, v, sub), sub)
        out["composition"] = max(out["composition"], _rel((composed - sequential).norm(), sequential.norm()))
    return out


def implementer_suite(scenario: Scenario, gauge: GaugeFunction, seed: int = 0, max_particles: int = 4,
                      n_samples: int = 100, bulk_radius: int | None = None) -> dict:
    """Commutator residuals of the implementer on random bulk inputs."""
    if bulk_radius is None:
        bulk_radius = min(5, scenario.mode_cutoff - 2 * max(gauge.bandwidth, 1))
    if bulk_radius < 0:
        raise ValueError("mode cutoff too small for the gauge bandwidth")
    model = build_model(scenario)
    summary = run_verification(model, gauge, n_samples=n_samples, seed=seed, bulk_radius=bulk_radius,
                               max_particles=max_particles)
    out = dict(summary.max_residual)
    out["truncation_leaks"] = float(summary.leaked)
    return out
