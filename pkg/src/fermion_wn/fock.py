"""Truncated fermionic Fock vectors in the occupation (bitmask) basis.

A basis state ``e_{i1} ^ ... ^ e_{in}`` with ``i1 < ... < in`` is encoded as
the integer with bits ``i1, ..., in`` set.  With the wedge-coordinate
convention of :mod:`fermion_wn.exterior` the Fock norm of such a vector is
simply the Euclidean norm of its amplitudes, so a vector is a pair of
arrays ``(keys, amps)``.

The low-level routines here apply products of elementary creation and
annihilation operators to every stored state at once.  The annihilator
``a_j`` used internally is the plain one, ``a_j e_j ^ rest = rest``; pairing
through a complex structure is handled one level up in :mod:`qops`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .exterior import AntisymTensor

MAX_MODES = 63


def popcount(keys: np.ndarray) -> np.ndarray:
    return np.bitwise_count(keys).astype(np.int64)


def _below_mask(j: int) -> np.uint64:
    return np.uint64((1 << j) - 1)


def key_to_modes(key: int) -> tuple[int, ...]:
    out = []
    j = 0
    while key:
        if key & 1:
            out.append(j)
        key >>= 1
        j += 1
    return tuple(out)


def modes_to_key(modes: Sequence[int]) -> int:
    key = 0
    for j in modes:
        key |= 1 << int(j)
    return key


def apply_annihilator(keys: np.ndarray, amps: np.ndarray, j: int):
    """Apply the plain annihilator of mode ``j`` to every state."""
    bit = np.uint64(1 << j)
    hit = (keys & bit) != 0
    k = keys[hit]
    sign = 1 - 2 * (popcount(k & _below_mask(j)) & 1)
    return k ^ bit, amps[hit] * sign


def apply_creator(keys: np.ndarray, amps: np.ndarray, j: int):
    """Apply the creator of mode ``j`` to every state."""
    bit = np.uint64(1 << j)
    free = (keys & bit) == 0
    k = keys[free]
    sign = 1 - 2 * (popcount(k & _below_mask(j)) & 1)
    return k | bit, amps[free] * sign


def apply_monomial(keys: np.ndarray, amps: np.ndarray, creators: Sequence[int], annihilators: Sequence[int]):
    """Apply ``a+_{c1} ... a+_{cp} a_{t1} ... a_{tq}`` (rightmost acts first)."""
    for j in reversed(annihilators):
        keys, amps = apply_annihilator(keys, amps, j)
        if keys.size == 0:
            return keys, amps
    for j in reversed(creators):
        keys, amps = apply_creator(keys, amps, j)
        if keys.size == 0:
            return keys, amps
    return keys, amps


def apply_creator_batch(keys: np.ndarray, amps: np.ndarray, creators: np.ndarray, coeffs: np.ndarray):
    """Apply ``sum_k coeffs[k] a+_{creators[k, 0]} ... a+_{creators[k, -1]}`` in one broadcast.

    Returns flattened ``(keys, amps)`` that may contain repeated keys.
    """
    creators = np.asarray(creators, dtype=np.int64)
    k = np.broadcast_to(keys, (creators.shape[0], keys.size)).copy()
    a = np.outer(coeffs, amps)
    for col in range(creators.shape[1] - 1, -1, -1):
        j = creators[:, col]
        bit = (np.uint64(1) << j.astype(np.uint64))[:, None]
        below = (bit - np.uint64(1))
        a = a * np.where((k & bit) == 0, 1 - 2 * (popcount(k & below) & 1), 0)
        k = k | bit
    live = a != 0
    return k[live], a[live]


def combine(key_parts: list, amp_parts: list):
    """Sum amplitudes of repeated keys; drops exact zeros."""
    if not key_parts:
        return np.zeros(0, dtype=np.uint64), np.zeros(0, dtype=complex)
    keys = np.concatenate(key_parts)
    amps = np.concatenate(amp_parts)
    if keys.size == 0:
        return keys.astype(np.uint64), amps.astype(complex)
    uniq, inv = np.unique(keys, return_inverse=True)
    re = np.bincount(inv, weights=amps.real, minlength=uniq.size)
    im = np.bincount(inv, weights=amps.imag, minlength=uniq.size)
    out = re + 1j * im
    nz = out != 0
    return uniq[nz], out[nz]


@dataclass(frozen=True)
class FockVector:
    """Finite Fock vector over ``n_modes`` positive-energy modes.

    Parameters
    ----------
    n_modes : int
    keys : ndarray of uint64
        Sorted occupation bitmasks, no repeats.
    amps : ndarray of complex
        Occupation amplitudes (orthonormal basis, so ``||v||^2 = sum |amps|^2``).
    max_particles : int
        Components above this degree are dropped when produced.
    dropped : float
        Accumulated squared norm of amplitudes discarded by truncation.
    drop_events : int
        Number of nonzero amplitudes discarded; any positive value raises
        the truncation flag.
    """

    n_modes: int
    keys: np.ndarray
    amps: np.ndarray
    max_particles: int = 4
    dropped: float = 0.0
    drop_events: int = 0

    def __post_init__(self):
        if self.n_modes > MAX_MODES:
            raise ValueError(f"Fock vectors support at most {MAX_MODES} modes, got {self.n_modes}")
        keys = np.asarray(self.keys, dtype=np.uint64)
        amps = np.asarray(self.amps, dtype=complex)
        if keys.shape != amps.shape:
            raise ValueError("keys and amplitudes differ in shape")
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "amps", amps)

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n_modes: int, max_particles: int = 4) -> "FockVector":
        return cls(n_modes, np.zeros(0, np.uint64), np.zeros(0, complex), max_particles)

    @classmethod
    def vacuum(cls, n_modes: int, max_particles: int = 4, amplitude: complex = 1.0) -> "FockVector":
        return cls(n_modes, np.zeros(1, np.uint64), np.array([amplitude], complex), max_particles)

    @classmethod
    def basis(cls, n_modes: int, modes: Sequence[int], max_particles: int = 4) -> "FockVector":
        """The state ``e_{m1} ^ ... ^ e_{mk}`` with modes given in any order."""
        t = AntisymTensor.basis(*modes)
        return cls.from_components(n_modes, {t.degree: t}, max_particles)

    @classmethod
    def from_components(cls, n_modes: int, components: Mapping[int, AntisymTensor], max_particles: int = 4) -> "FockVector":
        keys, amps = [], []
        for degree, tensor in components.items():
            if tensor.degree != degree:
                raise ValueError("component degree label disagrees with tensor degree")
            if degree > max_particles and tensor.coeffs:
                raise ValueError("component above max_particles")
            for key, c in tensor.coeffs.items():
                if key and max(key) >= n_modes:
                    raise ValueError("mode id outside the mode set")
                keys.append(modes_to_key(key))
                amps.append(c)
        k, a = combine([np.array(keys, dtype=np.uint64)], [np.array(amps, dtype=complex)])
        return cls(n_modes, k, a, max_particles)

    def with_arrays(self, keys: np.ndarray, amps: np.ndarray, extra_drop: float = 0.0, extra_events: int = 0) -> "FockVector":
        return FockVector(self.n_modes, keys, amps, self.max_particles,
                          self.dropped + extra_drop, self.drop_events + extra_events)

    def with_max_particles(self, max_particles: int) -> "FockVector":
        return FockVector(self.n_modes, self.keys, self.amps, max_particles, self.dropped, self.drop_events)

    # -- views ------------------------------------------------------------
    @property
    def degrees(self) -> np.ndarray:
        return popcount(self.keys)

    @property
    def components(self) -> dict[int, AntisymTensor]:
        """Map degree to :class:`AntisymTensor` (wedge coordinates)."""
        buckets: dict[int, dict] = {}
        for key, amp, deg in zip(self.keys.tolist(), self.amps.tolist(), self.degrees.tolist()):
            buckets.setdefault(deg, {})[key_to_modes(key)] = amp
        return {d: AntisymTensor(d, c) for d, c in sorted(buckets.items())}

    @property
    def truncated(self) -> bool:
        return self.drop_events > 0

    def amplitude(self, modes: Sequence[int]) -> complex:
        """Amplitude of ``e_{m1} ^ ... ^ e_{mk}`` with modes in any order."""
        t = AntisymTensor.basis(*modes)
        if not t.coeffs:
            return 0j
        (key, sign), = t.coeffs.items()
        idx = np.searchsorted(self.keys, np.uint64(modes_to_key(key)))
        if idx < self.keys.size and self.keys[idx] == modes_to_key(key):
            return complex(self.amps[idx] * sign)
        return 0j

    def parity(self) -> str | None:
        """``'even'``, ``'odd'``, or ``None`` for a mixed or zero vector."""
        if self.keys.size == 0:
            return None
        odd = self.degrees & 1
        if not odd.any():
            return "even"
        if odd.all():
            return "odd"
        return None

    # -- arithmetic -------------------------------------------------------
    def _check(self, other: "FockVector"):
        if other.n_modes != self.n_modes:
            raise ValueError("Fock vectors over different mode sets")

    def __add__(self, other: "FockVector") -> "FockVector":
        self._check(other)
        k, a = combine([self.keys, other.keys], [self.amps, other.amps])
        return FockVector(self.n_modes, k, a, max(self.max_particles, other.max_particles),
                          self.dropped + other.dropped, self.drop_events + other.drop_events)

    def __mul__(self, scalar: complex) -> "FockVector":
        if scalar == 0:
            return self.with_arrays(np.zeros(0, np.uint64), np.zeros(0, complex))
        return self.with_arrays(self.keys, self.amps * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "FockVector":
        return self * -1

    def __sub__(self, other: "FockVector") -> "FockVector":
        return self + (-other)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def vdot(self, other: "FockVector") -> complex:
        """Inner product, conjugate-linear in ``self``."""
        self._check(other)
        common, ia, ib = np.intersect1d(self.keys, other.keys, assume_unique=True, return_indices=True)
        return complex(np.sum(np.conj(self.amps[ia]) * other.amps[ib]))

    def truncate_to(self, max_particles: int) -> "FockVector":
        """Drop components above ``max_particles``, recording the loss."""
        over = self.degrees > max_particles
        if not over.any():
            return self
        lost = float(np.sum(np.abs(self.amps[over]) ** 2))
        events = int(np.count_nonzero(self.amps[over]))
        return self.with_arrays(self.keys[~over], self.amps[~over], lost, events)


def fock_norm(v: FockVector, p: float = 0.0, eigenvalues=None) -> float:
    """``sqrt(sum_n n! |v_n|_p^2)``, the weighted Fock norm.

    In occupation coordinates this is ``sqrt(sum_I |c_I|^2 prod_{i in I} lambda_i^{2p})``.
    """
    if p == 0 or eigenvalues is None:
        if p != 0:
            raise ValueError("eigenvalues are required for p != 0")
        return v.norm()
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size < v.n_modes:
        raise ValueError("an eigenvalue is required for every mode")
    log_lam = np.log(lam[: v.n_modes])
    weights = np.zeros(v.keys.size)
    for j in range(v.n_modes):
        occupied = (v.keys >> np.uint64(j)) & np.uint64(1)
        weights += occupied.astype(float) * log_lam[j]
    return float(np.sqrt(np.sum(np.abs(v.amps) ** 2 * np.exp(2 * p * weights))))


def sector_split(v: FockVector) -> tuple[FockVector, FockVector]:
    """Split into even-degree and odd-degree parts."""
    odd = (v.degrees & 1).astype(bool)
    even_v = FockVector(v.n_modes, v.keys[~odd], v.amps[~odd], v.max_particles, v.dropped, v.drop_events)
    odd_v = FockVector(v.n_modes, v.keys[odd], v.amps[odd], v.max_particles, v.dropped, v.drop_events)
    return even_v, odd_v


def _bulk_mask(modes, bulk_radius: float | None) -> np.ndarray:
    if isinstance(modes, (int, np.integer)):
        return np.ones(int(modes), dtype=bool)
    mask = []
    for mode in modes:
        momentum = np.atleast_1d(np.asarray(getattr(mode, "momentum", mode)))
        radius = float(np.max(np.abs(momentum))) if momentum.size else 0.0
        mask.append(bulk_radius is None or radius <= bulk_radius)
    return np.array(mask, dtype=bool)


def random_fock_vector(
    modes,
    max_particles: int,
    parity: str,
    bulk_radius: float | None = None,
    seed: int = 0,
    keys_per_degree: int | None = None,
    min_degree: int = 0,
) -> FockVector:
    """Deterministic normalized random vector supported on bulk modes.

    Parameters
    ----------
    modes : int or sequence
        Either a mode count (all modes are bulk) or a sequence of mode
        descriptors with a ``momentum`` attribute (or plain momenta).
    max_particles : int
        Highest degree that receives amplitude; also the vector's cap.
    parity : {'even', 'odd', 'mixed'}
    bulk_radius : float, optional
        Keep modes whose momentum max-norm is at most this radius.
    seed : int
    keys_per_degree : int, optional
        Number of random basis states per degree; all states when omitted.
    min_degree : int
        Lowest degree that receives amplitude.
    """
    if parity not in ("even", "odd", "mixed"):
        raise ValueError("parity must be 'even', 'odd' or 'mixed'")
    mask = _bulk_mask(modes, bulk_radius)
    n_modes = mask.size
    support = np.flatnonzero(mask)
    if support.size == 0:
        raise ValueError("no modes inside the bulk radius")
    rng = np.random.default_rng(seed)
    degrees = [d for d in range(min_degree, max_particles + 1)
               if parity == "mixed" or (d % 2 == 0) == (parity == "even")]
    degrees = [d for d in degrees if d <= support.size]
    if not degrees:
        raise ValueError("no admissible degree for this parity and support")
    keys: list[int] = []
    for d in degrees:
        total = math.comb(support.size, d)
        want = total if keys_per_degree is None else min(keys_per_degree, total)
        chosen: set[int] = set()
        if want == total:
            import itertools

            for combo in itertools.combinations(support.tolist(), d):
                chosen.add(modes_to_key(combo))
        else:
            while len(chosen) < want:
                combo = rng.choice(support, size=d, replace=False)
                chosen.add(modes_to_key(combo.tolist()))
        keys.extend(sorted(chosen))
    amps = rng.normal(size=len(keys)) + 1j * rng.normal(size=len(keys))
    amps /= np.linalg.norm(amps)
    order = np.argsort(np.array(keys, dtype=np.uint64))
    return FockVector(n_modes, np.array(keys, dtype=np.uint64)[order], amps[order], max_particles)
