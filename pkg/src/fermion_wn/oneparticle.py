"""Truncated one-particle models: Dirac eigenbases on tori and gauge-generator matrices.

Every basis vector of ``K`` is a plane wave ``U exp(i alpha.x)`` with a
constant four-component amplitude ``U``.  Amplitudes are laid out as
``(upper, lower) (x) internal``: index ``2*block + internal``.  The gauge
generator ``X(x) = -phi(x) sigma_2`` acts on the internal factor.

Positive-energy modes ``e_j`` are enumerated first; the second half of the
``K`` basis is ``f_j := Gamma e_j``, so ``Gamma`` swaps the halves with unit
phase by construction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .exterior import PairingTable

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
I2 = np.eye(2, dtype=complex)
#: internal basis e_+ , e_- (eigenvectors of sigma_2 with eigenvalues -1, +1)
E_INTERNAL = {"+": np.array([1j, 1], dtype=complex) / np.sqrt(2), "-": np.array([-1j, 1], dtype=complex) / np.sqrt(2)}
#: generator acting on the 4-component amplitude (internal factor only)
GAUGE_ACTION = np.kron(I2, SIGMA[1])


def _flip(label: str) -> str:
    return "-" if label == "+" else "+"


def _sign(label: str) -> int:
    return 1 if label == "+" else -1


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """Physical setting of a truncated model.

    Parameters
    ----------
    torus_dim : {1, 3}
    mass : float
        ``m >= 0``.
    shift_c : float
        Spectral shift ``c > 1``; used only when ``mass <= 1``.
    mode_cutoff : int
        Keep momenta with max-norm at most this value.
    """

    torus_dim: int
    mass: float
    shift_c: float = 2.0
    mode_cutoff: int = 8

    def __post_init__(self):
        if self.torus_dim not in (1, 3):
            raise ValueError(f"torus_dim must be 1 or 3, got {self.torus_dim}")
        if not (isinstance(self.mode_cutoff, (int, np.integer)) and self.mode_cutoff >= 1):
            raise ValueError("mode_cutoff must be an integer >= 1")
        if not self.mass >= 0:
            raise ValueError("mass must be non-negative")
        if self.mass <= 1 and not self.shift_c > 1:
            raise ValueError("mass <= 1 requires shift_c > 1")

    @property
    def massive(self) -> bool:
        return self.mass > 0

    @property
    def weight_shift(self) -> float:
        """Constant added to the positive energy to obtain the weight eigenvalue."""
        return 0.0 if self.mass > 1 else float(self.shift_c)

    def with_cutoff(self, cutoff: int) -> "Scenario":
        return Scenario(self.torus_dim, self.mass, self.shift_c, int(cutoff))


@dataclass(frozen=True)
class ModeIndex:
    """Label of a basis vector of ``K``."""

    momentum: tuple
    internal: str
    energy_sign: str = "+"

    def __post_init__(self):
        object.__setattr__(self, "momentum", tuple(int(a) for a in np.atleast_1d(self.momentum)))
        if self.internal not in ("+", "-") or self.energy_sign not in ("+", "-"):
            raise ValueError("labels must be '+' or '-'")


@dataclass(frozen=True)
class GaugeFunction:
    """Real trigonometric polynomial given by its Fourier coefficients.

    ``phi(x) = sum_gamma phi_hat(gamma) exp(i gamma.x)`` with
    ``phi_hat(gamma) = (2 pi)^-d int phi(x) exp(-i gamma.x) dx``.
    """

    fourier: Mapping
    torus_dim: int = 1

    def __post_init__(self):
        coeffs = {}
        for g, c in dict(self.fourier).items():
            key = tuple(int(a) for a in np.atleast_1d(g))
            if len(key) != self.torus_dim:
                raise ValueError(f"frequency {key} does not match torus_dim={self.torus_dim}")
            if c != 0:
                coeffs[key] = coeffs.get(key, 0) + complex(c)
        for g, c in coeffs.items():
            partner = coeffs.get(tuple(-a for a in g), 0)
            if abs(partner - np.conj(c)) > 1e-12 * max(1.0, abs(c)):
                raise ValueError("Fourier coefficients violate phi_hat(-g) = conj(phi_hat(g)); phi must be real")
        object.__setattr__(self, "fourier", coeffs)

    @classmethod
    def zero(cls, torus_dim: int = 1) -> "GaugeFunction":
        return cls({}, torus_dim)

    @classmethod
    def cosine(cls, torus_dim: int = 1, axis: int | None = None, frequency: int = 1, amplitude: float = 1.0) -> "GaugeFunction":
        """``amplitude * cos(frequency * x_axis)``; the default axis is ``x_2`` on the 3-torus."""
        if axis is None:
            axis = 0 if torus_dim == 1 else 1
        g = [0] * torus_dim
        g[axis] = frequency
        return cls({tuple(g): amplitude / 2, tuple(-a for a in g): amplitude / 2}, torus_dim)

    def __add__(self, other: "GaugeFunction") -> "GaugeFunction":
        merged = dict(self.fourier)
        for g, c in other.fourier.items():
            merged[g] = merged.get(g, 0) + c
        return GaugeFunction(merged, self.torus_dim)

    def coefficient(self, gamma) -> complex:
        return self.fourier.get(tuple(int(a) for a in np.atleast_1d(gamma)), 0j)

    @property
    def support(self) -> list[tuple]:
        return sorted(self.fourier)

    @property
    def bandwidth(self) -> int:
        return max((max(abs(a) for a in g) for g in self.fourier), default=0)

    def values(self, points: np.ndarray) -> np.ndarray:
        """Evaluate on points of shape ``(P, d)``."""
        pts = np.atleast_2d(points)
        out = np.zeros(pts.shape[0], dtype=complex)
        for g, c in self.fourier.items():
            out += c * np.exp(1j * pts @ np.array(g, dtype=float))
        return out

    def second_derivative_l2_squared(self) -> float:
        """``||Laplacian phi||^2`` with the normalised measure ``dx/(2 pi)^d``."""
        return float(sum(abs(c) ** 2 * (np.dot(g, g)) ** 2 for g, c in self.fourier.items()))


# ---------------------------------------------------------------------------
# Spinor algebra
# ---------------------------------------------------------------------------


def dirac_symbol(momentum, mass: float) -> np.ndarray:
    """Fourier symbol of the Dirac Hamiltonian at ``momentum`` (4x4, outer (x) internal layout)."""
    k = np.asarray(momentum, dtype=float)
    if k.size == 1:
        block = np.array([[k[0], mass], [mass, -k[0]]], dtype=complex)
        return np.kron(block, I2)
    sk = sum(k[j] * SIGMA[j] for j in range(3))
    return np.kron(SIGMA[2], sk) + mass * np.kron(SIGMA[0], I2)


def iota(momentum) -> tuple:
    """Reflection ``(a1, a2, a3) -> (-a1, a2, -a3)`` (conjugation of Pauli matrices by sigma_2)."""
    a = tuple(momentum)
    return (-a[0], a[1], -a[2])


def _d1_coefficient(alpha: float, mass: float) -> float:
    return math.sqrt(0.5 * (1 + alpha / math.sqrt(alpha * alpha + mass * mass)))


def _projector(momentum) -> np.ndarray:
    a = np.asarray(momentum, dtype=float)
    norm = np.linalg.norm(a)
    return 0.5 * (I2 + sum(a[j] / norm * SIGMA[j] for j in range(3)))


def _a_matrix(momentum, mass: float) -> np.ndarray:
    """``A_alpha = d+ p_alpha + d- (1 - p_alpha)``; ``I/sqrt(2)`` at the origin for m > 0."""
    a = np.asarray(momentum, dtype=float)
    norm = np.linalg.norm(a)
    if norm == 0:
        if mass == 0:
            raise ValueError("A_alpha is undefined at alpha = 0 for m = 0")
        return I2 / np.sqrt(2)
    energy = math.sqrt(norm * norm + mass * mass)
    dp = math.sqrt(0.5 * (1 + norm / energy))
    dm = math.sqrt(0.5 * (1 - norm / energy))
    p = _projector(a)
    return dp * p + dm * (I2 - p)


def local_gamma(amplitude: np.ndarray, torus_dim: int) -> np.ndarray:
    """Amplitude part of ``Gamma`` (momentum goes to its negative).

    One dimension: ``u (x) (f1, f2) -> conj(u) (x) (conj f1, -conj f2)``.
    Three dimensions: ``(i sigma_2 (x) i sigma_2) C``, which anticommutes with
    the Dirac symbol and commutes with the gauge action.
    """
    v = np.conj(np.asarray(amplitude, dtype=complex))
    if torus_dim == 1:
        return np.kron(SIGMA[2], I2) @ v
    isig = 1j * SIGMA[1]
    return np.kron(isig, isig) @ v


def local_j(amplitude: np.ndarray, torus_dim: int) -> np.ndarray:
    """Amplitude part of ``J`` in one dimension: ``u (x) (f1, f2) -> conj(u) (x) (conj f2, conj f1)``."""
    if torus_dim != 1:
        raise ValueError("the local complex structure is only defined on the circle")
    return np.kron(SIGMA[0], I2) @ np.conj(np.asarray(amplitude, dtype=complex))


def spinor_d_coefficients(model: "OneParticleModel", alpha):
    """Coefficients of the positive-energy spinors.

    Returns
    -------
    float
        ``d_alpha`` on the circle.
    dict
        On the 3-torus: ``d_plus``, ``d_minus``, ``p`` (``None`` at the
        origin) and ``A``.

    Raises
    ------
    ValueError
        For massless models (projector spinors are used directly) and for
        ``alpha = 0`` on the massless 3-torus.
    """
    sc = model.scenario
    a = tuple(int(x) for x in np.atleast_1d(alpha))
    if max(abs(x) for x in a) > sc.mode_cutoff:
        raise ValueError("alpha outside the mode cutoff")
    if sc.torus_dim == 3 and sc.mass == 0 and not any(a):
        raise ValueError("p_alpha is undefined at alpha = 0 on the massless 3-torus")
    if not sc.massive:
        raise ValueError("d-coefficients are defined for massive scenarios only")
    if sc.torus_dim == 1:
        return _d1_coefficient(a[0], sc.mass)
    norm = float(np.linalg.norm(a))
    energy = math.sqrt(norm * norm + sc.mass ** 2)
    return {
        "d_plus": math.sqrt(0.5 * (1 + norm / energy)),
        "d_minus": math.sqrt(0.5 * (1 - norm / energy)),
        "p": _projector(a) if norm else None,
        "A": _a_matrix(a, sc.mass),
    }


def positive_spinor(scenario: Scenario, momentum: tuple, internal: str) -> np.ndarray:
    """Amplitude of one positive-energy mode, built mode by mode (reference route)."""
    e = E_INTERNAL[internal]
    m = scenario.mass
    if scenario.torus_dim == 1:
        a = momentum[0]
        if m > 0:
            upper = np.array([_d1_coefficient(a, m), _d1_coefficient(-a, m)])
        elif a > 0:
            upper = np.array([1.0, 0.0])
        elif a < 0:
            upper = np.array([0.0, -1.0])
        else:
            upper = np.array([1.0, 1.0]) / np.sqrt(2)
        return np.kron(upper, e)
    if m == 0 and not any(momentum):
        return np.concatenate([e, e]) / np.sqrt(2)
    return np.concatenate([_a_matrix(momentum, m) @ e, _a_matrix(tuple(-x for x in momentum), m) @ e])


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OneParticleModel:
    """Truncated eigenbasis of a scenario.

    Attributes
    ----------
    positive_modes : list of ModeIndex
        Basis ``e_j`` of ``H = P+ K`` in canonical order.
    momenta : ndarray, shape (n, d)
    energies : ndarray
        Positive Dirac energies ``sqrt(E(alpha))``.
    eigenvalues : ndarray
        Weight-operator eigenvalues (``> 1``).
    spinors : ndarray, shape (2n, 4)
        Amplitudes of ``e_j`` followed by those of ``f_j = Gamma e_j``.
    pairing : PairingTable
        Complex structure ``J`` restricted to ``H``.
    """

    scenario: Scenario
    positive_modes: tuple
    momenta: np.ndarray
    energies: np.ndarray
    eigenvalues: np.ndarray
    spinors: np.ndarray
    pairing: PairingTable

    @property
    def n_modes(self) -> int:
        return len(self.positive_modes)

    @property
    def torus_dim(self) -> int:
        return self.scenario.torus_dim

    @cached_property
    def negative_modes(self) -> tuple:
        return tuple(ModeIndex(tuple(-a for a in m.momentum), _flip(m.internal), "-") for m in self.positive_modes)

    @cached_property
    def all_modes(self) -> tuple:
        return self.positive_modes + self.negative_modes

    @cached_property
    def full_momenta(self) -> np.ndarray:
        return np.concatenate([self.momenta, -self.momenta])

    @cached_property
    def _index(self) -> dict:
        return {m: i for i, m in enumerate(self.all_modes)}

    def index_of(self, mode) -> int:
        """Position of a mode in the ``K`` basis (positives first)."""
        if isinstance(mode, (int, np.integer)):
            if not 0 <= mode < 2 * self.n_modes:
                raise IndexError("mode index outside the truncation")
            return int(mode)
        if mode not in self._index:
            raise KeyError(f"{mode} is not in the truncation")
        return self._index[mode]

    @cached_property
    def dirac_energy(self) -> np.ndarray:
        """Signed Dirac energies of all ``K`` basis vectors."""
        return np.concatenate([self.energies, -self.energies])

    @property
    def gamma_perm(self) -> np.ndarray:
        """``Gamma`` maps basis vector ``i`` to basis vector ``gamma_perm[i]`` with phase 1."""
        n = self.n_modes
        return np.concatenate([np.arange(n, 2 * n), np.arange(n)])

    @property
    def j_perm(self) -> np.ndarray:
        return np.asarray(self.pairing.partner)

    def j_full_matrix(self) -> np.ndarray:
        """Matrix ``M`` with ``J x = M conj(x)`` on ``K``.

        On ``H`` this is the pairing; on ``Gamma H`` it is ``-Gamma J Gamma``.
        """
        n = self.n_modes
        M = np.zeros((2 * n, 2 * n), dtype=complex)
        for a, (b, w) in enumerate(zip(self.pairing.partner, self.pairing.weight)):
            M[b, a] = np.conj(w)
            M[n + b, n + a] = -w
        return M

    def gamma_full_matrix(self) -> np.ndarray:
        """Matrix ``G`` with ``Gamma x = G conj(x)``."""
        n = self.n_modes
        G = np.zeros((2 * n, 2 * n))
        G[:n, n:] = np.eye(n)
        G[n:, :n] = np.eye(n)
        return G

    def eigen_residuals(self) -> np.ndarray:
        """``|h(alpha) U - energy U|`` for every ``K`` basis vector."""
        out = np.empty(2 * self.n_modes)
        for i, (k, u, e) in enumerate(zip(self.full_momenta, self.spinors, self.dirac_energy)):
            out[i] = np.abs(dirac_symbol(k, self.scenario.mass) @ u - e * u).max()
        return out

    def local_gamma_residual(self) -> float:
        """Distance between the stored ``Gamma`` images and the local antiunitary."""
        n = self.n_modes
        imgs = np.array([local_gamma(u, self.torus_dim) for u in self.spinors[:n]])
        return float(np.abs(imgs - self.spinors[n:]).max())

    def j_gamma_anticommutator(self) -> float:
        """``max |(J Gamma + Gamma J) e_j|`` over the full basis (uses the matrix forms)."""
        J, G = self.j_full_matrix(), self.gamma_full_matrix()
        # J Gamma x = J G x and Gamma J x = G conj(J) x for the antilinear forms
        return float(np.abs(J @ G + G @ np.conj(J)).max())

    def local_j_residual(self) -> float:
        """Circle only: distance between ``j_full_matrix`` and the local complex structure on all of ``K``."""
        M = self.j_full_matrix()
        imgs = np.array([local_j(u, 1) for u in self.spinors])  # column a of J in amplitude space
        # sum_b M[b, a] U_b must equal the local image of U_a (momentum -k matches by construction)
        recon = M.T @ self.spinors
        return float(np.abs(recon - imgs).max())

    def orthonormality_residual(self) -> float:
        """Max deviation from orthonormality of the basis (plane waves times amplitudes)."""
        keys = [tuple(k) for k in self.full_momenta]
        groups: dict = {}
        for i, k in enumerate(keys):
            groups.setdefault(k, []).append(i)
        worst = 0.0
        for idx in groups.values():
            U = self.spinors[idx]
            worst = max(worst, float(np.abs(U.conj() @ U.T - np.eye(len(idx))).max()))
        return worst


def _positive_spinors(scenario: Scenario, momenta: np.ndarray, internal: np.ndarray) -> np.ndarray:
    """Vectorised amplitudes of the positive-energy modes, shape (n, 4)."""
    n = momenta.shape[0]
    e = np.where(internal[:, None] == 0, E_INTERNAL["+"][None, :], E_INTERNAL["-"][None, :])
    m = scenario.mass
    k = momenta.astype(float)
    if scenario.torus_dim == 1:
        a = k[:, 0]
        if m > 0:
            energy = np.sqrt(a * a + m * m)
            upper = np.stack([np.sqrt(0.5 * (1 + a / energy)), np.sqrt(0.5 * (1 - a / energy))], axis=1)
        else:
            upper = np.zeros((n, 2))
            upper[a > 0, 0] = 1.0
            upper[a < 0, 1] = -1.0
            upper[a == 0] = 1 / np.sqrt(2)
        return (upper[:, :, None] * e[:, None, :]).reshape(n, 4)
    norm = np.linalg.norm(k, axis=1)
    energy = np.sqrt(norm * norm + m * m)
    ratio = np.divide(norm, energy, out=np.zeros(n), where=energy > 0)
    d_plus, d_minus = np.sqrt(0.5 * (1 + ratio)), np.sqrt(0.5 * (1 - ratio))
    unit = np.divide(k, norm[:, None], out=np.zeros_like(k), where=norm[:, None] > 0)
    s_e = np.einsum("nj,jab,nb->na", unit.astype(complex), np.array(SIGMA), e)
    even, odd = 0.5 * (d_plus + d_minus), 0.5 * (d_plus - d_minus)
    upper = even[:, None] * e + odd[:, None] * s_e
    lower = even[:, None] * e - odd[:, None] * s_e
    return np.concatenate([upper, lower], axis=1)


def _gamma_images(spinors: np.ndarray, torus_dim: int) -> np.ndarray:
    if torus_dim == 1:
        mat = np.kron(SIGMA[2], I2)
    else:
        mat = np.kron(1j * SIGMA[1], 1j * SIGMA[1])
    return np.conj(spinors) @ mat.T


def build_model(scenario: Scenario) -> OneParticleModel:
    """Enumerate the positive-energy modes of a scenario within its cutoff.

    Modes are ordered by energy, then momentum (lexicographic), then
    internal label with ``+`` first.

    Examples
    --------
    >>> build_model(Scenario(1, 2.0, mode_cutoff=2)).n_modes
    10
    """
    d, L, m = scenario.torus_dim, scenario.mode_cutoff, scenario.mass
    axis = np.arange(-L, L + 1)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    momenta = np.repeat(grid, 2, axis=0)
    internal = np.tile([0, 1], grid.shape[0])
    energies = np.sqrt((momenta.astype(float) ** 2).sum(axis=1) + m * m)
    keys = [internal] + [momenta[:, c] for c in range(d - 1, -1, -1)] + [np.round(energies, 12)]
    order = np.lexsort(keys)
    momenta, internal, energies = momenta[order], internal[order], energies[order]
    modes = tuple(ModeIndex(tuple(mom), "+" if s == 0 else "-", "+") for mom, s in zip(momenta.tolist(), internal))
    pos = _positive_spinors(scenario, momenta, internal)
    spinors = np.concatenate([pos, _gamma_images(pos, d)])
    eigenvalues = energies + scenario.weight_shift
    if d == 1:
        pairing = _circle_pairing(modes, momenta, pos)
    else:
        pairing = PairingTable.identity(len(modes))
    return OneParticleModel(scenario, modes, momenta, energies, eigenvalues, spinors, pairing)


def _circle_pairing(modes, momenta, spinors) -> PairingTable:
    index = {(md.momentum, md.internal): i for i, md in enumerate(modes)}
    partner, weight = [], []
    for i, md in enumerate(modes):
        image = local_j(spinors[i], 1)
        target = (tuple(-a for a in md.momentum), _flip(md.internal))
        j = index[target]
        overlap = np.vdot(spinors[j], image)
        if abs(abs(overlap) - 1) > 1e-12:
            raise RuntimeError("J does not map the positive basis onto itself")
        partner.append(j)
        weight.append(np.conj(overlap))
    return PairingTable(tuple(partner), tuple(weight))


# ---------------------------------------------------------------------------
# Gauge matrices
# ---------------------------------------------------------------------------


class _MomentumLookup:
    """Vectorised map from momenta to basis positions (padded with -1)."""

    def __init__(self, momenta: np.ndarray, cutoff: int):
        self.base = 2 * cutoff + 1
        self.cutoff = cutoff
        keys = self.encode(momenta)
        order = np.argsort(keys, kind="stable")
        uniq, start, counts = np.unique(keys[order], return_index=True, return_counts=True)
        self.uniq = uniq
        width = counts.max()
        self.table = -np.ones((uniq.size, width), dtype=np.int64)
        for slot in range(width):
            has = counts > slot
            self.table[has, slot] = order[start[has] + slot]

    def encode(self, momenta: np.ndarray) -> np.ndarray:
        shifted = np.asarray(momenta, dtype=np.int64) + self.cutoff
        key = np.zeros(shifted.shape[0], dtype=np.int64)
        for col in range(shifted.shape[1]):
            key = key * self.base + shifted[:, col]
        return key

    def find(self, momenta: np.ndarray) -> np.ndarray:
        """Rows of basis positions per momentum; ``-1`` marks absent entries."""
        momenta = np.asarray(momenta, dtype=np.int64)
        inside = (np.abs(momenta) <= self.cutoff).all(axis=1)
        out = -np.ones((momenta.shape[0], self.table.shape[1]), dtype=np.int64)
        if not inside.any():
            return out
        keys = self.encode(momenta[inside])
        pos = np.searchsorted(self.uniq, keys)
        pos = np.minimum(pos, self.uniq.size - 1)
        hit = self.uniq[pos] == keys
        rows = np.flatnonzero(inside)[hit]
        out[rows] = self.table[pos[hit]]
        return out


def _plane_wave_operator(out_mom, out_amp, in_mom, in_amp, gauge: GaugeFunction, cutoff: int) -> sp.csr_matrix:
    """Sparse matrix of ``pi(X)`` between two sets of plane-wave basis vectors."""
    lookup = _MomentumLookup(out_mom, cutoff)
    act = in_amp @ GAUGE_ACTION.T
    rows, cols, vals = [], [], []
    for gamma, coeff in gauge.fourier.items():
        targets = lookup.find(in_mom + np.array(gamma, dtype=np.int64))
        for slot in range(targets.shape[1]):
            r = targets[:, slot]
            ok = np.flatnonzero(r >= 0)
            if ok.size == 0:
                continue
            v = -coeff * np.einsum("ij,ij->i", np.conj(out_amp[r[ok]]), act[ok])
            rows.append(r[ok])
            cols.append(ok)
            vals.append(v)
    shape = (out_mom.shape[0], in_mom.shape[0])
    if not rows:
        return sp.csr_matrix(shape, dtype=complex)
    M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape)
    M.eliminate_zeros()
    return M


def _check_gauge(model: OneParticleModel, gauge: GaugeFunction):
    if gauge.torus_dim != model.torus_dim:
        raise ValueError("gauge function and model have different torus dimensions")


def gauge_block(model: OneParticleModel, gauge: GaugeFunction, block: str = "plus_minus_gamma") -> sp.csr_matrix:
    """Matrix of ``P+ pi(X) P+`` or ``P+ pi(X) P- Gamma`` on the positive modes.

    Column ``j`` of ``plus_minus_gamma`` holds the coordinates of
    ``P+ pi(X) P- Gamma e_j``.
    """
    _check_gauge(model, gauge)
    n = model.n_modes
    pos_amp = model.spinors[:n]
    if block == "plus_plus":
        return _plane_wave_operator(model.momenta, pos_amp, model.momenta, pos_amp, gauge, model.scenario.mode_cutoff)
    if block == "plus_minus_gamma":
        return _plane_wave_operator(model.momenta, pos_amp, -model.momenta, model.spinors[n:], gauge,
                                    model.scenario.mode_cutoff)
    raise ValueError("block must be 'plus_plus' or 'plus_minus_gamma'")


def gauge_matrix_full(model: OneParticleModel, gauge: GaugeFunction) -> np.ndarray:
    """Dense matrix of ``pi(X)`` on the truncated ``K`` (basis ``e_j`` then ``Gamma e_j``)."""
    _check_gauge(model, gauge)
    mom = model.full_momenta
    return _plane_wave_operator(mom, model.spinors, mom, model.spinors, gauge, model.scenario.mode_cutoff).toarray()


def generator_residuals(X: np.ndarray) -> dict:
    """Self-adjointness and ``Gamma``-oddness defects of a full generator matrix."""
    n = X.shape[0] // 2
    G = np.zeros_like(X, dtype=float)
    G[:n, n:] = np.eye(n)
    G[n:, :n] = np.eye(n)
    return {
        "hermitian": float(np.abs(X - X.conj().T).max(initial=0.0)),
        "gamma_odd": float(np.abs(G @ np.conj(X) @ G + X).max(initial=0.0)),
    }


def _resolve_pair(model: OneParticleModel, out_mode, in_mode) -> tuple[int, int]:
    i, j = model.index_of(out_mode), model.index_of(in_mode)
    n = model.n_modes
    if i >= n or j >= n:
        raise ValueError("matrix elements take positive-energy modes on both sides")
    return i, j


def gauge_matrix_element(model: OneParticleModel, gauge: GaugeFunction, out_mode, in_mode,
                         block: str = "plus_minus_gamma") -> complex:
    """Closed-form ``(e_out, P+ pi(X) P- Gamma e_in)`` or ``(e_out, P+ pi(X) P+ e_in)``.

    Massive circle, ``plus_minus_gamma``: ``delta_{s,-t} (-t)
    (d_a d_b - d_-a d_-b) phi_hat(a + b)``.  On the 3-torus away from the
    origin: ``-i t phi_hat(a + b) (sigma_2 e_s, (A_iota(a) A_b - A_iota(-a)
    A_-b) e_-t)``.  Other cases use the spinor overlap
    ``-phi_hat(a - b') (U_out, sigma_2 U_in')`` of the plane waves.
    """
    _check_gauge(model, gauge)
    if block not in ("plus_minus_gamma", "plus_plus"):
        raise ValueError("block must be 'plus_plus' or 'plus_minus_gamma'")
    i, j = _resolve_pair(model, out_mode, in_mode)
    sc = model.scenario
    mo, mi = model.positive_modes[i], model.positive_modes[j]
    a, b = np.array(mo.momentum), np.array(mi.momentum)
    if block == "plus_minus_gamma":
        phat = gauge.coefficient(a + b)
        if phat == 0:
            return 0j
        s, t = _sign(mo.internal), _sign(mi.internal)
        if sc.torus_dim == 1 and sc.massive:
            if s != -t:
                return 0j
            m = sc.mass
            d = lambda k: _d1_coefficient(k, m)
            return complex(-t * (d(a[0]) * d(b[0]) - d(-a[0]) * d(-b[0])) * phat)
        if sc.torus_dim == 3 and a.any() and b.any():
            m = sc.mass
            A = lambda k: _a_matrix(tuple(k), m)
            mat = A(iota(a)) @ A(b) - A(iota(-a)) @ A(-b)
            es, e_flip = E_INTERNAL[mo.internal], E_INTERNAL[_flip(mi.internal)]
            return complex(-1j * t * phat * np.vdot(SIGMA[1] @ es, mat @ e_flip))
        u_in = model.spinors[model.n_modes + j]
    else:
        phat = gauge.coefficient(a - b)
        if phat == 0:
            return 0j
        u_in = model.spinors[j]
    return complex(-phat * np.vdot(model.spinors[i], GAUGE_ACTION @ u_in))


def quadrature_points(model: OneParticleModel, gauge: GaugeFunction, n_points: int | None = None) -> tuple[np.ndarray, int]:
    """Equispaced grid exact for the trigonometric integrands of the model."""
    need = 2 * (model.scenario.mode_cutoff + gauge.bandwidth) + 1
    if n_points is None:
        n_points = need
    if n_points < need:
        raise ValueError(f"quadrature needs at least {need} points per dimension, got {n_points}")
    axis = 2 * np.pi * np.arange(n_points) / n_points
    grid = np.array(list(itertools.product(axis, repeat=model.torus_dim)))
    return grid, n_points


def _fields(model: OneParticleModel, indices: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Pointwise values ``U exp(i k.x)``: shape (len(indices), P, 4)."""
    phase = np.exp(1j * grid @ model.full_momenta[indices].T.astype(float))  # (P, k)
    return phase.T[:, :, None] * model.spinors[indices][:, None, :]


def quadrature_matrix(model: OneParticleModel, gauge: GaugeFunction, out_indices, in_indices,
                      n_points: int | None = None) -> np.ndarray:
    """Dense block of ``(b_out, pi(X) b_in)`` by pointwise integration on a grid.

    Indices refer to the full ``K`` basis.
    """
    _check_gauge(model, gauge)
    grid, _ = quadrature_points(model, gauge, n_points)
    out_idx = np.atleast_1d(np.asarray(out_indices))
    in_idx = np.atleast_1d(np.asarray(in_indices))
    phi = gauge.values(grid)
    F_out = _fields(model, out_idx, grid)
    F_in = _fields(model, in_idx, grid)
    acted = -phi[None, :, None] * (F_in @ GAUGE_ACTION.T)
    P = grid.shape[0]
    return np.conj(F_out).reshape(len(out_idx), -1) @ acted.reshape(len(in_idx), -1).T / P


def gauge_matrix_element_quadrature(model: OneParticleModel, gauge: GaugeFunction, out_mode, in_mode,
                                    block: str = "plus_minus_gamma", n_points: int | None = None) -> complex:
    """Quadrature counterpart of :func:`gauge_matrix_element`."""
    i, j = _resolve_pair(model, out_mode, in_mode)
    if block == "plus_minus_gamma":
        j = j + model.n_modes
    elif block != "plus_plus":
        raise ValueError("block must be 'plus_plus' or 'plus_minus_gamma'")
    return complex(quadrature_matrix(model, gauge, [i], [j], n_points)[0, 0])
