"""Chain Hamiltonians and annealing schedules.

Two architectures are built on the same footing:

* direct coupling:   H = sum_i (h_i/2) sigma_i^z + sum_bonds J_ij sigma_i^x sigma_j^x
* mediated coupling: H = sum_i (h_i/2) sigma_i^z
                         + sum_ir g_ir sigma_i^x (b_r + b_r^dag) + omega sum_r b_r^dag b_r

The mediated model uses the Hermitian position quadrature for the qubit-mode
coupling; with real g this is unitarily equivalent (b -> ib) to the
antisymmetric quadrature and leaves spectra and transition magnitudes
unchanged.

Annealing schedules sweep s = t/T in [0, 1]:

* direct:   h_i = omega0 (1 - s),        J_{i,i+1} = -eta omega0 s
* mediated: h_i = omega0 (1 - kappa(s)), g_ir = sqrt(omega0 omega kappa(s))
            on r = i (weight 1) and r = i-1 (weight eta), cyclic when periodic.

The ramp kappa(s) is calibrated so both models share the same ground-state
bond correlator C(s) = sum_i <sigma_i^x sigma_{i+1}^x> at every s.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .hilbert import (
    SpaceLayout,
    SparseOperator,
    boson_operator,
    extremal_eigs,
    spin_operator,
)

__all__ = [
    "IsingParams",
    "SBParams",
    "RampTable",
    "AnnealSpec",
    "ScheduledModel",
    "CalibrationError",
    "chain_bonds",
    "build_ising",
    "build_spin_boson",
    "ising_schedule",
    "sb_schedule",
    "noise_coupling_operator",
    "xx_bond_operator",
    "transverse_field_operator",
    "total_number_operator",
    "sb_coupling_operator",
    "scheduled_model",
    "ground_state_correlator",
    "calibrate_kappa",
]


class CalibrationError(RuntimeError):
    """Ramp calibration failed; carries the sampled (kappa, C) diagnostic curve."""

    def __init__(self, message: str, curve=None):
        super().__init__(message)
        self.curve = curve


def chain_bonds(L: int, boundary: str) -> list[tuple[int, int]]:
    """Nearest-neighbour bonds (i, i+1), each counted once.

    Periodic chains need L >= 3: at L = 2 the wrap bond duplicates (0, 1).
    """
    if boundary not in ("periodic", "open"):
        raise ValueError(f"boundary must be 'periodic' or 'open', got {boundary!r}")
    if boundary == "periodic":
        if L < 3:
            raise ValueError("periodic chains require L >= 3 (L=2 double-counts its bond)")
        return [(i, (i + 1) % L) for i in range(L)]
    return [(i, i + 1) for i in range(L - 1)]


@dataclass(frozen=True)
class IsingParams:
    """Fields and listed couplings for the direct model; each (i, j, J) applied once."""

    h: np.ndarray
    bonds: tuple[tuple[int, int, float], ...]
    boundary: str = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=np.float64))
        if not np.all(np.isfinite(self.h)):
            raise ValueError("fields must be finite")
        L = self.h.size
        for (i, j, _) in self.bonds:
            if not (0 <= i < L and 0 <= j < L and i != j):
                raise ValueError(f"bond ({i}, {j}) out of range for L={L}")

    @property
    def L(self) -> int:
        return int(self.h.size)


@dataclass(frozen=True)
class SBParams:
    """Fields, qubit-mode couplings g_ir and mode frequency for the mediated model."""

    h: np.ndarray
    g: np.ndarray
    omega: float
    cutoff: int
    boundary: str = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=np.float64))
        object.__setattr__(self, "g", np.asarray(self.g, dtype=np.float64))
        if self.omega <= 0:
            raise ValueError("mode frequency must be positive")
        if self.g.ndim != 2 or self.g.shape[0] != self.h.size:
            raise ValueError("g must be (n_spins, n_modes)")
        if not (np.all(np.isfinite(self.h)) and np.all(np.isfinite(self.g))):
            raise ValueError("parameters must be finite")

    @property
    def L(self) -> int:
        return int(self.h.size)

    @property
    def n_modes(self) -> int:
        return int(self.g.shape[1])

    @property
    def phi(self) -> np.ndarray:
        """Dimensionless displacement ratios phi_ir = g_ir / omega."""
        return self.g / self.omega

    def layout(self) -> SpaceLayout:
        return SpaceLayout(self.L, self.n_modes, self.cutoff)


def build_ising(p: IsingParams, layout: SpaceLayout) -> SparseOperator:
    """H = sum_i (h_i/2) sigma_i^z + sum_listed J_ij sigma_i^x sigma_j^x."""
    if layout.n_modes != 0:
        raise ValueError("direct model lives on a spin-only layout")
    if layout.n_spins != p.L:
        raise ValueError(f"layout has {layout.n_spins} spins, params have {p.L}")
    H = None
    for i in range(p.L):
        term = (p.h[i] / 2.0) * spin_operator(i, "z", layout)
        H = term if H is None else H + term
    for (i, j, J) in p.bonds:
        term = J * (spin_operator(i, "x", layout) @ spin_operator(j, "x", layout))
        H = H + term
    return H


def build_spin_boson(p: SBParams, layout: SpaceLayout) -> SparseOperator:
    """H = sum_i (h_i/2) sigma_i^z + sum_ir g_ir sigma_i^x (b_r + b_r^dag) + omega N_b."""
    if (layout.n_spins, layout.n_modes, layout.cutoff) != (p.L, p.n_modes, p.cutoff):
        raise ValueError("layout does not match SB parameters")
    H = None
    for i in range(p.L):
        term = (p.h[i] / 2.0) * spin_operator(i, "z", layout)
        H = term if H is None else H + term
    for i in range(p.L):
        for r in range(p.n_modes):
            if p.g[i, r] != 0.0:
                term = p.g[i, r] * (
                    spin_operator(i, "x", layout) @ boson_operator(r, "position", layout)
                )
                H = H + term
    for r in range(p.n_modes):
        H = H + p.omega * boson_operator(r, "number", layout)
    return H


def ising_schedule(
    s: float, L: int, eta: int, omega0: float = 1.0, boundary: str = "periodic"
) -> IsingParams:
    """Direct-model parameters at relative time s."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    if eta not in (+1, -1):
        raise ValueError("eta must be +1 (ferro) or -1 (antiferro)")
    h = np.full(L, omega0 * (1.0 - s))
    bonds = tuple((i, j, -eta * omega0 * s) for (i, j) in chain_bonds(L, boundary))
    return IsingParams(h=h, bonds=bonds, boundary=boundary)


def sb_schedule(
    kappa: float,
    L: int,
    eta: int,
    omega0: float = 1.0,
    omega: float = 1.0,
    cutoff: int = 8,
    boundary: str = "periodic",
) -> SBParams:
    """Mediated-model parameters at coupling progress kappa.

    Qubit i drives mode i with weight 1 and mode i-1 with weight eta (cyclic
    when periodic), which mediates a nearest-neighbour effective coupling of
    low-energy bookkeeping value J0_{i,i+1} = eta * omega0 * kappa.
    """
    if kappa < 0.0:
        raise ValueError(f"kappa={kappa} must be non-negative")
    if eta not in (+1, -1):
        raise ValueError("eta must be +1 (ferro) or -1 (antiferro)")
    if boundary == "periodic" and L < 3:
        raise ValueError("periodic chains require L >= 3 (L=2 double-counts its bond)")
    if boundary not in ("periodic", "open"):
        raise ValueError(f"boundary must be 'periodic' or 'open', got {boundary!r}")
    h = np.full(L, omega0 * (1.0 - kappa))
    amp = np.sqrt(omega0 * omega * kappa)
    g = np.zeros((L, L))
    for i in range(L):
        g[i, i] += amp
        if i - 1 >= 0:
            g[i, i - 1] += eta * amp
        elif boundary == "periodic":
            g[i, (i - 1) % L] += eta * amp
    return SBParams(h=h, g=g, omega=omega, cutoff=cutoff, boundary=boundary)


def noise_coupling_operator(axis: str, layout: SpaceLayout) -> list[SparseOperator]:
    """Per-qubit noise operators (1/2) sigma_i^axis; bosonic modes carry no noise."""
    if axis not in ("x", "z"):
        raise ValueError(f"noise axis must be 'x' or 'z', got {axis!r}")
    return [0.5 * spin_operator(i, axis, layout) for i in range(layout.n_spins)]


# ---------------------------------------------------------------------------
# Structural operators shared by schedules, propagation and observables
# ---------------------------------------------------------------------------


def transverse_field_operator(layout: SpaceLayout) -> SparseOperator:
    """sum_i (1/2) sigma_i^z (unit field)."""
    op = None
    for i in range(layout.n_spins):
        term = 0.5 * spin_operator(i, "z", layout)
        op = term if op is None else op + term
    return op


def xx_bond_operator(layout: SpaceLayout, boundary: str) -> SparseOperator:
    """sum_bonds sigma_i^x sigma_j^x; doubles as the bond correlator C."""
    op = None
    for (i, j) in chain_bonds(layout.n_spins, boundary):
        term = spin_operator(i, "x", layout) @ spin_operator(j, "x", layout)
        op = term if op is None else op + term
    if op is None:
        raise ValueError("chain has no bonds (L=1)")
    return op


def total_number_operator(layout: SpaceLayout) -> SparseOperator:
    """N_b = sum_r b_r^dag b_r."""
    op = None
    for r in range(layout.n_modes):
        term = boson_operator(r, "number", layout)
        op = term if op is None else op + term
    if op is None:
        raise ValueError("layout has no modes")
    return op


def sb_coupling_operator(layout: SpaceLayout, eta: int, boundary: str) -> SparseOperator:
    """sum_i sigma_i^x [(b_i + b_i^dag) + eta (b_{i-1} + b_{i-1}^dag)] (unit amplitude)."""
    L = layout.n_spins
    if layout.n_modes != L:
        raise ValueError("mediated chain uses one mode per qubit")
    op = None
    for i in range(L):
        sx = spin_operator(i, "x", layout)
        term = sx @ boson_operator(i, "position", layout)
        if i - 1 >= 0 or boundary == "periodic":
            term = term + eta * (sx @ boson_operator((i - 1) % L, "position", layout))
        op = term if op is None else op + term
    return op


# ---------------------------------------------------------------------------
# Ramp table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RampTable:
    """Monotone (s, kappa) grid with piecewise-linear interpolation."""

    s_grid: np.ndarray
    kappa_grid: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s_grid, dtype=np.float64)
        k = np.asarray(self.kappa_grid, dtype=np.float64)
        if s.ndim != 1 or s.shape != k.shape or s.size < 2:
            raise ValueError("ramp table needs matching 1-d grids with >= 2 points")
        if np.any(np.diff(s) <= 0):
            raise ValueError("s grid must be strictly increasing")
        if np.any(np.diff(k) < -1e-12):
            raise ValueError("kappa grid must be non-decreasing")
        if abs(s[0]) < 1e-12 and abs(k[0]) > 1e-9:
            raise ValueError("ramp must start at kappa(0) = 0")
        object.__setattr__(self, "s_grid", s)
        object.__setattr__(self, "kappa_grid", k)

    @classmethod
    def linear(cls) -> "RampTable":
        return cls(np.array([0.0, 1.0]), np.array([0.0, 1.0]))

    def __call__(self, s):
        return np.interp(s, self.s_grid, self.kappa_grid)

    def to_csv(self, path: str | Path, header_comments: Sequence[str] = ()) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            for line in header_comments:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["s", "kappa"])
            for s, k in zip(self.s_grid, self.kappa_grid):
                writer.writerow([f"{s:.17g}", f"{k:.17g}"])

    @classmethod
    def from_csv(cls, path: str | Path) -> "RampTable":
        s_vals, k_vals = [], []
        with Path(path).open() as fh:
            for row in csv.reader(line for line in fh if not line.startswith("#")):
                if not row or row[0] == "s":
                    continue
                s_vals.append(float(row[0]))
                k_vals.append(float(row[1]))
        return cls(np.array(s_vals), np.array(k_vals))


@dataclass(frozen=True)
class AnnealSpec:
    """Complete description of one annealing passage."""

    model: str  # "ising" | "spin_boson"
    L: int
    eta: int
    T: float
    gamma: float
    noise_axis: str
    cutoff: int = 8
    boundary: str = "periodic"
    omega0: float = 1.0
    omega: float = 1.0
    dt: float = 0.1
    ramp: RampTable = field(default_factory=RampTable.linear)
    record_points: int = 200

    def __post_init__(self):
        if self.model not in ("ising", "spin_boson"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.noise_axis not in ("x", "z"):
            raise ValueError(f"noise axis must be 'x' or 'z', got {self.noise_axis!r}")
        if self.T <= 0 or self.dt <= 0:
            raise ValueError("T and dt must be positive")

    def layout(self) -> SpaceLayout:
        if self.model == "ising":
            return SpaceLayout(self.L)
        return SpaceLayout(self.L, self.L, self.cutoff)


@dataclass(frozen=True)
class ScheduledModel:
    """Decomposition H(s) = sum_k c_k(s) A_k with fixed structural operators.

    The operators are immutable and shared across workers; only the scalar
    coefficient vector changes along the passage.
    """

    kind: str
    layout: SpaceLayout
    operators: tuple[SparseOperator, ...]
    labels: tuple[str, ...]
    eta: int
    omega0: float
    omega: float
    ramp: Callable[[float], float] | None

    def coefficients(self, s: float) -> np.ndarray:
        if self.kind == "ising":
            return np.array([self.omega0 * (1.0 - s), -self.eta * self.omega0 * s])
        kappa = float(self.ramp(s)) if self.ramp is not None else float(s)
        return self.coefficients_at_kappa(kappa)

    def coefficients_at_kappa(self, kappa: float) -> np.ndarray:
        if self.kind == "ising":
            raise ValueError("kappa parameterisation applies to the mediated model only")
        return np.array(
            [
                self.omega0 * (1.0 - kappa),
                np.sqrt(self.omega0 * self.omega * kappa),
                self.omega,
            ]
        )

    def hamiltonian(self, s: float) -> SparseOperator:
        coeffs = self.coefficients(s)
        H = coeffs[0] * self.operators[0]
        for c, A in zip(coeffs[1:], self.operators[1:]):
            H = H + float(c) * A
        return H

    def hamiltonian_at_kappa(self, kappa: float) -> SparseOperator:
        coeffs = self.coefficients_at_kappa(kappa)
        H = coeffs[0] * self.operators[0]
        for c, A in zip(coeffs[1:], self.operators[1:]):
            H = H + float(c) * A
        return H


def scheduled_model(
    model: str,
    L: int,
    eta: int,
    omega0: float = 1.0,
    omega: float = 1.0,
    cutoff: int = 8,
    boundary: str = "periodic",
    ramp: Callable[[float], float] | None = None,
) -> ScheduledModel:
    """Build the structural operators for one model once, for reuse per step."""
    if model == "ising":
        layout = SpaceLayout(L)
        ops = (
            transverse_field_operator(layout),
            xx_bond_operator(layout, boundary),
        )
        return ScheduledModel(
            "ising", layout, ops, ("field", "bonds"), eta, omega0, omega, None
        )
    if model == "spin_boson":
        layout = SpaceLayout(L, L, cutoff)
        ops = (
            transverse_field_operator(layout),
            sb_coupling_operator(layout, eta, boundary),
            total_number_operator(layout),
        )
        return ScheduledModel(
            "spin_boson", layout, ops, ("field", "coupling", "number"), eta, omega0, omega, ramp
        )
    raise ValueError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# Ramp calibration
# ---------------------------------------------------------------------------


def ground_state_correlator(
    H: SparseOperator, corr: SparseOperator, v0: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Ground-state expectation of ``corr``; returns (value, ground vector)."""
    vals, vecs = extremal_eigs(H, 1, v0=v0, tol=1e-10)
    v = vecs[:, 0]
    c = float(np.real(np.vdot(v, corr.dot(v))))
    return c, v


def calibrate_kappa(
    s_grid: Sequence[float],
    L: int,
    eta: int,
    omega0: float = 1.0,
    omega: float = 1.0,
    cutoff: int = 8,
    boundary: str = "periodic",
    tol: float = 1e-6,
    check_cutoff: bool = True,
) -> tuple[RampTable, list[str]]:
    """Solve C_sb(kappa) = C_is(s) for each grid point by bisection.

    Both correlators are ground-state expectations of sum_i sigma_i^x
    sigma_{i+1}^x.  Returns the monotone ramp table and a list of warnings
    (cutoff-convergence checks compare against cutoff-1 at the solution).
    """
    s_grid = np.asarray(s_grid, dtype=np.float64)
    if np.any(s_grid < 0) or np.any(s_grid > 1) or np.any(np.diff(s_grid) <= 0):
        raise ValueError("s grid must be strictly increasing within [0, 1]")

    ising = scheduled_model("ising", L, eta, omega0, omega, boundary=boundary)
    sb = scheduled_model("spin_boson", L, eta, omega0, omega, cutoff, boundary)
    corr_is = ising.operators[1]  # sum sigma^x sigma^x over bonds
    corr_sb = xx_bond_operator(sb.layout, boundary)
    n_bonds = len(chain_bonds(L, boundary))

    warnings: list[str] = []
    kappas = np.empty_like(s_grid)
    v_is = None
    sb_cache: dict[float, tuple[float, np.ndarray]] = {}

    def c_sb(kappa: float, v0=None) -> float:
        if kappa in sb_cache:
            return sb_cache[kappa][0]
        c, v = ground_state_correlator(sb.hamiltonian_at_kappa(kappa), corr_sb, v0)
        sb_cache[kappa] = (c, v)
        return c

    def nearest_vec(kappa: float):
        if not sb_cache:
            return None
        key = min(sb_cache, key=lambda k: abs(k - kappa))
        return sb_cache[key][1]

    for idx, s in enumerate(s_grid):
        c_target, v_is = ground_state_correlator(ising.hamiltonian(s), corr_is, v_is)
        if abs(c_target) <= tol:
            kappas[idx] = 0.0
            continue
        if abs(abs(c_target) - n_bonds) <= tol:
            kappas[idx] = 1.0
            continue
        lo, hi = 0.0, 1.0
        f_lo = c_sb(lo) - c_target
        f_hi = c_sb(hi, nearest_vec(hi)) - c_target
        if f_lo * f_hi > 0:
            curve = sorted((k, c) for k, (c, _) in sb_cache.items())
            raise CalibrationError(
                f"correlator target {c_target:.6g} at s={s:.4g} not bracketed on kappa in [0, 1]",
                curve=curve,
            )
        kappa = 0.5 * (lo + hi)
        for _ in range(200):
            kappa = 0.5 * (lo + hi)
            f_mid = c_sb(kappa, nearest_vec(kappa)) - c_target
            if abs(f_mid) < tol or (hi - lo) < 1e-12:
                break
            if f_mid * f_lo <= 0:
                hi = kappa
            else:
                lo, f_lo = kappa, f_mid
        else:
            raise CalibrationError(f"bisection did not converge at s={s:.4g}")
        kappas[idx] = kappa

        if check_cutoff and cutoff >= 2:
            small = sb_schedule(kappa, L, eta, omega0, omega, cutoff - 1, boundary)
            H_small = build_spin_boson(small, small.layout())
            corr_small = xx_bond_operator(small.layout(), boundary)
            c_small, _ = ground_state_correlator(H_small, corr_small)
            if abs(c_small - c_sb(kappa)) > 100 * tol:
                warnings.append(
                    f"s={s:.4g}: correlator changes by {abs(c_small - c_sb(kappa)):.3g} "
                    f"between cutoff {cutoff - 1} and {cutoff}; increase the cutoff"
                )

    # The bisection solves a monotone problem; a non-monotone result signals
    # a non-monotone C_sb(kappa) over the bracket.
    if np.any(np.diff(kappas) < -10 * tol):
        curve = sorted((k, c) for k, (c, _) in sb_cache.items())
        raise CalibrationError("calibrated ramp is not monotone", curve=curve)
    kappas = np.maximum.accumulate(kappas)
    return RampTable(s_grid, kappas), warnings
