"""Reconstruction of a shared background from observable overlap data.

Sampling the decoherence observable over orthonormal bases of two branch
Hilbert spaces gives a matrix B[i][j] = theta(e_i, f_j). Its polar-unitary
part is the canonical isomorphism between the spaces (the raw Riesz map of
a non-unitary B would not carry orthogonal projectors to orthogonal
projectors); conjugating a position measurement through it pulls the
measurement from the reference space onto the branch space, identifying
"the same point" in both. With position-localized bases and a planted
translation between them, B is a permutation and the recovered projectors
localize exactly at the translated cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateForm, DomainError, GridMismatch, InvalidMeasure
from .grid import Grid, WaveFunction, inner_product

__all__ = [
    "FormSample",
    "BackgroundMap",
    "sample_form",
    "riesz_isomorphism",
    "pull_back_position_measure",
    "recover_background",
    "commutation_check",
    "localized_basis",
    "translate_basis",
    "coordinate_projectors",
    "localization_index",
]

CONDITION_LIMIT = 1e8       # operational meaning of "non-degenerate"
ORTHONORMALITY_TOL = 1e-10
PROJECTOR_TOL = 1e-10


def _check_orthonormal(basis: tuple[WaveFunction, ...], name: str) -> None:
    n = len(basis)
    grid = basis[0].grid
    for psi in basis:
        if psi.grid != grid:
            raise GridMismatch(f"{name} basis elements live on different grids")
    gram = np.array([[inner_product(a, b) for b in basis] for a in basis])
    if np.max(np.abs(gram - np.eye(n))) > ORTHONORMALITY_TOL:
        raise DomainError(
            f"{name} basis is not orthonormal to {ORTHONORMALITY_TOL:.0e}"
        )


@dataclass(frozen=True, eq=False)
class FormSample:
    """Sampled sesquilinear form over a pair of orthonormal bases."""

    basis_g: tuple[WaveFunction, ...]
    basis_eta: tuple[WaveFunction, ...]
    matrix: np.ndarray
    condition_number: float

    def __post_init__(self):
        n = len(self.basis_g)
        if n < 2 or len(self.basis_eta) != n:
            raise DomainError("need two equal-size bases with n >= 2")
        _check_orthonormal(self.basis_g, "branch")
        _check_orthonormal(self.basis_eta, "reference")
        m = np.array(self.matrix, dtype=np.complex128, copy=True)
        if m.shape != (n, n):
            raise DomainError(f"form matrix shape {m.shape}, expected ({n}, {n})")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return len(self.basis_g)


@dataclass(frozen=True, eq=False)
class BackgroundMap:
    """Polar-unitary identification between branch spaces, plus the
    position measurement pulled back through it once recovered."""

    unitary: np.ndarray
    condition_number: float
    recovered_projectors: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        u = np.array(self.unitary, dtype=np.complex128, copy=True)
        n = u.shape[0]
        if u.shape != (n, n):
            raise DomainError(f"unitary must be square, got {u.shape}")
        if np.max(np.abs(u @ u.conj().T - np.eye(n))) > 1e-10:
            raise DomainError("map is not unitary to 1e-10")
        u.flags.writeable = False
        object.__setattr__(self, "unitary", u)


def sample_form(basis_g, basis_eta, form_oracle) -> FormSample:
    """Fill B[i][j] = oracle(e_i, f_j) over the two bases.

    The oracle is any callable mapping a (branch, reference) state pair to
    a complex number: the measured observable for evolved branches, the
    plain inner product for static tests. A sampled form with condition
    number above CONDITION_LIMIT cannot identify the spaces and is
    rejected.
    """
    basis_g = tuple(basis_g)
    basis_eta = tuple(basis_eta)
    if len(basis_g) < 2 or len(basis_eta) != len(basis_g):
        raise DomainError("need two equal-size bases with n >= 2")
    _check_orthonormal(basis_g, "branch")
    _check_orthonormal(basis_eta, "reference")
    matrix = np.array(
        [[complex(form_oracle(e, f)) for f in basis_eta] for e in basis_g],
        dtype=np.complex128,
    )
    if not np.isfinite(matrix.view(np.float64)).all():
        raise DegenerateForm("form oracle produced non-finite entries")
    singulars = np.linalg.svd(matrix, compute_uv=False)
    condition = float(singulars[0] / singulars[-1]) if singulars[-1] > 0 else np.inf
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise DegenerateForm(
            f"form condition number {condition:.3e} exceeds {CONDITION_LIMIT:.0e}"
        )
    return FormSample(basis_g, basis_eta, matrix, condition)


def riesz_isomorphism(sample: FormSample) -> BackgroundMap:
    """Polar-unitary part of the sampled form, B = U P with P >= 0.

    U is the unitary closest to B in least squares and the canonical
    point identification between the two spaces.
    """
    if not np.isfinite(sample.condition_number) or sample.condition_number > CONDITION_LIMIT:
        raise DegenerateForm(
            f"form condition number {sample.condition_number:.3e} exceeds {CONDITION_LIMIT:.0e}"
        )
    w, _, vh = np.linalg.svd(sample.matrix)
    return BackgroundMap(w @ vh, sample.condition_number)


def _check_pvm(projectors: tuple[np.ndarray, ...]) -> tuple[np.ndarray, ...]:
    ps = tuple(np.asarray(p, dtype=np.complex128) for p in projectors)
    n = ps[0].shape[0]
    total = np.zeros((n, n), dtype=complex)
    for i, p in enumerate(ps):
        if p.shape != (n, n):
            raise InvalidMeasure(f"projector {i} has shape {p.shape}, expected ({n}, {n})")
        if np.max(np.abs(p - p.conj().T)) > PROJECTOR_TOL:
            raise InvalidMeasure(f"projector {i} is not Hermitian")
        if np.linalg.norm(p @ p - p, 2) > PROJECTOR_TOL:
            raise InvalidMeasure(f"projector {i} is not idempotent")
        total += p
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            if np.linalg.norm(ps[i] @ ps[j], 2) > PROJECTOR_TOL:
                raise InvalidMeasure(f"projectors {i} and {j} are not orthogonal")
    if np.max(np.abs(total - np.eye(n))) > PROJECTOR_TOL:
        raise InvalidMeasure("projectors do not sum to the identity")
    return ps


def pull_back_position_measure(background: BackgroundMap,
                               eta_projectors) -> tuple[np.ndarray, ...]:
    """Carry a projector-valued measure from the reference space onto the
    branch space through the unitary identification, P_i = U Q_i U^dagger.

    (B maps reference coordinates to branch coordinates, so conjugating by
    its unitary part sends the projector for "reference position i" to the
    branch projector at the same identified point.)
    """
    qs = _check_pvm(tuple(eta_projectors))
    u = background.unitary
    if qs[0].shape[0] != u.shape[0]:
        raise InvalidMeasure(
            f"projector dimension {qs[0].shape[0]} does not match map dimension {u.shape[0]}"
        )
    recovered = tuple(u @ q @ u.conj().T for q in qs)
    for p in recovered:
        p.flags.writeable = False
    return recovered


def recover_background(sample: FormSample,
                       eta_projectors=None) -> BackgroundMap:
    """riesz_isomorphism plus projector pullback in one step.

    Without explicit reference projectors, the coordinate projectors of
    the reference basis are used (each basis element is one outcome).
    """
    background = riesz_isomorphism(sample)
    if eta_projectors is None:
        eta_projectors = coordinate_projectors(sample.n)
    recovered = pull_back_position_measure(background, eta_projectors)
    return BackgroundMap(background.unitary, background.condition_number, recovered)


def commutation_check(background: BackgroundMap,
                      native_position_projectors) -> float:
    """Largest operator norm of [P_recovered, Q_native] over all pairs.

    Vanishes when the sampled form is diagonal or a permutation in a
    shared position basis; a generic rotation between the spaces leaves
    order-one commutators.
    """
    if background.recovered_projectors is None:
        raise InvalidMeasure("background map carries no recovered projectors")
    natives = _check_pvm(tuple(native_position_projectors))
    if natives[0].shape[0] != background.unitary.shape[0]:
        raise InvalidMeasure("native projector dimension does not match the map")
    worst = 0.0
    for p in background.recovered_projectors:
        for q in natives:
            worst = max(worst, float(np.linalg.norm(p @ q - q @ p, 2)))
    return worst


def localized_basis(grid: Grid, n: int) -> tuple[WaveFunction, ...]:
    """n one-cell states at evenly spaced cells of a 1D grid.

    Exactly orthonormal under the grid inner product; the i-th element
    occupies cell i * (points / n).
    """
    if grid.dim != 1:
        raise DomainError("localized bases are built on 1D grids")
    points = grid.shape[0]
    if n < 2 or points % n != 0:
        raise DomainError(f"basis size {n} must be >= 2 and divide {points}")
    stride = points // n
    amp = 1.0 / np.sqrt(grid.cell_volume)
    out = []
    for i in range(n):
        amps = np.zeros(points, dtype=complex)
        amps[i * stride] = amp
        out.append(WaveFunction(grid, amps, f"cell_{i * stride}"))
    return tuple(out)


def translate_basis(basis, cells: int) -> tuple[WaveFunction, ...]:
    """Circularly shift every basis element by a whole number of cells."""
    return tuple(
        WaveFunction(psi.grid, np.roll(psi.amplitudes, cells), f"{psi.label}+{cells}")
        for psi in basis
    )


def coordinate_projectors(n: int) -> tuple[np.ndarray, ...]:
    """Rank-one projectors onto the n coordinate directions."""
    out = []
    for i in range(n):
        p = np.zeros((n, n), dtype=complex)
        p[i, i] = 1.0
        p.flags.writeable = False
        out.append(p)
    return tuple(out)


def localization_index(projector: np.ndarray) -> int:
    """Basis index where a (near-)rank-one projector concentrates."""
    return int(np.argmax(np.diagonal(np.asarray(projector)).real))
