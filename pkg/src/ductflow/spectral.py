"""Half-range trigonometric transforms on midpoint grids.

Scalar fields with natural Neumann behaviour are expanded per axis in
cos(k*pi*s), s in (0, 1) the normalized coordinate; derivatives live in the
matching sine family. On N midpoint nodes the discrete cosine family
{cos(k*pi*s_j), k = 0..N-1} is an exact interpolation basis, and midpoint
sums integrate cos(m*pi*s) exactly for all 0 < m <= 2N - 1, which is what
makes Gram and stiffness integrals of band-limited fields exact.

Transforms are realized as small dense per-axis matrices; at desk-scale
resolutions this is faster to reason about than library DCT scaling
conventions and costs nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import QuadratureGrid

COS, SIN = "cos", "sin"


@dataclass(frozen=True)
class AxisTransform:
    """Synthesis/analysis matrices for one axis of a midpoint grid."""

    n: int
    length: float
    cos_syn: np.ndarray   # [node, k] = cos(k pi s_j)
    sin_syn: np.ndarray   # [node, k] = sin(k pi s_j); column 0 is zero
    cos_ana: np.ndarray   # exact inverse of cos_syn
    kappa: np.ndarray     # k pi / length
    cos_at_lo: np.ndarray  # cos(k pi s) at s = 0
    cos_at_hi: np.ndarray  # cos(k pi s) at s = 1

    @classmethod
    def build(cls, n: int, length: float) -> "AxisTransform":
        s = (np.arange(n) + 0.5) / n
        k = np.arange(n)
        cos_syn = np.cos(np.pi * np.outer(s, k))
        sin_syn = np.sin(np.pi * np.outer(s, k))
        # Discrete orthogonality: sum_j cos(k pi s_j) cos(k' pi s_j)
        # equals n for k = k' = 0 and n/2 for k = k' >= 1.
        scale = np.full(n, 2.0 / n)
        scale[0] = 1.0 / n
        cos_ana = (cos_syn * scale[None, :]).T
        return cls(
            n=n,
            length=length,
            cos_syn=cos_syn,
            sin_syn=sin_syn,
            cos_ana=cos_ana,
            kappa=k * np.pi / length,
            cos_at_lo=np.ones(n),
            cos_at_hi=np.cos(np.pi * k),
        )


def axes_for(grid: QuadratureGrid) -> tuple[AxisTransform, ...]:
    lengths = grid.spec.lengths
    return tuple(
        AxisTransform.build(grid.shape[i], lengths[i]) for i in range(3)
    )


def _apply(matrix: np.ndarray, arr: np.ndarray, axis: int) -> np.ndarray:
    """Contract matrix[out, in] with arr along `axis`."""
    moved = np.moveaxis(arr, axis, -1)
    out = moved @ matrix.T
    return np.moveaxis(out, -1, axis)


def cos_analyze(values: np.ndarray, axes: tuple[AxisTransform, ...]) -> np.ndarray:
    """Cosine interpolation coefficients of nodal values (exact inverse)."""
    out = values
    for i, ax in enumerate(axes):
        out = _apply(ax.cos_ana, out, i)
    return out


def synth(coeffs: np.ndarray, axes: tuple[AxisTransform, ...], parities) -> np.ndarray:
    """Evaluate a coefficient array with the given per-axis parities."""
    out = coeffs
    for i, (ax, par) in enumerate(zip(axes, parities)):
        mat = ax.cos_syn if par == COS else ax.sin_syn
        out = _apply(mat, out, i)
    return out


def synth_on_face(
    coeffs: np.ndarray,
    axes: tuple[AxisTransform, ...],
    parities,
    face_axis: int,
    side: int,
) -> np.ndarray:
    """Evaluate on a boundary face: the face axis is contracted with the
    endpoint values of its family (sines vanish there identically)."""
    out = coeffs
    # Contract the fixed axis last so intermediate shapes stay 3D.
    for i, (ax, par) in enumerate(zip(axes, parities)):
        if i == face_axis:
            continue
        mat = ax.cos_syn if par == COS else ax.sin_syn
        out = _apply(mat, out, i)
    ax = axes[face_axis]
    if parities[face_axis] == SIN:
        vec = np.zeros(ax.n)
    else:
        vec = ax.cos_at_hi if side == 1 else ax.cos_at_lo
    out = np.tensordot(out, vec, axes=([face_axis], [0]))
    return out


def grad_coeffs(coeffs: np.ndarray, axes, axis: int) -> tuple[np.ndarray, tuple]:
    """Differentiate an all-cosine coefficient array along one axis.

    Returns the new coefficients and the parity triple of the result
    (sine along `axis`, cosine elsewhere).
    """
    kap = axes[axis].kappa
    shape = [1, 1, 1]
    shape[axis] = kap.size
    out = -coeffs * kap.reshape(shape)
    parities = tuple(SIN if i == axis else COS for i in range(3))
    return out, parities


def hess_coeffs(coeffs: np.ndarray, axes, i: int, j: int) -> tuple[np.ndarray, tuple]:
    """Second derivative d_i d_j of an all-cosine coefficient array."""
    ki = axes[i].kappa
    kj = axes[j].kappa
    si = [1, 1, 1]
    si[i] = ki.size
    sj = [1, 1, 1]
    sj[j] = kj.size
    if i == j:
        out = -coeffs * (ki.reshape(si) ** 2)
        parities = (COS, COS, COS)
    else:
        out = coeffs * ki.reshape(si) * kj.reshape(sj)
        parities = tuple(SIN if ax in (i, j) else COS for ax in range(3))
    return out, parities


def neumann_eigenvalues(axes: tuple[AxisTransform, ...]) -> np.ndarray:
    """-Laplacian eigenvalues of the all-cosine tensor family."""
    k1, k2, k3 = (ax.kappa for ax in axes)
    return (
        k1[:, None, None] ** 2 + k2[None, :, None] ** 2 + k3[None, None, :] ** 2
    )
