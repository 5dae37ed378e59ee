"""Fourier-coefficient states for 2D scalar and 3D vector vorticity.

Only the canonical half of the truncation set is stored (one representative
per ``{k, -k}`` pair, first nonzero component positive).  The value at ``-k``
is the complex conjugate, so the reality condition cannot be broken.

Sign convention in 2D: ``omega = d u1/d x2 - d u2/d x1``, the opposite of the
usual curl.  With modes ``exp(2 pi i (k, x))`` this gives
``u_k = omega_k (k2, -k1) / (2 pi i |k|^2)``.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .lattice import TruncationSet, build_truncation, is_canonical
from .serial import dumps

__all__ = [
    "InvalidStateError",
    "Spectrum2D",
    "Spectrum3D",
    "VelocityField",
    "velocity_from_vorticity_2d",
    "velocity_from_vorticity_3d",
    "vorticity_from_velocity_3d",
    "restrict",
    "enstrophy",
    "energy",
    "to_json",
    "from_json",
    "random_spectrum_2d",
    "random_spectrum_3d",
    "TRANSVERSAL_TOL",
]

TRANSVERSAL_TOL = 1e-12


class InvalidStateError(ValueError):
    pass


def _full(Z: TruncationSet, coeffs: np.ndarray) -> np.ndarray:
    out = coeffs[Z.half_slot].copy()
    out[Z.conj] = np.conj(out[Z.conj])
    return out


class _HalfStored:
    """Common storage: ``coeffs[j]`` belongs to ``Z.half_points[j]``."""

    ncomp: int | None = None

    def __init__(self, Z: TruncationSet, coeffs):
        c = np.array(coeffs, dtype=np.complex128)
        want = (Z.n_half,) if self.ncomp is None else (Z.n_half, self.ncomp)
        if c.shape != want:
            raise ValueError(f"expected coefficient array of shape {want}, got {c.shape}")
        c.setflags(write=False)
        self._Z = Z
        self._c = c

    @property
    def Z(self) -> TruncationSet:
        return self._Z

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def d(self) -> int:
        return self._Z.d

    def full(self) -> np.ndarray:
        """Values on every member of ``Z`` (in ``Z.points`` order)."""
        return _full(self._Z, self._c)

    def __getitem__(self, k):
        k = tuple(int(c) for c in k)
        if k not in self._Z:
            return np.zeros(self.ncomp) * 0j if self.ncomp else 0j
        j = self._Z.half_slot[self._Z.index_of(k)]
        v = self._c[j]
        return v if is_canonical(k) else np.conj(v)

    def with_coeffs(self, coeffs):
        return type(self)(self._Z, coeffs)

    @classmethod
    def zeros(cls, Z: TruncationSet):
        shape = (Z.n_half,) if cls.ncomp is None else (Z.n_half, cls.ncomp)
        return cls(Z, np.zeros(shape, dtype=np.complex128))

    @classmethod
    def from_modes(cls, Z: TruncationSet, modes: dict):
        """Build from ``{k: value}``; a non-canonical key sets its partner."""
        obj = cls.zeros(Z)
        c = np.array(obj.coeffs)
        for k, v in modes.items():
            k = tuple(int(x) for x in k)
            if k not in Z:
                raise KeyError(f"{k} is not in the truncation set")
            j = Z.half_slot[Z.index_of(k)]
            v = np.asarray(v, dtype=np.complex128)
            c[j] = v if is_canonical(k) else np.conj(v)
        return cls(Z, c)

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self._Z.same_as(other._Z)
            and np.array_equal(self._c, other._c)
        )

    def __repr__(self):
        return f"{type(self).__name__}(d={self.d}, |Z|={len(self._Z)})"


class Spectrum2D(_HalfStored):
    ncomp = None

    def __init__(self, Z: TruncationSet, coeffs):
        if Z.d != 2:
            raise ValueError("Spectrum2D needs a two-dimensional truncation set")
        super().__init__(Z, coeffs)

    def enstrophy(self) -> float:
        return enstrophy(self)


class Spectrum3D(_HalfStored):
    ncomp = 3

    def __init__(self, Z: TruncationSet, coeffs):
        if Z.d != 3:
            raise ValueError("Spectrum3D needs a three-dimensional truncation set")
        super().__init__(Z, coeffs)

    def transversality_defect(self) -> np.ndarray:
        """``|(k, w_k)| / |w_k|`` per stored mode (0 where ``w_k = 0``)."""
        k = self.Z.half_points.astype(np.float64)
        dot = np.abs(np.einsum("ij,ij->i", k, self.coeffs))
        mag = np.linalg.norm(self.coeffs, axis=1)
        out = np.zeros_like(dot)
        nz = mag > 0
        out[nz] = dot[nz] / mag[nz]
        return out

    def check_transversal(self, tol: float = TRANSVERSAL_TOL) -> None:
        bad = self.transversality_defect()
        if bad.size and bad.max() > tol:
            j = int(np.argmax(bad))
            k = tuple(int(c) for c in self.Z.half_points[j])
            raise InvalidStateError(
                f"vorticity not transversal at k={k}: |(k,w)|/|w|={bad[j]:.3e}"
            )

    def projected(self) -> "Spectrum3D":
        return Spectrum3D(self.Z, project_transversal(self.Z, self.coeffs))


class VelocityField(_HalfStored):
    """Velocity coefficients, ``d`` complex components per stored mode."""

    def __init__(self, Z: TruncationSet, coeffs):
        self.ncomp = Z.d
        super().__init__(Z, coeffs)

    @classmethod
    def zeros(cls, Z):
        return cls(Z, np.zeros((Z.n_half, Z.d), dtype=np.complex128))


def project_transversal(Z: TruncationSet, v: np.ndarray) -> np.ndarray:
    """Remove the component along ``k`` from each row of ``v``."""
    k = Z.half_points.astype(np.float64)
    k2 = Z.half_norms ** 2
    return v - k * (np.einsum("ij,ij->i", k, v) / k2)[:, None]


def velocity_from_vorticity_2d(s: Spectrum2D) -> VelocityField:
    k = s.Z.half_points.astype(np.float64)
    k2 = s.Z.half_norms ** 2
    w = s.coeffs / (2j * math.pi * k2)
    u = np.stack([w * k[:, 1], -w * k[:, 0]], axis=1)
    return VelocityField(s.Z, u)


def _velocity_3d(Z: TruncationSet, w: np.ndarray) -> np.ndarray:
    k = Z.half_points.astype(np.float64)
    k2 = Z.half_norms ** 2
    return 1j * np.cross(k, w) / (2 * math.pi * k2)[:, None]


def velocity_from_vorticity_3d(s: Spectrum3D, tol: float = TRANSVERSAL_TOL) -> VelocityField:
    """``u_k = i (k x w_k) / (2 pi |k|^2)``, so ``w_k = 2 pi i k x u_k``."""
    s.check_transversal(tol)
    return VelocityField(s.Z, _velocity_3d(s.Z, s.coeffs))


def vorticity_from_velocity_3d(u: VelocityField) -> Spectrum3D:
    k = u.Z.half_points.astype(np.float64)
    return Spectrum3D(u.Z, 2j * math.pi * np.cross(k, u.coeffs))


def restrict(s, Zp: TruncationSet):
    """Copy amplitudes onto ``Zp``; modes outside the source are zero."""
    if Zp.d != s.Z.d:
        raise ValueError(f"dimension mismatch: state is {s.Z.d}D, target is {Zp.d}D")
    idx = s.Z.lookup(Zp.half_points)
    shape = (Zp.n_half,) + s.coeffs.shape[1:]
    c = np.zeros(shape, dtype=np.complex128)
    hit = idx >= 0
    # canonical points map to canonical points, so half_slot is a plain lookup
    c[hit] = s.coeffs[s.Z.half_slot[idx[hit]]]
    return type(s)(Zp, c)


def _half_sq(c: np.ndarray) -> np.ndarray:
    a = np.abs(c) ** 2
    return a if a.ndim == 1 else a.sum(axis=1)


def enstrophy(s) -> float:
    """Sum of ``|w_k|^2`` over all of ``Z`` (both members of each pair)."""
    return 2.0 * math.fsum(_half_sq(s.coeffs))


def energy(s) -> float:
    """Sum of ``|u_k|^2`` over ``Z``; accepts a vorticity state or a velocity."""
    if isinstance(s, VelocityField):
        return 2.0 * math.fsum(_half_sq(s.coeffs))
    if isinstance(s, (Spectrum2D, Spectrum3D)):
        return 2.0 * math.fsum(_half_sq(s.coeffs) / (2 * math.pi * s.Z.half_norms) ** 2)
    raise TypeError(f"cannot compute energy of {type(s).__name__}")


def to_dict(s) -> dict:
    Z = s.Z
    modes = []
    for k, v in zip(Z.half_points, s.coeffs):
        v = np.atleast_1d(v)
        modes.append(
            {
                "k": [int(c) for c in k],
                "re": [float(x) for x in v.real],
                "im": [float(x) for x in v.imag],
            }
        )
    return {"dimension": Z.d, "shape": Z.shape, "K_max": float(Z.K_max), "modes": modes}


def to_json(s) -> str:
    return dumps(to_dict(s)) + "\n"


def from_dict(obj: dict):
    d = int(obj["dimension"])
    Z = build_truncation(d, obj["shape"], float(obj["K_max"]))
    cls = Spectrum2D if d == 2 else Spectrum3D
    c = np.array(cls.zeros(Z).coeffs)
    for m in obj["modes"]:
        k = tuple(m["k"])
        if not is_canonical(k):
            raise ValueError(f"snapshot lists non-canonical mode {k}")
        j = Z.half_slot[Z.index_of(k)]
        v = np.array(m["re"], dtype=np.float64) + 1j * np.array(m["im"], dtype=np.float64)
        c[j] = v[0] if d == 2 else v
    return cls(Z, c)


def from_json(text: str):
    return from_dict(json.loads(text))


def random_spectrum_2d(Z: TruncationSet, rng: np.random.Generator, scale=1.0, decay=0.0) -> Spectrum2D:
    """Gaussian coefficients times ``scale / |k|^decay``."""
    n = Z.n_half
    c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return Spectrum2D(Z, c * (scale / Z.half_norms ** decay))


def random_spectrum_3d(Z: TruncationSet, rng: np.random.Generator, scale=1.0, decay=0.0) -> Spectrum3D:
    n = Z.n_half
    c = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
    c = project_transversal(Z, c) * (scale / Z.half_norms ** decay)[:, None]
    return Spectrum3D(Z, c)
