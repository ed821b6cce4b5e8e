"""Array geometry, coordinate frames, and angle/position relations.

Conventions used throughout the toolkit:

* azimuth in (-pi, pi], measured from +x toward +y;
* elevation in [-pi/2, pi/2], measured from the x-y plane toward +z;
* planar arrays lie in the y-z plane of their local frame;
* internal units are meters, seconds, and radians.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import SPEED_OF_LIGHT


def as_vec3(value) -> np.ndarray:
    """Coerce to a finite float vector of shape (3,)."""
    v = np.asarray(value, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector components must be finite")
    return v


def wave_vector(az: float, el: float, wavelength: float) -> np.ndarray:
    """Wave vector (2*pi/lambda)*[cos az cos el, sin az cos el, sin el].

    Parameters
    ----------
    az, el : float
        Azimuth and elevation of the propagation direction, radians.
    wavelength : float
        Carrier wavelength in meters, > 0.
    """
    if not (np.isfinite(az) and np.isfinite(el) and np.isfinite(wavelength)):
        raise ValueError("wave_vector arguments must be finite")
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    k = 2.0 * np.pi / wavelength
    ce = np.cos(el)
    return k * np.array([np.cos(az) * ce, np.sin(az) * ce, np.sin(el)])


@dataclass(frozen=True)
class UpaGeometry:
    """Uniform planar array in the local y-z plane.

    Two element layouts are provided.  ``centered`` places offsets
    symmetrically about the array center (offsets sum to zero), which is
    the conventional phase-reference choice.  ``corner`` indexes elements
    from zero, the layout the closed-form information sums are written
    for; the two layouts carry different apparent angle information once
    a common unknown phase is conditioned on (see ``fisher``).
    """

    n_az: int
    n_el: int
    spacing: float
    element_offsets: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_az < 1 or self.n_el < 1:
            raise ValueError("array dimensions must be >= 1")
        if self.spacing <= 0:
            raise ValueError("element spacing must be positive")
        offsets = np.asarray(self.element_offsets, dtype=float)
        if offsets.shape != (self.n_az * self.n_el, 3):
            raise ValueError("element_offsets must have shape (n_az*n_el, 3)")
        if np.any(np.abs(offsets[:, 0]) > 0):
            raise ValueError("array elements must lie in the local y-z plane")
        object.__setattr__(self, "element_offsets", offsets)

    @classmethod
    def centered(cls, n_az: int, n_el: int, spacing: float) -> "UpaGeometry":
        """Array with offsets symmetric about the center (they sum to zero)."""
        ya = (np.arange(n_az) - (n_az - 1) / 2.0) * spacing
        za = (np.arange(n_el) - (n_el - 1) / 2.0) * spacing
        return cls(n_az, n_el, spacing, _grid_offsets(ya, za))

    @classmethod
    def corner(cls, n_az: int, n_el: int, spacing: float) -> "UpaGeometry":
        """Array with offsets indexed from zero (the closed-form-sum layout)."""
        ya = np.arange(n_az) * spacing
        za = np.arange(n_el) * spacing
        return cls(n_az, n_el, spacing, _grid_offsets(ya, za))

    @property
    def size(self) -> int:
        return self.n_az * self.n_el

    def moment_sums(self) -> tuple[float, float, float, float, float]:
        """(sum y, sum z, sum y^2, sum z^2, sum y*z) over all elements."""
        y = self.element_offsets[:, 1]
        z = self.element_offsets[:, 2]
        return (y.sum(), z.sum(), (y * y).sum(), (z * z).sum(), (y * z).sum())


def _grid_offsets(ya: np.ndarray, za: np.ndarray) -> np.ndarray:
    yy, zz = np.meshgrid(ya, za, indexing="ij")
    n = yy.size
    offsets = np.zeros((n, 3))
    offsets[:, 1] = yy.ravel()
    offsets[:, 2] = zz.ravel()
    return offsets


def steering_vector(array: UpaGeometry, az: float, el: float, wavelength: float) -> np.ndarray:
    """Unnormalized steering vector; the n-th entry is exp(-j p_n . k(az, el)).

    Entries are unit modulus.  Vectors are deliberately left unnormalized
    so information expressions keep their explicit element-count scaling.
    """
    k = wave_vector(az, el, wavelength)
    return np.exp(-1j * (array.element_offsets @ k))


@dataclass(frozen=True)
class Orientation:
    """Rotation angles about the x and z axes, each in (-pi, pi]."""

    alpha_x: float = 0.0
    alpha_z: float = 0.0

    def __post_init__(self):
        for name in ("alpha_x", "alpha_z"):
            a = getattr(self, name)
            if not np.isfinite(a) or not (-np.pi < a <= np.pi):
                raise ValueError(f"{name} must be finite and in (-pi, pi]")


@dataclass(frozen=True)
class Pose:
    """Position plus orientation of a planar reflector."""

    position: np.ndarray
    orientation: Orientation = Orientation()

    def __post_init__(self):
        object.__setattr__(self, "position", as_vec3(self.position))


def rotation_matrix(o: Orientation) -> np.ndarray:
    """Rotation matrix R(alpha_x, alpha_z); orthogonal with det = +1."""
    cx, sx = np.cos(o.alpha_x), np.sin(o.alpha_x)
    cz, sz = np.cos(o.alpha_z), np.sin(o.alpha_z)
    return np.array(
        [
            [cz, -sz * cx, -sz * sx],
            [sz, cz * cx, cz * sx],
            [0.0, -sx, cx],
        ]
    )


def to_local_frame(ris: Pose, point: np.ndarray) -> np.ndarray:
    """Express ``point`` in the reflector-local frame: -R^T (r - point).

    The transform is norm-preserving, so ||result|| = ||point - r||.
    """
    point = as_vec3(point)
    rot = rotation_matrix(ris.orientation)
    return -rot.T @ (ris.position - point)


@dataclass(frozen=True)
class PathGeometry:
    """Deterministic channel parameters of one Tx -> RIS -> Rx path."""

    tau_r: float
    tau_tr: float
    rx_aoa_az: float
    rx_aoa_el: float
    tx_aod_az: float
    tx_aod_el: float
    ris_aoa_az: float
    ris_aoa_el: float
    ris_aod_az: float
    ris_aod_el: float
    range_rx: float

    def __post_init__(self):
        if not (self.tau_r > self.tau_tr > 0):
            raise ValueError("delays must satisfy tau_r > tau_tr > 0")
        if self.range_rx <= 0:
            raise ValueError("range_rx must be positive")
        for name in ("rx_aoa_el", "tx_aod_el", "ris_aoa_el", "ris_aod_el"):
            e = getattr(self, name)
            if not (-np.pi / 2 <= e <= np.pi / 2):
                raise ValueError(f"{name} out of [-pi/2, pi/2]")


def _direction_angles(delta: np.ndarray) -> tuple[float, float, float]:
    """(azimuth, elevation, range) of a displacement vector."""
    rng = float(np.linalg.norm(delta))
    el = float(np.arcsin(np.clip(delta[2] / rng, -1.0, 1.0)))
    az = float(np.arctan2(delta[1], delta[0]))
    return az, el, rng


def solve_path_geometry(
    tx: np.ndarray, rx: np.ndarray, ris: Pose, c: float = SPEED_OF_LIGHT
) -> PathGeometry:
    """All deterministic path parameters for a Tx -> RIS -> Rx geometry.

    Inverts the angle/position relations for the receiver-side angles and
    derives the local reflector angles from the rotated frame.  Plugging
    the returned angles and delays back into the forward relations
    recovers the receiver position to < 1e-9 m.
    """
    tx = as_vec3(tx)
    rx = as_vec3(rx)
    r = ris.position
    d_rx = r - rx
    d_tx = r - tx
    range_rx = float(np.linalg.norm(d_rx))
    range_tx = float(np.linalg.norm(d_tx))
    if range_rx == 0.0 or range_tx == 0.0:
        raise ValueError("RIS position coincides with a terminal")

    rx_az, rx_el, _ = _direction_angles(d_rx)
    tx_az, tx_el, _ = _direction_angles(d_tx)
    if min(np.pi / 2 - abs(rx_el), np.pi / 2 - abs(tx_el)) < 1e-12:
        warnings.warn("elevation at +-pi/2; azimuth is undefined there", RuntimeWarning)

    # Terminal positions seen from the reflector-local frame.
    rx_local = to_local_frame(ris, rx)
    tx_local = to_local_frame(ris, tx)
    aod_az, aod_el, _ = _direction_angles(rx_local)
    aoa_az, aoa_el, _ = _direction_angles(tx_local)

    tau_tr = range_tx / c
    tau_r = (range_tx + range_rx) / c
    return PathGeometry(
        tau_r=tau_r,
        tau_tr=tau_tr,
        rx_aoa_az=rx_az,
        rx_aoa_el=rx_el,
        tx_aod_az=tx_az,
        tx_aod_el=tx_el,
        ris_aoa_az=aoa_az,
        ris_aoa_el=aoa_el,
        ris_aod_az=aod_az,
        ris_aod_el=aod_el,
        range_rx=range_rx,
    )


def path_unit_vectors(path: PathGeometry) -> np.ndarray:
    """Orthonormal triad [u_tau, u_az, u_el] for the receiver-side angles.

    u_tau points from the receiver toward the reflector; u_az and u_el
    span the plane perpendicular to it.
    """
    az, el = path.rx_aoa_az, path.rx_aoa_el
    ca, sa = np.cos(az), np.sin(az)
    ce, se = np.cos(el), np.sin(el)
    u_tau = np.array([ca * ce, sa * ce, se])
    u_az = np.array([-sa, ca, 0.0])
    u_el = np.array([-ca * se, -sa * se, ce])
    return np.column_stack([u_tau, u_az, u_el])


def position_jacobian(path: PathGeometry, c: float = SPEED_OF_LIGHT) -> np.ndarray:
    """Jacobian [d tau/dr, d az/dr, d el/dr] of the receiver-side parameters.

    Columns scaled by (c, c*(tau_r - tau_tr)*cos el, c*(tau_r - tau_tr))
    reproduce the orthonormal triad of ``path_unit_vectors`` exactly.
    """
    ce = np.cos(path.rx_aoa_el)
    if abs(ce) < 1e-12:
        raise ValueError("elevation at +-pi/2: azimuth derivative is singular")
    rng = c * (path.tau_r - path.tau_tr)
    u = path_unit_vectors(path)
    jac = np.empty((3, 3))
    jac[:, 0] = u[:, 0] / c
    jac[:, 1] = u[:, 1] / (rng * ce)
    jac[:, 2] = u[:, 2] / rng
    return jac


def position_from_angles(
    rx: np.ndarray, tau_r: float, tau_tr: float, az: float, el: float, c: float = SPEED_OF_LIGHT
) -> np.ndarray:
    """Forward relation: reflector position from delay difference and AOA."""
    rx = as_vec3(rx)
    rng = c * (tau_r - tau_tr)
    ce = np.cos(el)
    return rx + rng * np.array([np.cos(az) * ce, np.sin(az) * ce, np.sin(el)])
