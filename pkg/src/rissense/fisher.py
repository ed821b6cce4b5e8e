"""Fisher information for channel parameters and the reflector position.

The closed-form channel FIM evaluates exact discrete sums over the
actual array element offsets; for the corner (index-from-zero) layout
these reduce to the familiar (N-1)(2N-1) expressions.  A central
finite-difference evaluation of the same differenced-signal model serves
as the independent numerical oracle.

The channel FIM is built block diagonal: cross terms between the
position-bearing parameters (delay and receive AOAs) and the remaining
parameters are set to zero, the standard decoupling assumption.  All
entries inside each block are exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, differential_model
from .constants import SPEED_OF_LIGHT
from .geometry import path_unit_vectors, position_jacobian, steering_vector, wave_vector
from .scenario import LinkState, Scenario, link_state

I_TAU, I_RX_AZ, I_RX_EL = 0, 1, 2
POS_BLOCK = (I_TAU, I_RX_AZ, I_RX_EL)


class SingularFimError(ValueError):
    """Raised when a Fisher information matrix cannot be inverted."""

    def __init__(self, direction: str):
        self.direction = direction
        super().__init__(f"Fisher information is singular along: {direction}")


def _tau_curvature(link: LinkState) -> float:
    """Second-moment factor of the delay phase across the observation."""
    wf = link.waveform
    if wf.mode == "carrier_phase":
        return (2.0 * np.pi * wf.carrier_hz) ** 2
    # symmetric subcarrier indices: mean-square index = (Nc^2 - 1) / 12
    nc = wf.n_subcarriers
    return (2.0 * np.pi * wf.subcarrier_spacing_hz) ** 2 * (nc * nc - 1.0) / 12.0


def _pos_block_entries(link: LinkState) -> tuple[float, float, float, float]:
    """(F_tt, F_azaz, F_elel, F_azel) from exact offset sums."""
    snr = link.snr
    n_rx = link.rx_array.size
    kappa = 2.0 * np.pi / link.waveform.wavelength
    az, el = link.path.rx_aoa_az, link.path.rx_aoa_el
    ca, sa = np.cos(az), np.sin(az)
    ce, se = np.cos(el), np.sin(el)
    _, _, sy2, sz2, syz = link.rx_array.moment_sums()

    sum_q2 = kappa**2 * ca**2 * ce**2 * sy2
    sum_r2 = kappa**2 * (sa**2 * se**2 * sy2 + ce**2 * sz2 - 2.0 * sa * se * ce * syz)
    sum_qr = kappa**2 * ca * ce * (-sa * se * sy2 + ce * syz)

    f_tt = 2.0 * snr * n_rx * _tau_curvature(link)
    f_aa = 2.0 * snr * sum_q2
    f_ee = 2.0 * snr * sum_r2
    f_ae = 2.0 * snr * sum_qr
    return f_tt, f_aa, f_ee, f_ae


def _angle_basis_derivatives(az: float, el: float, wavelength: float) -> tuple[np.ndarray, np.ndarray]:
    """d k / d az and d k / d el for a propagation direction."""
    kappa = 2.0 * np.pi / wavelength
    ca, sa = np.cos(az), np.sin(az)
    ce, se = np.cos(el), np.sin(el)
    dk_daz = kappa * np.array([-sa * ce, ca * ce, 0.0])
    dk_del = kappa * np.array([-ca * se, -sa * se, ce])
    return dk_daz, dk_del


def _scalar_amplitude_derivatives(link: LinkState) -> np.ndarray:
    """Derivatives of the lumped amplitude g*S*t for the eight non-position
    parameters, ordered (ris_aod_az, ris_aod_el, ris_aoa_az, ris_aoa_el,
    tx_aod_az, tx_aod_el, gain_re, gain_im)."""
    lam = link.waveform.wavelength
    path = link.path
    g = link.gain
    offsets_r = link.ris_array.element_offsets

    k_out = wave_vector(path.ris_aod_az, path.ris_aod_el, lam)
    k_in = wave_vector(path.ris_aoa_az, path.ris_aoa_el, lam)
    phase = offsets_r @ (k_out - k_in)
    c_m = np.exp(1j * phase) * link.delta_diag
    s_ris = np.sum(c_m)

    d_out_az, d_out_el = _angle_basis_derivatives(path.ris_aod_az, path.ris_aod_el, lam)
    d_in_az, d_in_el = _angle_basis_derivatives(path.ris_aoa_az, path.ris_aoa_el, lam)
    ds_aod_az = 1j * np.sum((offsets_r @ d_out_az) * c_m)
    ds_aod_el = 1j * np.sum((offsets_r @ d_out_el) * c_m)
    ds_aoa_az = -1j * np.sum((offsets_r @ d_in_az) * c_m)
    ds_aoa_el = -1j * np.sum((offsets_r @ d_in_el) * c_m)

    a_tx = steering_vector(link.tx_array, path.tx_aod_az, path.tx_aod_el, lam)
    t = np.vdot(a_tx, link.beamformer)
    d_tx_az, d_tx_el = _angle_basis_derivatives(path.tx_aod_az, path.tx_aod_el, lam)
    u_az = link.tx_array.element_offsets @ d_tx_az
    u_el = link.tx_array.element_offsets @ d_tx_el
    dt_az = 1j * np.sum(u_az * np.conj(a_tx) * link.beamformer)
    dt_el = 1j * np.sum(u_el * np.conj(a_tx) * link.beamformer)

    return np.array(
        [
            g * ds_aod_az * t,
            g * ds_aod_el * t,
            g * ds_aoa_az * t,
            g * ds_aoa_el * t,
            g * s_ris * dt_az,
            g * s_ris * dt_el,
            s_ris * t,
            1j * s_ris * t,
        ]
    )


def fim_channel_closed_form(scenario: Scenario, receiver_index: int = 0) -> np.ndarray:
    """Closed-form 11x11 channel-parameter FIM for one observation pair.

    Entries follow the receive/RIS/transmit factorization with exact
    element sums; the delay entry uses the carrier curvature in
    ``carrier_phase`` mode and the subcarrier curvature in ``ofdm`` mode.
    """
    link = link_state(scenario, receiver_index=receiver_index)
    fim = np.zeros((11, 11))

    f_tt, f_aa, f_ee, f_ae = _pos_block_entries(link)
    fim[I_TAU, I_TAU] = f_tt
    fim[I_RX_AZ, I_RX_AZ] = f_aa
    fim[I_RX_EL, I_RX_EL] = f_ee
    fim[I_RX_AZ, I_RX_EL] = fim[I_RX_EL, I_RX_AZ] = f_ae

    amp = _scalar_amplitude_derivatives(link)
    weight = 2.0 * link.waveform.tx_power * link.rx_array.size / link.noise_var
    fim[3:, 3:] = weight * np.real(np.outer(amp, np.conj(amp)))
    return fim


def fim_channel_numeric(
    scenario: Scenario,
    step_sizes=None,
    receiver_index: int = 0,
) -> np.ndarray:
    """Finite-difference channel FIM, the ground-truth oracle.

    Central differences of the noiseless differenced signal with respect
    to each channel parameter; (2/sigma^2) Re{D D^H} of the stacked
    derivative matrix.  ``step_sizes`` may be a length-11 array or a
    dict with keys "tau", "angle", "gain".
    """
    link = link_state(scenario, receiver_index=receiver_index)
    params = ChannelParams.from_path(link.path, link.gain)
    theta0 = params.to_vector()

    if step_sizes is None or isinstance(step_sizes, dict):
        opts = step_sizes or {}
        if link.waveform.mode == "carrier_phase":
            tau_default = min(1e-12, 1e-4 / (2.0 * np.pi * link.waveform.carrier_hz))
        else:
            tau_default = 1e-12
        h_tau = opts.get("tau", tau_default)
        h_ang = opts.get("angle", 1e-7)
        h_gain = opts.get("gain", 1e-6)
        steps = np.array([h_tau] + [h_ang] * 8 + [h_gain] * 2)
    else:
        steps = np.asarray(step_sizes, dtype=float)
        if steps.shape != (11,):
            raise ValueError("step_sizes must provide 11 entries")
    if np.any(steps <= 0):
        raise ValueError("finite-difference steps must be positive")

    def model_of(vec: np.ndarray) -> np.ndarray:
        p = ChannelParams.from_vector(vec)
        return differential_model(
            p, link.rx_array, link.tx_array, link.ris_array,
            link.delta_diag, link.beamformer, link.waveform,
        ).ravel()

    n_samples = link.waveform.n_subcarriers * link.rx_array.size
    deriv = np.empty((11, n_samples), dtype=complex)
    for i in range(11):
        plus = theta0.copy()
        minus = theta0.copy()
        plus[i] += steps[i]
        minus[i] -= steps[i]
        deriv[i] = (model_of(plus) - model_of(minus)) / (2.0 * steps[i])
    return (2.0 / link.noise_var) * np.real(deriv @ deriv.conj().T)


def fim_position_block(scenario: Scenario, receiver_index: int = 0) -> np.ndarray:
    """The 3x3 (delay, azimuth, elevation) information block."""
    link = link_state(scenario, receiver_index=receiver_index)
    f_tt, f_aa, f_ee, f_ae = _pos_block_entries(link)
    return np.array([[f_tt, 0.0, 0.0], [0.0, f_aa, f_ae], [0.0, f_ae, f_ee]])


def _check_block_singularity(block: np.ndarray):
    # Delay and angle entries carry different units; each direction is
    # checked against its own scale.
    f_tt, f_aa, f_ee = block[0, 0], block[1, 1], block[2, 2]
    f_ae = block[1, 2]
    if f_tt <= 0 and f_aa <= 0 and f_ee <= 0:
        raise SingularFimError("all directions (zero signal)")
    if f_tt <= 0:
        raise SingularFimError("range")
    if f_aa <= 0:
        raise SingularFimError("azimuth")
    if f_ee <= 0:
        raise SingularFimError("elevation")
    if f_aa * f_ee - f_ae * f_ae <= 1e-15 * f_aa * f_ee:
        raise SingularFimError("azimuth-elevation subspace")


def position_fim(scenario: Scenario, receiver_index: int = 0, allow_singular: bool = False) -> np.ndarray:
    """3x3 position FIM J_A F_A J_A^T for one observation pair."""
    link = link_state(scenario, receiver_index=receiver_index)
    f_tt, f_aa, f_ee, f_ae = _pos_block_entries(link)
    block = np.array([[f_tt, 0.0, 0.0], [0.0, f_aa, f_ae], [0.0, f_ae, f_ee]])
    if not allow_singular:
        _check_block_singularity(block)
    jac = position_jacobian(link.path)
    return jac @ block @ jac.T


@dataclass(frozen=True)
class InfoEllipsoid:
    """EFIM in orthonormal range/azimuth/elevation directions."""

    u_tau: np.ndarray
    u_az: np.ndarray
    u_el: np.ndarray
    rii: float
    aii_az: float
    aii_el: float

    @property
    def basis(self) -> np.ndarray:
        return np.column_stack([self.u_tau, self.u_az, self.u_el])

    @property
    def intensities(self) -> np.ndarray:
        return np.array([self.rii, self.aii_az, self.aii_el])

    def matrix(self) -> np.ndarray:
        u = self.basis
        return (u * self.intensities) @ u.T

    def crlb(self) -> float:
        vals = self.intensities
        if np.any(vals <= 0):
            return float("inf")
        return float(np.sum(1.0 / vals))

    def peb(self) -> float:
        return float(np.sqrt(self.crlb()))


def efim_position(scenario: Scenario, receiver_index: int = 0) -> InfoEllipsoid:
    """Equivalent 3-D localization information in ellipsoid form.

    Range intensity is F_tt / c^2; angle intensities divide out the
    range-scaled Jacobian factors and subtract the mutual azimuth/
    elevation coupling, computed from the 2x2 determinant so the result
    is non-negative by construction.
    """
    link = link_state(scenario, receiver_index=receiver_index)
    f_tt, f_aa, f_ee, f_ae = _pos_block_entries(link)
    path = link.path
    rng = path.range_rx
    ce = np.cos(path.rx_aoa_el)
    c2 = SPEED_OF_LIGHT**2

    rii = f_tt / c2
    det = f_aa * f_ee - f_ae * f_ae
    aii_az = (det / f_ee) / (rng**2 * ce**2) if f_ee > 0 else f_aa / (rng**2 * ce**2)
    aii_el = (det / f_aa) / (rng**2) if f_aa > 0 else f_ee / (rng**2)

    u = path_unit_vectors(path)
    return InfoEllipsoid(
        u_tau=u[:, 0], u_az=u[:, 1], u_el=u[:, 2],
        rii=rii, aii_az=aii_az, aii_el=aii_el,
    )


def crlb(fim: np.ndarray, allow_singular: bool = False) -> float:
    """Trace of the inverse via guarded symmetric eigendecomposition."""
    fim = np.asarray(fim, dtype=float)
    vals = np.linalg.eigvalsh((fim + fim.T) / 2.0)
    floor = 1e-15 * max(vals.max(), 0.0)
    if vals.min() <= floor:
        if allow_singular:
            return float("inf")
        raise SingularFimError(f"eigenvalue {vals.min():.3e} below floor {floor:.3e}")
    return float(np.sum(1.0 / vals))


def peb(fim: np.ndarray, allow_singular: bool = False) -> float:
    """Position error bound sqrt(tr(F^-1)) in meters."""
    return float(np.sqrt(crlb(fim, allow_singular=allow_singular)))


def crlb_channel_params(scenario: Scenario, receiver_index: int = 0) -> tuple[float, float, float]:
    """Root-CRLB (std) for delay, azimuth, elevation from the 3x3 block."""
    block = fim_position_block(scenario, receiver_index=receiver_index)
    _check_block_singularity(block)
    inv = np.linalg.inv(block)
    return tuple(float(np.sqrt(inv[i, i])) for i in range(3))


def fim_position_block_aperture_approx(scenario: Scenario, receiver_index: int = 0) -> np.ndarray:
    """Aperture-form approximation of the position block.

    Uses the effective-aperture expressions (N d)^2-style in place of the
    exact element sums.  Documented approximation layer only; never used
    as ground truth.
    """
    link = link_state(scenario, receiver_index=receiver_index)
    snr = link.snr
    wf = link.waveform
    n_rx = link.rx_array.size
    n_az, n_el = link.rx_array.n_az, link.rx_array.n_el
    d = link.rx_array.spacing
    lam = wf.wavelength
    az, el = link.path.rx_aoa_az, link.path.rx_aoa_el
    ca, sa = np.cos(az), np.sin(az)
    ce, se = np.cos(el), np.sin(el)

    if wf.mode == "carrier_phase":
        f_tt = 8.0 * np.pi**2 * wf.carrier_hz**2 * n_rx * snr
    else:
        f_tt = (2.0 * np.pi**2 / 3.0) * wf.bandwidth**2 * n_rx * snr

    scale = 8.0 * np.pi**2 / (3.0 * lam**2) * n_rx * snr
    g_aa = (n_az * d * ca * ce) ** 2
    g_ee = (n_az * d * sa * se) ** 2 + (n_el * d * ce) ** 2 - 1.5 * n_rx * d**2 * sa * se * ce
    g_ae = 0.75 * n_rx * d**2 * ca * ce**2 - ca * ce * sa * se * (n_az * d) ** 2
    f_aa = scale * g_aa
    f_ee = scale * g_ee
    f_ae = scale * g_ae
    return np.array([[f_tt, 0.0, 0.0], [0.0, f_aa, f_ae], [0.0, f_ae, f_ee]])
