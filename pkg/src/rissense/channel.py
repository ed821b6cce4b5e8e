"""RIS cascade channel, phase-profile control, and differential snapshots.

The observable used everywhere downstream is the difference of received
signals at adjacent observation instants with different RIS profiles,
which cancels the static background channel exactly.  In ``ofdm`` mode
the carrier-phase factor is absorbed into the complex gain (delay
information then comes from subcarrier phase slopes alone); in
``carrier_phase`` mode the factor exp(-j 2 pi f tau) is kept explicit
and the gain phase is treated as calibrated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constants import SPEED_OF_LIGHT
from .geometry import PathGeometry, UpaGeometry, steering_vector, wave_vector
from .utils import complex_normal


@dataclass(frozen=True)
class RisPhaseProfile:
    """Per-element phases of the diagonal RIS configuration."""

    phases: np.ndarray

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=float)
        if phases.ndim != 1 or phases.size == 0:
            raise ValueError("phases must be a non-empty 1-D array")
        if not np.all(np.isfinite(phases)):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "phases", phases)

    @property
    def size(self) -> int:
        return self.phases.size

    def diagonal(self) -> np.ndarray:
        return np.exp(1j * self.phases)


@dataclass(frozen=True)
class Waveform:
    """Probing waveform description.

    ``carrier_phase`` models absolute carrier-phase ranging on a single
    tone; ``ofdm`` models an N_c-subcarrier pilot with energy split
    equally across subcarriers and symmetric subcarrier indexing.
    """

    carrier_hz: float
    mode: str = "ofdm"
    n_subcarriers: int = 1
    subcarrier_spacing_hz: float = 0.0
    tx_power: float = 1.0

    def __post_init__(self):
        if self.mode not in ("carrier_phase", "ofdm"):
            raise ValueError(f"unknown waveform mode {self.mode!r}")
        if self.carrier_hz <= 0:
            raise ValueError("carrier frequency must be positive")
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be >= 1")
        if self.mode == "ofdm" and self.subcarrier_spacing_hz <= 0:
            raise ValueError("subcarrier spacing must be positive in ofdm mode")
        if self.mode == "carrier_phase" and self.n_subcarriers != 1:
            raise ValueError("carrier_phase mode uses a single tone")
        if self.tx_power <= 0:
            raise ValueError("tx_power must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def bandwidth(self) -> float:
        if self.mode == "ofdm":
            return self.n_subcarriers * self.subcarrier_spacing_hz
        return 0.0

    def subcarrier_offsets(self) -> np.ndarray:
        """Subcarrier indices symmetric about the carrier (zero mean)."""
        n = self.n_subcarriers
        return np.arange(n) - (n - 1) / 2.0


@dataclass(frozen=True)
class ChannelParams:
    """The eleven channel parameters, in their canonical order."""

    tau: float
    rx_aoa_az: float
    rx_aoa_el: float
    ris_aod_az: float
    ris_aod_el: float
    ris_aoa_az: float
    ris_aoa_el: float
    tx_aod_az: float
    tx_aod_el: float
    gain_re: float
    gain_im: float

    def to_vector(self) -> np.ndarray:
        return np.array(
            [
                self.tau,
                self.rx_aoa_az,
                self.rx_aoa_el,
                self.ris_aod_az,
                self.ris_aod_el,
                self.ris_aoa_az,
                self.ris_aoa_el,
                self.tx_aod_az,
                self.tx_aod_el,
                self.gain_re,
                self.gain_im,
            ]
        )

    @classmethod
    def from_vector(cls, vec) -> "ChannelParams":
        v = np.asarray(vec, dtype=float)
        if v.shape != (11,):
            raise ValueError("parameter vector must have length 11")
        return cls(*v)

    @classmethod
    def from_path(cls, path: PathGeometry, gain: complex) -> "ChannelParams":
        return cls(
            tau=path.tau_r,
            rx_aoa_az=path.rx_aoa_az,
            rx_aoa_el=path.rx_aoa_el,
            ris_aod_az=path.ris_aod_az,
            ris_aod_el=path.ris_aod_el,
            ris_aoa_az=path.ris_aoa_az,
            ris_aoa_el=path.ris_aoa_el,
            tx_aod_az=path.tx_aod_az,
            tx_aod_el=path.tx_aod_el,
            gain_re=float(np.real(gain)),
            gain_im=float(np.imag(gain)),
        )

    @property
    def gain(self) -> complex:
        return complex(self.gain_re, self.gain_im)


ETA_NAMES = (
    "tau",
    "rx_aoa_az",
    "rx_aoa_el",
    "ris_aod_az",
    "ris_aod_el",
    "ris_aoa_az",
    "ris_aoa_el",
    "tx_aod_az",
    "tx_aod_el",
    "gain_re",
    "gain_im",
)


@dataclass(frozen=True)
class DifferentialSnapshot:
    """Differenced received signal for one observation pair.

    ``samples`` has shape (n_subcarriers, n_rx); each complex element of
    the additive noise has total variance ``noise_var`` (real and
    imaginary parts each carry half).
    """

    samples: np.ndarray
    noise_var: float

    def __post_init__(self):
        if self.noise_var <= 0:
            raise ValueError("noise_var must be positive")


def ris_channel(
    path: PathGeometry,
    rx_array: UpaGeometry,
    tx_array: UpaGeometry,
    ris_array: UpaGeometry,
    profile: RisPhaseProfile,
    gain: complex,
    carrier_hz: float,
) -> np.ndarray:
    """Rank-one cascade channel matrix for one RIS configuration."""
    if profile.size != ris_array.size:
        raise ValueError("profile length must match the RIS element count")
    lam = SPEED_OF_LIGHT / carrier_hz
    a_rx = steering_vector(rx_array, path.rx_aoa_az, path.rx_aoa_el, lam)
    a_tx = steering_vector(tx_array, path.tx_aod_az, path.tx_aod_el, lam)
    a_out = steering_vector(ris_array, path.ris_aod_az, path.ris_aod_el, lam)
    a_in = steering_vector(ris_array, path.ris_aoa_az, path.ris_aoa_el, lam)
    ris_scalar = np.vdot(a_out, profile.diagonal() * a_in)
    phase = np.exp(-2j * np.pi * carrier_hz * path.tau_r)
    return gain * phase * ris_scalar * np.outer(a_rx, np.conj(a_tx))


def _ris_phase_terms(path: PathGeometry, ris_array: UpaGeometry, wavelength: float):
    """Per-element phases of the outgoing and incoming RIS wave paths."""
    k_out = wave_vector(path.ris_aod_az, path.ris_aod_el, wavelength)
    k_in = wave_vector(path.ris_aoa_az, path.ris_aoa_el, wavelength)
    phi_bar = ris_array.element_offsets @ k_out
    theta_bar = ris_array.element_offsets @ k_in
    return phi_bar, theta_bar


def optimal_phase_pair(
    path: PathGeometry, ris_array: UpaGeometry, wavelength: float
) -> tuple[RisPhaseProfile, RisPhaseProfile]:
    """Alternating profile pair aligning the composite RIS phase.

    Returns (omega_minus, omega_plus); the m-th diagonal of
    (Omega_plus - Omega_minus) equals 2 exp(-j(phi_bar_m - theta_bar_m)),
    so the differenced reflection adds coherently across elements.
    """
    phi_bar, theta_bar = _ris_phase_terms(path, ris_array, wavelength)
    plus = -(phi_bar - theta_bar)
    minus = np.pi - (phi_bar - theta_bar)
    return RisPhaseProfile(minus), RisPhaseProfile(plus)


def profile_delta(minus: RisPhaseProfile, plus: RisPhaseProfile) -> np.ndarray:
    """Diagonal of (Omega_plus - Omega_minus)."""
    if minus.size != plus.size:
        raise ValueError("profiles must have equal length")
    return plus.diagonal() - minus.diagonal()


def ris_composite_scalar(
    delta_diag: np.ndarray, path: PathGeometry, ris_array: UpaGeometry, wavelength: float
) -> complex:
    """Scalar a_r(out)^H (Omega_plus - Omega_minus) a_r(in) of the cascade."""
    delta_diag = np.asarray(delta_diag)
    if delta_diag.shape != (ris_array.size,):
        raise ValueError("delta diagonal must have one entry per RIS element")
    phi_bar, theta_bar = _ris_phase_terms(path, ris_array, wavelength)
    return complex(np.sum(np.exp(1j * (phi_bar - theta_bar)) * delta_diag))


def beta_factor(
    delta_diag: np.ndarray, path: PathGeometry, ris_array: UpaGeometry, wavelength: float
) -> float:
    """Squared magnitude of the differenced RIS reflection scalar.

    Maximized by ``optimal_phase_pair``, where every element contributes
    modulus 2 coherently and the factor reaches 4 M^2.
    """
    return abs(ris_composite_scalar(delta_diag, path, ris_array, wavelength)) ** 2


def conjugate_beamformer(
    path: PathGeometry, tx_array: UpaGeometry, wavelength: float
) -> np.ndarray:
    """Beamforming vector steering the transmit array at the reflector."""
    return steering_vector(tx_array, path.tx_aod_az, path.tx_aod_el, wavelength)


def gamma_factor(
    beamformer: np.ndarray,
    path: PathGeometry,
    tx_array: UpaGeometry,
    wavelength: float,
    tx_power: float,
) -> float:
    """Transmit factor |a_T(theta)^H f|^2 * P_T.

    Equals N_T^2 * P_T when the beamformer matches the departure angles.
    """
    a_tx = steering_vector(tx_array, path.tx_aod_az, path.tx_aod_el, wavelength)
    return abs(np.vdot(a_tx, beamformer)) ** 2 * tx_power


def received_snr(gain: complex, beta: float, gamma: float, noise_var: float) -> float:
    """Per-antenna received SNR |g|^2 * beta * gamma / sigma^2."""
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    return (abs(gain) ** 2) * beta * gamma / noise_var


def differential_model(
    params: ChannelParams,
    rx_array: UpaGeometry,
    tx_array: UpaGeometry,
    ris_array: UpaGeometry,
    delta_diag: np.ndarray,
    beamformer: np.ndarray,
    waveform: Waveform,
) -> np.ndarray:
    """Noiseless differenced signal as a function of the channel parameters.

    Returns an (n_subcarriers, n_rx) array.  This is the single model
    shared by snapshot synthesis, the finite-difference information
    oracle, and the maximum-likelihood estimator.
    """
    lam = waveform.wavelength
    a_rx = steering_vector(rx_array, params.rx_aoa_az, params.rx_aoa_el, lam)
    a_tx = steering_vector(tx_array, params.tx_aod_az, params.tx_aod_el, lam)
    k_out = wave_vector(params.ris_aod_az, params.ris_aod_el, lam)
    k_in = wave_vector(params.ris_aoa_az, params.ris_aoa_el, lam)
    phi_bar = ris_array.element_offsets @ k_out
    theta_bar = ris_array.element_offsets @ k_in
    ris_scalar = np.sum(np.exp(1j * (phi_bar - theta_bar)) * delta_diag)
    tx_scalar = np.vdot(a_tx, beamformer)

    if waveform.mode == "carrier_phase":
        tau_phase = np.exp(-2j * np.pi * waveform.carrier_hz * params.tau)[None]
        pilots = np.array([np.sqrt(waveform.tx_power)])
    else:
        offsets = waveform.subcarrier_offsets()
        tau_phase = np.exp(-2j * np.pi * offsets * waveform.subcarrier_spacing_hz * params.tau)
        pilots = np.full(waveform.n_subcarriers, np.sqrt(waveform.tx_power / waveform.n_subcarriers))

    amp = params.gain * ris_scalar * tx_scalar
    return amp * (tau_phase * pilots)[:, None] * a_rx[None, :]


def differential_signal(
    scenario,
    omega_minus: Optional[RisPhaseProfile] = None,
    omega_plus: Optional[RisPhaseProfile] = None,
    rng: Optional[np.random.Generator] = None,
    receiver_index: int = 0,
    static_background: Optional[np.ndarray] = None,
) -> DifferentialSnapshot:
    """Differenced snapshot for one observation pair of a scenario.

    Profiles default to the scenario's configured pair (optimal unless
    explicit profiles were supplied).  When ``rng`` is given, additive
    noise with per-element variance ``scenario.noise_var`` is drawn from
    it; omit it for the noiseless signal.  ``static_background`` is an
    (n_rx, n_tx) channel injected identically into both instants before
    differencing, to demonstrate that the static scene cancels exactly.
    """
    from .scenario import link_state  # deferred to avoid a circular import

    link = link_state(scenario, receiver_index=receiver_index)
    if omega_minus is not None or omega_plus is not None:
        if omega_minus is None or omega_plus is None:
            raise ValueError("provide both profiles or neither")
        minus, plus = omega_minus, omega_plus
    else:
        minus, plus = link.profiles

    params = ChannelParams.from_path(link.path, link.gain)
    if static_background is None:
        samples = differential_model(
            params,
            link.rx_array,
            link.tx_array,
            link.ris_array,
            profile_delta(minus, plus),
            link.beamformer,
            link.waveform,
        )
    else:
        s_plus = _instant_signal(params, link, plus, static_background)
        s_minus = _instant_signal(params, link, minus, static_background)
        samples = s_plus - s_minus
    if rng is not None:
        samples = samples + complex_normal(rng, samples.shape, var=scenario.noise_var)
    return DifferentialSnapshot(samples=samples, noise_var=scenario.noise_var)


def _instant_signal(params, link, profile: RisPhaseProfile, static_background: np.ndarray) -> np.ndarray:
    """Received signal of a single instant, RIS term plus static scene."""
    ris_part = differential_model(
        params,
        link.rx_array,
        link.tx_array,
        link.ris_array,
        profile.diagonal(),
        link.beamformer,
        link.waveform,
    )
    static_background = np.asarray(static_background)
    expected = (link.rx_array.size, link.tx_array.size)
    if static_background.shape != expected:
        raise ValueError(f"static background must have shape {expected}")
    wf = link.waveform
    if wf.mode == "carrier_phase":
        pilots = np.array([np.sqrt(wf.tx_power)])
    else:
        pilots = np.full(wf.n_subcarriers, np.sqrt(wf.tx_power / wf.n_subcarriers))
    static_rx = static_background @ link.beamformer
    return ris_part + pilots[:, None] * static_rx[None, :]
