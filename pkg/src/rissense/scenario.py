"""Experiment scenarios: construction, gain resolution, and file loading.

A scenario pins the transmitter, one or more receivers, the RIS pose and
panel, the waveform, and either a target per-antenna SNR or an explicit
channel gain.  RIS profiles and the transmit beamformer are designed at
the nominal ("design") geometry; mismatch studies evaluate the same
design at displaced poses via ``ris_actual`` / ``rx_actual``.

Config files are TOML with degrees for angles and dB for SNR; values are
converted to radians/linear at this boundary.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 installs
    import tomli as tomllib

from .channel import (
    RisPhaseProfile,
    Waveform,
    beta_factor,
    conjugate_beamformer,
    gamma_factor,
    optimal_phase_pair,
    profile_delta,
)
from .geometry import Orientation, PathGeometry, Pose, UpaGeometry, as_vec3, solve_path_geometry
from .utils import stable_hash


@dataclass(frozen=True)
class ReceiverNode:
    """A cooperating receiver; ``error_cov`` is zero for anchors."""

    position: np.ndarray
    array: UpaGeometry
    error_cov: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "position", as_vec3(self.position))
        if self.error_cov is not None:
            q = np.asarray(self.error_cov, dtype=float)
            if q.shape != (3, 3):
                raise ValueError("error covariance must be 3x3")
            if not np.allclose(q, q.T, atol=1e-12):
                raise ValueError("error covariance must be symmetric")
            if np.linalg.eigvalsh(q).min() < -1e-12 * max(1.0, np.abs(q).max()):
                raise ValueError("error covariance must be positive semidefinite")
            object.__setattr__(self, "error_cov", q)

    @property
    def is_anchor(self) -> bool:
        return self.error_cov is None or not np.any(self.error_cov)


@dataclass(frozen=True)
class Scenario:
    """Full description of one monitoring experiment."""

    tx_position: np.ndarray
    tx_array: UpaGeometry
    receivers: tuple[ReceiverNode, ...]
    ris: Pose
    ris_array: UpaGeometry
    waveform: Waveform
    snr_db: Optional[float] = None
    gain: Optional[complex] = None
    instants: int = 2
    seed: int = 0
    noise_var: float = 1.0
    ris_profiles: Optional[tuple[RisPhaseProfile, RisPhaseProfile]] = None
    ris_actual: Optional[Pose] = None
    rx_actual: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "tx_position", as_vec3(self.tx_position))
        if (self.snr_db is None) == (self.gain is None):
            raise ValueError("set exactly one of snr_db and gain")
        if not self.receivers:
            raise ValueError("at least one receiver is required")
        if self.instants < 2:
            raise ValueError("instants must be >= 2")
        if self.noise_var <= 0:
            raise ValueError("noise_var must be positive")
        if self.rx_actual is not None:
            object.__setattr__(self, "rx_actual", as_vec3(self.rx_actual))

    # -- derived views -------------------------------------------------

    def design_pose(self) -> Pose:
        return self.ris

    def actual_pose(self) -> Pose:
        return self.ris_actual if self.ris_actual is not None else self.ris

    def rx_position(self, receiver_index: int = 0) -> np.ndarray:
        if receiver_index == 0 and self.rx_actual is not None:
            return self.rx_actual
        return self.receivers[receiver_index].position

    def displaced(self, ris_position=None, orientation: Optional[Orientation] = None,
                  rx_position=None) -> "Scenario":
        """Scenario evaluated off the design point with frozen design."""
        pose = self.actual_pose()
        if ris_position is not None or orientation is not None:
            pose = Pose(
                position=ris_position if ris_position is not None else pose.position,
                orientation=orientation if orientation is not None else pose.orientation,
            )
        return replace(
            self,
            ris_actual=pose if (ris_position is not None or orientation is not None) else self.ris_actual,
            rx_actual=as_vec3(rx_position) if rx_position is not None else self.rx_actual,
        )

    def with_receiver(self, node: ReceiverNode) -> "Scenario":
        return replace(self, receivers=(node,) + self.receivers[1:], rx_actual=None)

    def resolved(self, receiver_index: int = 0) -> "Scenario":
        """Freeze the gain implied by the target SNR at the design point."""
        if self.gain is not None:
            return self
        link = link_state(self, receiver_index=receiver_index)
        return replace(self, snr_db=None, gain=link.gain)

    def describe(self) -> dict:
        """JSON-friendly description used for hashing and CSV metadata."""
        return {
            "tx": self.tx_position.tolist(),
            "tx_array": [self.tx_array.n_az, self.tx_array.n_el, self.tx_array.spacing],
            "receivers": [
                {
                    "position": r.position.tolist(),
                    "array": [r.array.n_az, r.array.n_el, r.array.spacing],
                    "error_cov": None if r.error_cov is None else r.error_cov.tolist(),
                }
                for r in self.receivers
            ],
            "ris": {
                "position": self.ris.position.tolist(),
                "orientation": [self.ris.orientation.alpha_x, self.ris.orientation.alpha_z],
                "array": [self.ris_array.n_az, self.ris_array.n_el, self.ris_array.spacing],
            },
            "waveform": {
                "carrier_hz": self.waveform.carrier_hz,
                "mode": self.waveform.mode,
                "n_subcarriers": self.waveform.n_subcarriers,
                "subcarrier_spacing_hz": self.waveform.subcarrier_spacing_hz,
                "tx_power": self.waveform.tx_power,
            },
            "snr_db": self.snr_db,
            "gain": None if self.gain is None else [self.gain.real, self.gain.imag],
            "instants": self.instants,
            "noise_var": self.noise_var,
            "seed": self.seed,
        }

    def digest(self) -> str:
        return stable_hash(self.describe())


@dataclass(frozen=True)
class LinkState:
    """Everything needed to evaluate one Tx-RIS-Rx link."""

    path: PathGeometry
    design_path: PathGeometry
    profiles: tuple[RisPhaseProfile, RisPhaseProfile]
    delta_diag: np.ndarray = field(repr=False)
    beamformer: np.ndarray = field(repr=False)
    gain: complex
    beta: float
    gamma: float
    snr: float
    noise_var: float
    waveform: Waveform
    rx_array: UpaGeometry
    tx_array: UpaGeometry
    ris_array: UpaGeometry


def link_state(scenario: Scenario, receiver_index: int = 0) -> LinkState:
    """Assemble the link for one receiver of a scenario.

    Profiles, beamformer, and the gain back-solved from the target SNR
    are all fixed at the design geometry; beta/gamma/SNR are evaluated at
    the actual (possibly displaced) geometry.
    """
    node = scenario.receivers[receiver_index]
    waveform = scenario.waveform
    lam = waveform.wavelength

    design_path = solve_path_geometry(scenario.tx_position, node.position, scenario.design_pose())
    if scenario.ris_profiles is not None:
        minus, plus = scenario.ris_profiles
    else:
        minus, plus = optimal_phase_pair(design_path, scenario.ris_array, lam)
    delta = profile_delta(minus, plus)
    f = conjugate_beamformer(design_path, scenario.tx_array, lam)

    if scenario.gain is not None:
        gain = complex(scenario.gain)
    else:
        beta_design = beta_factor(delta, design_path, scenario.ris_array, lam)
        gamma_design = gamma_factor(f, design_path, scenario.tx_array, lam, waveform.tx_power)
        if beta_design == 0 or gamma_design == 0:
            raise ValueError("cannot back-solve a gain for a zero-response design")
        snr_lin = 10.0 ** (scenario.snr_db / 10.0)
        gain = complex(np.sqrt(snr_lin * scenario.noise_var / (beta_design * gamma_design)))

    rx_pos = scenario.rx_position(receiver_index)
    actual_pose = scenario.actual_pose()
    if receiver_index == 0:
        path = solve_path_geometry(scenario.tx_position, rx_pos, actual_pose)
    else:
        path = solve_path_geometry(scenario.tx_position, node.position, actual_pose)

    beta = beta_factor(delta, path, scenario.ris_array, lam)
    gamma = gamma_factor(f, path, scenario.tx_array, lam, waveform.tx_power)
    snr = (abs(gain) ** 2) * beta * gamma / scenario.noise_var
    return LinkState(
        path=path,
        design_path=design_path,
        profiles=(minus, plus),
        delta_diag=delta,
        beamformer=f,
        gain=gain,
        beta=beta,
        gamma=gamma,
        snr=snr,
        noise_var=scenario.noise_var,
        waveform=waveform,
        rx_array=node.array,
        tx_array=scenario.tx_array,
        ris_array=scenario.ris_array,
    )


# -- file loading ------------------------------------------------------


class ConfigError(ValueError):
    """Raised when a scenario file is malformed."""


def _array_from_section(section: dict, wavelength: float, default_layout: str) -> UpaGeometry:
    try:
        n_az, n_el = (int(v) for v in section["array"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad or missing 'array' entry: {exc}") from exc
    spacing = section.get("spacing_wavelengths", 0.5) * wavelength
    layout = section.get("layout", default_layout)
    if layout == "corner":
        return UpaGeometry.corner(n_az, n_el, spacing)
    if layout == "centered":
        return UpaGeometry.centered(n_az, n_el, spacing)
    raise ConfigError(f"unknown array layout {layout!r}")


def scenario_from_mapping(cfg: dict) -> Scenario:
    """Build a Scenario from a parsed config mapping."""
    try:
        wf_sec = cfg["waveform"]
        mode = wf_sec.get("mode", "ofdm")
        waveform = Waveform(
            carrier_hz=float(wf_sec["carrier_ghz"]) * 1e9,
            mode=mode,
            n_subcarriers=int(wf_sec.get("n_subcarriers", 1)),
            subcarrier_spacing_hz=float(wf_sec.get("subcarrier_spacing_khz", 0.0)) * 1e3,
            tx_power=float(wf_sec.get("tx_power_w", 1.0)),
        )

        layout = cfg.get("arrays", {}).get("layout", "corner")
        tx_sec = cfg["tx"]
        tx_array = _array_from_section(tx_sec, waveform.wavelength, layout)

        receivers = []
        for rx_sec in cfg["receivers"]:
            array = _array_from_section(rx_sec, waveform.wavelength, layout)
            error = rx_sec.get("error_std_m")
            cov = None if error is None else float(error) ** 2 * np.eye(3)
            receivers.append(ReceiverNode(rx_sec["position_m"], array, cov))

        ris_sec = cfg["ris"]
        ris_array = _array_from_section(ris_sec, waveform.wavelength, layout)
        alpha = [float(a) for a in ris_sec.get("orientation_deg", [0.0, 0.0])]
        pose = Pose(
            position=ris_sec["position_m"],
            orientation=Orientation(np.deg2rad(alpha[0]), np.deg2rad(alpha[1])),
        )

        sig = cfg.get("signal", {})
        snr_db = sig.get("snr_db")
        gain = sig.get("gain")
        if gain is not None:
            gain = complex(float(gain[0]), float(gain[1]))

        run = cfg.get("run", {})
        return Scenario(
            tx_position=tx_sec["position_m"],
            tx_array=tx_array,
            receivers=tuple(receivers),
            ris=pose,
            ris_array=ris_array,
            waveform=waveform,
            snr_db=None if snr_db is None else float(snr_db),
            gain=gain,
            instants=int(run.get("instants", 2)),
            seed=int(run.get("seed", 0)),
            noise_var=float(sig.get("noise_var", 1.0)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario config: {exc}") from exc


def load_scenario(path) -> Scenario:
    """Load a scenario from a TOML file."""
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"scenario file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return scenario_from_mapping(cfg)
