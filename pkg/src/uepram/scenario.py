"""Cellular geometries, SINR and the per-user, per-MCS packet erasure profile.

Nineteen sites sit on a hexagonal grid (centre plus two rings). In the
single-cell layout the centre site serves and the 18 others interfere; in
the SFN layout four synchronised sites serve and their received powers add.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Sequence

import numpy as np
import yaml
from scipy.special import expit

from uepram.gf import check_field

MIN_DISTANCE_M = 1.0


@dataclass(frozen=True)
class McsEntry:
    name: str
    efficiency: float
    sinr_threshold_db: float
    transition_width_db: float
    modulation: str = ""


@dataclass(frozen=True)
class McsTable:
    entries: tuple[McsEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("MCS table is empty")
        th = [e.sinr_threshold_db for e in self.entries]
        if any(b <= a for a, b in zip(th, th[1:])):
            raise ValueError("MCS SINR thresholds must be strictly increasing")
        if any(e.transition_width_db <= 0 for e in self.entries):
            raise ValueError("MCS transition widths must be positive")

    def __len__(self):
        return len(self.entries)

    @property
    def thresholds_db(self) -> np.ndarray:
        return np.array([e.sinr_threshold_db for e in self.entries])

    @property
    def widths_db(self) -> np.ndarray:
        return np.array([e.transition_width_db for e in self.entries])

    @classmethod
    def from_records(cls, records: Sequence[dict]) -> "McsTable":
        return cls(tuple(
            McsEntry(
                name=str(r["name"]),
                efficiency=float(r.get("efficiency", 0.0)),
                sinr_threshold_db=float(r["sinr_threshold_db"]),
                transition_width_db=float(r["transition_width_db"]),
                modulation=str(r.get("modulation", "")),
            )
            for r in records
        ))

    @classmethod
    def default(cls) -> "McsTable":
        text = resources.files("uepram.data").joinpath("mcs_cqi15.yaml").read_text()
        return cls.from_records(yaml.safe_load(text))

    def to_records(self) -> list[dict]:
        return [
            {"name": e.name, "modulation": e.modulation, "efficiency": e.efficiency,
             "sinr_threshold_db": e.sinr_threshold_db, "transition_width_db": e.transition_width_db}
            for e in self.entries
        ]


@dataclass(frozen=True)
class RadioParams:
    tx_power_dbm: float = 46.0
    noise_power_dbm: float = -95.0
    pathloss_a_db: float = 128.1  # PL = A + B log10(d / 1 km)
    pathloss_b_db: float = 37.6
    inter_site_distance_m: float = 500.0
    shadowing_std_db: float = 0.0
    shadowing_seed: int = 0


@dataclass
class Scenario:
    kind: str
    stations: np.ndarray  # (S, 2) metres
    serving: tuple[int, ...]
    tx_power_dbm: np.ndarray  # (S,)
    users: np.ndarray  # (U, 2) metres
    radio: RadioParams
    mcs_table: McsTable
    q: int = 256
    num_subchannels: int = 4
    user_labels: dict = field(default_factory=dict)

    def __post_init__(self):
        check_field(self.q)
        if not self.serving:
            raise ValueError("a scenario needs at least one serving station")
        if len(self.users) < 1:
            raise ValueError("a scenario needs at least one user")

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def interfering(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.stations)) if i not in self.serving)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "stations": self.stations.tolist(),
            "serving": list(self.serving),
            "interfering": list(self.interfering),
            "tx_power_dbm": self.tx_power_dbm.tolist(),
            "users": self.users.tolist(),
            "radio": self.radio.__dict__,
            "mcs_table": self.mcs_table.to_records(),
            "q": self.q,
            "num_subchannels": self.num_subchannels,
            "user_labels": {k: np.asarray(v).tolist() for k, v in self.user_labels.items()},
        }


@dataclass(frozen=True)
class ErasureProfile:
    """Per-user (rows), per-MCS (columns) packet erasure probabilities."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 2:
            raise ValueError("erasure profile must be a (users, MCS) matrix")
        if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
            raise ValueError("erasure probabilities must lie in [0, 1]")
        if np.any(np.diff(p, axis=1) < 0):
            raise ValueError("erasure probabilities must be non-decreasing in the MCS index")
        object.__setattr__(self, "p", p)

    @property
    def num_users(self) -> int:
        return self.p.shape[0]

    @property
    def num_mcs(self) -> int:
        return self.p.shape[1]


def hex_sites(isd: float, rings: int = 2) -> np.ndarray:
    """Site positions of a hexagonal layout, centre first, then ring by ring
    counter-clockwise from the positive x axis."""
    sites = []
    for a in range(-rings, rings + 1):
        for b in range(-rings, rings + 1):
            ring = max(abs(a), abs(b), abs(a + b))
            if ring > rings:
                continue
            x = isd * (a + b / 2.0)
            y = isd * (b * math.sqrt(3) / 2.0)
            angle = round(math.degrees(math.atan2(y, x)) % 360.0, 6)
            sites.append((ring, angle, x, y))
    sites.sort()
    return np.array([[x, y] for _, _, x, y in sites])


def _station_powers(n: int, radio: RadioParams) -> np.ndarray:
    return np.full(n, float(radio.tx_power_dbm))


def build_single_cell(num_users: int = 80, cell_radius: float = 500 / math.sqrt(3),
                      params: RadioParams | None = None, mcs_table: McsTable | None = None,
                      q: int = 256, num_subchannels: int = 4, axis_deg: float = 30.0) -> Scenario:
    """Centre site serving, 18 interferers, users on a sector's symmetry axis.

    ``cell_radius`` is the hexagon circumradius; the inter-site distance is
    sqrt(3) times it. With the default 30 degree axis the line runs towards
    a hexagon vertex. Users sit at the midpoints of ``num_users`` equal
    segments of [0, cell_radius].
    """
    if num_users < 1:
        raise ValueError("num_users must be >= 1")
    if cell_radius <= 0:
        raise ValueError("cell_radius must be positive")
    radio = replace(params or RadioParams(), inter_site_distance_m=math.sqrt(3) * cell_radius)
    stations = hex_sites(radio.inter_site_distance_m)
    dist = (np.arange(num_users) + 0.5) * cell_radius / num_users
    theta = math.radians(axis_deg)
    users = np.column_stack([dist * math.cos(theta), dist * math.sin(theta)])
    return Scenario("single_cell", stations, (0,), _station_powers(len(stations), radio), users,
                    radio, mcs_table or McsTable.default(), q, num_subchannels,
                    {"distance_m": dist})


SFN_SERVING = (0, 1, 3, 5)  # centre plus ring-1 sites at 0, 120 and 240 degrees


def build_sfn(grid_users: int = 1700, params: RadioParams | None = None,
              mcs_table: McsTable | None = None, q: int = 256, num_subchannels: int = 4,
              half_width: float | None = None) -> Scenario:
    """Four-site SFN surrounded by 15 interferers, users on a square grid.

    The grid has ceil(sqrt(grid_users)) points per side over
    [-half_width, half_width]^2 (default: one inter-site distance) and is
    truncated row-major to exactly ``grid_users`` points.
    """
    if grid_users < 1:
        raise ValueError("grid_users must be >= 1")
    radio = params or RadioParams()
    stations = hex_sites(radio.inter_site_distance_m)
    a = radio.inter_site_distance_m if half_width is None else float(half_width)
    side = math.isqrt(grid_users)
    if side * side < grid_users:
        side += 1
    axis = np.linspace(-a, a, side) if side > 1 else np.zeros(1)
    rows, cols = np.divmod(np.arange(grid_users), side)
    users = np.column_stack([axis[cols], axis[rows]])
    return Scenario("sfn", stations, SFN_SERVING, _station_powers(len(stations), radio), users,
                    radio, mcs_table or McsTable.default(), q, num_subchannels,
                    {"grid_row": rows, "grid_col": cols})


def received_power_dbm(scenario: Scenario) -> np.ndarray:
    """(U, S) received power from every station, dBm."""
    r = scenario.radio
    d = np.linalg.norm(scenario.users[:, None, :] - scenario.stations[None, :, :], axis=2)
    d = np.maximum(d, MIN_DISTANCE_M)
    loss = r.pathloss_a_db + r.pathloss_b_db * np.log10(d / 1000.0)
    rx = scenario.tx_power_dbm[None, :] - loss
    if r.shadowing_std_db > 0:
        rng = np.random.default_rng(r.shadowing_seed)
        rx = rx + rng.normal(0.0, r.shadowing_std_db, size=rx.shape)
    return rx


def sinr_all(scenario: Scenario) -> np.ndarray:
    """Linear SINR of every user; serving powers add, interferer powers add to noise."""
    rx = 10.0 ** (received_power_dbm(scenario) / 10.0)
    serving = list(scenario.serving)
    interfering = list(scenario.interfering)
    useful = rx[:, serving].sum(axis=1)
    noise = 10.0 ** (scenario.radio.noise_power_dbm / 10.0) if np.isfinite(scenario.radio.noise_power_dbm) else 0.0
    interference = rx[:, interfering].sum(axis=1) if interfering else 0.0
    return useful / (noise + interference)


def sinr(scenario: Scenario, u: int) -> float:
    if not 0 <= u < scenario.num_users:
        raise IndexError(f"user index {u} outside 0..{scenario.num_users - 1}")
    return float(sinr_all(scenario)[u])


def erasure_from_sinr(sinr_db: np.ndarray, table: McsTable) -> np.ndarray:
    """p[u][m] = 1 - logistic((SINR_dB - threshold_m) / width_m), forced monotone in m."""
    s = np.asarray(sinr_db, dtype=float)[:, None]
    p = expit(-(s - table.thresholds_db[None, :]) / table.widths_db[None, :])
    p = np.clip(p, 0.0, 1.0)
    # no-op for equal widths; keeps rows monotone when widths differ
    return np.maximum.accumulate(p, axis=1)


def erasure_profile(scenario: Scenario) -> ErasureProfile:
    sinr_db = 10.0 * np.log10(sinr_all(scenario))
    return ErasureProfile(erasure_from_sinr(sinr_db, scenario.mcs_table))
