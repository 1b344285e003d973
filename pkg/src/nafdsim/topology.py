"""Wrap-around network geometry: AP/UE placement on a torus square."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from nafdsim.errors import InvalidInputError, PlacementError

# Per-AP candidate draws before a sequential placement pass is abandoned.
_ATTEMPTS_PER_AP = 1000
MAX_RESTARTS = 10_000


def wrap_distance(p, q, side: float) -> float:
    """Torus distance between two points of a square with edge ``side``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q)) and math.isfinite(side)):
        raise InvalidInputError("wrap_distance: non-finite input")
    if side <= 0:
        raise InvalidInputError(f"wrap_distance: side must be positive, got {side}")
    return float(pairwise_wrap_distance(p[None, :], q[None, :], side)[0, 0])


def pairwise_wrap_distance(a: np.ndarray, b: np.ndarray, side: float) -> np.ndarray:
    """Matrix of torus distances, shape ``(len(a), len(b))``."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    delta = np.abs(a[:, None, :] - b[None, :, :])
    delta = np.minimum(delta, side - delta)
    return np.sqrt(np.sum(delta**2, axis=-1))


@dataclass(frozen=True)
class NetworkTopology:
    side_length: float
    ap_positions: np.ndarray
    dl_ue_positions: np.ndarray
    ul_ue_positions: np.ndarray

    def __post_init__(self):
        for name in ("ap_positions", "dl_ue_positions", "ul_ue_positions"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1, 2)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.n_aps < 1:
            raise InvalidInputError("topology needs at least one AP")
        if self.n_dl + self.n_ul < 1:
            raise InvalidInputError("topology needs at least one UE")
        for name in ("ap_positions", "dl_ue_positions", "ul_ue_positions"):
            arr = getattr(self, name)
            if np.any(arr < 0) or np.any(arr >= self.side_length):
                raise InvalidInputError(f"{name}: coordinates outside [0, side)")

    @property
    def n_aps(self) -> int:
        return self.ap_positions.shape[0]

    @property
    def n_dl(self) -> int:
        return self.dl_ue_positions.shape[0]

    @property
    def n_ul(self) -> int:
        return self.ul_ue_positions.shape[0]

    @property
    def ue_positions(self) -> np.ndarray:
        """DL UEs followed by UL UEs."""
        return np.vstack([self.dl_ue_positions, self.ul_ue_positions])

    def ap_ap_distances(self) -> np.ndarray:
        return pairwise_wrap_distance(self.ap_positions, self.ap_positions, self.side_length)

    def min_ap_distance(self) -> float:
        if self.n_aps < 2:
            return math.inf
        d = self.ap_ap_distances()
        return float(d[np.triu_indices(self.n_aps, 1)].min())

    def to_table(self) -> str:
        """Plain-text table, one node per row: ``kind index x y``."""
        buf = io.StringIO()
        buf.write(f"# side_length {float(self.side_length)!r}\n")
        buf.write("kind index x y\n")
        for kind, arr in (("ap", self.ap_positions), ("dl_ue", self.dl_ue_positions),
                          ("ul_ue", self.ul_ue_positions)):
            for i, (x, y) in enumerate(arr):
                buf.write(f"{kind} {i} {float(x)!r} {float(y)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_table(cls, text: str) -> "NetworkTopology":
        side = None
        rows = {"ap": [], "dl_ue": [], "ul_ue": []}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("# side_length"):
                side = float(line.split()[-1])
                continue
            if line.startswith("#") or line.startswith("kind"):
                continue
            kind, idx, x, y = line.split()
            if int(idx) != len(rows[kind]):
                raise InvalidInputError(f"topology table: {kind} rows out of order at index {idx}")
            rows[kind].append((float(x), float(y)))
        if side is None:
            raise InvalidInputError("topology table: missing side_length header")
        return cls(side, np.array(rows["ap"]).reshape(-1, 2), np.array(rows["dl_ue"]).reshape(-1, 2),
                   np.array(rows["ul_ue"]).reshape(-1, 2))


def _place_aps(m: int, side: float, min_dist: float, rng: np.random.Generator) -> np.ndarray | None:
    pts = np.empty((m, 2))
    for idx in range(m):
        for _ in range(_ATTEMPTS_PER_AP):
            cand = rng.uniform(0.0, side, size=2)
            if idx == 0 or pairwise_wrap_distance(cand, pts[:idx], side).min() >= min_dist:
                pts[idx] = cand
                break
        else:
            return None
    return pts


def generate_topology(m: int, k_d: int, k_u: int, side: float, min_ap_dist: float,
                      seed) -> NetworkTopology:
    """Random topology with APs at least ``min_ap_dist`` apart (torus metric).

    APs are placed one at a time by rejection sampling; a pass that cannot fit
    the next AP is restarted from scratch, up to ``MAX_RESTARTS`` times. UEs
    are i.i.d. uniform. ``seed`` is anything accepted by
    ``numpy.random.default_rng``.
    """
    if m < 1 or k_d < 0 or k_u < 0 or k_d + k_u < 1:
        raise InvalidInputError(f"invalid node counts m={m}, k_d={k_d}, k_u={k_u}")
    if side <= 0 or min_ap_dist < 0:
        raise InvalidInputError("side must be positive and min_ap_dist non-negative")
    # Hard packing bound: disjoint discs of radius d/2 around each AP.
    if m > 1 and m * math.pi * (min_ap_dist / 2) ** 2 > side**2:
        raise PlacementError(
            f"min AP distance {min_ap_dist} m cannot hold for {m} APs in a {side} m square")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_RESTARTS):
        aps = _place_aps(m, side, min_ap_dist, rng)
        if aps is not None:
            break
    else:
        raise PlacementError(
            f"could not place {m} APs with pairwise wrap distance >= {min_ap_dist} m "
            f"after {MAX_RESTARTS} restarts")
    dl = rng.uniform(0.0, side, size=(k_d, 2))
    ul = rng.uniform(0.0, side, size=(k_u, 2))
    return NetworkTopology(float(side), aps, dl, ul)
