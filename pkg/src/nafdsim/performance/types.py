"""Duplex/power containers and the SE report."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from nafdsim.errors import ContractError

STRUCTURES = ("NAFD", "FD", "HD")

DL_TERMS = ("desired", "self", "inter_ue", "ul_to_dl", "est_error", "noise")
UL_TERMS = ("desired", "self", "inter_ue", "noise", "est_error", "phi_iap", "phi_si")
DESIRED_TERMS = ("desired",)


@dataclass(frozen=True)
class DuplexAssignment:
    """Binary AP mode vectors.

    ``a[m] = 1``: AP m transmits DL; ``b[m] = 1``: AP m receives UL.
    NAFD with ``flexible=True`` requires a + b = 1 (every AP half-duplex in one
    direction); ``flexible=False`` admits hybrid-duplex NAFD where some APs do
    both. FD and HD require a = b = 1; HD splits the frame into a DL share
    ``hd_split`` and an UL share ``1 - hd_split``.
    """

    a: np.ndarray
    b: np.ndarray
    structure: str = "NAFD"
    hd_split: float = 0.5
    flexible: bool = True

    def __post_init__(self):
        a = np.asarray(self.a).astype(int).ravel()
        b = np.asarray(self.b).astype(int).ravel()
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        s = self.structure.upper()
        object.__setattr__(self, "structure", s)
        if s not in STRUCTURES:
            raise ContractError("structure", f"unknown structure {self.structure!r}")
        if a.shape != b.shape:
            raise ContractError("b", "a and b must have the same length")
        if not (np.isin(a, (0, 1)).all() and np.isin(b, (0, 1)).all()):
            raise ContractError("a", "mode indicators must be binary")
        if s == "NAFD" and self.flexible and np.any(a + b != 1):
            raise ContractError("a", "flexible NAFD requires a_m + b_m = 1 for every AP")
        if s in ("FD", "HD") and not (np.all(a == 1) and np.all(b == 1)):
            raise ContractError("a", f"{s} requires a = b = 1")
        if not 0.0 <= self.hd_split <= 1.0:
            raise ContractError("hd_split", "must lie in [0, 1]")

    @classmethod
    def nafd(cls, a) -> "DuplexAssignment":
        a = np.asarray(a).astype(int)
        return cls(a, 1 - a, "NAFD")

    @classmethod
    def hybrid(cls, a, b) -> "DuplexAssignment":
        return cls(a, b, "NAFD", flexible=False)

    @classmethod
    def fd(cls, m: int) -> "DuplexAssignment":
        return cls(np.ones(m, int), np.ones(m, int), "FD")

    @classmethod
    def hd(cls, m: int, hd_split: float = 0.5) -> "DuplexAssignment":
        return cls(np.ones(m, int), np.ones(m, int), "HD", hd_split=hd_split)

    @property
    def n_aps(self) -> int:
        return self.a.size

    @property
    def prelog_dl(self) -> float:
        return self.hd_split if self.structure == "HD" else 1.0

    @property
    def prelog_ul(self) -> float:
        return 1.0 - self.hd_split if self.structure == "HD" else 1.0

    @property
    def cross_link(self) -> bool:
        """Whether DL and UL share the same time-frequency resource."""
        return self.structure != "HD"


@dataclass(frozen=True)
class PowerAllocation:
    """DL coefficients ``theta`` (M x K_d), UL coefficients ``varsigma`` (K_u),
    CPU decoding weights ``alpha`` (M x K_u) and normalized SNRs.

    ``theta`` is only required to be non-negative; its scale is fixed by the
    per-AP budget sum_k theta_mk^2 E||v_mk||^2 <= 1.
    """

    theta: np.ndarray
    varsigma: np.ndarray
    alpha: np.ndarray
    rho_d: float
    rho_u: float

    def __post_init__(self):
        for name in ("theta", "varsigma", "alpha"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.theta.ndim != 2:
            raise ContractError("theta", "must be an M x K_d matrix")
        if self.alpha.ndim != 2 or self.alpha.shape[1] != self.varsigma.size:
            raise ContractError("alpha", "must be an M x K_u matrix")
        if self.alpha.shape[0] != self.theta.shape[0]:
            raise ContractError("alpha", "row count must match theta")
        if not np.all(np.isfinite(self.theta)) or np.any(self.theta < 0):
            raise ContractError("theta", "entries must be finite and non-negative")
        if np.any(self.varsigma < 0) or np.any(self.varsigma > 1):
            raise ContractError("varsigma", "entries must lie in [0, 1]")
        if np.any(np.abs(self.alpha) > 1 + 1e-12):
            raise ContractError("alpha", "|alpha| must not exceed 1")
        if not (self.rho_d > 0 and self.rho_u > 0):
            raise ContractError("rho_d", "normalized SNRs must be positive")


@dataclass
class SEReport:
    """Per-UE SE with the additive term breakdown.

    DL: SINR = desired^2 / (self + inter_ue + ul_to_dl + noise).
    UL: SINR = desired^2 / (self + inter_ue + noise + phi_iap + phi_si).
    ``est_error`` is the part of self + inter_ue caused by channel
    estimation error; it is informational and not added again.
    """

    structure: str
    dl_se: np.ndarray
    ul_se: np.ndarray
    dl_terms: dict[str, np.ndarray]
    ul_terms: dict[str, np.ndarray]
    prelog_dl: float
    prelog_ul: float
    meta: dict = field(default_factory=dict)

    @property
    def sum_se(self) -> float:
        return float(np.sum(self.dl_se) + np.sum(self.ul_se))

    @property
    def omega(self) -> np.ndarray:
        t = self.dl_terms
        return t["self"] + t["inter_ue"] + t["ul_to_dl"]

    @property
    def lam(self) -> np.ndarray:
        t = self.ul_terms
        return t["self"] + t["inter_ue"] + t["noise"]

    @property
    def phi(self) -> np.ndarray:
        return self.ul_terms["phi_iap"] + self.ul_terms["phi_si"]

    def to_csv(self) -> str:
        """One row per UE: structure, ue_kind, ue_index, se, desired_power, terms..., prelog."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        terms = sorted((set(DL_TERMS) | set(UL_TERMS)) - {"desired"})
        writer.writerow(["structure", "ue_kind", "ue_index", "se", "desired_power", *terms, "prelog"])
        for kind, se, table, prelog in (("dl", self.dl_se, self.dl_terms, self.prelog_dl),
                                        ("ul", self.ul_se, self.ul_terms, self.prelog_ul)):
            for i in range(se.size):
                row = [self.structure, kind, i, repr(float(se[i])),
                       repr(float(table["desired"][i]) ** 2)]
                row += [repr(float(table[t][i])) if t in table else "" for t in terms]
                row.append(repr(prelog))
                writer.writerow(row)
        return buf.getvalue()
