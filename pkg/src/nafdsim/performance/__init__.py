from nafdsim.performance.closed_form import (
    dl_se_closed_form,
    dl_terms,
    evaluate_se,
    ul_se_closed_form,
    ul_terms,
)
from nafdsim.performance.montecarlo import mc_estimate_terms
from nafdsim.performance.power import dl_utilization, expected_gains, expected_norms, fractional_theta
from nafdsim.performance.smallcell import (
    SmallCellAssociation,
    associate,
    smallcell_grouping,
    smallcell_power,
    smallcell_se,
)
from nafdsim.performance.types import (
    DL_TERMS,
    STRUCTURES,
    UL_TERMS,
    DuplexAssignment,
    PowerAllocation,
    SEReport,
)

__all__ = [
    "DL_TERMS",
    "STRUCTURES",
    "UL_TERMS",
    "DuplexAssignment",
    "PowerAllocation",
    "SEReport",
    "SmallCellAssociation",
    "associate",
    "dl_se_closed_form",
    "dl_terms",
    "dl_utilization",
    "evaluate_se",
    "expected_gains",
    "expected_norms",
    "fractional_theta",
    "mc_estimate_terms",
    "smallcell_grouping",
    "smallcell_power",
    "smallcell_se",
    "ul_se_closed_form",
    "ul_terms",
]
