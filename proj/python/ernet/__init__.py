from _ernet import (
    Architecture,
    DomainError,
    InfeasibleError,
    Mask,
    MaskedNetwork,
    SparsityPlan,
    StructuralError,
    __version__,
    compute_q,
    construct_slt,
    construct_wlt_conv,
    construct_wlt_fc,
    fc_chain,
    flow_flags,
    make_plan,
    probe_subset_sum,
    probe_lower_bound,
    random_target,
    repair_random_addition,
    sample_mask,
)

__all__ = [
    "Architecture",
    "DomainError",
    "InfeasibleError",
    "Mask",
    "MaskedNetwork",
    "SparsityPlan",
    "StructuralError",
    "__version__",
    "compute_q",
    "construct_slt",
    "construct_wlt_conv",
    "construct_wlt_fc",
    "fc_chain",
    "flow_flags",
    "make_plan",
    "probe_subset_sum",
    "probe_lower_bound",
    "random_target",
    "repair_random_addition",
    "sample_mask",
]
