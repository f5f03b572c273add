//! Parameterized multipartite entanglement measures for dense n-qudit states:
//! block-averaged concurrence families over k-partitions, their genuine
//! multipartite specializations, certified negativity- and realignment-based
//! lower bounds, matrix-element separability criteria with effective
//! separability degrees, and comparison measures (concurrence fill, geometric
//! mean of bipartite concurrences).

pub mod bounds;
pub mod compare;
pub mod detection;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod partitions;
pub mod qstate;

pub use bounds::{
    alphan_bound, entanglement_verdict, global_negativity, q_bipartite_bound, qn_bound_improved,
    qn_bound_qubit, qn_bound_qudit, wei_bipartite_bound, BoundReport, BoundRequest,
    VerdictSummary,
};
pub use compare::{concurrence_fill, example4_table, gqc, ComparisonRow};
pub use detection::{
    criterion_terms, detect, detection_scan, ghz_criterion, k_eff, w_criterion, CriterionTerms,
    GridAxis, ScanRow, SeparabilityVerdict,
};
pub use error::{Error, Result};
pub use measures::{
    alpha_concurrence, alpha_gme_pure, alpha_k_me_pure, pi_lower_bound, q_concurrence,
    q_gme_pure, q_k_me_pure, roof_estimate, trace_power, Family, MeasureResult, MeasureSpec,
    RoofEstimate, RoofOptions, UnitarySearch,
};
pub use partitions::{bipartitions, k_partitions, stirling2, Partition};
pub use qstate::{
    apply_local_unitaries, partial_trace, partial_transpose, permute_sites, pi_part, realign,
    state_factory, to_density, DensityMatrix, LocalUnitarySet, PureState, SiteDims, State,
    StateFamily,
};
