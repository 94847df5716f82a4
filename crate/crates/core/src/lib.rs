//! Rank-maximal matchings in bipartite preference graphs, maintained under
//! vertex arrivals.

pub mod decomp;
pub mod dynamic;
pub mod instance;
pub mod matching;
pub mod oracle;
pub mod popular;
pub mod rmm_static;
pub mod scenario;

pub use decomp::{
    process_arrival, propagate_vertex_types, rebuild_decompositions, DecompError, DecompRebuild, PhaseRegion, StreamStep,
};
pub use dynamic::{
    apply_arrival, batch_add_even_edges, check_after_arrival, classify_edge_addition, collect_update_paths,
    ArrivalOutcome, BatchOutcome, EdgeEffect, PathFamily, PathKind, Stage, UpdateError, UpdatePath, UpdateState,
};
pub use instance::{
    compare_signatures, parse_events, signature_of, ArrivalEvent, EdgeId, Instance, InstanceError, Matching,
    RankedEdge, Side, Signature, VertexId, Vid,
};
pub use matching::{
    augment_to_maximum, build_alternating_forest, eg_decompose, verify_decomposition, Adjacency,
    AlternatingForest, EgLabels, GraphView, Label, MatchingError, Work,
};
pub use popular::{
    parse_pref_events, popular_solve, popular_update, reduce_to_rmm, PopularError, PopularReduction, PopularState,
    PopularVerdict, PrefEvent, PreferenceInstance, SecondPost, UpdateRoute,
};
pub use rmm_static::{rmm_solve, rmm_solve_with, PhaseError, PhaseRecord, RmmState, SolveOptions, TypeChanges, NEVER};
pub use scenario::{generate_scenario, Scenario, ScenarioError, ScenarioParams};
