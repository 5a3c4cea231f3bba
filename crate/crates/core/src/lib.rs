//! Rank-one density for finite-band biorthogonal systems, decided through
//! flows on the weighted bipartite graph of the system.
//!
//! Numeric routines are generic over [`Scalar`]; the aliases below fix the
//! field for the common cases.

pub mod cycles;
pub mod decide;
pub mod distance;
pub mod error;
pub mod flow;
pub mod formats;
pub mod graph;
pub mod layers;
pub mod operator;
pub mod oracle;
pub mod ray;
pub mod scalar;
pub mod system;
pub mod weights;

pub use cycles::{eliminate_positive_cycles, find_positive_cycle, has_positive_cycle, EliminationReport};
pub use decide::{
    cross_validate, decide, frontier_distance_profile, CrossValidation, DecideOptions, DivergenceCertificate, Profile,
    SystemFamily, Verdict, VerdictKind,
};
pub use distance::{bfs_layers, dijkstra_with, shortest_distances, Distances};
pub use error::{Error, Result};
pub use flow::{flow_stats, is_preserving, orient, FlowStats, OrientedArc, OrientedFlow, PseudoFlow};
pub use formats::{ExplicitSpec, GraphSpec, LarsonWogenSpec, NetworkDump, SpecError, SpecFile};
pub use graph::{
    build_bipartite, build_network, BNetwork, BipartiteGraph, LazyBipartite, Neighbors, Network, RootedNetwork,
    VertexId,
};
pub use layers::{
    build_layer_sequence, build_layers, KeyInequality, LayeredState, PropertyReport, ReferenceFlow,
};
pub use operator::{
    annihilation_check, flow_to_operator, operator_to_flow, AnnihilationReport, OperatorDump, OperatorMatrix,
};
pub use ray::{extract_ray, flow_from_ray, RayWitness, WitnessDump};
pub use scalar::Scalar;
pub use system::{
    biorthogonality_check, make_larson_wogen, random_b_class, validate_system, BandSystem, BiorthogonalityReport,
    LarsonWogenRows, Matrix, RandomSystemConfig, RowSource, Side, ValidationReport, Violation,
};
pub use weights::{LengthSeries, WeightSequenceSpec, WeightTail};

/// Exact rationals.
pub type Rational = num_rational::BigRational;

pub type BandSystemF64 = BandSystem<f64>;
pub type BandSystemQ = BandSystem<Rational>;
pub type PseudoFlowF64 = PseudoFlow<f64>;
pub type PseudoFlowQ = PseudoFlow<Rational>;
