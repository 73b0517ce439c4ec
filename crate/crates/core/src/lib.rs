//! Exact-arithmetic tools for weight functions on families of overlapping
//! finite sets whose per-set sums equal one.

pub mod extension;
pub mod extremality;
pub mod family;
pub mod graph;
pub mod instance;
pub mod linalg;
pub mod oracle;
pub mod random;
pub mod rational;

pub use extension::{
    approximate_by_extremes, check_a2_horizon, extend_tn, generator_by_name, tail_sums, verify_extension,
    Approximation, ExtensionError, ExtensionReport, ExtensionResult, FamilyGenerator, Truncation,
};
pub use extremality::{
    classify_extreme, witness_cycle_attachment, witness_kernel_direction, witness_tree_propagation,
    witness_two_coloring,
    AttachmentCase, ComponentKind, Construction, ExtremalityError, ExtremalityVerdict, Witness,
};
pub use family::{
    check_a1, check_a2, classify_membership, counting_identity, emptiness_test, normalize,
    require_in_s, saturate, A1Check, A2Report, Block, BlockIndex, CountingIdentity,
    ElementId, EmptinessVerdict, FamilyError, MembershipReport, MembershipViolation,
    NormalizationLog, Saturation, SetFamily, WeightFunction,
};
pub use graph::{
    bipartition, build_graph, decompose_cycle, enumerate_primitive_paths, find_primitive_cycles,
    find_simple_cycles, is_primitive, is_simple, shortest_primitive_path, unique_primitive_paths,
    AssociatedGraph, Bipartition, CycleDecomposition, GraphError, Parity, Path,
};
pub use oracle::{
    cross_validate, decompose, enumerate_vertices, is_feasible, is_vertex, sup_block_norm, support_width,
    CrossValidation, Decomposition, OracleError, OracleOptions, VertexSet,
};
pub use random::{gen_random, random_family, GeneratedInstance};
pub use rational::{format_rational, parse_rational, Rational};
