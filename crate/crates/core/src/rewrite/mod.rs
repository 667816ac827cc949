//! Noncommutative derivative-word rewriting: the commutator shift, the
//! expansion of differentiated data terms, profile transitions with a
//! termination measure, and an exact soundness oracle.

pub mod engine;
pub mod exact;
pub mod expand;
pub mod obstruction;
pub mod word;

pub use engine::{
    classify_profiles, classify_successor, reduce_to_base, sweep, t1_successors, t2_step, Case, ReductionTrace, Rule,
    Successor, SweepReport, T2Outcome, TraceStep,
};
pub use exact::{random_identity_case, verify_rewrite_identity, IdentityCase, IdentityReport};
pub use expand::{expand_f, expand_fi, Family, Slot, StructuralTerm, SymbolicTerm, Target, TermKind};
pub use obstruction::{naive_order_obstruction, ObstructionReport};
pub use word::{shift_commutator, shift_leftmost, DerivativeWord, LayerProfile, Letter, ShiftOutcome};

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("no shiftable anonymous letter at position {at} of {word}")]
    NoShiftableLetter { word: String, at: usize },
    #[error("ClassificationFailure: {rule} term {term} maps {input} to {output}, which meets no transition case")]
    ClassificationFailure { input: LayerProfile, output: LayerProfile, term: String, rule: String },
    #[error("DepthExceeded: depth {depth} exceeds bound {bound}")]
    DepthExceeded { depth: usize, bound: usize },
    #[error("measure does not decrease: {rule} maps {input} to {output}")]
    MeasureIncrease { input: LayerProfile, output: LayerProfile, rule: String },
    #[error("profile {0} is not populated only in its lowest and top layers")]
    NotT2Shape(LayerProfile),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
}
