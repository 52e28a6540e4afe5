//! srqtm models, checks, simulates and compiles quantum Turing machines that
//! halt deterministically: machines whose computation branches all take the
//! same number of steps, whose head position is the same in every branch at
//! every step, and whose head finishes back on the start cell.
//!
//! The crate provides:
//!
//! * the machine model (alphabet, states, quantum transition table) with
//!   static checkers for the unidirectional and rotational table shapes and
//!   for local unitarity ([`machine`], [`checks`]);
//! * a sparse superposition simulator with synchronized-halt and
//!   deterministic-head detection, Born-rule readout and a seeded sampling
//!   mode that measures the internal state after every step ([`sim`]);
//! * parameterized machine builders for single-qubit gates, CNOT, Toffoli
//!   and generalized controlled gates, plus the dovetailing combinator that
//!   chains machines end to end ([`builders`]);
//! * a circuit representation with free-angle lowering onto the dyadic
//!   rotation set and a compiler from circuits to machines ([`circuit`]);
//! * near-trivial transformations: construction, decomposition of arbitrary
//!   unitaries into near-trivial factors, synthesis back to circuits, and a
//!   single machine that applies any encoded near-trivial transformation to
//!   a data register ([`neartrivial`]);
//! * the `.sqtm` machine text format and state transition diagrams with DOT
//!   export ([`qstd`]);
//! * brute-force unitary extraction by exhaustive basis simulation and
//!   matrix comparison up to global phase ([`oracle`]).
//!
//! All numerics are generic over the real scalar via [`scalar::Real`];
//! `f64` aliases are exported at the crate root.
//!
//! ```
//! use srqtm::{builders, oracle, sim};
//!
//! let m = builders::rotation_machine::<f64>(2, &builders::PrimitiveGate::H).unwrap();
//! let report = sim::check_sr(&m, 3, 100).unwrap();
//! assert!(report.ok());
//! let ex = oracle::extract_unitary(&m, 2, 100).unwrap();
//! assert_eq!(ex.steps, 4);
//! ```

pub mod builders;
pub mod checks;
pub mod circuit;
pub mod machine;
pub mod matrix;
pub mod neartrivial;
pub mod oracle;
pub mod qstd;
pub mod scalar;
pub mod sim;
pub mod tree;

/// Numerical thresholds shared across the crate.
pub mod tol {
    /// Orthonormality and norm-preservation tolerance.
    pub const ROW_NORM: f64 = 1e-9;
    /// Amplitudes below this magnitude are numerical noise and are pruned.
    pub const PRUNE_EPS: f64 = 1e-12;
    /// A step that moves the squared norm further than this is an error.
    pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
}

pub use machine::{Direction, Machine, MachineError, TransitionRule, BLANK};
pub use scalar::Real;

// Complex amplitudes appear throughout the public API.
pub use num_complex;

/// `f64` aliases for the main types.
pub type Machine64 = machine::Machine<f64>;
pub type TransitionRule64 = machine::TransitionRule<f64>;
pub type Superposition64 = sim::Superposition<f64>;
pub type Circuit64 = circuit::Circuit<f64>;
pub type Gate64 = circuit::Gate<f64>;
pub type PrimitiveGate64 = builders::PrimitiveGate<f64>;
pub type NearTrivial64 = neartrivial::NearTrivial<f64>;
pub type CMatrix64 = matrix::CMatrix<f64>;

#[cfg(test)]
pub(crate) mod fixtures {
    /// The five-state machine that applies a Hadamard to cell 2.
    pub const HADAMARD_SQTM: &str = r#"
# SR-QTM performing the Hadamard transformation on cell 2
machine: hadamard-cell2
alphabet: #,0,1
states: q0,q1,q2,q3,qf
start: q0
final: qf
rule: q0,# -> #,q1,R : 1
rule: q1,# -> #,q2,R : 1
rule: q1,0 -> 0,q2,R : 1
rule: q1,1 -> 1,q2,R : 1
rule: q2,0 -> 0,q3,L : 1/sqrt(2)
rule: q2,0 -> 1,q3,L : 1/sqrt(2)
rule: q2,1 -> 0,q3,L : 1/sqrt(2)
rule: q2,1 -> 1,q3,L : -1/sqrt(2)
rule: q3,0 -> 0,qf,L : 1
rule: q3,1 -> 1,qf,L : 1
"#;
}
