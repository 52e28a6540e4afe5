//! Brute-force verification: extract the unitary a machine implements by
//! running it on every basis tape, and compare matrices up to global phase.
//!
//! Basis ordering: cell 1 is the most significant bit of the index.

use thiserror::Error;

use crate::machine::Machine;
use crate::matrix::CMatrix;
use crate::scalar::Real;
use crate::sim::{run, SimError, Tape};
use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("cell count {0} exceeds the dense extraction limit of 10")]
    CellCountTooLarge(usize),
    #[error("machine alphabet must contain '0' and '1'")]
    AlphabetNotBinary,
    #[error("step count varies across basis inputs: {t1} vs {t2}")]
    TVaries { t1: usize, t2: usize },
    #[error(
        "basis input {basis} halted with amplitude outside the 0/1 contents of cells 1..{cells}"
    )]
    ResidualSupport { basis: usize, cells: usize },
    #[error("basis input {basis} halted with the head at {head}, not at the start cell")]
    HaltedAwayFromStart { basis: usize, head: usize },
    #[error("extracted matrix is not unitary: ||U†U - I||max = {error}")]
    NonUnitaryResult { error: f64 },
    #[error("matrix dimensions differ: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Unitary extracted from exhaustive basis simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedUnitary<T: Real> {
    pub cells: usize,
    pub matrix: CMatrix<T>,
    pub steps: usize,
    pub head_trace: Option<Vec<usize>>,
}

/// Run the machine on each of the 2^n basis tapes over cells 1..n and read
/// the final tape amplitudes into matrix columns. Fails when the step count
/// varies, the head does not return to cell 0, any amplitude leaves the 0/1
/// contents of cells 1..n, or the resulting matrix is not unitary.
pub fn extract_unitary<T: Real>(
    m: &Machine<T>,
    n: usize,
    max_steps: usize,
) -> Result<ExtractedUnitary<T>, OracleError> {
    if n > 10 {
        return Err(OracleError::CellCountTooLarge(n));
    }
    let zero = m.symbol_index("0").ok_or(OracleError::AlphabetNotBinary)?;
    let one = m.symbol_index("1").ok_or(OracleError::AlphabetNotBinary)?;
    let blank = m.blank();
    let dim = 1usize << n;
    let mut matrix = CMatrix::zeros(dim);
    let mut steps: Option<usize> = None;
    let mut head_trace: Option<Vec<usize>> = None;

    for basis in 0..dim {
        let cells: Vec<usize> = (1..=n)
            .map(|cell| {
                if (basis >> (n - cell)) & 1 == 1 {
                    one
                } else {
                    zero
                }
            })
            .collect();
        let tape = Tape::from_cell1(&cells, blank);
        let (s, report) = run(m, &tape, max_steps)?;
        match steps {
            None => {
                steps = Some(report.steps);
                head_trace = report.head_trace.clone();
            }
            Some(t) if t != report.steps => {
                return Err(OracleError::TVaries {
                    t1: t,
                    t2: report.steps,
                });
            }
            _ => {}
        }
        for (cfg, amp) in s.terms() {
            if cfg.head != 0 {
                return Err(OracleError::HaltedAwayFromStart {
                    basis,
                    head: cfg.head,
                });
            }
            if cfg.tape.extent() > n + 1 {
                return Err(OracleError::ResidualSupport { basis, cells: n });
            }
            let mut index = 0usize;
            for cell in 1..=n {
                let sym = cfg.tape.read(cell, blank);
                let bit = if sym == zero {
                    0
                } else if sym == one {
                    1
                } else {
                    return Err(OracleError::ResidualSupport { basis, cells: n });
                };
                index = (index << 1) | bit;
            }
            matrix.add_to(index, basis, *amp);
        }
    }

    let err = matrix.unitarity_error().to_f64().unwrap_or(f64::NAN);
    if err > tol::ROW_NORM {
        return Err(OracleError::NonUnitaryResult { error: err });
    }
    Ok(ExtractedUnitary {
        cells: n,
        matrix,
        steps: steps.unwrap_or(0),
        head_trace,
    })
}

/// Max-entry distance between `a` and `e^{iφ}b`, with φ chosen from the
/// entry of largest combined magnitude. Returns the distance and the
/// aligning phase.
pub fn compare<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>, tol: T) -> Result<(T, T), OracleError> {
    if a.dim() != b.dim() {
        return Err(OracleError::DimensionMismatch {
            a: a.dim(),
            b: b.dim(),
        });
    }
    let n = a.dim();
    let mut best = T::zero();
    let mut at = (0usize, 0usize);
    for i in 0..n {
        for j in 0..n {
            let mag = a.get(i, j).norm() + b.get(i, j).norm();
            if mag > best {
                best = mag;
                at = (i, j);
            }
        }
    }
    if best < tol {
        return Ok((a.max_abs_diff(b), T::zero()));
    }
    let (i, j) = at;
    let phase = a.get(i, j).arg() - b.get(i, j).arg();
    let rotated = b.scale(num_complex::Complex::from_polar(T::one(), phase));
    Ok((a.max_abs_diff(&rotated), phase))
}
