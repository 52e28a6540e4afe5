//! The machine model: alphabet, state set and quantum transition table.
//!
//! A machine is the triple of a finite alphabet with a designated blank
//! symbol `#`, an ordered state set with a start and a final state, and a
//! table of transition rules `(state, read) -> (write, next state,
//! direction) : amplitude`. The final state has no outgoing rules; a run
//! terminates when all amplitude sits on final-state configurations.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::{norm_sqr_f64, norm_tolerance, Real};
use crate::tol;

/// The blank tape symbol.
pub const BLANK: &str = "#";

/// Head movement of a transition rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn letter(self) -> char {
        match self {
            Direction::Left => 'L',
            Direction::Right => 'R',
        }
    }

    pub fn arrow(self) -> char {
        match self {
            Direction::Left => '←',
            Direction::Right => '→',
        }
    }

    pub fn from_letter(c: char) -> Option<Direction> {
        match c {
            'L' => Some(Direction::Left),
            'R' => Some(Direction::Right),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// One transition rule, with all fields resolved to names.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRule<T: Real> {
    pub from: String,
    pub read: String,
    pub write: String,
    pub to: String,
    pub dir: Direction,
    pub amp: Complex<T>,
    /// Symbolic source spelling of the amplitude, kept for re-emission.
    pub form: Option<String>,
}

impl<T: Real> TransitionRule<T> {
    pub fn new(
        from: impl Into<String>,
        read: impl Into<String>,
        write: impl Into<String>,
        to: impl Into<String>,
        dir: Direction,
        amp: Complex<T>,
    ) -> Self {
        TransitionRule {
            from: from.into(),
            read: read.into(),
            write: write.into(),
            to: to.into(),
            dir,
            amp,
            form: None,
        }
    }
}

impl<T: Real> fmt::Display for TransitionRule<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{} -> {},{},{} : {}",
            self.from,
            self.read,
            self.write,
            self.to,
            self.dir,
            crate::matrix::format_complex(self.amp)
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MachineError {
    #[error("invalid symbol {0:?}: symbols are non-empty and contain no whitespace, ',' or '/'")]
    InvalidSymbol(String),
    #[error(
        "invalid state id {0:?}: state ids are non-empty and contain no whitespace, ',' or '/'"
    )]
    InvalidState(String),
    #[error("alphabet does not contain the blank symbol '#'")]
    MissingBlank,
    #[error("duplicate symbol {0:?} in alphabet")]
    DuplicateSymbol(String),
    #[error("duplicate state id {0:?}")]
    DuplicateState(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("start and final state must differ")]
    StartEqualsFinal,
    #[error("rule leaves the final state: {0}")]
    RuleFromFinal(String),
    #[error("non-finite amplitude on rule {0}")]
    NonFiniteAmplitude(String),
    #[error("amplitude magnitude exceeds 1 on rule {0}")]
    AmplitudeTooLarge(String),
    #[error("duplicate rule for ({from},{read}) -> ({write},{to})")]
    DuplicateRule {
        from: String,
        read: String,
        write: String,
        to: String,
    },
    #[error("rules for ({state},{read}) have squared amplitudes summing to {norm2}, expected 1")]
    RowNotNormalized {
        state: String,
        read: String,
        norm2: f64,
    },
}

/// Rule target stored against a `(state, read)` key.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct StoredRule<T: Real> {
    pub write: usize,
    pub to: usize,
    pub dir: Direction,
    pub amp: Complex<T>,
    pub form: Option<String>,
}

/// A quantum Turing machine table.
///
/// Immutable after construction; checkers and the simulator share it
/// read-only. Construction validates the structural invariants: the blank
/// symbol is present, start differs from final, the final state has no
/// outgoing rules, every referenced state and symbol exists, and each
/// `(state, read)` rule group has squared amplitudes summing to one.
#[derive(Debug, Clone)]
pub struct Machine<T: Real> {
    name: String,
    alphabet: Vec<String>,
    states: Vec<String>,
    start: usize,
    final_: usize,
    rules: BTreeMap<(usize, usize), Vec<StoredRule<T>>>,
    sym_ix: HashMap<String, usize>,
    state_ix: HashMap<String, usize>,
}

impl<T: Real> PartialEq for Machine<T> {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.alphabet == other.alphabet
            && self.states == other.states
            && self.start == other.start
            && self.final_ == other.final_
            && self.rules == other.rules
    }
}

fn valid_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == ',' || c == '/')
}

impl<T: Real> Machine<T> {
    pub fn new(
        name: impl Into<String>,
        alphabet: Vec<String>,
        states: Vec<String>,
        start: &str,
        final_state: &str,
        rules: Vec<TransitionRule<T>>,
    ) -> Result<Self, MachineError> {
        let name = name.into();
        let mut sym_ix = HashMap::new();
        for (i, s) in alphabet.iter().enumerate() {
            if !valid_token(s) {
                return Err(MachineError::InvalidSymbol(s.clone()));
            }
            if sym_ix.insert(s.clone(), i).is_some() {
                return Err(MachineError::DuplicateSymbol(s.clone()));
            }
        }
        if !sym_ix.contains_key(BLANK) {
            return Err(MachineError::MissingBlank);
        }
        let mut state_ix = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            if !valid_token(s) {
                return Err(MachineError::InvalidState(s.clone()));
            }
            if state_ix.insert(s.clone(), i).is_some() {
                return Err(MachineError::DuplicateState(s.clone()));
            }
        }
        let start_ix = *state_ix
            .get(start)
            .ok_or_else(|| MachineError::UnknownState(start.to_string()))?;
        let final_ix = *state_ix
            .get(final_state)
            .ok_or_else(|| MachineError::UnknownState(final_state.to_string()))?;
        if start_ix == final_ix {
            return Err(MachineError::StartEqualsFinal);
        }

        let mut table: BTreeMap<(usize, usize), Vec<StoredRule<T>>> = BTreeMap::new();
        let mut seen: HashSet<(usize, usize, usize, usize)> = HashSet::new();
        for r in rules {
            if !r.amp.re.is_finite() || !r.amp.im.is_finite() {
                return Err(MachineError::NonFiniteAmplitude(r.to_string()));
            }
            // Amplitudes below the pruning threshold are numerical noise
            // (e.g. cos of a right angle); they are not stored.
            if norm_sqr_f64(&r.amp) < tol::PRUNE_EPS * tol::PRUNE_EPS {
                continue;
            }
            if norm_sqr_f64(&r.amp) > 1.0 + tol::ROW_NORM {
                return Err(MachineError::AmplitudeTooLarge(r.to_string()));
            }
            let from = *state_ix
                .get(&r.from)
                .ok_or_else(|| MachineError::UnknownState(r.from.clone()))?;
            if from == final_ix {
                return Err(MachineError::RuleFromFinal(r.to_string()));
            }
            let to = *state_ix
                .get(&r.to)
                .ok_or_else(|| MachineError::UnknownState(r.to.clone()))?;
            let read = *sym_ix
                .get(&r.read)
                .ok_or_else(|| MachineError::UnknownSymbol(r.read.clone()))?;
            let write = *sym_ix
                .get(&r.write)
                .ok_or_else(|| MachineError::UnknownSymbol(r.write.clone()))?;
            if !seen.insert((from, read, write, to)) {
                return Err(MachineError::DuplicateRule {
                    from: r.from,
                    read: r.read,
                    write: r.write,
                    to: r.to,
                });
            }
            table.entry((from, read)).or_default().push(StoredRule {
                write,
                to,
                dir: r.dir,
                amp: r.amp,
                form: r.form,
            });
        }

        for ((p, s), group) in &table {
            let norm2: f64 = group.iter().map(|r| norm_sqr_f64(&r.amp)).sum();
            if (norm2 - 1.0).abs() > norm_tolerance::<T>() {
                return Err(MachineError::RowNotNormalized {
                    state: states[*p].clone(),
                    read: alphabet[*s].clone(),
                    norm2,
                });
            }
        }

        Ok(Machine {
            name,
            alphabet,
            states,
            start: start_ix,
            final_: final_ix,
            rules: table,
            sym_ix,
            state_ix,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn final_state(&self) -> usize {
        self.final_
    }

    pub fn blank(&self) -> usize {
        self.sym_ix[BLANK]
    }

    pub fn state_name(&self, ix: usize) -> &str {
        &self.states[ix]
    }

    pub fn symbol(&self, ix: usize) -> &str {
        &self.alphabet[ix]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_ix.get(name).copied()
    }

    pub fn symbol_index(&self, sym: &str) -> Option<usize> {
        self.sym_ix.get(sym).copied()
    }

    pub(crate) fn rules_at(&self, state: usize, read: usize) -> Option<&[StoredRule<T>]> {
        self.rules.get(&(state, read)).map(|v| v.as_slice())
    }

    pub(crate) fn rule_groups(
        &self,
    ) -> impl Iterator<Item = (&(usize, usize), &Vec<StoredRule<T>>)> {
        self.rules.iter()
    }

    pub fn rule_count(&self) -> usize {
        self.rules.values().map(|v| v.len()).sum()
    }

    /// All rules in canonical order: grouped by (state, read) in declaration
    /// order, targets in insertion order.
    pub fn rules(&self) -> Vec<TransitionRule<T>> {
        let mut out = Vec::with_capacity(self.rule_count());
        for ((p, s), group) in &self.rules {
            for r in group {
                out.push(TransitionRule {
                    from: self.states[*p].clone(),
                    read: self.alphabet[*s].clone(),
                    write: self.alphabet[r.write].clone(),
                    to: self.states[r.to].clone(),
                    dir: r.dir,
                    amp: r.amp,
                    form: r.form.clone(),
                });
            }
        }
        out
    }

    /// Parse a cell-content string into symbol indices. Accepts a
    /// comma-separated list of symbols, or plain concatenation when every
    /// alphabet token is a single character.
    pub fn parse_cells(&self, s: &str) -> Result<Vec<usize>, MachineError> {
        if s.is_empty() {
            return Ok(Vec::new());
        }
        if s.contains(',') {
            s.split(',')
                .map(|tok| {
                    self.symbol_index(tok.trim())
                        .ok_or_else(|| MachineError::UnknownSymbol(tok.trim().to_string()))
                })
                .collect()
        } else {
            s.chars()
                .map(|c| {
                    self.symbol_index(&c.to_string())
                        .ok_or_else(|| MachineError::UnknownSymbol(c.to_string()))
                })
                .collect()
        }
    }

    /// Render symbol indices as a string (concatenated for single-character
    /// alphabets, comma-joined otherwise).
    pub fn cells_string(&self, cells: &[usize]) -> String {
        if self.alphabet.iter().all(|a| a.chars().count() == 1) {
            cells.iter().map(|&c| self.alphabet[c].as_str()).collect()
        } else {
            cells
                .iter()
                .map(|&c| self.alphabet[c].as_str())
                .collect::<Vec<_>>()
                .join(",")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    fn rule(
        from: &str,
        read: &str,
        write: &str,
        to: &str,
        dir: Direction,
        amp: f64,
    ) -> TransitionRule<f64> {
        TransitionRule::new(from, read, write, to, dir, cplx(amp, 0.0))
    }

    fn alpha() -> Vec<String> {
        vec!["#".into(), "0".into(), "1".into()]
    }

    #[test]
    fn builds_single_rule_machine() {
        let m = Machine::new(
            "halt",
            alpha(),
            vec!["q0".into(), "qf".into()],
            "q0",
            "qf",
            vec![rule("q0", "#", "#", "qf", Direction::Right, 1.0)],
        )
        .unwrap();
        assert_eq!(m.rule_count(), 1);
        assert_eq!(m.state_name(m.start()), "q0");
    }

    #[test]
    fn rejects_start_equals_final() {
        let err =
            Machine::<f64>::new("m", alpha(), vec!["q0".into()], "q0", "q0", vec![]).unwrap_err();
        assert_eq!(err, MachineError::StartEqualsFinal);
    }

    #[test]
    fn rejects_rule_from_final() {
        let err = Machine::new(
            "m",
            alpha(),
            vec!["q0".into(), "qf".into()],
            "q0",
            "qf",
            vec![rule("qf", "#", "#", "q0", Direction::Right, 1.0)],
        )
        .unwrap_err();
        assert!(matches!(err, MachineError::RuleFromFinal(_)));
    }

    #[test]
    fn rejects_unnormalized_row() {
        let err = Machine::new(
            "m",
            alpha(),
            vec!["q0".into(), "a".into(), "qf".into()],
            "q0",
            "qf",
            vec![
                rule("q0", "#", "#", "a", Direction::Right, 0.5),
                rule("q0", "#", "0", "a", Direction::Right, 0.5),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, MachineError::RowNotNormalized { .. }));
    }

    #[test]
    fn rejects_duplicate_rule_ignoring_direction() {
        let err = Machine::new(
            "m",
            alpha(),
            vec!["q0".into(), "a".into(), "qf".into()],
            "q0",
            "qf",
            vec![
                rule("q0", "#", "#", "a", Direction::Right, 0.5),
                rule("q0", "#", "#", "a", Direction::Left, 0.5),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, MachineError::DuplicateRule { .. }));
    }

    #[test]
    fn rejects_bad_symbol() {
        let err = Machine::<f64>::new(
            "m",
            vec!["#".into(), "0,1".into()],
            vec!["q0".into(), "qf".into()],
            "q0",
            "qf",
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, MachineError::InvalidSymbol(_)));
    }

    #[test]
    fn drops_noise_amplitudes() {
        // A right-angle cosine leaves ~6e-17 entries; they must not be stored.
        let m = Machine::new(
            "m",
            alpha(),
            vec!["q0".into(), "a".into(), "qf".into()],
            "q0",
            "qf",
            vec![
                rule("q0", "#", "#", "a", Direction::Right, 6.1e-17),
                rule("q0", "#", "0", "a", Direction::Right, 1.0),
            ],
        )
        .unwrap();
        assert_eq!(m.rule_count(), 1);
    }

    #[test]
    fn parse_cells_both_forms() {
        let m = Machine::new(
            "m",
            alpha(),
            vec!["q0".into(), "qf".into()],
            "q0",
            "qf",
            vec![rule("q0", "#", "#", "qf", Direction::Right, 1.0)],
        )
        .unwrap();
        assert_eq!(m.parse_cells("01").unwrap(), m.parse_cells("0,1").unwrap());
        assert_eq!(m.cells_string(&m.parse_cells("#01").unwrap()), "#01");
    }
}
