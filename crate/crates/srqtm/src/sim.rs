//! Sparse simulation of machine runs: superpositions of configurations
//! evolve under the transition table, with runtime detection of the
//! synchronized-halt and deterministic-head properties.

use std::collections::BTreeMap;

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::machine::Machine;
use crate::scalar::{norm_sqr_f64, norm_tolerance, Real};
use crate::tol;

/// One-way-infinite tape with an implicit blank beyond the stored extent.
/// Trailing blanks are trimmed so configurations compare by value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tape {
    cells: Vec<usize>,
}

impl Tape {
    pub fn new(cells: Vec<usize>, blank: usize) -> Tape {
        let mut t = Tape { cells };
        t.trim(blank);
        t
    }

    /// Tape with blank start cell and the given contents from cell 1 on.
    pub fn from_cell1(cells: &[usize], blank: usize) -> Tape {
        let mut v = Vec::with_capacity(cells.len() + 1);
        v.push(blank);
        v.extend_from_slice(cells);
        Tape::new(v, blank)
    }

    pub fn blank_tape() -> Tape {
        Tape { cells: Vec::new() }
    }

    fn trim(&mut self, blank: usize) {
        while self.cells.last() == Some(&blank) {
            self.cells.pop();
        }
    }

    pub fn read(&self, pos: usize, blank: usize) -> usize {
        self.cells.get(pos).copied().unwrap_or(blank)
    }

    pub fn write(&self, pos: usize, sym: usize, blank: usize) -> Tape {
        let mut cells = self.cells.clone();
        if pos >= cells.len() {
            if sym == blank {
                return self.clone();
            }
            cells.resize(pos + 1, blank);
        }
        cells[pos] = sym;
        Tape::new(cells, blank)
    }

    /// Number of stored cells (trailing blanks trimmed away).
    pub fn extent(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }
}

/// Basis configuration: internal state, tape contents, head position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub state: usize,
    pub tape: Tape,
    pub head: usize,
}

/// Sparse complex-amplitude map over configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct Superposition<T: Real> {
    terms: BTreeMap<Configuration, Complex<T>>,
}

impl<T: Real> Superposition<T> {
    pub fn single(cfg: Configuration) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(cfg, Complex::new(T::one(), T::zero()));
        Superposition { terms }
    }

    pub fn from_terms(pairs: impl IntoIterator<Item = (Configuration, Complex<T>)>) -> Self {
        let mut terms = BTreeMap::new();
        for (cfg, amp) in pairs {
            let e = terms
                .entry(cfg)
                .or_insert_with(|| Complex::new(T::zero(), T::zero()));
            *e = *e + amp;
        }
        let mut s = Superposition { terms };
        s.prune();
        s
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Configuration, &Complex<T>)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, cfg: &Configuration) -> Complex<T> {
        self.terms
            .get(cfg)
            .copied()
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn norm2(&self) -> f64 {
        self.terms.values().map(norm_sqr_f64).sum()
    }

    fn prune(&mut self) {
        let eps2 = tol::PRUNE_EPS * tol::PRUNE_EPS;
        self.terms.retain(|_, amp| norm_sqr_f64(amp) >= eps2);
    }

    fn scale(&mut self, factor: T) {
        for amp in self.terms.values_mut() {
            *amp = *amp * factor;
        }
    }
}

/// Distinct head positions across the terms of a superposition.
pub fn head_positions<T: Real>(s: &Superposition<T>) -> std::collections::BTreeSet<usize> {
    s.terms().map(|(cfg, _)| cfg.head).collect()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("no applicable rule for state {state:?} reading {read:?}")]
    NoApplicableRule { state: String, read: String },
    #[error("left move from cell 0 in state {state:?}")]
    NegativeHead { state: String },
    #[error("norm drifted to {norm2} after a step")]
    NormDrift { norm2: f64 },
    #[error("non-synchronized halt: some but not all branches reached the final state after step {step}")]
    NonSynchronizedHalt { step: usize },
    #[error("run exceeded {max} steps")]
    MaxStepsExceeded { max: usize },
    #[error("input superposition has squared norm {norm2}, expected 1")]
    NotNormalized { norm2: f64 },
    #[error("input tape does not start with the blank symbol in cell 0")]
    BlankStartViolation,
}

/// Per-step record for trace export.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: usize,
    pub heads: Vec<usize>,
    pub term_count: usize,
    pub norm2: f64,
    pub terms: Option<Vec<TraceTerm>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceTerm {
    pub state: String,
    pub tape: String,
    pub head: usize,
    pub re: f64,
    pub im: f64,
}

/// Summary of a completed (or aborted) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub steps: usize,
    pub halted: bool,
    pub head_deterministic: bool,
    /// One position per step including the initial one; present only when
    /// every intermediate superposition has a single head position.
    pub head_trace: Option<Vec<usize>>,
    pub norm_drift: f64,
}

/// Apply the transition table once to every term. Expects no term to sit in
/// the final state (it has no rules, so stepping one reports
/// [`SimError::NoApplicableRule`]); [`run_from`] handles halting.
pub fn step<T: Real>(m: &Machine<T>, s: &Superposition<T>) -> Result<Superposition<T>, SimError> {
    let blank = m.blank();
    let mut out: BTreeMap<Configuration, Complex<T>> = BTreeMap::new();
    for (cfg, amp) in s.terms() {
        let read = cfg.tape.read(cfg.head, blank);
        let rules = m
            .rules_at(cfg.state, read)
            .ok_or_else(|| SimError::NoApplicableRule {
                state: m.state_name(cfg.state).to_string(),
                read: m.symbol(read).to_string(),
            })?;
        for r in rules {
            let head = match r.dir {
                crate::machine::Direction::Right => cfg.head + 1,
                crate::machine::Direction::Left => {
                    if cfg.head == 0 {
                        return Err(SimError::NegativeHead {
                            state: m.state_name(cfg.state).to_string(),
                        });
                    }
                    cfg.head - 1
                }
            };
            let next = Configuration {
                state: r.to,
                tape: cfg.tape.write(cfg.head, r.write, blank),
                head,
            };
            let e = out
                .entry(next)
                .or_insert_with(|| Complex::new(T::zero(), T::zero()));
            *e = *e + *amp * r.amp;
        }
    }
    let mut result = Superposition { terms: out };
    result.prune();
    let drift = (result.norm2() - s.norm2()).abs();
    if drift > tol::NORM_DRIFT_LIMIT {
        return Err(SimError::NormDrift {
            norm2: result.norm2(),
        });
    }
    Ok(result)
}

fn initial<T: Real>(m: &Machine<T>, input: &Tape) -> Result<Superposition<T>, SimError> {
    if input.read(0, m.blank()) != m.blank() {
        return Err(SimError::BlankStartViolation);
    }
    Ok(Superposition::single(Configuration {
        state: m.start(),
        tape: input.clone(),
        head: 0,
    }))
}

/// Run from a single input tape until all amplitude reaches the final state.
pub fn run<T: Real>(
    m: &Machine<T>,
    input: &Tape,
    max_steps: usize,
) -> Result<(Superposition<T>, RunReport), SimError> {
    run_from(m, initial(m, input)?, max_steps)
}

/// Run from an arbitrary normalized starting superposition.
pub fn run_from<T: Real>(
    m: &Machine<T>,
    s0: Superposition<T>,
    max_steps: usize,
) -> Result<(Superposition<T>, RunReport), SimError> {
    let (s, report, _) = run_engine(m, s0, max_steps, false, None)?;
    Ok((s, report))
}

/// Run while recording one trace record per step (including the initial
/// superposition). `capture_terms` includes the full term lists.
pub fn run_traced<T: Real>(
    m: &Machine<T>,
    s0: Superposition<T>,
    max_steps: usize,
    capture_terms: bool,
) -> Result<(Superposition<T>, RunReport, Vec<TraceRecord>), SimError> {
    run_engine(m, s0, max_steps, capture_terms, None)
}

struct MeasureMode<'r> {
    rng: &'r mut ChaCha8Rng,
}

fn run_engine<T: Real>(
    m: &Machine<T>,
    s0: Superposition<T>,
    max_steps: usize,
    capture: bool,
    mut measure: Option<MeasureMode<'_>>,
) -> Result<(Superposition<T>, RunReport, Vec<TraceRecord>), SimError> {
    let norm2 = s0.norm2();
    if (norm2 - 1.0).abs() > norm_tolerance::<T>() {
        return Err(SimError::NotNormalized { norm2 });
    }
    let mut s = s0;
    let mut trace = Vec::new();
    let mut head_sets: Vec<std::collections::BTreeSet<usize>> = vec![head_positions(&s)];
    let mut drift_max = 0.0f64;
    record(m, &mut trace, 0, &s, capture);
    let mut steps = 0usize;
    let halted = loop {
        let finals = s
            .terms()
            .filter(|(c, _)| c.state == m.final_state())
            .count();
        if finals == s.len() && !s.is_empty() {
            break true;
        }
        if finals > 0 {
            return Err(SimError::NonSynchronizedHalt { step: steps });
        }
        if steps == max_steps {
            return Err(SimError::MaxStepsExceeded { max: max_steps });
        }
        s = step(m, &s)?;
        steps += 1;
        drift_max = drift_max.max((s.norm2() - 1.0).abs());
        if let Some(mode) = measure.as_mut() {
            collapse_internal_state(&mut s, mode.rng);
        }
        head_sets.push(head_positions(&s));
        record(m, &mut trace, steps, &s, capture);
    };
    let deterministic = head_sets.iter().all(|h| h.len() == 1);
    let head_trace = if deterministic {
        Some(
            head_sets
                .iter()
                .map(|h| *h.iter().next().unwrap())
                .collect(),
        )
    } else {
        None
    };
    let report = RunReport {
        steps,
        halted,
        head_deterministic: deterministic,
        head_trace,
        norm_drift: drift_max,
    };
    Ok((s, report, trace))
}

fn record<T: Real>(
    m: &Machine<T>,
    trace: &mut Vec<TraceRecord>,
    step: usize,
    s: &Superposition<T>,
    capture: bool,
) {
    let terms = capture.then(|| {
        s.terms()
            .map(|(cfg, amp)| TraceTerm {
                state: m.state_name(cfg.state).to_string(),
                tape: m.cells_string(cfg.tape.cells()),
                head: cfg.head,
                re: amp.re.to_f64().unwrap_or(f64::NAN),
                im: amp.im.to_f64().unwrap_or(f64::NAN),
            })
            .collect()
    });
    trace.push(TraceRecord {
        step,
        heads: head_positions(s).into_iter().collect(),
        term_count: s.len(),
        norm2: s.norm2(),
        terms,
    });
}

/// Measure the internal-state register: group terms by state, pick one group
/// by squared norm, renormalize.
fn collapse_internal_state<T: Real>(s: &mut Superposition<T>, rng: &mut ChaCha8Rng) {
    let mut weights: BTreeMap<usize, f64> = BTreeMap::new();
    for (cfg, amp) in s.terms() {
        *weights.entry(cfg.state).or_insert(0.0) += norm_sqr_f64(amp);
    }
    if weights.len() <= 1 {
        return;
    }
    let total: f64 = weights.values().sum();
    let mut draw = rng.random::<f64>() * total;
    let mut chosen = *weights.keys().next_back().unwrap();
    for (state, w) in &weights {
        if draw < *w {
            chosen = *state;
            break;
        }
        draw -= w;
    }
    let kept = weights[&chosen];
    s.terms.retain(|cfg, _| cfg.state == chosen);
    s.scale(crate::scalar::real(1.0 / kept.sqrt()));
}

/// Born-rule marginal over the symbols at the given cells.
pub fn measure_cells<T: Real>(
    m: &Machine<T>,
    s: &Superposition<T>,
    cells: &[usize],
) -> BTreeMap<String, f64> {
    let blank = m.blank();
    let mut dist: BTreeMap<String, f64> = BTreeMap::new();
    for (cfg, amp) in s.terms() {
        let key: Vec<usize> = cells.iter().map(|&c| cfg.tape.read(c, blank)).collect();
        *dist.entry(m.cells_string(&key)).or_insert(0.0) += norm_sqr_f64(amp);
    }
    dist
}

/// Seeded single-shot run. With `per_step_measure`, the internal-state
/// register is measured after every step before evolution continues; the
/// final tape is then sampled by the Born rule. Deterministic given the seed.
pub fn sample_run<T: Real>(
    m: &Machine<T>,
    input: &Tape,
    seed: u64,
    per_step_measure: bool,
    max_steps: usize,
) -> Result<(Tape, usize), SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s0 = initial(m, input)?;
    let (s, report, _) = if per_step_measure {
        run_engine(m, s0, max_steps, false, Some(MeasureMode { rng: &mut rng }))?
    } else {
        run_engine(m, s0, max_steps, false, None)?
    };
    let total = s.norm2();
    let mut draw = rng.random::<f64>() * total;
    let mut picked = None;
    for (cfg, amp) in s.terms() {
        let w = norm_sqr_f64(amp);
        if draw < w {
            picked = Some(cfg.tape.clone());
            break;
        }
        draw -= w;
    }
    let tape = picked.unwrap_or_else(|| {
        s.terms()
            .last()
            .map(|(c, _)| c.tape.clone())
            .expect("superposition is non-empty")
    });
    Ok((tape, report.steps))
}

/// Per-input outcome of the empirical SR certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct SrRun {
    pub input: String,
    pub steps: usize,
    pub head_deterministic: bool,
    pub head_trace: Option<Vec<usize>>,
    pub final_head_zero: bool,
}

/// Empirical SR certificate over all non-blank basis tapes of a cell range.
#[derive(Debug, Clone, PartialEq)]
pub struct SrReport {
    pub runs: Vec<SrRun>,
    pub steps_uniform: bool,
    pub traces_identical: bool,
    pub all_heads_deterministic: bool,
    pub all_final_head_zero: bool,
}

impl SrReport {
    pub fn ok(&self) -> bool {
        self.steps_uniform
            && self.traces_identical
            && self.all_heads_deterministic
            && self.all_final_head_zero
    }
}

/// Run the machine on every basis tape over cells 1..n_cells-1 (cell 0 is
/// blank) with symbols drawn from the non-blank alphabet, and check that the
/// step count and head trace are input-independent, the head is
/// deterministic throughout, and the final head position is 0.
pub fn check_sr<T: Real>(
    m: &Machine<T>,
    n_cells: usize,
    max_steps: usize,
) -> Result<SrReport, SimError> {
    let blank = m.blank();
    let symbols: Vec<usize> = (0..m.alphabet().len()).filter(|&s| s != blank).collect();
    let width = n_cells.saturating_sub(1);
    let mut runs = Vec::new();
    let count = symbols.len().pow(width as u32);
    for mut ix in 0..count {
        let mut cells = vec![blank; width];
        for slot in (0..width).rev() {
            cells[slot] = symbols[ix % symbols.len()];
            ix /= symbols.len();
        }
        let tape = Tape::from_cell1(&cells, blank);
        let (s, report) = run(m, &tape, max_steps)?;
        let final_head_zero = s.terms().all(|(cfg, _)| cfg.head == 0);
        runs.push(SrRun {
            input: m.cells_string(&cells),
            steps: report.steps,
            head_deterministic: report.head_deterministic,
            head_trace: report.head_trace,
            final_head_zero,
        });
    }
    let steps_uniform = runs.windows(2).all(|w| w[0].steps == w[1].steps);
    let traces_identical = runs.windows(2).all(|w| w[0].head_trace == w[1].head_trace);
    let all_heads_deterministic = runs.iter().all(|r| r.head_deterministic);
    let all_final_head_zero = runs.iter().all(|r| r.final_head_zero);
    Ok(SrReport {
        runs,
        steps_uniform,
        traces_identical,
        all_heads_deterministic,
        all_final_head_zero,
    })
}
