//! Constructors for gate machines and the dovetailing combinator.
//!
//! Every gate machine is an instance of one walk scheme. The head sweeps
//! right from cell 0 reading control cells into the internal state, applies
//! the 2x2 payload at the target cell, and returns to cell 0 while merging
//! the control branches back together one control at a time. The state
//! tracks the index of the first control that read 0 (or that none did), so
//! each merge pairs a branch that deterministically reads 1 with the branch
//! that deterministically reads 0 at that cell, which keeps the rule table
//! locally unitary.
//!
//! When every control lies left of the target the sweep is the single pass
//! 0..max..0 with step count 2*max. When some control lies right of the
//! target, the target's read happens on the way back and the head bounces
//! once more over the controls to merge branches, giving step count
//! 4*max - 2*target + 2. Both counts are input-independent.

use std::collections::BTreeMap;

use num_complex::Complex;
use thiserror::Error;

use crate::checks::classify;
use crate::machine::{Direction, Machine, MachineError, TransitionRule, BLANK};
use crate::scalar::{cplx, real, Real};

/// Sign of a dyadic rotation angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn glyph(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Single-qubit gate from the discrete set, plus X and a free phase.
/// Ry/Rz angles are exactly ±π/2^k.
#[derive(Debug, Clone, PartialEq)]
pub enum PrimitiveGate<T: Real> {
    H,
    X,
    Ry(Sign, u32),
    Rz(Sign, u32),
    Phase(T),
}

impl<T: Real> PrimitiveGate<T> {
    pub fn angle(&self) -> Option<T> {
        match self {
            PrimitiveGate::Ry(s, k) | PrimitiveGate::Rz(s, k) => {
                Some(real::<T>(s.factor()) * T::PI() / real(f64::powi(2.0, *k as i32)))
            }
            PrimitiveGate::Phase(t) => Some(*t),
            _ => None,
        }
    }

    /// 2x2 matrix, column-indexed by the read symbol:
    /// Ry(θ) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]],
    /// Rz(θ) = diag(e^{-iθ/2}, e^{iθ/2}), Phase(φ) = diag(1, e^{iφ}).
    pub fn matrix2(&self) -> [[Complex<T>; 2]; 2] {
        match self {
            PrimitiveGate::H => {
                let s = cplx(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[s, s], [s, -s]]
            }
            PrimitiveGate::X => [
                [cplx(0.0, 0.0), cplx(1.0, 0.0)],
                [cplx(1.0, 0.0), cplx(0.0, 0.0)],
            ],
            PrimitiveGate::Ry(..) => {
                let half = self.angle().unwrap() / real(2.0);
                let (c, s) = (half.cos(), half.sin());
                let z = T::zero();
                [
                    [Complex::new(c, z), Complex::new(-s, z)],
                    [Complex::new(s, z), Complex::new(c, z)],
                ]
            }
            PrimitiveGate::Rz(..) => {
                let half = self.angle().unwrap() / real(2.0);
                [
                    [Complex::from_polar(T::one(), -half), cplx(0.0, 0.0)],
                    [cplx(0.0, 0.0), Complex::from_polar(T::one(), half)],
                ]
            }
            PrimitiveGate::Phase(phi) => [
                [cplx(1.0, 0.0), cplx(0.0, 0.0)],
                [cplx(0.0, 0.0), Complex::from_polar(T::one(), *phi)],
            ],
        }
    }

    pub fn label(&self) -> String {
        match self {
            PrimitiveGate::H => "h".to_string(),
            PrimitiveGate::X => "x".to_string(),
            PrimitiveGate::Ry(s, k) => format!("ry{}{}", s.glyph(), k),
            PrimitiveGate::Rz(s, k) => format!("rz{}{}", s.glyph(), k),
            PrimitiveGate::Phase(t) => format!("phase{}", t.to_f64().unwrap_or(f64::NAN)),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("cell index must be at least 1 (cell 0 is the blank start cell)")]
    InvalidCell,
    #[error("cells must be pairwise distinct")]
    DuplicateCells,
    #[error("controlled machine needs at least one control cell")]
    EmptyControls,
    #[error("gate kind {0} is not supported by this builder")]
    UnsupportedGate(String),
    #[error("machines have different alphabets")]
    AlphabetMismatch,
    #[error("machine {name:?} does not satisfy the composition preconditions: {reason}")]
    NotComposable { name: String, reason: String },
    #[error("cannot dovetail an empty machine list")]
    EmptyProgram,
    #[error(transparent)]
    Machine(#[from] MachineError),
}

/// Step count of the walk scheme for the given touched cells.
pub fn walk_step_count(controls: &[usize], target: usize) -> usize {
    let max = controls.iter().copied().max().unwrap_or(0).max(target);
    if target == max {
        2 * max
    } else {
        4 * max - 2 * target + 2
    }
}

/// Step count of a single-cell gate machine: 2i.
pub fn rotation_step_count(cell: usize) -> usize {
    2 * cell
}

// ---------------------------------------------------------------------------
// the walk scheme

/// Branch class carried in the state: index of the first control that read 0,
/// or Top when none has (before the payload: conjunction still true; after
/// it: payload applied or known unnecessary).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Zero(usize),
    Top,
}

/// Walk legs in time order. `Fwd` reads the controls, `Ret1` applies the
/// payload at the target when controls extend past it, `Bounce`/`Fwd2`
/// revisit the controls, `Ret2` merges branches on the way home.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Leg {
    Fwd,
    Ret1,
    Bounce,
    Fwd2,
    Ret2,
}

struct Walk {
    controls: Vec<usize>,
    target: usize,
    lift: bool,
}

impl Walk {
    fn is_ctrl(&self, cell: usize) -> bool {
        self.controls.binary_search(&cell).is_ok()
    }

    /// Classes alive at a layer, in naming order (zeros ascending, Top last).
    fn classes(&self, leg: Leg, pos: usize) -> Vec<Class> {
        let zeros: Vec<usize> = match leg {
            Leg::Fwd => self.controls.iter().copied().filter(|&j| j < pos).collect(),
            Leg::Ret1 | Leg::Bounce | Leg::Fwd2 => self.controls.clone(),
            Leg::Ret2 => self
                .controls
                .iter()
                .copied()
                .filter(|&j| j <= pos)
                .collect(),
        };
        zeros
            .into_iter()
            .map(Class::Zero)
            .chain([Class::Top])
            .collect()
    }

    /// Symbols a class can read at a control cell: deterministic 1 below the
    /// first zero, deterministic 0 at it, arbitrary beyond it.
    fn ctrl_reads(&self, class: Class, cell: usize) -> Vec<u8> {
        match class {
            Class::Top => vec![1],
            Class::Zero(j) if cell == j => vec![0],
            Class::Zero(j) if cell < j => vec![1],
            Class::Zero(_) => vec![0, 1],
        }
    }
}

fn gate_walk<T: Real>(
    name: String,
    controls: &[usize],
    target: usize,
    u: [[Complex<T>; 2]; 2],
    paper_names: bool,
) -> Result<Machine<T>, BuildError> {
    let mut controls: Vec<usize> = controls.to_vec();
    controls.sort_unstable();
    if target < 1 || controls.first().is_some_and(|&c| c < 1) {
        return Err(BuildError::InvalidCell);
    }
    if controls.windows(2).any(|w| w[0] == w[1]) || controls.contains(&target) {
        return Err(BuildError::DuplicateCells);
    }
    let max = controls.last().copied().unwrap_or(0).max(target);
    let walk = Walk {
        lift: target < max,
        controls,
        target,
    };

    // Layer list in time order.
    let mut layers: Vec<(Leg, usize)> = (1..=max).map(|m| (Leg::Fwd, m)).collect();
    if walk.lift {
        layers.extend((walk.target..max).rev().map(|m| (Leg::Ret1, m)));
        layers.push((Leg::Bounce, walk.target - 1));
        layers.extend((walk.target..=max).map(|m| (Leg::Fwd2, m)));
    }
    layers.extend((1..max).rev().map(|m| (Leg::Ret2, m)));

    // Assign state names layer by layer.
    let mut names: BTreeMap<(Leg, usize, Class), String> = BTreeMap::new();
    let mut states = vec!["q0".to_string()];
    let mut counter = 1usize;
    for &(leg, pos) in &layers {
        for class in walk.classes(leg, pos) {
            let name = if paper_names {
                match leg {
                    Leg::Fwd => format!("q{pos}"),
                    Leg::Ret2 => format!("s{pos}"),
                    _ => unreachable!("paper naming only for plain sweeps"),
                }
            } else {
                let n = format!("q{counter}");
                counter += 1;
                n
            };
            states.push(name.clone());
            names.insert((leg, pos, class), name);
        }
    }
    states.push("qf".to_string());

    let state = |leg: Leg, pos: usize, class: Class| -> String {
        names
            .get(&(leg, pos, class))
            .unwrap_or_else(|| panic!("missing state for {leg:?}@{pos} {class:?}"))
            .clone()
    };

    let syms = ["#", "0", "1"];
    let sym = |b: u8| syms[b as usize + 1].to_string();
    let mut rules: Vec<TransitionRule<T>> = Vec::new();
    let one = cplx::<T>(1.0, 0.0);
    let pass = |from: String,
                reads: &[u8],
                to: String,
                dir: Direction,
                rules: &mut Vec<TransitionRule<T>>| {
        for &b in reads {
            rules.push(TransitionRule::new(
                from.clone(),
                sym(b),
                sym(b),
                to.clone(),
                dir,
                one,
            ));
        }
    };

    // start rule: step off the blank start cell
    rules.push(TransitionRule::new(
        "q0",
        BLANK,
        BLANK,
        state(Leg::Fwd, 1, Class::Top),
        Direction::Right,
        one,
    ));

    for &(leg, pos) in &layers {
        for class in walk.classes(leg, pos) {
            let from = state(leg, pos, class);
            match leg {
                Leg::Fwd if pos < max => {
                    let next = |c: Class| state(Leg::Fwd, pos + 1, c);
                    if walk.is_ctrl(pos) {
                        match class {
                            Class::Top => {
                                rules.push(TransitionRule::new(
                                    from.clone(),
                                    "0",
                                    "0",
                                    next(Class::Zero(pos)),
                                    Direction::Right,
                                    one,
                                ));
                                rules.push(TransitionRule::new(
                                    from.clone(),
                                    "1",
                                    "1",
                                    next(Class::Top),
                                    Direction::Right,
                                    one,
                                ));
                            }
                            Class::Zero(_) => {
                                pass(
                                    from.clone(),
                                    &walk.ctrl_reads(class, pos),
                                    next(class),
                                    Direction::Right,
                                    &mut rules,
                                );
                            }
                        }
                    } else if pos == walk.target {
                        // bounce regime passes the target on the way out
                        pass(
                            from.clone(),
                            &[0, 1],
                            next(class),
                            Direction::Right,
                            &mut rules,
                        );
                    } else {
                        // plain walk cell: pass every symbol, blank included
                        for s in syms {
                            rules.push(TransitionRule::new(
                                from.clone(),
                                s,
                                s,
                                next(class),
                                Direction::Right,
                                one,
                            ));
                        }
                    }
                }
                Leg::Fwd => {
                    // turn at max
                    if !walk.lift {
                        // the target: apply the payload and turn for home
                        let next = |c: Class| {
                            if max == 1 {
                                "qf".to_string()
                            } else {
                                state(Leg::Ret2, max - 1, c)
                            }
                        };
                        match class {
                            Class::Top => {
                                for read in 0..2usize {
                                    for write in 0..2usize {
                                        let amp = u[write][read];
                                        if amp.norm_sqr().to_f64().unwrap_or(0.0)
                                            < crate::tol::PRUNE_EPS * crate::tol::PRUNE_EPS
                                        {
                                            continue;
                                        }
                                        rules.push(TransitionRule::new(
                                            from.clone(),
                                            sym(read as u8),
                                            sym(write as u8),
                                            next(Class::Top),
                                            Direction::Left,
                                            amp,
                                        ));
                                    }
                                }
                            }
                            Class::Zero(_) => {
                                pass(
                                    from.clone(),
                                    &[0, 1],
                                    next(class),
                                    Direction::Left,
                                    &mut rules,
                                );
                            }
                        }
                    } else {
                        // max is a control; read it and turn into the first return
                        let next = |c: Class| state(Leg::Ret1, max - 1, c);
                        match class {
                            Class::Top => {
                                rules.push(TransitionRule::new(
                                    from.clone(),
                                    "0",
                                    "0",
                                    next(Class::Zero(max)),
                                    Direction::Left,
                                    one,
                                ));
                                rules.push(TransitionRule::new(
                                    from.clone(),
                                    "1",
                                    "1",
                                    next(Class::Top),
                                    Direction::Left,
                                    one,
                                ));
                            }
                            Class::Zero(_) => {
                                pass(
                                    from.clone(),
                                    &walk.ctrl_reads(class, max),
                                    next(class),
                                    Direction::Left,
                                    &mut rules,
                                );
                            }
                        }
                    }
                }
                Leg::Ret1 if pos > walk.target => {
                    let next = |c: Class| state(Leg::Ret1, pos - 1, c);
                    let reads = if walk.is_ctrl(pos) {
                        walk.ctrl_reads(class, pos)
                    } else {
                        vec![0, 1]
                    };
                    pass(
                        from.clone(),
                        &reads,
                        next(class),
                        Direction::Left,
                        &mut rules,
                    );
                }
                Leg::Ret1 => {
                    // the target on the way back: apply the payload
                    let next = |c: Class| state(Leg::Bounce, walk.target - 1, c);
                    match class {
                        Class::Top => {
                            for read in 0..2usize {
                                for write in 0..2usize {
                                    let amp = u[write][read];
                                    if amp.norm_sqr().to_f64().unwrap_or(0.0)
                                        < crate::tol::PRUNE_EPS * crate::tol::PRUNE_EPS
                                    {
                                        continue;
                                    }
                                    rules.push(TransitionRule::new(
                                        from.clone(),
                                        sym(read as u8),
                                        sym(write as u8),
                                        next(Class::Top),
                                        Direction::Left,
                                        amp,
                                    ));
                                }
                            }
                        }
                        Class::Zero(_) => {
                            pass(
                                from.clone(),
                                &[0, 1],
                                next(class),
                                Direction::Left,
                                &mut rules,
                            );
                        }
                    }
                }
                Leg::Bounce => {
                    let next = |c: Class| state(Leg::Fwd2, walk.target, c);
                    if pos == 0 {
                        rules.push(TransitionRule::new(
                            from.clone(),
                            BLANK,
                            BLANK,
                            next(class),
                            Direction::Right,
                            one,
                        ));
                    } else {
                        let reads = if walk.is_ctrl(pos) {
                            walk.ctrl_reads(class, pos)
                        } else {
                            vec![0, 1]
                        };
                        pass(
                            from.clone(),
                            &reads,
                            next(class),
                            Direction::Right,
                            &mut rules,
                        );
                    }
                }
                Leg::Fwd2 if pos < max => {
                    let next = |c: Class| state(Leg::Fwd2, pos + 1, c);
                    let reads = if walk.is_ctrl(pos) {
                        walk.ctrl_reads(class, pos)
                    } else {
                        vec![0, 1]
                    };
                    pass(
                        from.clone(),
                        &reads,
                        next(class),
                        Direction::Right,
                        &mut rules,
                    );
                }
                Leg::Fwd2 => {
                    // second turn at max (a control): absorb its zero branch
                    let next = |c: Class| state(Leg::Ret2, max - 1, c);
                    match class {
                        Class::Top => {
                            pass(
                                from.clone(),
                                &[1],
                                next(Class::Top),
                                Direction::Left,
                                &mut rules,
                            );
                        }
                        Class::Zero(j) if j == max => {
                            pass(
                                from.clone(),
                                &[0],
                                next(Class::Top),
                                Direction::Left,
                                &mut rules,
                            );
                        }
                        Class::Zero(_) => {
                            pass(
                                from.clone(),
                                &walk.ctrl_reads(class, max),
                                next(class),
                                Direction::Left,
                                &mut rules,
                            );
                        }
                    }
                }
                Leg::Ret2 => {
                    let next = |c: Class| {
                        if pos == 1 {
                            "qf".to_string()
                        } else {
                            state(Leg::Ret2, pos - 1, c)
                        }
                    };
                    if walk.is_ctrl(pos) {
                        match class {
                            Class::Top => {
                                pass(
                                    from.clone(),
                                    &[1],
                                    next(Class::Top),
                                    Direction::Left,
                                    &mut rules,
                                );
                            }
                            Class::Zero(j) if j == pos => {
                                pass(
                                    from.clone(),
                                    &[0],
                                    next(Class::Top),
                                    Direction::Left,
                                    &mut rules,
                                );
                            }
                            Class::Zero(_) => {
                                pass(
                                    from.clone(),
                                    &walk.ctrl_reads(class, pos),
                                    next(class),
                                    Direction::Left,
                                    &mut rules,
                                );
                            }
                        }
                    } else {
                        pass(
                            from.clone(),
                            &[0, 1],
                            next(class),
                            Direction::Left,
                            &mut rules,
                        );
                    }
                }
            }
        }
    }

    let alphabet = syms.iter().map(|s| s.to_string()).collect();
    Ok(Machine::new(name, alphabet, states, "q0", "qf", rules)?)
}

// ---------------------------------------------------------------------------
// public builders

/// Machine applying a single-qubit gate from {H, Ry, Rz, Phase} to `cell`,
/// with the walk 0..cell..0. States are q0..q_cell, s_{cell-1}..s_1, qf;
/// step count is exactly `2*cell` on every input.
pub fn rotation_machine<T: Real>(
    cell: usize,
    gate: &PrimitiveGate<T>,
) -> Result<Machine<T>, BuildError> {
    if matches!(gate, PrimitiveGate::X) {
        return Err(BuildError::UnsupportedGate(gate.label()));
    }
    gate_machine(cell, gate)
}

/// Machine applying any single-qubit primitive (X included) to `cell`.
pub fn gate_machine<T: Real>(
    cell: usize,
    gate: &PrimitiveGate<T>,
) -> Result<Machine<T>, BuildError> {
    let name = format!("{}-cell{}", gate.label(), cell);
    gate_walk(name, &[], cell, gate.matrix2(), true)
}

/// CNOT between two cells. For control 1 and target 2 this is the seven-state
/// construction with step count 4.
pub fn cnot_machine<T: Real>(control: usize, target: usize) -> Result<Machine<T>, BuildError> {
    if control == target {
        return Err(BuildError::DuplicateCells);
    }
    let name = format!("cnot-{control}-{target}");
    gate_walk(
        name,
        &[control],
        target,
        PrimitiveGate::<T>::X.matrix2(),
        false,
    )
}

/// Toffoli gate among three cells: two controls, one target. For cells
/// (1,2,3) the machine has 13 states and step count 6.
pub fn toffoli_machine<T: Real>(
    c1: usize,
    c2: usize,
    target: usize,
) -> Result<Machine<T>, BuildError> {
    let name = format!("toffoli-{c1}-{c2}-{target}");
    gate_walk(
        name,
        &[c1, c2],
        target,
        PrimitiveGate::<T>::X.matrix2(),
        false,
    )
}

/// Generalized controlled gate: applies `gate` to `target` when every
/// control cell reads 1.
pub fn controlled_machine<T: Real>(
    controls: &[usize],
    target: usize,
    gate: &PrimitiveGate<T>,
) -> Result<Machine<T>, BuildError> {
    if controls.is_empty() {
        return Err(BuildError::EmptyControls);
    }
    let mut cs: Vec<String> = controls.iter().map(|c| c.to_string()).collect();
    cs.sort();
    let name = format!("c{}[{}]-t{}", gate.label(), cs.join(","), target);
    gate_walk(name, controls, target, gate.matrix2(), false)
}

/// Two-step machine that leaves the tape unchanged and the head at cell 0.
pub fn identity_machine<T: Real>() -> Machine<T> {
    let one = cplx::<T>(1.0, 0.0);
    let mut rules = vec![TransitionRule::new(
        "q0",
        BLANK,
        BLANK,
        "q1",
        Direction::Right,
        one,
    )];
    for s in ["#", "0", "1"] {
        rules.push(TransitionRule::new("q1", s, s, "qf", Direction::Left, one));
    }
    Machine::new(
        "identity",
        vec!["#".into(), "0".into(), "1".into()],
        vec!["q0".into(), "q1".into(), "qf".into()],
        "q0",
        "qf",
        rules,
    )
    .expect("identity machine is structurally valid")
}

// ---------------------------------------------------------------------------
// dovetailing

fn fresh_name(base: &str, used: &std::collections::HashSet<String>) -> String {
    if !used.contains(base) {
        return base.to_string();
    }
    let mut k = 2usize;
    loop {
        let candidate = format!("{base}@{k}");
        if !used.contains(&candidate) {
            return candidate;
        }
        k += 1;
    }
}

/// Sequential composition: run `m1`, then `m2`, by identifying `m1`'s final
/// state with `m2`'s start state. `m2`'s states are renamed to avoid
/// collisions; the composite step count is the sum of the parts.
pub fn dovetail<T: Real>(m1: &Machine<T>, m2: &Machine<T>) -> Result<Machine<T>, BuildError> {
    if m1.alphabet() != m2.alphabet() {
        return Err(BuildError::AlphabetMismatch);
    }
    for (m, label) in [(m1, "first"), (m2, "second")] {
        let report = classify(m);
        if !report.all_ok() {
            let reason = if !report.unidirectional.is_ok() {
                "not unidirectional"
            } else if !report.rotational.is_ok() {
                "not rotational"
            } else {
                "not locally unitary"
            };
            return Err(BuildError::NotComposable {
                name: format!("{} ({})", m.name(), label),
                reason: reason.to_string(),
            });
        }
    }

    let mut used: std::collections::HashSet<String> = m1.states().iter().cloned().collect();
    let mut rename: BTreeMap<String, String> = BTreeMap::new();
    let m1_final = m1.state_name(m1.final_state()).to_string();
    rename.insert(m2.state_name(m2.start()).to_string(), m1_final.clone());
    let mut states: Vec<String> = m1.states().to_vec();
    for (ix, s) in m2.states().iter().enumerate() {
        if ix == m2.start() {
            continue;
        }
        let fresh = fresh_name(s, &used);
        used.insert(fresh.clone());
        rename.insert(s.clone(), fresh.clone());
        states.push(fresh);
    }

    let mut rules = m1.rules();
    for mut r in m2.rules() {
        r.from = rename[&r.from].clone();
        r.to = rename[&r.to].clone();
        rules.push(r);
    }

    let final_name = rename[m2.state_name(m2.final_state())].clone();
    let name = format!("{};{}", m1.name(), m2.name());
    Ok(Machine::new(
        name,
        m1.alphabet().to_vec(),
        states,
        m1.state_name(m1.start()),
        &final_name,
        rules,
    )?)
}

/// Left fold of [`dovetail`] over a machine list in execution order.
pub fn dovetail_all<T: Real>(machines: &[Machine<T>]) -> Result<Machine<T>, BuildError> {
    let mut iter = machines.iter();
    let first = iter.next().ok_or(BuildError::EmptyProgram)?;
    let mut acc = first.clone();
    for m in iter {
        acc = dovetail(&acc, m)?;
    }
    Ok(acc)
}
