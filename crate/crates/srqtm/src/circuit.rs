//! Circuit intermediate representation and the circuit-to-machine pipeline:
//! lower free-angle rotations onto the dyadic set, build one machine per
//! gate, and dovetail them in circuit order.

use num_complex::Complex;
use thiserror::Error;

use crate::builders::{
    cnot_machine, controlled_machine, dovetail_all, gate_machine, identity_machine, BuildError,
    PrimitiveGate, Sign,
};
use crate::machine::Machine;
use crate::matrix::CMatrix;
use crate::scalar::{cplx, real, Real};

/// Precision of the dyadic angle expansion, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision(u32);

impl Precision {
    pub fn new(bits: u32) -> Result<Precision, CompileError> {
        if bits == 0 {
            return Err(CompileError::InvalidPrecision);
        }
        Ok(Precision(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }
}

/// Circuit gate. Wires are 1-based and coincide with tape cells.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate<T: Real> {
    Prim {
        gate: PrimitiveGate<T>,
        wire: usize,
    },
    RyFree {
        theta: T,
        wire: usize,
    },
    RzFree {
        theta: T,
        wire: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Mcu {
        controls: Vec<usize>,
        target: usize,
        gate: PrimitiveGate<T>,
    },
}

impl<T: Real> Gate<T> {
    pub fn wires(&self) -> Vec<usize> {
        match self {
            Gate::Prim { wire, .. } | Gate::RyFree { wire, .. } | Gate::RzFree { wire, .. } => {
                vec![*wire]
            }
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Mcu {
                controls, target, ..
            } => {
                let mut w = controls.clone();
                w.push(*target);
                w
            }
        }
    }
}

/// Ordered gate list over `n` data cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit<T: Real> {
    pub n: usize,
    pub gates: Vec<Gate<T>>,
}

impl<T: Real> Circuit<T> {
    pub fn new(n: usize, gates: Vec<Gate<T>>) -> Result<Circuit<T>, CompileError> {
        let c = Circuit { n, gates };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), CompileError> {
        for (ix, g) in self.gates.iter().enumerate() {
            let wires = g.wires();
            for &w in &wires {
                if w < 1 || w > self.n {
                    return Err(CompileError::WireOutOfRange {
                        gate: ix,
                        wire: w,
                        n: self.n,
                    });
                }
            }
            let mut sorted = wires.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(CompileError::DuplicateWires { gate: ix });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("precision must be at least 1 bit")]
    InvalidPrecision,
    #[error("gate {gate}: wire {wire} outside 1..={n}")]
    WireOutOfRange { gate: usize, wire: usize, n: usize },
    #[error("gate {gate}: wires must be pairwise distinct")]
    DuplicateWires { gate: usize },
    #[error("free-angle gate survived lowering")]
    FreeGateAfterLowering,
    #[error("cell count {0} exceeds the dense limit of 10")]
    TooManyWires(usize),
    #[error("gate kind has no text form: {0}")]
    NoTextForm(String),
    #[error(transparent)]
    Build(#[from] BuildError),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {msg}")]
pub struct CircuitParseError {
    pub line: usize,
    pub msg: String,
}

// ---------------------------------------------------------------------------
// dyadic angle approximation

/// Signed dyadic expansion of an angle: terms (sign, k) with angle
/// sign*π/2^k, k <= m, at most m terms, whose sum is within π/2^m of θ
/// modulo 2π. Uses the non-adjacent signed-binary form of round(θ/π * 2^m).
pub fn approx_angle<T: Real>(theta: T, p: Precision) -> Vec<(Sign, u32)> {
    let m = p.bits();
    let x = theta.to_f64().unwrap_or(0.0) / std::f64::consts::PI;
    // nearest representative of x mod 2 in (-1, 1]
    let mut r = x.rem_euclid(2.0);
    if r > 1.0 {
        r -= 2.0;
    }
    let scaled = (r * f64::powi(2.0, m as i32)).round() as i64;
    naf_terms(scaled, m)
}

/// Non-adjacent-form digits of `value` as (sign, k = m - bit) terms.
fn naf_terms(mut value: i64, m: u32) -> Vec<(Sign, u32)> {
    let mut digits: Vec<(u32, i32)> = Vec::new();
    let mut bit = 0u32;
    while value != 0 {
        if value & 1 != 0 {
            let d: i32 = if value.rem_euclid(4) == 1 { 1 } else { -1 };
            digits.push((bit, d));
            value -= d as i64;
        }
        value /= 2;
        bit += 1;
    }
    digits
        .into_iter()
        .rev()
        .map(|(bit, d)| {
            let sign = if d > 0 { Sign::Plus } else { Sign::Minus };
            debug_assert!(bit <= m, "NAF digit above the precision cap");
            (sign, m - bit)
        })
        .collect()
}

/// Dyadic Ry terms whose half-angle rotations compose to exactly the given
/// angle modulo 4π (the period of Ry) within π/2^m. Digits above π split
/// into pairs of π terms so every emitted k is non-negative.
pub(crate) fn dyadic_ry_terms<T: Real>(theta: T, p: Precision) -> Vec<(Sign, u32)> {
    let m = p.bits();
    let mut x = theta.to_f64().unwrap_or(0.0) / std::f64::consts::PI;
    // reduce mod 4 into (-2, 2]
    x = x.rem_euclid(4.0);
    if x > 2.0 {
        x -= 4.0;
    }
    let scaled = (x * f64::powi(2.0, m as i32)).round() as i64;
    let mut out = Vec::new();
    for (sign, k_signed) in naf_terms_signed(scaled, m) {
        if k_signed >= 0 {
            out.push((sign, k_signed as u32));
        } else {
            // angle 2π: two π terms
            debug_assert_eq!(k_signed, -1);
            out.push((sign, 0));
            out.push((sign, 0));
        }
    }
    out
}

fn naf_terms_signed(mut value: i64, m: u32) -> Vec<(Sign, i32)> {
    let mut digits: Vec<(u32, i32)> = Vec::new();
    let mut bit = 0u32;
    while value != 0 {
        if value & 1 != 0 {
            let d: i32 = if value.rem_euclid(4) == 1 { 1 } else { -1 };
            digits.push((bit, d));
            value -= d as i64;
        }
        value /= 2;
        bit += 1;
    }
    digits
        .into_iter()
        .rev()
        .map(|(bit, d)| {
            let sign = if d > 0 { Sign::Plus } else { Sign::Minus };
            (sign, m as i32 - bit as i32)
        })
        .collect()
}

/// Replace free-angle rotations by their dyadic expansions; everything else
/// passes through unchanged, order preserved.
pub fn lower<T: Real>(c: &Circuit<T>, p: Precision) -> Circuit<T> {
    let mut gates = Vec::with_capacity(c.gates.len());
    for g in &c.gates {
        match g {
            Gate::RyFree { theta, wire } => {
                for (sign, k) in approx_angle(*theta, p) {
                    gates.push(Gate::Prim {
                        gate: PrimitiveGate::Ry(sign, k),
                        wire: *wire,
                    });
                }
            }
            Gate::RzFree { theta, wire } => {
                for (sign, k) in approx_angle(*theta, p) {
                    gates.push(Gate::Prim {
                        gate: PrimitiveGate::Rz(sign, k),
                        wire: *wire,
                    });
                }
            }
            other => gates.push(other.clone()),
        }
    }
    Circuit { n: c.n, gates }
}

fn gate_to_machine<T: Real>(g: &Gate<T>) -> Result<Machine<T>, CompileError> {
    match g {
        Gate::Prim { gate, wire } => Ok(gate_machine(*wire, gate)?),
        Gate::Cnot { control, target } => Ok(cnot_machine(*control, *target)?),
        Gate::Mcu {
            controls,
            target,
            gate,
        } => Ok(controlled_machine(controls, *target, gate)?),
        Gate::RyFree { .. } | Gate::RzFree { .. } => Err(CompileError::FreeGateAfterLowering),
    }
}

/// Lower, map each gate to its machine, and dovetail in circuit order.
/// The empty circuit compiles to the two-step identity machine so the head
/// still finishes at the start cell.
pub fn compile<T: Real>(c: &Circuit<T>, p: Precision) -> Result<Machine<T>, CompileError> {
    c.validate()?;
    let lowered = lower(c, p);
    if lowered.gates.is_empty() {
        return Ok(identity_machine());
    }
    let machines = lowered
        .gates
        .iter()
        .map(gate_to_machine)
        .collect::<Result<Vec<_>, _>>()?;
    let m = dovetail_all(&machines)?;
    Ok(m.with_name(format!("compiled[{} gates]", lowered.gates.len())))
}

// ---------------------------------------------------------------------------
// dense reference unitary

fn embed_single<T: Real>(n: usize, wire: usize, u: &[[Complex<T>; 2]; 2]) -> CMatrix<T> {
    let dim = 1usize << n;
    let mut out = CMatrix::zeros(dim);
    for b in 0..dim {
        let bit = (b >> (n - wire)) & 1;
        for (tau, row) in u.iter().enumerate() {
            let amp = row[bit];
            if amp.norm_sqr() == T::zero() {
                continue;
            }
            let target = (b & !(1usize << (n - wire))) | (tau << (n - wire));
            out.add_to(target, b, amp);
        }
    }
    out
}

fn gate_unitary<T: Real>(n: usize, g: &Gate<T>) -> CMatrix<T> {
    let dim = 1usize << n;
    match g {
        Gate::Prim { gate, wire } => embed_single(n, *wire, &gate.matrix2()),
        Gate::RyFree { theta, wire } => {
            let half = *theta / real(2.0);
            let (c, s) = (half.cos(), half.sin());
            let z = T::zero();
            let u = [
                [Complex::new(c, z), Complex::new(-s, z)],
                [Complex::new(s, z), Complex::new(c, z)],
            ];
            embed_single(n, *wire, &u)
        }
        Gate::RzFree { theta, wire } => {
            let half = *theta / real(2.0);
            let u = [
                [Complex::from_polar(T::one(), -half), cplx(0.0, 0.0)],
                [cplx(0.0, 0.0), Complex::from_polar(T::one(), half)],
            ];
            embed_single(n, *wire, &u)
        }
        Gate::Cnot { control, target } => {
            let mut out = CMatrix::zeros(dim);
            for b in 0..dim {
                let cbit = (b >> (n - control)) & 1;
                let b2 = if cbit == 1 {
                    b ^ (1usize << (n - target))
                } else {
                    b
                };
                out.set(b2, b, cplx(1.0, 0.0));
            }
            out
        }
        Gate::Mcu {
            controls,
            target,
            gate,
        } => {
            let u = gate.matrix2();
            let mut out = CMatrix::zeros(dim);
            for b in 0..dim {
                let fire = controls.iter().all(|c| (b >> (n - c)) & 1 == 1);
                if !fire {
                    out.add_to(b, b, cplx(1.0, 0.0));
                    continue;
                }
                let bit = (b >> (n - target)) & 1;
                for (tau, row) in u.iter().enumerate() {
                    let amp = row[bit];
                    if amp.norm_sqr() == T::zero() {
                        continue;
                    }
                    let b2 = (b & !(1usize << (n - target))) | (tau << (n - target));
                    out.add_to(b2, b, amp);
                }
            }
            out
        }
    }
}

/// Dense product of the gate unitaries in application order.
pub fn circuit_unitary<T: Real>(c: &Circuit<T>) -> Result<CMatrix<T>, CompileError> {
    if c.n > 10 {
        return Err(CompileError::TooManyWires(c.n));
    }
    c.validate()?;
    let mut acc = CMatrix::identity(1usize << c.n);
    for g in &c.gates {
        acc = gate_unitary(c.n, g).mul(&acc);
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// text format

fn parse_sign(tok: &str) -> Option<Sign> {
    match tok {
        "+" => Some(Sign::Plus),
        "-" => Some(Sign::Minus),
        _ => None,
    }
}

fn normalize_angle(theta: f64) -> f64 {
    theta.rem_euclid(2.0 * std::f64::consts::PI)
}

/// Parse the circuit text format: a `qubits <n>` header, then one gate per
/// line, `#` comments allowed.
pub fn parse_circuit<T: Real>(text: &str) -> Result<Circuit<T>, CircuitParseError> {
    let err = |line: usize, msg: String| CircuitParseError { line, msg };
    let mut n: Option<usize> = None;
    let mut gates: Vec<Gate<T>> = Vec::new();
    for (ix, raw) in text.lines().enumerate() {
        let lineno = ix + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if n.is_none() {
            if toks.len() == 2 && toks[0] == "qubits" {
                let v = toks[1]
                    .parse::<usize>()
                    .map_err(|_| err(lineno, "bad qubit count".into()))?;
                n = Some(v);
                continue;
            }
            return Err(err(lineno, "expected 'qubits <n>' header first".into()));
        }
        let wire = |tok: &str| -> Result<usize, CircuitParseError> {
            tok.parse::<usize>()
                .ok()
                .filter(|w| *w >= 1)
                .ok_or_else(|| err(lineno, format!("bad wire {tok:?}")))
        };
        let angle = |tok: &str| -> Result<T, CircuitParseError> {
            tok.parse::<f64>()
                .ok()
                .filter(|t| t.is_finite())
                .map(|t| real(normalize_angle(t)))
                .ok_or_else(|| err(lineno, format!("bad angle {tok:?}")))
        };
        let split_controls = |toks: &[&str]| -> Result<(Vec<usize>, usize), CircuitParseError> {
            let semi = toks
                .iter()
                .position(|t| *t == ";")
                .ok_or_else(|| err(lineno, "expected '; <target>'".into()))?;
            if semi == 0 || semi + 2 != toks.len() {
                return Err(err(lineno, "expected '<controls...> ; <target>'".into()));
            }
            let controls = toks[..semi]
                .iter()
                .map(|t| wire(t))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((controls, wire(toks[semi + 1])?))
        };
        let gate = match toks[0] {
            "h" if toks.len() == 2 => Gate::Prim {
                gate: PrimitiveGate::H,
                wire: wire(toks[1])?,
            },
            "ry" | "rz" if toks.len() == 4 => {
                let sign =
                    parse_sign(toks[1]).ok_or_else(|| err(lineno, "sign must be + or -".into()))?;
                let k = toks[2]
                    .parse::<u32>()
                    .map_err(|_| err(lineno, "bad exponent".into()))?;
                let w = wire(toks[3])?;
                let gate = if toks[0] == "ry" {
                    PrimitiveGate::Ry(sign, k)
                } else {
                    PrimitiveGate::Rz(sign, k)
                };
                Gate::Prim { gate, wire: w }
            }
            "ry*" if toks.len() == 3 => Gate::RyFree {
                theta: angle(toks[1])?,
                wire: wire(toks[2])?,
            },
            "rz*" if toks.len() == 3 => Gate::RzFree {
                theta: angle(toks[1])?,
                wire: wire(toks[2])?,
            },
            "phase" if toks.len() == 3 => Gate::Prim {
                gate: PrimitiveGate::Phase(angle(toks[1])?),
                wire: wire(toks[2])?,
            },
            "cnot" if toks.len() == 3 => Gate::Cnot {
                control: wire(toks[1])?,
                target: wire(toks[2])?,
            },
            "mcx" => {
                let (controls, target) = split_controls(&toks[1..])?;
                Gate::Mcu {
                    controls,
                    target,
                    gate: PrimitiveGate::X,
                }
            }
            "mcry" if toks.len() >= 5 => {
                let sign =
                    parse_sign(toks[1]).ok_or_else(|| err(lineno, "sign must be + or -".into()))?;
                let k = toks[2]
                    .parse::<u32>()
                    .map_err(|_| err(lineno, "bad exponent".into()))?;
                let (controls, target) = split_controls(&toks[3..])?;
                Gate::Mcu {
                    controls,
                    target,
                    gate: PrimitiveGate::Ry(sign, k),
                }
            }
            "mcphase" if toks.len() >= 4 => {
                let theta = angle(toks[1])?;
                let (controls, target) = split_controls(&toks[2..])?;
                Gate::Mcu {
                    controls,
                    target,
                    gate: PrimitiveGate::Phase(theta),
                }
            }
            other => return Err(err(lineno, format!("unknown gate {other:?}"))),
        };
        gates.push(gate);
    }
    let n = n.ok_or_else(|| err(0, "missing 'qubits <n>' header".into()))?;
    Circuit::new(n, gates).map_err(|e| err(0, e.to_string()))
}

/// Emit the circuit text form. Gates with no text representation (controlled
/// H or Rz payloads) are rejected.
pub fn emit_circuit<T: Real>(c: &Circuit<T>) -> Result<String, CompileError> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "qubits {}", c.n);
    for g in &c.gates {
        match g {
            Gate::Prim {
                gate: PrimitiveGate::H,
                wire,
            } => {
                let _ = writeln!(out, "h {wire}");
            }
            Gate::Prim {
                gate: PrimitiveGate::Ry(s, k),
                wire,
            } => {
                let _ = writeln!(out, "ry {} {} {}", s.glyph(), k, wire);
            }
            Gate::Prim {
                gate: PrimitiveGate::Rz(s, k),
                wire,
            } => {
                let _ = writeln!(out, "rz {} {} {}", s.glyph(), k, wire);
            }
            Gate::Prim {
                gate: PrimitiveGate::Phase(t),
                wire,
            } => {
                let _ = writeln!(out, "phase {} {}", t.to_f64().unwrap_or(f64::NAN), wire);
            }
            Gate::Prim {
                gate: PrimitiveGate::X,
                ..
            } => {
                return Err(CompileError::NoTextForm("bare x".into()));
            }
            Gate::RyFree { theta, wire } => {
                let _ = writeln!(out, "ry* {} {}", theta.to_f64().unwrap_or(f64::NAN), wire);
            }
            Gate::RzFree { theta, wire } => {
                let _ = writeln!(out, "rz* {} {}", theta.to_f64().unwrap_or(f64::NAN), wire);
            }
            Gate::Cnot { control, target } => {
                let _ = writeln!(out, "cnot {control} {target}");
            }
            Gate::Mcu {
                controls,
                target,
                gate,
            } => {
                let cs = controls
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                match gate {
                    PrimitiveGate::X => {
                        let _ = writeln!(out, "mcx {cs} ; {target}");
                    }
                    PrimitiveGate::Ry(s, k) => {
                        let _ = writeln!(out, "mcry {} {} {cs} ; {target}", s.glyph(), k);
                    }
                    PrimitiveGate::Phase(t) => {
                        let _ = writeln!(
                            out,
                            "mcphase {} {cs} ; {target}",
                            t.to_f64().unwrap_or(f64::NAN)
                        );
                    }
                    other => {
                        return Err(CompileError::NoTextForm(format!(
                            "controlled {}",
                            other.label()
                        )))
                    }
                }
            }
        }
    }
    Ok(out)
}
