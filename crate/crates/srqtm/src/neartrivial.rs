//! Near-trivial transformations: matrices that are the identity except for
//! one diagonal phase or one 2x2 rotation block. Provides construction,
//! decomposition of arbitrary unitaries into near-trivial factors, synthesis
//! of factors to circuits over the discrete gate set, and a single machine
//! that applies any encoded near-trivial transformation to a data register.

use num_complex::Complex;
use thiserror::Error;

use crate::builders::{BuildError, PrimitiveGate, Sign};
use crate::circuit::{dyadic_ry_terms, Circuit, CompileError, Gate, Precision};
use crate::machine::Machine;
use crate::matrix::CMatrix;
use crate::scalar::{real, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NtError {
    #[error("dimension {0} is not a power of two at least 2")]
    BadDimension(usize),
    #[error("indices must be distinct and below the dimension")]
    BadIndices,
    #[error("matrix is not unitary: ||U†U - I||max = {0}")]
    NotUnitary(f64),
    #[error("encoding widths do not match n={n}, m={m}")]
    WidthMismatch { n: usize, m: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Build(#[from] BuildError),
}

/// A near-trivial transformation on C^dim.
#[derive(Debug, Clone, PartialEq)]
pub enum NearTrivial<T: Real> {
    /// Identity except entry (j, j) = e^{iθ}.
    Phase { dim: usize, j: usize, theta: T },
    /// Identity except the rotation block on dimensions (j, k):
    /// M e_j = cos θ e_j + sin θ e_k, M e_k = -sin θ e_j + cos θ e_k.
    Rotation {
        dim: usize,
        j: usize,
        k: usize,
        theta: T,
    },
}

fn norm_angle<T: Real>(theta: T) -> T {
    let tau = T::PI() + T::PI();
    let mut t = theta % tau;
    if t < T::zero() {
        t = t + tau;
    }
    t
}

fn check_dim(dim: usize) -> Result<(), NtError> {
    if dim < 2 || dim & (dim - 1) != 0 {
        return Err(NtError::BadDimension(dim));
    }
    Ok(())
}

impl<T: Real> NearTrivial<T> {
    pub fn phase(dim: usize, j: usize, theta: T) -> Result<Self, NtError> {
        check_dim(dim)?;
        if j >= dim {
            return Err(NtError::BadIndices);
        }
        Ok(NearTrivial::Phase {
            dim,
            j,
            theta: norm_angle(theta),
        })
    }

    pub fn rotation(dim: usize, j: usize, k: usize, theta: T) -> Result<Self, NtError> {
        check_dim(dim)?;
        if j >= dim || k >= dim || j == k {
            return Err(NtError::BadIndices);
        }
        Ok(NearTrivial::Rotation {
            dim,
            j,
            k,
            theta: norm_angle(theta),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            NearTrivial::Phase { dim, .. } | NearTrivial::Rotation { dim, .. } => *dim,
        }
    }

    /// Adjoint, again near-trivial (the angle negates modulo 2π).
    pub fn dagger(&self) -> Self {
        match self {
            NearTrivial::Phase { dim, j, theta } => NearTrivial::Phase {
                dim: *dim,
                j: *j,
                theta: norm_angle(-*theta),
            },
            NearTrivial::Rotation { dim, j, k, theta } => NearTrivial::Rotation {
                dim: *dim,
                j: *j,
                k: *k,
                theta: norm_angle(-*theta),
            },
        }
    }
}

/// Dense matrix of a near-trivial transformation.
pub fn nt_matrix<T: Real>(nt: &NearTrivial<T>) -> CMatrix<T> {
    match nt {
        NearTrivial::Phase { dim, j, theta } => {
            let mut m = CMatrix::identity(*dim);
            m.set(*j, *j, Complex::from_polar(T::one(), *theta));
            m
        }
        NearTrivial::Rotation { dim, j, k, theta } => {
            let mut m = CMatrix::identity(*dim);
            let (c, s) = (theta.cos(), theta.sin());
            let z = T::zero();
            m.set(*j, *j, Complex::new(c, z));
            m.set(*k, *j, Complex::new(s, z));
            m.set(*j, *k, Complex::new(-s, z));
            m.set(*k, *k, Complex::new(c, z));
            m
        }
    }
}

// ---------------------------------------------------------------------------
// decomposition

fn apply_phase_left<T: Real>(w: &mut CMatrix<T>, row: usize, phi: T) {
    let f = Complex::from_polar(T::one(), phi);
    for c in 0..w.dim() {
        w.set(row, c, w.get(row, c) * f);
    }
}

fn apply_rotation_left<T: Real>(w: &mut CMatrix<T>, j: usize, k: usize, theta: T) {
    let (cs, sn) = (theta.cos(), theta.sin());
    for c in 0..w.dim() {
        let a = w.get(j, c);
        let b = w.get(k, c);
        let z = T::zero();
        w.set(j, c, a * Complex::new(cs, z) - b * Complex::new(sn, z));
        w.set(k, c, a * Complex::new(sn, z) + b * Complex::new(cs, z));
    }
}

/// Factor a unitary into near-trivial transformations whose product, in list
/// order, reassembles it. Sweeps columns left to right, zeroing subdiagonal
/// entries with rotation factors (phase-aligning complex pairs first) and
/// fixing residual diagonal phases. At most N(N-1) + N factors.
pub fn decompose_unitary<T: Real>(u: &CMatrix<T>, tol: T) -> Result<Vec<NearTrivial<T>>, NtError> {
    let n = u.dim();
    check_dim(n)?;
    let uerr = u.unitarity_error();
    if uerr > tol {
        return Err(NtError::NotUnitary(uerr.to_f64().unwrap_or(f64::NAN)));
    }
    let small = T::epsilon() * real(8.0);
    let mut w = u.clone();
    let mut applied: Vec<NearTrivial<T>> = Vec::new();

    for col in 0..n {
        for row in (col + 1)..n {
            let b = w.get(row, col);
            if b.norm() <= small {
                continue;
            }
            let a = w.get(col, col);
            let (ar, br) = if a.im.abs() <= small && b.im.abs() <= small {
                // real pair: keep the signs in the rotation, no phase factor
                (a.re, b.re)
            } else {
                let gamma = if a.norm() > small { a.arg() } else { b.arg() };
                let b_in_frame = b * Complex::from_polar(T::one(), -gamma);
                if b_in_frame.im.abs() <= small {
                    (
                        (a * Complex::from_polar(T::one(), -gamma)).re,
                        b_in_frame.re,
                    )
                } else {
                    // rotate row `row` so b picks up a's phase
                    let phi = norm_angle(gamma - b.arg());
                    apply_phase_left(&mut w, row, phi);
                    applied.push(NearTrivial::Phase {
                        dim: n,
                        j: row,
                        theta: phi,
                    });
                    (a.norm(), b.norm())
                }
            };
            let theta = -br.atan2(ar);
            apply_rotation_left(&mut w, col, row, theta);
            applied.push(NearTrivial::Rotation {
                dim: n,
                j: col,
                k: row,
                theta: norm_angle(theta),
            });
        }
        let d = w.get(col, col);
        let ang = d.arg();
        if ang.abs() > small {
            apply_phase_left(&mut w, col, -ang);
            applied.push(NearTrivial::Phase {
                dim: n,
                j: col,
                theta: norm_angle(-ang),
            });
        }
    }

    Ok(applied.into_iter().map(|t| t.dagger()).collect())
}

/// Product of the factors' matrices in list order.
pub fn reassemble<T: Real>(dim: usize, factors: &[NearTrivial<T>]) -> CMatrix<T> {
    let mut acc = CMatrix::identity(dim);
    for f in factors {
        acc = acc.mul(&nt_matrix(f));
    }
    acc
}

// ---------------------------------------------------------------------------
// synthesis to circuits

/// Bit of `value` at 1-based data wire `w` out of `n` (wire 1 is the most
/// significant bit of the dimension index).
fn bit_at(value: usize, w: usize, n: usize) -> bool {
    (value >> (n - w)) & 1 == 1
}

/// Two-gate stand-in for an X flip on a wire: Rz(π) then Ry(π) compose to X
/// up to a global phase, and both live in the discrete gate set.
fn push_x_flip<T: Real>(wire: usize, out: &mut Vec<Gate<T>>) {
    out.push(Gate::Prim {
        gate: PrimitiveGate::Rz(Sign::Plus, 0),
        wire,
    });
    out.push(Gate::Prim {
        gate: PrimitiveGate::Ry(Sign::Plus, 0),
        wire,
    });
}

/// Emit payload gates on `target`, controlled on pattern wires matching the
/// given bits (0-bits get X-flip conjugation) plus `extra` wires conditioned
/// on 1. An empty control set emits bare gates.
fn emit_pattern_controlled<T: Real>(
    pattern: &[(usize, bool)],
    extra: &[usize],
    target: usize,
    target_flip: bool,
    payloads: &[PrimitiveGate<T>],
    out: &mut Vec<Gate<T>>,
) {
    let flips: Vec<usize> = pattern
        .iter()
        .filter(|(_, v)| !v)
        .map(|(w, _)| *w)
        .chain(target_flip.then_some(target))
        .collect();
    for &w in &flips {
        push_x_flip(w, out);
    }
    let controls: Vec<usize> = pattern
        .iter()
        .map(|(w, _)| *w)
        .chain(extra.iter().copied())
        .collect();
    for g in payloads {
        if controls.is_empty() {
            out.push(Gate::Prim {
                gate: g.clone(),
                wire: target,
            });
        } else {
            out.push(Gate::Mcu {
                controls: controls.clone(),
                target,
                gate: g.clone(),
            });
        }
    }
    for &w in &flips {
        push_x_flip(w, out);
    }
}

/// Gray-code path data for a rotation pair (j, k): conjugation steps mapping
/// j next to k, the payload wire, and the payload orientation.
struct GrayPlan {
    steps: Vec<(usize, usize)>, // (intermediate value g_i, flipped wire)
    payload_wire: usize,
    payload_bit_of_k: bool,
}

fn gray_plan(j: usize, k: usize, n: usize) -> GrayPlan {
    let diff = j ^ k;
    let wires: Vec<usize> = (1..=n).filter(|w| bit_at(diff, *w, n)).collect();
    let payload_wire = *wires.last().expect("j != k");
    let mut steps = Vec::new();
    let mut g = j;
    for &w in &wires[..wires.len() - 1] {
        steps.push((g, w));
        g ^= 1 << (n - w);
    }
    GrayPlan {
        steps,
        payload_wire,
        payload_bit_of_k: bit_at(k, payload_wire, n),
    }
}

fn emit_gray_step<T: Real>(g: usize, w: usize, n: usize, out: &mut Vec<Gate<T>>) {
    let pattern: Vec<(usize, bool)> = (1..=n)
        .filter(|x| *x != w)
        .map(|x| (x, bit_at(g, x, n)))
        .collect();
    emit_pattern_controlled(&pattern, &[], w, false, &[PrimitiveGate::X], out);
}

/// Synthesize a near-trivial transformation into a circuit over the discrete
/// gate set. The result matches the transformation up to global phase, with
/// angle error at most π/2^m for rotation factors (phases are exact).
pub fn synthesize<T: Real>(nt: &NearTrivial<T>, p: Precision) -> Circuit<T> {
    let n = nt.dim().trailing_zeros() as usize;
    let mut gates: Vec<Gate<T>> = Vec::new();
    match nt {
        NearTrivial::Phase { j, theta, .. } => {
            if *theta != T::zero() {
                let target = (1..=n).find(|w| bit_at(*j, *w, n)).unwrap_or(n);
                let target_flip = !bit_at(*j, target, n);
                let pattern: Vec<(usize, bool)> = (1..=n)
                    .filter(|w| *w != target)
                    .map(|w| (w, bit_at(*j, w, n)))
                    .collect();
                emit_pattern_controlled(
                    &pattern,
                    &[],
                    target,
                    target_flip,
                    &[PrimitiveGate::Phase(*theta)],
                    &mut gates,
                );
            }
        }
        NearTrivial::Rotation { j, k, theta, .. } => {
            let terms = dyadic_ry_terms(*theta + *theta, p);
            if !terms.is_empty() {
                let plan = gray_plan(*j, *k, n);
                for &(g, w) in &plan.steps {
                    emit_gray_step(g, w, n, &mut gates);
                }
                let orient = |s: Sign| {
                    if plan.payload_bit_of_k {
                        s
                    } else {
                        match s {
                            Sign::Plus => Sign::Minus,
                            Sign::Minus => Sign::Plus,
                        }
                    }
                };
                let payloads: Vec<PrimitiveGate<T>> = terms
                    .iter()
                    .map(|(s, kk)| PrimitiveGate::Ry(orient(*s), *kk))
                    .collect();
                let pattern: Vec<(usize, bool)> = (1..=n)
                    .filter(|w| *w != plan.payload_wire)
                    .map(|w| (w, bit_at(*k, w, n)))
                    .collect();
                emit_pattern_controlled(
                    &pattern,
                    &[],
                    plan.payload_wire,
                    false,
                    &payloads,
                    &mut gates,
                );
                for &(g, w) in plan.steps.iter().rev() {
                    emit_gray_step(g, w, n, &mut gates);
                }
            }
        }
    }
    Circuit { n, gates }
}

// ---------------------------------------------------------------------------
// encodings

/// Bit-string encoding of a near-trivial transformation: `e` holds the kind
/// bit and the two dimension indices (most significant bit first), `r` holds
/// the angle as the dyadic fraction θ = 2π·(0.r₁r₂…r_m).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NtEncoding {
    pub e: Vec<bool>,
    pub r: Vec<bool>,
}

impl NtEncoding {
    pub fn bits_string(&self) -> String {
        let fmt = |bits: &[bool]| {
            bits.iter()
                .map(|b| if *b { '1' } else { '0' })
                .collect::<String>()
        };
        format!("{}|{}", fmt(&self.e), fmt(&self.r))
    }
}

pub fn e_width(n: usize) -> usize {
    1 + 2 * n
}

fn quantize_angle<T: Real>(theta: T, m: usize) -> u64 {
    let tau = 2.0 * std::f64::consts::PI;
    let v = theta.to_f64().unwrap_or(0.0).rem_euclid(tau) / tau * f64::powi(2.0, m as i32);
    let w = v + 0.5;
    let f = w.floor();
    // ties round down
    let q = if w == f { f - 1.0 } else { f };
    (q.max(0.0) as u64).rem_euclid(1u64 << m)
}

fn index_bits(value: usize, n: usize) -> Vec<bool> {
    (0..n).map(|b| (value >> (n - 1 - b)) & 1 == 1).collect()
}

fn bits_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, b| (acc << 1) | usize::from(*b))
}

/// Encode a near-trivial transformation on 2^n dimensions with an m-bit
/// angle. The angle quantizes to the nearest m-bit dyadic fraction of 2π
/// (error at most 2π/2^{m+1}, ties rounding down).
pub fn encode<T: Real>(nt: &NearTrivial<T>, n: usize, m: usize) -> Result<NtEncoding, NtError> {
    if nt.dim() != 1usize << n {
        return Err(NtError::WidthMismatch { n, m });
    }
    let (kind, j, k, theta) = match nt {
        NearTrivial::Phase { j, theta, .. } => (false, *j, 0usize, *theta),
        NearTrivial::Rotation { j, k, theta, .. } => (true, *j, *k, *theta),
    };
    let mut e = vec![kind];
    e.extend(index_bits(j, n));
    e.extend(index_bits(k, n));
    let q = quantize_angle(theta, m);
    let r = (0..m).map(|b| (q >> (m - 1 - b)) & 1 == 1).collect();
    Ok(NtEncoding { e, r })
}

/// Decode an encoding back to a near-trivial transformation. Rotation
/// encodings with equal indices denote the identity and decode to the zero
/// phase (the universal machine applies nothing for them).
pub fn decode<T: Real>(enc: &NtEncoding, n: usize, m: usize) -> Result<NearTrivial<T>, NtError> {
    if enc.e.len() != e_width(n) || enc.r.len() != m {
        return Err(NtError::WidthMismatch { n, m });
    }
    let kind = enc.e[0];
    let j = bits_index(&enc.e[1..=n]);
    let k = bits_index(&enc.e[n + 1..=2 * n]);
    let q = enc.r.iter().fold(0u64, |acc, b| (acc << 1) | u64::from(*b));
    let theta: T = real(2.0 * std::f64::consts::PI * q as f64 / f64::powi(2.0, m as i32));
    if !kind {
        NearTrivial::phase(1 << n, j, theta)
    } else if j == k {
        NearTrivial::phase(1 << n, 0, T::zero())
    } else {
        NearTrivial::rotation(1 << n, j, k, theta)
    }
}

// ---------------------------------------------------------------------------
// the universal machine

/// Cell layout of the universal machine: data cells, then the kind cell, the
/// two index registers, and the angle register.
#[derive(Debug, Clone, Copy)]
pub struct UniversalLayout {
    pub n: usize,
    pub m: usize,
}

impl UniversalLayout {
    pub fn new(n: usize, m: usize) -> Self {
        UniversalLayout { n, m }
    }

    pub fn data_wire(&self, w: usize) -> usize {
        w
    }

    pub fn kind_wire(&self) -> usize {
        self.n + 1
    }

    pub fn j_wire(&self, b: usize) -> usize {
        self.n + 1 + b
    }

    pub fn k_wire(&self, b: usize) -> usize {
        2 * self.n + 1 + b
    }

    pub fn r_wire(&self, t: usize) -> usize {
        3 * self.n + 1 + t
    }

    pub fn total_wires(&self) -> usize {
        3 * self.n + 1 + self.m
    }
}

/// The circuit behind [`universal_machine`]: for every encodable dimension
/// pattern it applies the corresponding transformation to the data wires,
/// multiplexed on the encoding wires, with the angle driven bit by bit from
/// the `r` register.
pub fn universal_circuit<T: Real>(n: usize, p: Precision) -> Circuit<T> {
    let m = p.bits() as usize;
    let lay = UniversalLayout::new(n, m);
    let mut gates: Vec<Gate<T>> = Vec::new();
    let dim = 1usize << n;

    // phase blocks: kind bit 0, k wires ignored
    for j in 0..dim {
        let target = (1..=n).find(|w| bit_at(j, *w, n)).unwrap_or(n);
        let target_flip = !bit_at(j, target, n);
        let mut pattern: Vec<(usize, bool)> = vec![(lay.kind_wire(), false)];
        pattern.extend((1..=n).map(|b| (lay.j_wire(b), bit_at(j, b, n))));
        pattern.extend(
            (1..=n)
                .filter(|w| *w != target)
                .map(|w| (lay.data_wire(w), bit_at(j, w, n))),
        );
        for t in 1..=m {
            let theta: T = real(2.0 * std::f64::consts::PI / f64::powi(2.0, t as i32));
            emit_pattern_controlled(
                &pattern,
                &[lay.r_wire(t)],
                lay.data_wire(target),
                target_flip,
                &[PrimitiveGate::Phase(theta)],
                &mut gates,
            );
        }
    }

    // rotation blocks: kind bit 1, every ordered pair of distinct indices
    for j in 0..dim {
        for k in 0..dim {
            if j == k {
                continue;
            }
            let plan = gray_plan(j, k, n);
            let mut e_pattern: Vec<(usize, bool)> = vec![(lay.kind_wire(), true)];
            e_pattern.extend((1..=n).map(|b| (lay.j_wire(b), bit_at(j, b, n))));
            e_pattern.extend((1..=n).map(|b| (lay.k_wire(b), bit_at(k, b, n))));
            let mut pattern = e_pattern;
            pattern.extend(
                (1..=n)
                    .filter(|w| *w != plan.payload_wire)
                    .map(|w| (lay.data_wire(w), bit_at(k, w, n))),
            );
            let orient = |s: Sign| {
                if plan.payload_bit_of_k {
                    s
                } else {
                    match s {
                        Sign::Plus => Sign::Minus,
                        Sign::Minus => Sign::Plus,
                    }
                }
            };
            let mut block: Vec<Gate<T>> = Vec::new();
            for t in 1..=m {
                // rotation by 2π/2^t needs Ry angle 4π/2^t
                let angle: T = real(4.0 * std::f64::consts::PI / f64::powi(2.0, t as i32));
                let payloads: Vec<PrimitiveGate<T>> = dyadic_ry_terms(angle, p)
                    .into_iter()
                    .map(|(s, kk)| PrimitiveGate::Ry(orient(s), kk))
                    .collect();
                emit_pattern_controlled(
                    &pattern,
                    &[lay.r_wire(t)],
                    lay.data_wire(plan.payload_wire),
                    false,
                    &payloads,
                    &mut block,
                );
            }
            for &(g, w) in &plan.steps {
                emit_gray_step(g, w, n, &mut gates);
            }
            gates.extend(block);
            for &(g, w) in plan.steps.iter().rev() {
                emit_gray_step(g, w, n, &mut gates);
            }
        }
    }

    Circuit {
        n: lay.total_wires(),
        gates,
    }
}

/// One machine over data cells 1..n and encoding cells n+1..n+|e|+m that
/// applies the transformation decoded from the encoding cells to the data
/// register, leaving the encoding cells unchanged.
pub fn universal_machine<T: Real>(n: usize, p: Precision) -> Result<Machine<T>, NtError> {
    let circuit = universal_circuit::<T>(n, p);
    let m = crate::circuit::compile(&circuit, p)?;
    Ok(m.with_name(format!("universal-n{}-m{}", n, p.bits())))
}

// ---------------------------------------------------------------------------
// text formats

/// Parse near-trivial spec lines: `phase <N> <j> <theta>` or
/// `rot <N> <j> <k> <theta>`, one per line, `#` comments allowed.
pub fn parse_nt_list<T: Real>(text: &str) -> Result<Vec<NearTrivial<T>>, NtError> {
    let mut out = Vec::new();
    for (ix, raw) in text.lines().enumerate() {
        let lineno = ix + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: &str| NtError::Parse {
            line: lineno,
            msg: msg.to_string(),
        };
        let num = |tok: &str| tok.parse::<usize>().map_err(|_| err("bad integer"));
        let ang = |tok: &str| {
            tok.parse::<f64>()
                .ok()
                .filter(|t| t.is_finite())
                .map(real::<T>)
                .ok_or_else(|| err("bad angle"))
        };
        match toks.as_slice() {
            ["phase", n, j, theta] => out.push(NearTrivial::phase(num(n)?, num(j)?, ang(theta)?)?),
            ["rot", n, j, k, theta] => out.push(NearTrivial::rotation(
                num(n)?,
                num(j)?,
                num(k)?,
                ang(theta)?,
            )?),
            _ => {
                return Err(err(
                    "expected 'phase <N> <j> <theta>' or 'rot <N> <j> <k> <theta>'",
                ))
            }
        }
    }
    Ok(out)
}

pub fn emit_nt_list<T: Real>(factors: &[NearTrivial<T>]) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for f in factors {
        match f {
            NearTrivial::Phase { dim, j, theta } => {
                let _ = writeln!(
                    out,
                    "phase {} {} {}",
                    dim,
                    j,
                    theta.to_f64().unwrap_or(f64::NAN)
                );
            }
            NearTrivial::Rotation { dim, j, k, theta } => {
                let _ = writeln!(
                    out,
                    "rot {} {} {} {}",
                    dim,
                    j,
                    k,
                    theta.to_f64().unwrap_or(f64::NAN)
                );
            }
        }
    }
    out
}

/// Parse a dense matrix: a `dim <N>` header then N rows of N amplitude
/// tokens (the `.sqtm` amplitude grammar applies entry-wise).
pub fn parse_cmatrix<T: Real>(text: &str) -> Result<CMatrix<T>, NtError> {
    let mut dim: Option<usize> = None;
    let mut rows: Vec<Vec<Complex<T>>> = Vec::new();
    for (ix, raw) in text.lines().enumerate() {
        let lineno = ix + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| NtError::Parse { line: lineno, msg };
        match dim {
            None => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() == 2 && toks[0] == "dim" {
                    dim = Some(
                        toks[1]
                            .parse::<usize>()
                            .map_err(|_| err("bad dimension".to_string()))?,
                    );
                } else {
                    return Err(err("expected 'dim <N>' header".to_string()));
                }
            }
            Some(n) => {
                let row = line
                    .split_whitespace()
                    .map(|tok| crate::qstd::parse_amplitude::<T>(tok).map(|(v, _)| v))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(err)?;
                if row.len() != n {
                    return Err(err(format!("expected {n} entries, found {}", row.len())));
                }
                rows.push(row);
            }
        }
    }
    let n = dim.ok_or(NtError::Parse {
        line: 0,
        msg: "missing 'dim <N>' header".to_string(),
    })?;
    if rows.len() != n {
        return Err(NtError::Parse {
            line: 0,
            msg: format!("expected {n} rows, found {}", rows.len()),
        });
    }
    Ok(CMatrix::from_rows(rows))
}

pub fn emit_cmatrix<T: Real>(m: &CMatrix<T>) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "dim {}", m.dim());
    for i in 0..m.dim() {
        let row: Vec<String> = (0..m.dim())
            .map(|j| crate::qstd::emit_amplitude(m.get(i, j), &None))
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::circuit_unitary;
    use crate::oracle::compare;
    use crate::scalar::cplx;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(bits: u32) -> Precision {
        Precision::new(bits).unwrap()
    }

    #[test]
    fn phase_zero_is_identity() {
        let nt = NearTrivial::<f64>::phase(4, 1, 0.0).unwrap();
        assert!(nt_matrix(&nt).max_abs_diff(&CMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn rotation_block_matches_definition() {
        let theta = 0.7f64;
        let nt = NearTrivial::rotation(2, 0, 1, theta).unwrap();
        let m = nt_matrix(&nt);
        assert!((m.get(0, 0).re - theta.cos()).abs() < 1e-15);
        assert!((m.get(0, 1).re + theta.sin()).abs() < 1e-15);
        assert!((m.get(1, 0).re - theta.sin()).abs() < 1e-15);
        assert!((m.get(1, 1).re - theta.cos()).abs() < 1e-15);
    }

    #[test]
    fn phase_pi_on_dimension_two_of_four() {
        let nt = NearTrivial::<f64>::phase(4, 2, std::f64::consts::PI).unwrap();
        let m = nt_matrix(&nt);
        let mut expect = CMatrix::identity(4);
        expect.set(2, 2, cplx(-1.0, 0.0));
        assert!(m.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn nt_matrices_are_unitary() {
        let cases: Vec<NearTrivial<f64>> = vec![
            NearTrivial::phase(8, 5, 1.23).unwrap(),
            NearTrivial::rotation(8, 2, 6, 2.5).unwrap(),
            NearTrivial::rotation(4, 3, 0, 4.0).unwrap(),
        ];
        for nt in cases {
            assert!(nt_matrix(&nt).unitarity_error() <= 1e-12);
        }
    }

    #[test]
    fn decompose_identity_is_empty() {
        let u: CMatrix<f64> = CMatrix::identity(4);
        let factors = decompose_unitary(&u, 1e-10).unwrap();
        assert!(factors.is_empty());
    }

    #[test]
    fn decompose_recovers_single_rotation() {
        for theta in [0.3f64, 1.234, 2.5, std::f64::consts::FRAC_PI_2, 5.9] {
            let nt = NearTrivial::rotation(2, 0, 1, theta).unwrap();
            let u = nt_matrix(&nt);
            let factors = decompose_unitary(&u, 1e-10).unwrap();
            assert_eq!(factors.len(), 1, "theta {theta}");
            match &factors[0] {
                NearTrivial::Rotation {
                    j: 0,
                    k: 1,
                    theta: t,
                    ..
                } => {
                    let d = (t - norm_angle(theta)).abs();
                    let d = d.min((d - 2.0 * std::f64::consts::PI).abs());
                    assert!(d < 1e-12, "theta {theta} recovered {t}");
                }
                other => panic!("unexpected factor {other:?}"),
            }
        }
        // θ = π has a zero off-diagonal, so the sweep emits two phase flips
        // instead; reassembly must still be exact.
        let nt = NearTrivial::rotation(2, 0, 1, std::f64::consts::PI).unwrap();
        let u = nt_matrix(&nt);
        let factors = decompose_unitary(&u, 1e-10).unwrap();
        assert!(reassemble(2, &factors).max_abs_diff(&u) < 1e-12);
    }

    fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMatrix<f64> {
        // Gram-Schmidt on a random complex matrix.
        let mut cols: Vec<Vec<Complex<f64>>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                    .collect()
            })
            .collect();
        for i in 0..n {
            for j in 0..i {
                let proj: Complex<f64> = cols[j]
                    .iter()
                    .zip(cols[i].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                for r in 0..n {
                    let adj = proj * cols[j][r];
                    cols[i][r] -= adj;
                }
            }
            let norm: f64 = cols[i].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for r in 0..n {
                cols[i][r] /= norm;
            }
        }
        let mut m = CMatrix::zeros(n);
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                m.set(r, c, *v);
            }
        }
        m
    }

    #[test]
    fn decompose_random_unitaries_reassemble() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [2usize, 4, 8] {
            for _ in 0..3 {
                let u = random_unitary(n, &mut rng);
                let factors = decompose_unitary(&u, 1e-10).unwrap();
                assert!(factors.len() <= n * (n - 1) + n);
                let back = reassemble(n, &factors);
                assert!(back.max_abs_diff(&u) <= 1e-9, "n={n}");
            }
        }
    }

    #[test]
    fn decompose_rejects_non_unitary() {
        let mut m: CMatrix<f64> = CMatrix::identity(2);
        m.set(0, 0, cplx(2.0, 0.0));
        assert!(matches!(
            decompose_unitary(&m, 1e-10),
            Err(NtError::NotUnitary(_))
        ));
    }

    #[test]
    fn synthesize_zero_phase_is_empty() {
        let nt = NearTrivial::<f64>::phase(4, 3, 0.0).unwrap();
        let c = synthesize(&nt, p(6));
        assert!(c.gates.is_empty());
    }

    #[test]
    fn synthesize_half_pi_rotation_on_one_qubit() {
        let nt = NearTrivial::rotation(2, 0, 1, std::f64::consts::FRAC_PI_2).unwrap();
        let c = synthesize(&nt, p(6));
        let u = circuit_unitary(&c).unwrap();
        let (d, _) = compare(&u, &nt_matrix(&nt), 1e-12).unwrap();
        assert!(d <= 1e-12, "distance {d}");
    }

    #[test]
    fn synthesize_matches_matrix_up_to_phase() {
        let m_bits = 10u32;
        let tolerance =
            |n: usize| n as f64 * std::f64::consts::PI / f64::powi(2.0, m_bits as i32) + 1e-9;
        let mut cases: Vec<NearTrivial<f64>> = Vec::new();
        for n in 1..=3usize {
            let dim = 1 << n;
            cases.push(NearTrivial::phase(dim, 0, 1.1).unwrap());
            cases.push(NearTrivial::phase(dim, dim - 1, 2.2).unwrap());
            for (j, k) in [(0usize, dim - 1), (dim - 1, 0), (0, 1)] {
                if j != k {
                    cases.push(NearTrivial::rotation(dim, j, k, 0.9).unwrap());
                }
            }
        }
        for nt in cases {
            let n = nt.dim().trailing_zeros() as usize;
            let c = synthesize(&nt, p(m_bits));
            let u = circuit_unitary(&c).unwrap();
            let (d, _) = compare(&u, &nt_matrix(&nt), 1e-12).unwrap();
            assert!(d <= tolerance(n), "nt {nt:?} distance {d}");
        }
    }

    #[test]
    fn synthesize_exhaustive_pairs_up_to_three_qubits() {
        let m_bits = 10u32;
        let angles = [
            0.0f64,
            std::f64::consts::FRAC_PI_2,
            2.0 * std::f64::consts::PI * 5.0 / 16.0,
        ];
        for n in 1..=3usize {
            let dim = 1 << n;
            let tolerance = n as f64 * std::f64::consts::PI / f64::powi(2.0, m_bits as i32) + 1e-9;
            for j in 0..dim {
                for k in 0..dim {
                    if j == k {
                        continue;
                    }
                    for &theta in &angles {
                        let nt = NearTrivial::rotation(dim, j, k, theta).unwrap();
                        let c = synthesize(&nt, p(m_bits));
                        let u = circuit_unitary(&c).unwrap();
                        let (d, _) = compare(&u, &nt_matrix(&nt), 1e-12).unwrap();
                        assert!(d <= tolerance, "rot({dim},{j},{k},{theta}): {d}");
                    }
                }
                for &theta in &angles {
                    let nt = NearTrivial::phase(dim, j, theta).unwrap();
                    let c = synthesize(&nt, p(m_bits));
                    let u = circuit_unitary(&c).unwrap();
                    let (d, _) = compare(&u, &nt_matrix(&nt), 1e-12).unwrap();
                    assert!(d <= tolerance, "phase({dim},{j},{theta}): {d}");
                }
            }
        }
    }

    #[test]
    fn gray_conjugation_spans_three_bits() {
        // j and k differing in 3 bits exercise two conjugation steps around
        // the payload.
        let nt = NearTrivial::rotation(8, 0b001, 0b110, 1.3).unwrap();
        let c = synthesize(&nt, p(10));
        let mcx_count = c
            .gates
            .iter()
            .filter(|g| {
                matches!(
                    g,
                    Gate::Mcu {
                        gate: PrimitiveGate::X,
                        ..
                    }
                )
            })
            .count();
        assert_eq!(mcx_count, 4);
        let u = circuit_unitary(&c).unwrap();
        let (d, _) = compare(&u, &nt_matrix(&nt), 1e-12).unwrap();
        assert!(
            d <= 3.0 * std::f64::consts::PI / 1024.0 + 1e-9,
            "distance {d}"
        );
    }

    #[test]
    fn encode_decode_round_trip() {
        // π/2 = 2π·0.01₂ is exactly representable with m = 2.
        let nt = NearTrivial::<f64>::phase(2, 0, std::f64::consts::FRAC_PI_2).unwrap();
        let enc = encode(&nt, 1, 2).unwrap();
        assert_eq!(enc.r, vec![false, true]);
        let back: NearTrivial<f64> = decode(&enc, 1, 2).unwrap();
        assert_eq!(back, nt);

        let theta = 2.0 * std::f64::consts::PI * 5.0 / 16.0;
        let nt = NearTrivial::<f64>::rotation(4, 1, 2, theta).unwrap();
        let enc = encode(&nt, 2, 4).unwrap();
        let back: NearTrivial<f64> = decode(&enc, 2, 4).unwrap();
        match (nt, back) {
            (
                NearTrivial::Rotation {
                    j, k, theta: t1, ..
                },
                NearTrivial::Rotation {
                    j: j2,
                    k: k2,
                    theta: t2,
                    ..
                },
            ) => {
                assert_eq!((j, k), (j2, k2));
                assert!((t1 - t2).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decode_all_zero_is_identity_phase() {
        let enc = NtEncoding {
            e: vec![false; 3],
            r: vec![false; 3],
        };
        let nt: NearTrivial<f64> = decode(&enc, 1, 3).unwrap();
        assert_eq!(
            nt,
            NearTrivial::Phase {
                dim: 2,
                j: 0,
                theta: 0.0
            }
        );
    }

    #[test]
    fn decode_rejects_wrong_widths() {
        let enc = NtEncoding {
            e: vec![false; 3],
            r: vec![false; 2],
        };
        assert!(matches!(
            decode::<f64>(&enc, 1, 3),
            Err(NtError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn quantization_error_bound_and_tie_break() {
        let m = 3usize;
        let tau = 2.0 * std::f64::consts::PI;
        for i in 0..32 {
            let theta = tau * i as f64 / 32.0;
            let q = quantize_angle(theta, m);
            let back = tau * q as f64 / 8.0;
            let mut d = (theta - back).abs();
            d = d.min((d - tau).abs());
            assert!(d <= tau / 16.0 + 1e-12, "theta {theta} q {q}");
        }
        // exact tie: 2π·(1/16) sits halfway between 0 and 2π/8; ties go down
        assert_eq!(quantize_angle(tau / 16.0, m), 0);
    }

    #[test]
    fn nt_list_round_trip() {
        let factors: Vec<NearTrivial<f64>> = vec![
            NearTrivial::phase(4, 2, 1.5).unwrap(),
            NearTrivial::rotation(4, 0, 3, 0.25).unwrap(),
        ];
        let text = emit_nt_list(&factors);
        let back: Vec<NearTrivial<f64>> = parse_nt_list(&text).unwrap();
        assert_eq!(factors, back);
    }

    #[test]
    fn cmatrix_text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_unitary(4, &mut rng);
        let text = emit_cmatrix(&u);
        let back: CMatrix<f64> = parse_cmatrix(&text).unwrap();
        assert!(u.max_abs_diff(&back) == 0.0);
    }
}

#[cfg(test)]
mod universal_tests {
    use super::*;
    use crate::oracle::compare;
    use crate::sim::{run, Tape};

    /// Apply the universal machine to one (encoding, data-basis) input and
    /// read back the 2x2 action on the data cell, checking the encoding
    /// cells come back unchanged.
    fn data_action(
        m: &crate::machine::Machine<f64>,
        lay: &UniversalLayout,
        enc: &NtEncoding,
    ) -> CMatrix<f64> {
        let blank = m.blank();
        let zero = m.symbol_index("0").unwrap();
        let one = m.symbol_index("1").unwrap();
        let sym = |b: bool| if b { one } else { zero };
        let n = lay.n;
        let mut out = CMatrix::zeros(1 << n);
        for basis in 0..(1usize << n) {
            let mut cells = Vec::new();
            for w in 1..=n {
                cells.push(sym((basis >> (n - w)) & 1 == 1));
            }
            for &b in &enc.e {
                cells.push(sym(b));
            }
            for &b in &enc.r {
                cells.push(sym(b));
            }
            let input = Tape::from_cell1(&cells, blank);
            let (s, _) = run(m, &input, 1_000_000).unwrap();
            for (cfg, amp) in s.terms() {
                // encoding cells unchanged
                for (off, &b) in enc.e.iter().chain(enc.r.iter()).enumerate() {
                    assert_eq!(
                        cfg.tape.read(n + 1 + off, blank),
                        sym(b),
                        "encoding cell changed"
                    );
                }
                let mut index = 0usize;
                for w in 1..=n {
                    let s = cfg.tape.read(w, blank);
                    index = (index << 1) | usize::from(s == one);
                }
                out.add_to(index, basis, *amp);
            }
        }
        out
    }

    #[test]
    fn universal_machine_small_sweep() {
        let n = 1usize;
        let m_bits = 2u32;
        let p = Precision::new(m_bits).unwrap();
        let lay = UniversalLayout::new(n, m_bits as usize);
        let machine = universal_machine::<f64>(n, p).unwrap();
        assert!(crate::checks::classify(&machine).all_ok());
        let tolerance = std::f64::consts::PI / f64::powi(2.0, m_bits as i32);
        for e_val in 0..(1u32 << e_width(n)) {
            for r_val in 0..(1u32 << m_bits) {
                let e: Vec<bool> = (0..e_width(n))
                    .map(|b| (e_val >> (e_width(n) - 1 - b)) & 1 == 1)
                    .collect();
                let r: Vec<bool> = (0..m_bits as usize)
                    .map(|b| (r_val >> (m_bits as usize - 1 - b)) & 1 == 1)
                    .collect();
                let enc = NtEncoding { e, r };
                let got = data_action(&machine, &lay, &enc);
                let nt: NearTrivial<f64> = decode(&enc, n, m_bits as usize).unwrap();
                let expect = nt_matrix(&nt);
                let (d, _) = compare(&got, &expect, 1e-9).unwrap();
                assert!(
                    d <= tolerance,
                    "enc {} decoded {nt:?}: distance {d}",
                    enc.bits_string()
                );
            }
        }
    }
}
