//! Machine text format and state transition diagrams.
//!
//! This module owns the `.sqtm` line format (header lines plus one `rule:`
//! line per transition, `#`-prefixed comment lines), the amplitude grammar
//! with its symbolic tokens, and the diagram form of a machine: one node per
//! state annotated with its entry direction, one labelled edge per rule,
//! exported as a DOT graph.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex;
use thiserror::Error;

use crate::checks::{check_rotational, direction_map, RotationalCheck, UnidirectionalCheck};
use crate::machine::{Direction, Machine, MachineError, TransitionRule};
use crate::scalar::{cplx, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown amplitude token {token:?}")]
    UnknownToken { line: usize, token: String },
    #[error("line {line}: duplicate rule for ({from},{read}) -> ({write},{to})")]
    DuplicateRule {
        line: usize,
        from: String,
        read: String,
        write: String,
        to: String,
    },
    #[error(transparent)]
    Machine(#[from] MachineError),
}

/// Parse an amplitude token: a decimal `a`, `a+bi`, `a-bi`, or one of the
/// symbolic forms `1/sqrt(2)`, `cos(pi/2^k)`, `sin(pi/2^k)`,
/// `exp(i*pi/2^k)`, each optionally negated. Returns the value and, for
/// symbolic inputs, the canonical spelling for re-emission.
pub fn parse_amplitude<T: Real>(token: &str) -> Result<(Complex<T>, Option<String>), String> {
    let token = token.trim();
    if token.is_empty() {
        return Err("empty amplitude".to_string());
    }
    let (negated, body) = match token.strip_prefix('-') {
        Some(rest) if is_symbolic(rest.trim()) => (true, rest.trim()),
        _ => (false, token),
    };
    if is_symbolic(body) {
        let v: Complex<T> = eval_symbolic(body)?;
        let v = if negated { -v } else { v };
        let canonical = format!("{}{}", if negated { "-" } else { "" }, body);
        return Ok((v, Some(canonical)));
    }
    parse_decimal_complex(token).map(|v| (v, None))
}

fn is_symbolic(s: &str) -> bool {
    s == "1/sqrt(2)"
        || (s.starts_with("cos(pi/2^") && s.ends_with(')'))
        || (s.starts_with("sin(pi/2^") && s.ends_with(')'))
        || (s.starts_with("exp(i*pi/2^") && s.ends_with(')'))
}

fn eval_symbolic<T: Real>(s: &str) -> Result<Complex<T>, String> {
    if s == "1/sqrt(2)" {
        return Ok(cplx(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    }
    let k_of = |prefix: &str| -> Result<u32, String> {
        s[prefix.len()..s.len() - 1]
            .parse::<u32>()
            .ok()
            .filter(|k| *k <= 60)
            .ok_or_else(|| format!("bad exponent in {s:?}"))
    };
    if s.starts_with("cos(pi/2^") {
        let k = k_of("cos(pi/2^")?;
        return Ok(cplx(
            (std::f64::consts::PI / f64::powi(2.0, k as i32)).cos(),
            0.0,
        ));
    }
    if s.starts_with("sin(pi/2^") {
        let k = k_of("sin(pi/2^")?;
        return Ok(cplx(
            (std::f64::consts::PI / f64::powi(2.0, k as i32)).sin(),
            0.0,
        ));
    }
    if s.starts_with("exp(i*pi/2^") {
        let k = k_of("exp(i*pi/2^")?;
        let theta = std::f64::consts::PI / f64::powi(2.0, k as i32);
        return Ok(cplx(theta.cos(), theta.sin()));
    }
    Err(format!("unknown symbolic token {s:?}"))
}

fn parse_decimal_complex<T: Real>(s: &str) -> Result<Complex<T>, String> {
    // Split at the first +/- that is not leading and not an exponent sign.
    let bytes = s.as_bytes();
    let mut split = None;
    for i in 1..bytes.len() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
            split = Some(i);
        }
    }
    match split {
        Some(i) if s.ends_with('i') => {
            let re: f64 = s[..i]
                .parse()
                .map_err(|_| format!("bad real part in {s:?}"))?;
            let im_str = &s[i..s.len() - 1];
            if im_str == "+" || im_str == "-" {
                return Err(format!("missing imaginary magnitude in {s:?}"));
            }
            let im: f64 = im_str
                .parse()
                .map_err(|_| format!("bad imaginary part in {s:?}"))?;
            Ok(cplx(re, im))
        }
        _ => {
            if s.ends_with('i') {
                return Err(format!("unknown amplitude token {s:?}"));
            }
            let re: f64 = s
                .parse()
                .map_err(|_| format!("unknown amplitude token {s:?}"))?;
            Ok(cplx(re, 0.0))
        }
    }
}

/// Canonical emission: the symbolic spelling when one was recorded,
/// otherwise 17-significant-digit decimals (exact for f64 round-trips).
pub fn emit_amplitude<T: Real>(amp: Complex<T>, form: &Option<String>) -> String {
    if let Some(f) = form {
        return f.clone();
    }
    let re = amp.re.to_f64().unwrap_or(f64::NAN);
    let im = amp.im.to_f64().unwrap_or(f64::NAN);
    if im == 0.0 {
        format!("{re:.16e}")
    } else if im > 0.0 {
        format!("{re:.16e}+{im:.16e}i")
    } else {
        format!("{re:.16e}-{:.16e}i", -im)
    }
}

/// Short human-readable amplitude for diagram labels.
fn label_amplitude<T: Real>(amp: Complex<T>, form: &Option<String>) -> String {
    if let Some(f) = form {
        return f.clone();
    }
    let re = amp.re.to_f64().unwrap_or(f64::NAN);
    let im = amp.im.to_f64().unwrap_or(f64::NAN);
    if im == 0.0 {
        format!("{re}")
    } else if im > 0.0 {
        format!("{re}+{im}i")
    } else {
        format!("{re}-{}i", -im)
    }
}

/// Parse a machine from `.sqtm` text.
pub fn parse_machine<T: Real>(text: &str) -> Result<Machine<T>, ParseError> {
    let mut name = None;
    let mut alphabet: Option<Vec<String>> = None;
    let mut states: Option<Vec<String>> = None;
    let mut start = None;
    let mut final_state = None;
    let mut rules: Vec<TransitionRule<T>> = Vec::new();
    let mut seen: std::collections::HashSet<(String, String, String, String)> = Default::default();

    let syntax = |line: usize, msg: &str| ParseError::Syntax {
        line,
        msg: msg.to_string(),
    };

    for (ix, raw) in text.lines().enumerate() {
        let lineno = ix + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("machine:") {
            if name.replace(rest.trim().to_string()).is_some() {
                return Err(syntax(lineno, "duplicate machine: line"));
            }
        } else if let Some(rest) = line.strip_prefix("alphabet:") {
            let syms = rest.split(',').map(|s| s.trim().to_string()).collect();
            if alphabet.replace(syms).is_some() {
                return Err(syntax(lineno, "duplicate alphabet: line"));
            }
        } else if let Some(rest) = line.strip_prefix("states:") {
            let st = rest.split(',').map(|s| s.trim().to_string()).collect();
            if states.replace(st).is_some() {
                return Err(syntax(lineno, "duplicate states: line"));
            }
        } else if let Some(rest) = line.strip_prefix("start:") {
            if start.replace(rest.trim().to_string()).is_some() {
                return Err(syntax(lineno, "duplicate start: line"));
            }
        } else if let Some(rest) = line.strip_prefix("final:") {
            if final_state.replace(rest.trim().to_string()).is_some() {
                return Err(syntax(lineno, "duplicate final: line"));
            }
        } else if let Some(rest) = line.strip_prefix("rule:") {
            let (lhs, rhs) = rest
                .split_once("->")
                .ok_or_else(|| syntax(lineno, "rule line missing '->'"))?;
            let mut lhs_parts = lhs.split(',').map(str::trim);
            let from = lhs_parts.next().filter(|s| !s.is_empty());
            let read = lhs_parts.next().filter(|s| !s.is_empty());
            let (from, read) = match (from, read, lhs_parts.next()) {
                (Some(f), Some(r), None) => (f.to_string(), r.to_string()),
                _ => {
                    return Err(syntax(
                        lineno,
                        "rule left-hand side must be '<state>,<symbol>'",
                    ))
                }
            };
            let (target, amp_str) = rhs
                .rsplit_once(':')
                .ok_or_else(|| syntax(lineno, "rule line missing ': <amplitude>'"))?;
            let mut t_parts = target.split(',').map(str::trim);
            let (write, to, dir) = match (
                t_parts.next(),
                t_parts.next(),
                t_parts.next(),
                t_parts.next(),
            ) {
                (Some(w), Some(t), Some(d), None) if !w.is_empty() && !t.is_empty() => {
                    let dir = (d.len() == 1)
                        .then(|| Direction::from_letter(d.chars().next().unwrap()))
                        .flatten()
                        .ok_or_else(|| syntax(lineno, "direction must be L or R"))?;
                    (w.to_string(), t.to_string(), dir)
                }
                _ => {
                    return Err(syntax(
                        lineno,
                        "rule right-hand side must be '<symbol>,<state>,<L|R> : <amplitude>'",
                    ))
                }
            };
            let (amp, form) =
                parse_amplitude::<T>(amp_str).map_err(|_| ParseError::UnknownToken {
                    line: lineno,
                    token: amp_str.trim().to_string(),
                })?;
            if !seen.insert((from.clone(), read.clone(), write.clone(), to.clone())) {
                return Err(ParseError::DuplicateRule {
                    line: lineno,
                    from,
                    read,
                    write,
                    to,
                });
            }
            rules.push(TransitionRule {
                from,
                read,
                write,
                to,
                dir,
                amp,
                form,
            });
        } else {
            return Err(syntax(lineno, "unrecognized line"));
        }
    }

    let name = name.ok_or_else(|| syntax(0, "missing machine: line"))?;
    let alphabet = alphabet.ok_or_else(|| syntax(0, "missing alphabet: line"))?;
    let states = states.ok_or_else(|| syntax(0, "missing states: line"))?;
    let start = start.ok_or_else(|| syntax(0, "missing start: line"))?;
    let final_state = final_state.ok_or_else(|| syntax(0, "missing final: line"))?;
    Ok(Machine::new(
        name,
        alphabet,
        states,
        &start,
        &final_state,
        rules,
    )?)
}

/// Emit a machine in canonical `.sqtm` form.
pub fn emit_machine<T: Real>(m: &Machine<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "machine: {}", m.name());
    let _ = writeln!(out, "alphabet: {}", m.alphabet().join(","));
    let _ = writeln!(out, "states: {}", m.states().join(","));
    let _ = writeln!(out, "start: {}", m.state_name(m.start()));
    let _ = writeln!(out, "final: {}", m.state_name(m.final_state()));
    for r in m.rules() {
        let _ = writeln!(
            out,
            "rule: {},{} -> {},{},{} : {}",
            r.from,
            r.read,
            r.write,
            r.to,
            r.dir,
            emit_amplitude(r.amp, &r.form)
        );
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QstdError {
    #[error("machine is not unidirectional: {rule_a} vs {rule_b}")]
    NotUnidirectional { rule_a: String, rule_b: String },
    #[error("machine is not rotational at ({state},{read}): targets {target_a} and {target_b}")]
    NotRotational {
        state: String,
        read: String,
        target_a: String,
        target_b: String,
    },
}

/// Diagram node: a state with its entry direction (absent for states never
/// entered by a rule, the start state in particular).
#[derive(Debug, Clone, PartialEq)]
pub struct QstdNode {
    pub state: String,
    pub dir: Option<Direction>,
}

/// Diagram edge: one transition rule. `merged` marks members of a parallel
/// group that render as a single multi-label arrow.
#[derive(Debug, Clone, PartialEq)]
pub struct QstdEdge<T: Real> {
    pub from: String,
    pub to: String,
    pub read: String,
    pub write: String,
    pub amp: Complex<T>,
    pub form: Option<String>,
    pub merged: bool,
}

/// Graph form of a machine. Carries enough to rebuild the machine exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct QstdDoc<T: Real> {
    pub name: String,
    pub alphabet: Vec<String>,
    pub start: String,
    pub final_state: String,
    pub nodes: Vec<QstdNode>,
    pub edges: Vec<QstdEdge<T>>,
}

/// Build the diagram of a unidirectional rotational machine.
pub fn from_machine<T: Real>(m: &Machine<T>) -> Result<QstdDoc<T>, QstdError> {
    from_machine_opts(m, false)
}

/// As [`from_machine`], optionally flagging parallel edges (same source and
/// target) for merged rendering.
pub fn from_machine_opts<T: Real>(
    m: &Machine<T>,
    merge_parallel: bool,
) -> Result<QstdDoc<T>, QstdError> {
    let dirs = match direction_map(m) {
        UnidirectionalCheck::Ok(map) => map,
        UnidirectionalCheck::Violation { rule_a, rule_b } => {
            return Err(QstdError::NotUnidirectional {
                rule_a: rule_a.to_string(),
                rule_b: rule_b.to_string(),
            })
        }
    };
    match check_rotational(m) {
        RotationalCheck::Ok(_) => {}
        RotationalCheck::Violation {
            state,
            read,
            target_a,
            target_b,
        } => {
            return Err(QstdError::NotRotational {
                state,
                read,
                target_a,
                target_b,
            })
        }
        RotationalCheck::NotApplicable => unreachable!("direction map checked above"),
    }

    let nodes = m
        .states()
        .iter()
        .map(|s| QstdNode {
            state: s.clone(),
            dir: dirs.get(s).copied(),
        })
        .collect();

    let mut edges: Vec<QstdEdge<T>> = m
        .rules()
        .into_iter()
        .map(|r| QstdEdge {
            from: r.from,
            to: r.to,
            read: r.read,
            write: r.write,
            amp: r.amp,
            form: r.form,
            merged: false,
        })
        .collect();

    if merge_parallel {
        let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
        for e in &edges {
            *counts.entry((e.from.clone(), e.to.clone())).or_insert(0) += 1;
        }
        for e in &mut edges {
            if counts[&(e.from.clone(), e.to.clone())] > 1 {
                e.merged = true;
            }
        }
    }

    Ok(QstdDoc {
        name: m.name().to_string(),
        alphabet: m.alphabet().to_vec(),
        start: m.state_name(m.start()).to_string(),
        final_state: m.state_name(m.final_state()).to_string(),
        nodes,
        edges,
    })
}

/// Rebuild the machine table from a diagram. Inverse of [`from_machine`].
pub fn to_machine<T: Real>(d: &QstdDoc<T>) -> Result<Machine<T>, MachineError> {
    let dir_of: BTreeMap<&str, Option<Direction>> =
        d.nodes.iter().map(|n| (n.state.as_str(), n.dir)).collect();
    let rules = d
        .edges
        .iter()
        .map(|e| {
            let dir = dir_of
                .get(e.to.as_str())
                .copied()
                .flatten()
                .ok_or_else(|| MachineError::UnknownState(e.to.clone()))?;
            Ok(TransitionRule {
                from: e.from.clone(),
                read: e.read.clone(),
                write: e.write.clone(),
                to: e.to.clone(),
                dir,
                amp: e.amp,
                form: e.form.clone(),
            })
        })
        .collect::<Result<Vec<_>, MachineError>>()?;
    Machine::new(
        d.name.clone(),
        d.alphabet.clone(),
        d.nodes.iter().map(|n| n.state.clone()).collect(),
        &d.start,
        &d.final_state,
        rules,
    )
}

fn edge_label<T: Real>(e: &QstdEdge<T>) -> String {
    let one = e.amp.im == T::zero() && e.amp.re == T::one();
    if one {
        format!("{}/{}", e.read, e.write)
    } else {
        format!(
            "{}/{} : {}",
            e.read,
            e.write,
            label_amplitude(e.amp, &e.form)
        )
    }
}

/// Render the diagram as deterministic DOT text. Nodes are labelled with the
/// state id plus its direction arrow; edges carry `read/write` labels with
/// the amplitude appended unless it is 1. Edges flagged `merged` collapse
/// into one arrow with stacked labels.
pub fn to_graph_text<T: Real>(d: &QstdDoc<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", d.name);
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  node [shape=circle];");
    for n in &d.nodes {
        let label = match n.dir {
            Some(dir) => format!("{}{}", n.state, dir.arrow()),
            None => n.state.clone(),
        };
        let _ = writeln!(out, "  \"{}\" [label=\"{}\"];", n.state, label);
    }
    let mut i = 0;
    while i < d.edges.len() {
        let e = &d.edges[i];
        if e.merged {
            // collect the whole parallel group
            let mut labels = vec![edge_label(e)];
            let mut j = i + 1;
            while j < d.edges.len() {
                let f = &d.edges[j];
                if f.merged && f.from == e.from && f.to == e.to {
                    labels.push(edge_label(f));
                    j += 1;
                } else {
                    break;
                }
            }
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                e.from,
                e.to,
                labels.join("\\n")
            );
            i = j;
        } else {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                e.from,
                e.to,
                edge_label(e)
            );
            i += 1;
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::HADAMARD_SQTM;

    #[test]
    fn parses_the_hadamard_table() {
        let m: Machine<f64> = parse_machine(HADAMARD_SQTM).unwrap();
        assert_eq!(m.name(), "hadamard-cell2");
        assert_eq!(m.states().len(), 5);
        assert_eq!(m.rule_count(), 10);
        assert_eq!(m.state_name(m.start()), "q0");
        assert_eq!(m.state_name(m.final_state()), "qf");
    }

    #[test]
    fn header_only_file_gives_rule_free_machine() {
        let text = "machine: bare\nalphabet: #,0,1\nstates: q0,qf\nstart: q0\nfinal: qf\n";
        let m: Machine<f64> = parse_machine(text).unwrap();
        assert_eq!(m.rule_count(), 0);
    }

    #[test]
    fn round_trip_is_identity_on_machines() {
        let m: Machine<f64> = parse_machine(HADAMARD_SQTM).unwrap();
        let text = emit_machine(&m);
        let m2: Machine<f64> = parse_machine(&text).unwrap();
        assert_eq!(m, m2);
        // emit∘parse is canonical: a second round trip is byte-identical
        assert_eq!(text, emit_machine(&m2));
    }

    #[test]
    fn syntax_error_carries_line_number() {
        let text = "machine: m\nalphabet: #,0,1\nstates: q0,qf\nstart: q0\nfinal: qf\nrule: q0 -> #,qf,R : 1\n";
        match parse_machine::<f64>(text) {
            Err(ParseError::Syntax { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_amplitude_token_is_reported() {
        let text = "machine: m\nalphabet: #,0,1\nstates: q0,qf\nstart: q0\nfinal: qf\nrule: q0,# -> #,qf,R : tan(1)\n";
        match parse_machine::<f64>(text) {
            Err(ParseError::UnknownToken { line, token }) => {
                assert_eq!(line, 6);
                assert_eq!(token, "tan(1)");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_rule_is_reported_with_line() {
        let text = "machine: m\nalphabet: #,0,1\nstates: q0,qf\nstart: q0\nfinal: qf\n\
                    rule: q0,# -> #,qf,R : 1/sqrt(2)\nrule: q0,# -> #,qf,R : 1/sqrt(2)\n";
        match parse_machine::<f64>(text) {
            Err(ParseError::DuplicateRule { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn amplitude_grammar_values() {
        let (v, form) = parse_amplitude::<f64>("1/sqrt(2)").unwrap();
        assert!((v.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-16);
        assert_eq!(form.as_deref(), Some("1/sqrt(2)"));

        let (v, form) = parse_amplitude::<f64>("-cos(pi/2^3)").unwrap();
        assert!((v.re + (std::f64::consts::PI / 8.0).cos()).abs() < 1e-16);
        assert_eq!(form.as_deref(), Some("-cos(pi/2^3)"));

        let (v, _) = parse_amplitude::<f64>("exp(i*pi/2^1)").unwrap();
        assert!(v.re.abs() < 1e-16 && (v.im - 1.0).abs() < 1e-16);

        let (v, form) = parse_amplitude::<f64>("-0.5-0.5i").unwrap();
        assert_eq!((v.re, v.im), (-0.5, -0.5));
        assert_eq!(form, None);

        let (v, _) = parse_amplitude::<f64>("1.5e-3+2e0i").unwrap();
        assert_eq!((v.re, v.im), (0.0015, 2.0));

        assert!(parse_amplitude::<f64>("bogus").is_err());
        assert!(parse_amplitude::<f64>("2i").is_err());
    }

    #[test]
    fn decimal_emission_round_trips_exactly() {
        let v = cplx::<f64>(std::f64::consts::FRAC_1_SQRT_2, -1.0 / 3.0);
        let s = emit_amplitude(v, &None);
        let (v2, _) = parse_amplitude::<f64>(&s).unwrap();
        assert_eq!(v, v2);
    }

    #[test]
    fn hadamard_doc_counts() {
        let m: Machine<f64> = parse_machine(HADAMARD_SQTM).unwrap();
        let doc = from_machine(&m).unwrap();
        assert_eq!(doc.nodes.len(), 5);
        assert_eq!(doc.edges.len(), 10);
        let parallel: Vec<_> = doc
            .edges
            .iter()
            .filter(|e| e.from == "q2" && e.to == "q3")
            .collect();
        assert_eq!(parallel.len(), 4);
    }

    #[test]
    fn cnot_doc_has_the_seven_states() {
        let m = crate::builders::cnot_machine::<f64>(1, 2).unwrap();
        let doc = from_machine(&m).unwrap();
        assert_eq!(doc.nodes.len(), 7);
        assert_eq!(doc.edges.len(), 9);
        // only the start state lacks a direction arrow
        let bare: Vec<_> = doc.nodes.iter().filter(|n| n.dir.is_none()).collect();
        assert_eq!(bare.len(), 1);
        assert_eq!(bare[0].state, "q0");
    }

    #[test]
    fn qstd_rebuild_is_lossless() {
        let m: Machine<f64> = parse_machine(HADAMARD_SQTM).unwrap();
        let doc = from_machine(&m).unwrap();
        let rebuilt = to_machine(&doc).unwrap();
        assert_eq!(m, rebuilt);
    }

    #[test]
    fn graph_text_statement_counts_and_determinism() {
        let m: Machine<f64> = parse_machine(HADAMARD_SQTM).unwrap();
        let doc = from_machine(&m).unwrap();
        let text = to_graph_text(&doc);
        let node_statements = text
            .lines()
            .filter(|l| l.contains("[label=") && !l.contains("->"))
            .count();
        let edge_statements = text.lines().filter(|l| l.contains("->")).count();
        assert_eq!(node_statements, 5);
        assert_eq!(edge_statements, 10);
        assert_eq!(text, to_graph_text(&from_machine(&m).unwrap()));
        // start state carries no arrow, entered states do
        assert!(text.contains("\"q0\" [label=\"q0\"];"));
        assert!(text.contains("\"q1\" [label=\"q1→\"];"));
        assert!(text.contains("\"q3\" [label=\"q3←\"];"));
    }

    #[test]
    fn amplitude_one_labels_are_bare() {
        let text = "machine: one\nalphabet: #,0,1\nstates: q0,qf\nstart: q0\nfinal: qf\nrule: q0,# -> #,qf,R : 1\n";
        let m: Machine<f64> = parse_machine(text).unwrap();
        let doc = from_machine(&m).unwrap();
        assert_eq!(doc.nodes.len(), 2);
        assert_eq!(doc.edges.len(), 1);
        let dot = to_graph_text(&doc);
        assert!(dot.contains("[label=\"#/#\"]"), "{dot}");
        assert!(!dot.contains("#/# :"));
    }

    #[test]
    fn empty_machine_renders_header_only_graph() {
        let text = "machine: bare\nalphabet: #,0,1\nstates: q0,qf\nstart: q0\nfinal: qf\n";
        let m: Machine<f64> = parse_machine(text).unwrap();
        let doc = from_machine(&m).unwrap();
        let dot = to_graph_text(&doc);
        assert!(!dot.contains("->"));
    }

    #[test]
    fn merged_rendering_groups_parallel_edges() {
        let m: Machine<f64> = parse_machine(HADAMARD_SQTM).unwrap();
        let doc = from_machine_opts(&m, true).unwrap();
        let dot = to_graph_text(&doc);
        let q2_edges = dot
            .lines()
            .filter(|l| l.contains("\"q2\" -> \"q3\""))
            .count();
        assert_eq!(q2_edges, 1);
        // all four labels stacked on the one arrow
        assert_eq!(dot.matches("1/sqrt(2)").count(), 4);
    }

    #[test]
    fn non_rotational_machine_is_rejected() {
        let text = "machine: m\nalphabet: #,0,1\nstates: q0,a,b,qf\nstart: q0\nfinal: qf\n\
                    rule: q0,# -> 0,a,R : 1/sqrt(2)\nrule: q0,# -> 1,b,R : 1/sqrt(2)\n\
                    rule: a,# -> #,qf,L : 1\nrule: b,# -> #,qf,L : 1\n";
        let m: Machine<f64> = parse_machine(text).unwrap();
        assert!(matches!(
            from_machine(&m),
            Err(QstdError::NotRotational { .. })
        ));
    }
}
