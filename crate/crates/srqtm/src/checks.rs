//! Static classifiers for the machine class hierarchy:
//! unidirectional -> rotational, plus local unitarity of the rule table.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex;

use crate::machine::{Direction, Machine, TransitionRule};
use crate::scalar::Real;
use crate::tol;

/// Result of the unidirectionality check: either the per-state direction
/// function d(q), or two rules entering the same state from different
/// directions.
#[derive(Debug, Clone, PartialEq)]
pub enum UnidirectionalCheck<T: Real> {
    Ok(BTreeMap<String, Direction>),
    Violation {
        rule_a: TransitionRule<T>,
        rule_b: TransitionRule<T>,
    },
}

impl<T: Real> UnidirectionalCheck<T> {
    pub fn is_ok(&self) -> bool {
        matches!(self, UnidirectionalCheck::Ok(_))
    }
}

/// Result of the rotational check: either the next-state function q(p, read),
/// or a (state, read) pair with two distinct targets.
#[derive(Debug, Clone, PartialEq)]
pub enum RotationalCheck {
    Ok(BTreeMap<(String, String), String>),
    NotApplicable,
    Violation {
        state: String,
        read: String,
        target_a: String,
        target_b: String,
    },
}

impl RotationalCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, RotationalCheck::Ok(_))
    }
}

/// Result of the local-unitarity check: worst deviation of the rule-table
/// Gram matrix from the identity, and the offending row pair if any.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitarityCheck {
    pub ok: bool,
    pub worst_deviation: f64,
    /// (state, read) labels of the worst row pair (equal labels for a
    /// diagonal deviation).
    pub worst_pair: Option<((String, String), (String, String))>,
}

/// Aggregate report of the three static checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport<T: Real> {
    pub unidirectional: UnidirectionalCheck<T>,
    pub rotational: RotationalCheck,
    pub locally_unitary: UnitarityCheck,
}

impl<T: Real> ClassReport<T> {
    pub fn all_ok(&self) -> bool {
        self.unidirectional.is_ok() && self.rotational.is_ok() && self.locally_unitary.ok
    }
}

/// Compute the direction function d(q) over states entered by at least one
/// rule, or report two rules entering the same state with different
/// directions.
pub fn direction_map<T: Real>(m: &Machine<T>) -> UnidirectionalCheck<T> {
    let mut dirs: HashMap<usize, (Direction, TransitionRule<T>)> = HashMap::new();
    for rule in m.rules() {
        let to_ix = m.state_index(&rule.to).expect("rule target exists");
        match dirs.get(&to_ix) {
            None => {
                dirs.insert(to_ix, (rule.dir, rule));
            }
            Some((d, first)) => {
                if *d != rule.dir {
                    return UnidirectionalCheck::Violation {
                        rule_a: first.clone(),
                        rule_b: rule,
                    };
                }
            }
        }
    }
    let map = dirs
        .into_iter()
        .map(|(ix, (d, _))| (m.state_name(ix).to_string(), d))
        .collect();
    UnidirectionalCheck::Ok(map)
}

/// Check that the next state is a function of (state, read). Requires the
/// machine to be unidirectional first; otherwise reports not-applicable.
pub fn check_rotational<T: Real>(m: &Machine<T>) -> RotationalCheck {
    if !direction_map(m).is_ok() {
        return RotationalCheck::NotApplicable;
    }
    let mut map = BTreeMap::new();
    for ((p, s), group) in m.rule_groups() {
        let first = group[0].to;
        for r in group {
            if r.to != first {
                return RotationalCheck::Violation {
                    state: m.state_name(*p).to_string(),
                    read: m.symbol(*s).to_string(),
                    target_a: m.state_name(first).to_string(),
                    target_b: m.state_name(r.to).to_string(),
                };
            }
        }
        map.insert(
            (m.state_name(*p).to_string(), m.symbol(*s).to_string()),
            m.state_name(first).to_string(),
        );
    }
    RotationalCheck::Ok(map)
}

/// Row-orthonormality of the rule table viewed as a matrix over
/// (write, next state, direction) columns, the well-formedness condition
/// that makes the step operator norm-preserving.
pub fn check_local_unitarity<T: Real>(m: &Machine<T>) -> UnitarityCheck {
    check_local_unitarity_with_tol(m, tol::ROW_NORM)
}

type GramColumn = (usize, usize, Direction);
type GramRow<T> = ((usize, usize), Vec<(GramColumn, Complex<T>)>);

pub fn check_local_unitarity_with_tol<T: Real>(m: &Machine<T>, tolerance: f64) -> UnitarityCheck {
    // Rows indexed by (state, read); columns by (write, to, dir). Rows that
    // share no column are exactly orthogonal, so only pairs sharing a column
    // are examined.
    let rows: Vec<GramRow<T>> = m
        .rule_groups()
        .map(|((p, s), group)| {
            (
                (*p, *s),
                group
                    .iter()
                    .map(|r| ((r.write, r.to, r.dir), r.amp))
                    .collect(),
            )
        })
        .collect();

    let mut by_col: HashMap<GramColumn, Vec<usize>> = HashMap::new();
    for (i, (_, cols)) in rows.iter().enumerate() {
        for (c, _) in cols {
            by_col.entry(*c).or_default().push(i);
        }
    }

    let mut worst = 0.0f64;
    let mut worst_pair: Option<(usize, usize)> = None;
    let mut note = |i: usize, j: usize, dev: f64| {
        if dev > worst {
            worst = dev;
            worst_pair = Some((i, j));
        }
    };

    // Diagonal: row norms.
    for (i, (_, cols)) in rows.iter().enumerate() {
        let norm2: f64 = cols
            .iter()
            .map(|(_, a)| crate::scalar::norm_sqr_f64(a))
            .sum();
        note(i, i, (norm2 - 1.0).abs());
    }

    // Off-diagonal: inner products of rows sharing a column.
    let mut candidates: std::collections::BTreeSet<(usize, usize)> = Default::default();
    for ids in by_col.values() {
        for a in 0..ids.len() {
            for b in (a + 1)..ids.len() {
                let (i, j) = if ids[a] < ids[b] {
                    (ids[a], ids[b])
                } else {
                    (ids[b], ids[a])
                };
                candidates.insert((i, j));
            }
        }
    }
    for (i, j) in candidates {
        let lookup: HashMap<_, _> = rows[j].1.iter().cloned().collect();
        let mut inner = Complex::new(T::zero(), T::zero());
        for (c, a) in &rows[i].1 {
            if let Some(b) = lookup.get(c) {
                inner = inner + *a * b.conj();
            }
        }
        note(i, j, inner.norm().to_f64().unwrap_or(f64::NAN));
    }

    let name = |i: usize| {
        let (p, s) = rows[i].0;
        (m.state_name(p).to_string(), m.symbol(s).to_string())
    };
    UnitarityCheck {
        ok: worst <= tolerance,
        worst_deviation: worst,
        worst_pair: worst_pair.map(|(i, j)| (name(i), name(j))),
    }
}

/// Run all three static checks.
pub fn classify<T: Real>(m: &Machine<T>) -> ClassReport<T> {
    ClassReport {
        unidirectional: direction_map(m),
        rotational: check_rotational(m),
        locally_unitary: check_local_unitarity(m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::Direction::{Left, Right};
    use crate::qstd::parse_machine;
    use crate::scalar::cplx;

    use crate::fixtures::HADAMARD_SQTM;

    fn hadamard() -> Machine<f64> {
        parse_machine(HADAMARD_SQTM).unwrap()
    }

    #[test]
    fn hadamard_direction_map() {
        match direction_map(&hadamard()) {
            UnidirectionalCheck::Ok(map) => {
                let expect: Vec<(&str, Direction)> =
                    vec![("q1", Right), ("q2", Right), ("q3", Left), ("qf", Left)];
                assert_eq!(map.len(), 4);
                for (q, d) in expect {
                    assert_eq!(map[q], d, "direction of {q}");
                }
            }
            other => panic!("expected direction map, got {other:?}"),
        }
    }

    #[test]
    fn single_rule_machine_direction_map() {
        let m = Machine::new(
            "halt",
            vec!["#".into(), "0".into(), "1".into()],
            vec!["q0".into(), "qf".into()],
            "q0",
            "qf",
            vec![TransitionRule::new(
                "q0",
                "#",
                "#",
                "qf",
                Right,
                cplx::<f64>(1.0, 0.0),
            )],
        )
        .unwrap();
        match direction_map(&m) {
            UnidirectionalCheck::Ok(map) => {
                assert_eq!(map.len(), 1);
                assert_eq!(map["qf"], Right);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn direction_flip_is_caught_with_both_rules_cited() {
        // Flip the direction of one qf-entering rule; the other qf rule and
        // the mutated one must be the cited pair. Verified against an
        // exhaustive scan over rule pairs.
        let text = HADAMARD_SQTM.replace("rule: q3,1 -> 1,qf,L : 1", "rule: q3,1 -> 1,qf,R : 1");
        let m: Machine<f64> = parse_machine(&text).unwrap();
        match direction_map(&m) {
            UnidirectionalCheck::Violation { rule_a, rule_b } => {
                assert_eq!(rule_a.to, "qf");
                assert_eq!(rule_b.to, "qf");
                assert_ne!(rule_a.dir, rule_b.dir);
                // exhaustive pair scan oracle
                let rules = m.rules();
                let mut found = false;
                for a in &rules {
                    for b in &rules {
                        if a != b && a.to == b.to && a.dir != b.dir {
                            found = true;
                        }
                    }
                }
                assert!(found);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn hadamard_rotational_map() {
        match check_rotational(&hadamard()) {
            RotationalCheck::Ok(map) => {
                assert_eq!(map[&("q2".to_string(), "0".to_string())], "q3");
                assert_eq!(map[&("q2".to_string(), "1".to_string())], "q3");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_rule_machine_is_vacuously_rotational() {
        let m: Machine<f64> = Machine::new(
            "empty",
            vec!["#".into(), "0".into(), "1".into()],
            vec!["q0".into(), "qf".into()],
            "q0",
            "qf",
            vec![],
        )
        .unwrap();
        assert!(check_rotational(&m).is_ok());
    }

    #[test]
    fn retarget_breaks_rotational_at_the_mutated_pair() {
        let text = HADAMARD_SQTM
            .replace("states: q0,q1,q2,q3,qf", "states: q0,q1,q2,q3,q4,qf")
            .replace(
                "rule: q2,0 -> 1,q3,L : 1/sqrt(2)",
                "rule: q2,0 -> 1,q4,L : 1/sqrt(2)",
            );
        let m: Machine<f64> = parse_machine(&text).unwrap();
        match check_rotational(&m) {
            RotationalCheck::Violation {
                state,
                read,
                target_a,
                target_b,
            } => {
                assert_eq!((state.as_str(), read.as_str()), ("q2", "0"));
                let mut targets = vec![target_a, target_b];
                targets.sort();
                assert_eq!(targets, vec!["q3".to_string(), "q4".to_string()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hadamard_rows_are_orthonormal() {
        // Independent Gram recomputation of the two q2 rows.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let row0 = [(0usize, s), (1usize, s)];
        let row1 = [(0usize, s), (1usize, -s)];
        let inner: f64 = row0
            .iter()
            .flat_map(|(c0, a)| {
                row1.iter()
                    .filter(move |(c1, _)| c1 == c0)
                    .map(move |(_, b)| a * b)
            })
            .sum();
        assert!(inner.abs() < 1e-15);

        let check = check_local_unitarity(&hadamard());
        assert!(check.ok, "worst deviation {}", check.worst_deviation);
    }

    #[test]
    fn deterministic_permutation_machine_is_unitary() {
        let m: Machine<f64> = Machine::new(
            "perm",
            vec!["#".into(), "0".into(), "1".into()],
            vec!["q0".into(), "a".into(), "qf".into()],
            "q0",
            "qf",
            vec![
                TransitionRule::new("q0", "#", "#", "a", Right, cplx(1.0, 0.0)),
                TransitionRule::new("a", "0", "1", "qf", Left, cplx(1.0, 0.0)),
                TransitionRule::new("a", "1", "0", "qf", Left, cplx(1.0, 0.0)),
                TransitionRule::new("a", "#", "#", "qf", Left, cplx(1.0, 0.0)),
            ],
        )
        .unwrap();
        assert!(check_local_unitarity(&m).ok);
    }

    #[test]
    fn sign_flip_breaks_unitarity_citing_the_q2_rows() {
        // Recomputing the Gram matrix with the sign flipped gives inner
        // product 1 between the two q2 rows.
        let text = HADAMARD_SQTM.replace(
            "rule: q2,1 -> 1,q3,L : -1/sqrt(2)",
            "rule: q2,1 -> 1,q3,L : 1/sqrt(2)",
        );
        let m: Machine<f64> = parse_machine(&text).unwrap();
        let check = check_local_unitarity(&m);
        assert!(!check.ok);
        assert!((check.worst_deviation - 1.0).abs() < 1e-12);
        let pair = check.worst_pair.unwrap();
        assert_eq!(pair.0 .0, "q2");
        assert_eq!(pair.1 .0, "q2");
    }

    #[test]
    fn classify_non_unidirectional_reports_not_applicable() {
        let m: Machine<f64> = Machine::new(
            "bad",
            vec!["#".into(), "0".into(), "1".into()],
            vec!["q0".into(), "a".into(), "b".into(), "qf".into()],
            "q0",
            "qf",
            vec![
                TransitionRule::new("q0", "#", "#", "a", Right, cplx(1.0, 0.0)),
                TransitionRule::new("a", "#", "0", "qf", Left, cplx(1.0, 0.0)),
                TransitionRule::new("a", "0", "0", "b", Right, cplx(1.0, 0.0)),
                TransitionRule::new("b", "#", "1", "qf", Right, cplx(1.0, 0.0)),
            ],
        )
        .unwrap();
        let report = classify(&m);
        assert!(!report.unidirectional.is_ok());
        assert_eq!(report.rotational, RotationalCheck::NotApplicable);
        assert!(!report.all_ok());
    }
}
