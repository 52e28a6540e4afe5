//! Cross-module properties: long-run norm preservation, table invariants of
//! the rotational rewrite, round-trips over randomly compiled machines, and
//! a low-precision smoke test of the f32 instantiation.

use proptest::prelude::*;

use srqtm::builders::{rotation_machine, PrimitiveGate, Sign};
use srqtm::checks::{
    check_rotational, classify, direction_map, RotationalCheck, UnidirectionalCheck,
};
use srqtm::circuit::{approx_angle, compile, Circuit, Gate, Precision};
use srqtm::machine::Machine;
use srqtm::oracle::{compare, extract_unitary};
use srqtm::qstd::{emit_machine, parse_machine};
use srqtm::sim::{measure_cells, run, sample_run, Tape};

#[test]
fn norm_is_preserved_over_a_thousand_steps() {
    // 250 dovetailed Hadamard machines give a 1000-step run.
    let h = rotation_machine::<f64>(2, &PrimitiveGate::H).unwrap();
    let p = Precision::new(4).unwrap();
    let gates: Vec<Gate<f64>> = vec![
        Gate::Prim {
            gate: PrimitiveGate::H,
            wire: 2
        };
        250
    ];
    let c = Circuit::new(2, gates).unwrap();
    let m = compile(&c, p).unwrap();
    let blank = m.blank();
    let zero = m.symbol_index("0").unwrap();
    let input = Tape::from_cell1(&[zero, zero], blank);
    let (s, report) = run(&m, &input, 2000).unwrap();
    assert_eq!(report.steps, 250 * 4);
    assert!(report.norm_drift <= 1e-9, "drift {}", report.norm_drift);
    // even number of H's: back to |00>
    let dist = measure_cells(&m, &s, &[2]);
    assert!((dist["0"] - 1.0).abs() <= 1e-9);
    drop(h);
}

#[test]
fn rotational_rewrite_reconstructs_the_table() {
    // With q(p,σ) and d(q) in hand, rebuilding the rule targets must give
    // back the stored table exactly.
    for m in [
        rotation_machine::<f64>(2, &PrimitiveGate::H).unwrap(),
        srqtm::builders::cnot_machine::<f64>(2, 1).unwrap(),
        srqtm::builders::toffoli_machine::<f64>(1, 2, 3).unwrap(),
    ] {
        let dirs = match direction_map(&m) {
            UnidirectionalCheck::Ok(map) => map,
            other => panic!("{other:?}"),
        };
        let targets = match check_rotational(&m) {
            RotationalCheck::Ok(map) => map,
            other => panic!("{other:?}"),
        };
        for r in m.rules() {
            assert_eq!(targets[&(r.from.clone(), r.read.clone())], r.to);
            assert_eq!(dirs[&r.to], r.dir);
        }
    }
}

#[test]
fn sample_run_without_measurement_is_deterministic_for_permutations() {
    // A machine whose rules are a permutation gives the same outcome with
    // and without per-step measurement.
    let m = srqtm::builders::cnot_machine::<f64>(1, 2).unwrap();
    let blank = m.blank();
    let one = m.symbol_index("1").unwrap();
    let zero = m.symbol_index("0").unwrap();
    let input = Tape::from_cell1(&[one, zero], blank);
    for seed in 0..20u64 {
        let a = sample_run(&m, &input, seed, false, 100).unwrap();
        let b = sample_run(&m, &input, seed, true, 100).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0, Tape::from_cell1(&[one, one], blank));
    }
}

#[test]
fn per_step_measurement_keeps_the_cnot_marginal() {
    // Control (|0>+|1>)/√2: the internal state branches mid-run, so the
    // per-step measurement genuinely collapses; the output marginal over
    // cells 1..2 must still be {00: 1/2, 11: 1/2}.
    use num_complex::Complex;
    use srqtm::sim::{Configuration, Superposition};
    let m = srqtm::builders::cnot_machine::<f64>(1, 2).unwrap();
    let blank = m.blank();
    let zero = m.symbol_index("0").unwrap();
    let one = m.symbol_index("1").unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let s0 = Superposition::from_terms([
        (
            Configuration {
                state: m.start(),
                tape: Tape::from_cell1(&[zero, zero], blank),
                head: 0,
            },
            Complex::new(s, 0.0),
        ),
        (
            Configuration {
                state: m.start(),
                tape: Tape::from_cell1(&[one, zero], blank),
                head: 0,
            },
            Complex::new(s, 0.0),
        ),
    ]);
    // coherent marginal
    let (out, _) = srqtm::sim::run_from(&m, s0, 100).unwrap();
    let dist = measure_cells(&m, &out, &[1, 2]);
    assert!((dist["00"] - 0.5).abs() <= 1e-12);
    assert!((dist["11"] - 0.5).abs() <= 1e-12);
}

#[test]
fn f32_instantiation_runs_the_hadamard_machine() {
    let m = rotation_machine::<f32>(2, &PrimitiveGate::H).unwrap();
    let blank = m.blank();
    let zero = m.symbol_index("0").unwrap();
    let (s, report) = run(&m, &Tape::from_cell1(&[zero, zero], blank), 100).unwrap();
    assert_eq!(report.steps, 4);
    let dist = measure_cells(&m, &s, &[2]);
    assert!((dist["0"] - 0.5).abs() < 1e-6);
    assert!((dist["1"] - 0.5).abs() < 1e-6);
}

fn arb_gate() -> impl Strategy<Value = Gate<f64>> {
    prop_oneof![
        (1usize..=3).prop_map(|w| Gate::Prim {
            gate: PrimitiveGate::H,
            wire: w
        }),
        (1usize..=3, 0u32..4, any::<bool>()).prop_map(|(w, k, plus)| Gate::Prim {
            gate: PrimitiveGate::Ry(if plus { Sign::Plus } else { Sign::Minus }, k),
            wire: w
        }),
        (1usize..=3, 0u32..4, any::<bool>()).prop_map(|(w, k, plus)| Gate::Prim {
            gate: PrimitiveGate::Rz(if plus { Sign::Plus } else { Sign::Minus }, k),
            wire: w
        }),
        (1usize..=3, 0usize..2).prop_map(|(c, off)| {
            let t = 1 + (c + off) % 3;
            if t == c {
                Gate::Cnot {
                    control: c,
                    target: 1 + (c % 3),
                }
            } else {
                Gate::Cnot {
                    control: c,
                    target: t,
                }
            }
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn approx_angle_always_meets_its_bound(theta in 0.0f64..(2.0 * std::f64::consts::PI), m in 1u32..14) {
        let p = Precision::new(m).unwrap();
        let terms = approx_angle(theta, p);
        prop_assert!(terms.len() <= m as usize);
        prop_assert!(terms.iter().all(|(_, k)| *k <= m));
        let sum: f64 = terms.iter().map(|(s, k)| s.factor() * std::f64::consts::PI / f64::powi(2.0, *k as i32)).sum();
        let tau = 2.0 * std::f64::consts::PI;
        let mut err = (sum - theta).rem_euclid(tau);
        if err > tau / 2.0 { err = tau - err; }
        prop_assert!(err <= std::f64::consts::PI / f64::powi(2.0, m as i32) + 1e-12);
    }

    #[test]
    fn compiled_machines_round_trip_through_sqtm(gates in proptest::collection::vec(arb_gate(), 1..6)) {
        let c = Circuit::new(3, gates).unwrap();
        let m = compile(&c, Precision::new(6).unwrap()).unwrap();
        let text = emit_machine(&m);
        let back: Machine<f64> = parse_machine(&text).unwrap();
        prop_assert_eq!(&m, &back);
        prop_assert!(classify(&m).all_ok());
    }

    #[test]
    fn phase_alignment_is_invariant_under_global_phase(phi in 0.0f64..(2.0 * std::f64::consts::PI)) {
        let m = rotation_machine::<f64>(1, &PrimitiveGate::Ry(Sign::Plus, 1)).unwrap();
        let u = extract_unitary(&m, 1, 100).unwrap().matrix;
        let rotated = u.scale(num_complex::Complex::from_polar(1.0, phi));
        let (d, _) = compare(&u, &rotated, 1e-12).unwrap();
        prop_assert!(d <= 1e-9);
    }
}

#[test]
fn per_step_measurement_collapse_keeps_the_sampled_cnot_marginal() {
    // Mid-run the CNOT machine is in different internal states across the
    // two control branches, so per-step measurement really collapses; the
    // sampled output marginal must still be {00: 1/2, 11: 1/2}.
    use num_complex::Complex;
    use srqtm::sim::{Configuration, Superposition};
    let m = srqtm::builders::cnot_machine::<f64>(1, 2).unwrap();
    let blank = m.blank();
    let zero = m.symbol_index("0").unwrap();
    let one = m.symbol_index("1").unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let make_input = || {
        Superposition::from_terms([
            (
                Configuration {
                    state: m.start(),
                    tape: Tape::from_cell1(&[zero, zero], blank),
                    head: 0,
                },
                Complex::new(s, 0.0),
            ),
            (
                Configuration {
                    state: m.start(),
                    tape: Tape::from_cell1(&[one, zero], blank),
                    head: 0,
                },
                Complex::new(s, 0.0),
            ),
        ])
    };
    // confirm the branches split internally at step 2
    let mut mid = make_input();
    mid = srqtm::sim::step(&m, &mid).unwrap();
    mid = srqtm::sim::step(&m, &mid).unwrap();
    let states: std::collections::BTreeSet<usize> = mid.terms().map(|(c, _)| c.state).collect();
    assert_eq!(
        states.len(),
        2,
        "control branches share a state; collapse would be vacuous"
    );

    // sample via the superposed control prepared on the tape is not possible
    // through sample_run (single-tape input), so sample by seeding the
    // per-step measurement engine through run_from after manual collapse:
    // draw outcomes by measuring the coherent output instead and compare
    // against a seeded tally over an equivalent machine with an H stage.
    let p = Precision::new(4).unwrap();
    let c: Circuit<f64> = Circuit::new(
        2,
        vec![
            Gate::Prim {
                gate: PrimitiveGate::H,
                wire: 1,
            },
            Gate::Cnot {
                control: 1,
                target: 2,
            },
        ],
    )
    .unwrap();
    let bell = compile(&c, p).unwrap();
    let blank = bell.blank();
    let zero = bell.symbol_index("0").unwrap();
    let input = Tape::from_cell1(&[zero, zero], blank);
    let samples = 4000u64;
    let mut tally: std::collections::BTreeMap<String, u64> = Default::default();
    for seed in 0..samples {
        let (tape, _) = sample_run(&bell, &input, seed, true, 1000).unwrap();
        *tally.entry(bell.cells_string(tape.cells())).or_insert(0) += 1;
    }
    assert_eq!(tally.len(), 2, "{tally:?}");
    let sigma = (0.25f64 / samples as f64).sqrt();
    for key in ["#00", "#11"] {
        let freq = tally[key] as f64 / samples as f64;
        assert!((freq - 0.5).abs() <= 4.0 * sigma + 0.01, "{key}: {freq}");
    }
}

#[test]
fn near_trivial_pipeline_reproduces_the_unitary() {
    // U -> factors -> circuits -> machine -> extracted unitary at N = 4.
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let m_bits = 10u32;
    let p = Precision::new(m_bits).unwrap();
    let u = random_unitary_4(&mut rng);
    let factors = srqtm::neartrivial::decompose_unitary(&u, 1e-10).unwrap();
    // the factor list multiplies out left-to-right, so the rightmost factor
    // acts first and the circuit concatenation runs in reverse
    let mut gates = Vec::new();
    for f in factors.iter().rev() {
        gates.extend(srqtm::neartrivial::synthesize(f, p).gates);
    }
    let circuit = Circuit::new(2, gates).unwrap();
    let machine = compile(&circuit, p).unwrap();
    let ex = extract_unitary(&machine, 2, 1_000_000).unwrap();
    let bound = factors.len() as f64 * std::f64::consts::PI / f64::powi(2.0, m_bits as i32) + 1e-6;
    let (d, _) = compare(&ex.matrix, &u, 1e-12).unwrap();
    assert!(
        d <= bound,
        "distance {d}, bound {bound} with {} factors",
        factors.len()
    );
}

fn random_unitary_4(rng: &mut rand_chacha::ChaCha8Rng) -> srqtm::matrix::CMatrix<f64> {
    use num_complex::Complex;
    use rand::Rng;
    let n = 4;
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
    let mut m = srqtm::matrix::CMatrix::zeros(n);
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            m.set(r, c, *v);
        }
    }
    m
}
