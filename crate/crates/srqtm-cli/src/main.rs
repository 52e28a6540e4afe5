//! srqtm command line: check, simulate, build, compile, render, unitary,
//! sr-check and near-trivial subcommands.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error, 3 runtime
//! simulation error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use srqtm::builders::{
    cnot_machine, controlled_machine, gate_machine, identity_machine, toffoli_machine,
    PrimitiveGate, Sign,
};
use srqtm::checks::{classify, ClassReport, RotationalCheck, UnidirectionalCheck};
use srqtm::circuit::{compile, parse_circuit, Precision};
use srqtm::machine::Machine;
use srqtm::matrix::CMatrix;
use srqtm::neartrivial::{
    decompose_unitary, emit_nt_list, parse_cmatrix, parse_nt_list, synthesize, universal_circuit,
    universal_machine,
};
use srqtm::oracle::extract_unitary;
use srqtm::qstd::{emit_amplitude, emit_machine, from_machine_opts, parse_machine, to_graph_text};
use srqtm::sim::{
    check_sr, measure_cells, run_traced, sample_run, Configuration, SrReport, Superposition, Tape,
    TraceRecord,
};
use srqtm::tree::{emit as emit_tree, TreeNode};

#[derive(Parser)]
#[command(
    name = "srqtm",
    version,
    about = "Stationary rotational quantum Turing machine toolkit"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Tree,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the static checkers on a machine file; exit 0 only if all pass.
    Check {
        machine: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Evolve a machine on an input tape (coherent by default; seeded
    /// sampling with --seed).
    Simulate(SimulateArgs),
    /// Build a gate machine from a one-line spec and emit it as .sqtm.
    Build {
        /// e.g. `h 2`, `ry + 1 3`, `cnot 1 2`, `toffoli 1 2 3`,
        /// `mcx 1 2 ; 3`, `mcry + 1 2 ; 1`, `mcphase 0.5 2 ; 1`, `identity`
        spec: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compile a circuit file to a machine.
    Compile {
        circuit: PathBuf,
        /// Bits of dyadic angle precision for free-angle rotations.
        #[arg(short = 'm', long = "precision", default_value_t = 12)]
        precision: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render a machine as a DOT state transition diagram.
    Render {
        machine: PathBuf,
        /// Collapse parallel edges into one multi-label arrow.
        #[arg(long)]
        merge_parallel: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Extract the unitary a machine implements over cells 1..n.
    Unitary {
        machine: PathBuf,
        #[arg(long)]
        cells: usize,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Near-trivial transformations.
    Nt {
        #[command(subcommand)]
        cmd: NtCmd,
    },
    /// Empirical SR certificate over all basis tapes of a cell range.
    SrCheck {
        machine: PathBuf,
        #[arg(long)]
        cells: usize,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Args)]
struct SimulateArgs {
    machine: PathBuf,
    /// Tape contents from cell 1 on (cell 0 is always blank), e.g. "01".
    #[arg(long)]
    input: String,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    /// Emit one record per step.
    #[arg(long)]
    trace: bool,
    /// Include full term lists in the trace.
    #[arg(long)]
    trace_terms: bool,
    /// Born-rule marginal over these cells (comma separated) at the end.
    #[arg(long)]
    measure: Option<String>,
    /// Sampling mode: draw one outcome per seed starting here.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeded samples.
    #[arg(long, default_value_t = 1)]
    samples: u64,
    /// Measure the internal state register after every step while sampling.
    #[arg(long)]
    per_step_measure: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum NtCmd {
    /// Factor a unitary (matrix text file) into near-trivial transformations.
    Decompose {
        matrix: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Synthesize a near-trivial spec line into a circuit.
    Synthesize {
        /// `phase <N> <j> <theta>` or `rot <N> <j> <k> <theta>`
        spec: String,
        #[arg(short = 'm', long = "precision", default_value_t = 12)]
        precision: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build the machine that applies any encoded near-trivial
    /// transformation to an n-qubit data register.
    Universal {
        #[arg(short)]
        n: usize,
        #[arg(short = 'm', long = "precision")]
        precision: u32,
        /// Emit the underlying circuit instead of the machine.
        #[arg(long)]
        circuit: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

enum CliError {
    Validation(String),
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("srqtm: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_output(path: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            fs::write(p, content).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_machine(path: &Path) -> Result<Machine<f64>, CliError> {
    let text = read_file(path)?;
    parse_machine(&text).map_err(|e| CliError::Validation(e.to_string()))
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Check { machine, format } => cmd_check(&machine, format),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Build { spec, output } => cmd_build(&spec, &output),
        Cmd::Compile {
            circuit,
            precision,
            output,
        } => cmd_compile(&circuit, precision, &output),
        Cmd::Render {
            machine,
            merge_parallel,
            output,
        } => cmd_render(&machine, merge_parallel, &output),
        Cmd::Unitary {
            machine,
            cells,
            max_steps,
            format,
        } => cmd_unitary(&machine, cells, max_steps, format),
        Cmd::SrCheck {
            machine,
            cells,
            max_steps,
            format,
        } => cmd_sr_check(&machine, cells, max_steps, format),
        Cmd::Nt { cmd } => match cmd {
            NtCmd::Decompose { matrix, tol } => cmd_nt_decompose(&matrix, tol),
            NtCmd::Synthesize {
                spec,
                precision,
                output,
            } => cmd_nt_synthesize(&spec, precision, &output),
            NtCmd::Universal {
                n,
                precision,
                circuit,
                output,
            } => cmd_nt_universal(n, precision, circuit, &output),
        },
    }
}

fn class_report_tree(m: &Machine<f64>, report: &ClassReport<f64>) -> TreeNode {
    let mut children = vec![TreeNode::leaf("machine", m.name())];
    match &report.unidirectional {
        UnidirectionalCheck::Ok(dirs) => {
            let mut node = TreeNode::branch("unidirectional", vec![TreeNode::leaf("ok", "true")]);
            for (q, d) in dirs {
                node.children
                    .push(TreeNode::leaf(format!("d[{q}]"), d.to_string()));
            }
            children.push(node);
        }
        UnidirectionalCheck::Violation { rule_a, rule_b } => {
            children.push(TreeNode::branch(
                "unidirectional",
                vec![
                    TreeNode::leaf("ok", "false"),
                    TreeNode::leaf("rule_a", rule_a.to_string()),
                    TreeNode::leaf("rule_b", rule_b.to_string()),
                ],
            ));
        }
    }
    match &report.rotational {
        RotationalCheck::Ok(map) => {
            let mut node = TreeNode::branch("rotational", vec![TreeNode::leaf("ok", "true")]);
            for ((p, s), q) in map {
                node.children.push(TreeNode::leaf(format!("q[{p},{s}]"), q));
            }
            children.push(node);
        }
        RotationalCheck::NotApplicable => {
            children.push(TreeNode::branch(
                "rotational",
                vec![TreeNode::leaf("ok", "not-applicable")],
            ));
        }
        RotationalCheck::Violation {
            state,
            read,
            target_a,
            target_b,
        } => {
            children.push(TreeNode::branch(
                "rotational",
                vec![
                    TreeNode::leaf("ok", "false"),
                    TreeNode::leaf("at", format!("{state},{read}")),
                    TreeNode::leaf("targets", format!("{target_a} {target_b}")),
                ],
            ));
        }
    }
    let mut unit = vec![
        TreeNode::leaf(
            "ok",
            if report.locally_unitary.ok {
                "true"
            } else {
                "false"
            },
        ),
        TreeNode::leaf(
            "worst_deviation",
            format!("{:e}", report.locally_unitary.worst_deviation),
        ),
    ];
    if let Some((a, b)) = &report.locally_unitary.worst_pair {
        unit.push(TreeNode::leaf(
            "worst_pair",
            format!("({},{}) ({},{})", a.0, a.1, b.0, b.1),
        ));
    }
    children.push(TreeNode::branch("locally_unitary", unit));
    children.push(TreeNode::leaf(
        "all_ok",
        if report.all_ok() { "true" } else { "false" },
    ));
    TreeNode::branch("class_report", children)
}

fn cmd_check(path: &Path, format: Format) -> Result<(), CliError> {
    let m = load_machine(path)?;
    let report = classify(&m);
    match format {
        Format::Tree => print!("{}", emit_tree(&[class_report_tree(&m, &report)])),
        Format::Text => {
            println!("machine: {}", m.name());
            println!(
                "unidirectional: {}",
                if report.unidirectional.is_ok() {
                    "yes"
                } else {
                    "no"
                }
            );
            match &report.rotational {
                RotationalCheck::Ok(_) => println!("rotational: yes"),
                RotationalCheck::NotApplicable => println!("rotational: not applicable"),
                RotationalCheck::Violation { state, read, .. } => {
                    println!("rotational: no (at {state},{read})")
                }
            }
            println!(
                "locally unitary: {} (worst deviation {:e})",
                if report.locally_unitary.ok {
                    "yes"
                } else {
                    "no"
                },
                report.locally_unitary.worst_deviation
            );
            println!("result: {}", if report.all_ok() { "PASS" } else { "FAIL" });
        }
    }
    if report.all_ok() {
        Ok(())
    } else {
        Err(CliError::Validation(
            "machine failed static checks".to_string(),
        ))
    }
}

fn superposition_tree(m: &Machine<f64>, s: &Superposition<f64>) -> Vec<TreeNode> {
    s.terms()
        .map(|(cfg, amp)| {
            TreeNode::branch(
                "term",
                vec![
                    TreeNode::leaf("state", m.state_name(cfg.state)),
                    TreeNode::leaf("tape", m.cells_string(cfg.tape.cells())),
                    TreeNode::leaf("head", cfg.head.to_string()),
                    TreeNode::leaf("re", format!("{:e}", amp.re)),
                    TreeNode::leaf("im", format!("{:e}", amp.im)),
                ],
            )
        })
        .collect()
}

fn trace_tree(records: &[TraceRecord]) -> Vec<TreeNode> {
    records
        .iter()
        .map(|r| {
            let mut children = vec![
                TreeNode::leaf("step", r.step.to_string()),
                TreeNode::leaf(
                    "heads",
                    r.heads
                        .iter()
                        .map(|h| h.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                ),
                TreeNode::leaf("terms", r.term_count.to_string()),
                TreeNode::leaf("norm", format!("{:e}", r.norm2)),
            ];
            if let Some(terms) = &r.terms {
                for t in terms {
                    children.push(TreeNode::branch(
                        "term",
                        vec![
                            TreeNode::leaf("state", &t.state),
                            TreeNode::leaf("tape", &t.tape),
                            TreeNode::leaf("head", t.head.to_string()),
                            TreeNode::leaf("re", format!("{:e}", t.re)),
                            TreeNode::leaf("im", format!("{:e}", t.im)),
                        ],
                    ));
                }
            }
            TreeNode::branch("record", children)
        })
        .collect()
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let m = load_machine(&args.machine)?;
    let cells = m
        .parse_cells(&args.input)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let input = Tape::from_cell1(&cells, m.blank());

    if let Some(seed) = args.seed {
        let mut tally: std::collections::BTreeMap<String, u64> = Default::default();
        let mut steps = 0;
        for s in 0..args.samples {
            let (tape, t) = sample_run(&m, &input, seed + s, args.per_step_measure, args.max_steps)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            *tally.entry(m.cells_string(tape.cells())).or_insert(0) += 1;
            steps = t;
        }
        match args.format {
            Format::Text => {
                println!("samples: {} (seed {seed}, steps {steps})", args.samples);
                for (tape, count) in tally {
                    println!("{tape}: {count}");
                }
            }
            Format::Tree => {
                let mut children = vec![
                    TreeNode::leaf("seed", seed.to_string()),
                    TreeNode::leaf("samples", args.samples.to_string()),
                    TreeNode::leaf("steps", steps.to_string()),
                ];
                for (tape, count) in tally {
                    children.push(TreeNode::branch(
                        "outcome",
                        vec![
                            TreeNode::leaf("tape", tape),
                            TreeNode::leaf("count", count.to_string()),
                        ],
                    ));
                }
                print!("{}", emit_tree(&[TreeNode::branch("sampling", children)]));
            }
        }
        return Ok(());
    }

    let s0 = Superposition::single(Configuration {
        state: m.start(),
        tape: input,
        head: 0,
    });
    let (s, report, records) = run_traced(&m, s0, args.max_steps, args.trace_terms)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut nodes = Vec::new();
    if args.trace {
        nodes.push(TreeNode::branch("trace", trace_tree(&records)));
    }
    let mut run_children = vec![
        TreeNode::leaf("steps", report.steps.to_string()),
        TreeNode::leaf("halted", report.halted.to_string()),
        TreeNode::leaf("head_deterministic", report.head_deterministic.to_string()),
        TreeNode::leaf("norm_drift", format!("{:e}", report.norm_drift)),
    ];
    if let Some(trace) = &report.head_trace {
        run_children.push(TreeNode::leaf(
            "head_trace",
            trace
                .iter()
                .map(|h| h.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        ));
    }
    run_children.extend(superposition_tree(&m, &s));
    if let Some(measure) = &args.measure {
        let cells: Vec<usize> = measure
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("bad cell {c:?}")))
            })
            .collect::<Result<_, _>>()?;
        let dist = measure_cells(&m, &s, &cells);
        let mut node = TreeNode::branch(
            "measurement",
            vec![TreeNode::leaf("cells", measure.clone())],
        );
        for (k, p) in dist {
            node.children.push(TreeNode::leaf(k, format!("{p:e}")));
        }
        run_children.push(node);
    }
    nodes.push(TreeNode::branch("run", run_children));

    match args.format {
        Format::Tree => print!("{}", emit_tree(&nodes)),
        Format::Text => {
            if args.trace {
                for r in &records {
                    println!(
                        "step {:3}  heads {:?}  terms {}  norm {:.12}",
                        r.step, r.heads, r.term_count, r.norm2
                    );
                }
            }
            println!("steps: {}", report.steps);
            println!("halted: {}", report.halted);
            println!("head deterministic: {}", report.head_deterministic);
            if let Some(trace) = &report.head_trace {
                println!(
                    "head trace: {}",
                    trace
                        .iter()
                        .map(|h| h.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                );
            }
            for (cfg, amp) in s.terms() {
                println!(
                    "|{}, {}, {}>  {}",
                    m.state_name(cfg.state),
                    m.cells_string(cfg.tape.cells()),
                    cfg.head,
                    emit_amplitude(*amp, &None)
                );
            }
            if let Some(measure) = &args.measure {
                let cells: Vec<usize> = measure
                    .split(',')
                    .map(|c| {
                        c.trim()
                            .parse::<usize>()
                            .map_err(|_| CliError::Usage(format!("bad cell {c:?}")))
                    })
                    .collect::<Result<_, _>>()?;
                for (k, p) in measure_cells(&m, &s, &cells) {
                    println!("P[{k}] = {p}");
                }
            }
        }
    }
    Ok(())
}

fn parse_build_spec(spec: &str) -> Result<Machine<f64>, CliError> {
    let toks: Vec<&str> = spec.split_whitespace().collect();
    let usage = |msg: &str| CliError::Usage(format!("build spec: {msg}"));
    let cell = |tok: &str| -> Result<usize, CliError> {
        tok.parse::<usize>()
            .map_err(|_| usage(&format!("bad cell {tok:?}")))
    };
    let sign = |tok: &str| -> Result<Sign, CliError> {
        match tok {
            "+" => Ok(Sign::Plus),
            "-" => Ok(Sign::Minus),
            _ => Err(usage("sign must be + or -")),
        }
    };
    let split_controls = |toks: &[&str]| -> Result<(Vec<usize>, usize), CliError> {
        let semi = toks
            .iter()
            .position(|t| *t == ";")
            .ok_or_else(|| usage("expected '; <target>'"))?;
        if semi == 0 || semi + 2 != toks.len() {
            return Err(usage("expected '<controls...> ; <target>'"));
        }
        let controls = toks[..semi]
            .iter()
            .map(|t| cell(t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((controls, cell(toks[semi + 1])?))
    };
    let build = |r: Result<Machine<f64>, srqtm::builders::BuildError>| {
        r.map_err(|e| CliError::Validation(e.to_string()))
    };
    match toks.as_slice() {
        ["identity"] => Ok(identity_machine()),
        ["h", w] => build(gate_machine(cell(w)?, &PrimitiveGate::H)),
        ["x", w] => build(gate_machine(cell(w)?, &PrimitiveGate::X)),
        ["ry", s, k, w] => build(gate_machine(
            cell(w)?,
            &PrimitiveGate::Ry(sign(s)?, k.parse().map_err(|_| usage("bad exponent"))?),
        )),
        ["rz", s, k, w] => build(gate_machine(
            cell(w)?,
            &PrimitiveGate::Rz(sign(s)?, k.parse().map_err(|_| usage("bad exponent"))?),
        )),
        ["phase", theta, w] => {
            let t: f64 = theta.parse().map_err(|_| usage("bad angle"))?;
            build(gate_machine(
                cell(w)?,
                &PrimitiveGate::Phase(t.rem_euclid(2.0 * std::f64::consts::PI)),
            ))
        }
        ["cnot", c, t] => build(cnot_machine(cell(c)?, cell(t)?)),
        ["toffoli", c1, c2, t] => build(toffoli_machine(cell(c1)?, cell(c2)?, cell(t)?)),
        ["mcx", rest @ ..] => {
            let (controls, target) = split_controls(rest)?;
            build(controlled_machine(&controls, target, &PrimitiveGate::X))
        }
        ["mcry", s, k, rest @ ..] => {
            let (controls, target) = split_controls(rest)?;
            build(controlled_machine(
                &controls,
                target,
                &PrimitiveGate::Ry(sign(s)?, k.parse().map_err(|_| usage("bad exponent"))?),
            ))
        }
        ["mcphase", theta, rest @ ..] => {
            let t: f64 = theta.parse().map_err(|_| usage("bad angle"))?;
            let (controls, target) = split_controls(rest)?;
            build(controlled_machine(
                &controls,
                target,
                &PrimitiveGate::Phase(t.rem_euclid(2.0 * std::f64::consts::PI)),
            ))
        }
        _ => Err(usage("unrecognized spec")),
    }
}

fn cmd_build(spec: &str, output: &Option<PathBuf>) -> Result<(), CliError> {
    let m = parse_build_spec(spec)?;
    write_output(output, &emit_machine(&m))
}

fn cmd_compile(path: &Path, precision: u32, output: &Option<PathBuf>) -> Result<(), CliError> {
    let text = read_file(path)?;
    let circuit = parse_circuit::<f64>(&text).map_err(|e| CliError::Validation(e.to_string()))?;
    let p = Precision::new(precision).map_err(|e| CliError::Usage(e.to_string()))?;
    let m = compile(&circuit, p).map_err(|e| CliError::Validation(e.to_string()))?;
    write_output(output, &emit_machine(&m))
}

fn cmd_render(path: &Path, merge_parallel: bool, output: &Option<PathBuf>) -> Result<(), CliError> {
    let m = load_machine(path)?;
    let doc =
        from_machine_opts(&m, merge_parallel).map_err(|e| CliError::Validation(e.to_string()))?;
    write_output(output, &to_graph_text(&doc))
}

fn cmd_unitary(
    path: &Path,
    cells: usize,
    max_steps: usize,
    format: Format,
) -> Result<(), CliError> {
    let m = load_machine(path)?;
    let ex = extract_unitary(&m, cells, max_steps).map_err(|e| CliError::Runtime(e.to_string()))?;
    match format {
        Format::Text => {
            println!("cells: {}", ex.cells);
            println!("steps: {}", ex.steps);
            if let Some(trace) = &ex.head_trace {
                println!(
                    "head trace: {}",
                    trace
                        .iter()
                        .map(|h| h.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                );
            }
            print!("{}", ex.matrix.format_grid());
        }
        Format::Tree => {
            let mut children = vec![
                TreeNode::leaf("cells", ex.cells.to_string()),
                TreeNode::leaf("steps", ex.steps.to_string()),
            ];
            if let Some(trace) = &ex.head_trace {
                children.push(TreeNode::leaf(
                    "head_trace",
                    trace
                        .iter()
                        .map(|h| h.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                ));
            }
            let dim = ex.matrix.dim();
            for i in 0..dim {
                let row: Vec<String> = (0..dim)
                    .map(|j| emit_amplitude(ex.matrix.get(i, j), &None))
                    .collect();
                children.push(TreeNode::leaf("row", row.join(" ")));
            }
            print!("{}", emit_tree(&[TreeNode::branch("unitary", children)]));
        }
    }
    Ok(())
}

fn sr_report_tree(report: &SrReport) -> TreeNode {
    let mut children = vec![
        TreeNode::leaf("inputs", report.runs.len().to_string()),
        TreeNode::leaf("steps_uniform", report.steps_uniform.to_string()),
        TreeNode::leaf("traces_identical", report.traces_identical.to_string()),
        TreeNode::leaf(
            "heads_deterministic",
            report.all_heads_deterministic.to_string(),
        ),
        TreeNode::leaf("final_head_zero", report.all_final_head_zero.to_string()),
        TreeNode::leaf("ok", report.ok().to_string()),
    ];
    for r in &report.runs {
        let mut run = vec![
            TreeNode::leaf(
                "input",
                if r.input.is_empty() {
                    "(blank)".to_string()
                } else {
                    r.input.clone()
                },
            ),
            TreeNode::leaf("steps", r.steps.to_string()),
        ];
        if let Some(trace) = &r.head_trace {
            run.push(TreeNode::leaf(
                "head_trace",
                trace
                    .iter()
                    .map(|h| h.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            ));
        }
        children.push(TreeNode::branch("run", run));
    }
    TreeNode::branch("sr_report", children)
}

fn cmd_sr_check(
    path: &Path,
    cells: usize,
    max_steps: usize,
    format: Format,
) -> Result<(), CliError> {
    let m = load_machine(path)?;
    let report = check_sr(&m, cells, max_steps).map_err(|e| CliError::Runtime(e.to_string()))?;
    match format {
        Format::Tree => print!("{}", emit_tree(&[sr_report_tree(&report)])),
        Format::Text => {
            println!("inputs: {}", report.runs.len());
            println!("uniform step count: {}", report.steps_uniform);
            println!("identical head traces: {}", report.traces_identical);
            println!("deterministic heads: {}", report.all_heads_deterministic);
            println!("final head at start cell: {}", report.all_final_head_zero);
            println!("result: {}", if report.ok() { "PASS" } else { "FAIL" });
        }
    }
    if report.ok() {
        Ok(())
    } else {
        Err(CliError::Validation(
            "machine failed the empirical SR checks".to_string(),
        ))
    }
}

fn cmd_nt_decompose(path: &Path, tol: f64) -> Result<(), CliError> {
    let text = read_file(path)?;
    let u: CMatrix<f64> = parse_cmatrix(&text).map_err(|e| CliError::Validation(e.to_string()))?;
    let factors = decompose_unitary(&u, tol).map_err(|e| CliError::Validation(e.to_string()))?;
    print!("{}", emit_nt_list(&factors));
    Ok(())
}

fn cmd_nt_synthesize(spec: &str, precision: u32, output: &Option<PathBuf>) -> Result<(), CliError> {
    let factors = parse_nt_list::<f64>(spec).map_err(|e| CliError::Validation(e.to_string()))?;
    let nt = match factors.as_slice() {
        [single] => single,
        _ => {
            return Err(CliError::Usage(
                "expected exactly one near-trivial spec line".to_string(),
            ))
        }
    };
    let p = Precision::new(precision).map_err(|e| CliError::Usage(e.to_string()))?;
    let circuit = synthesize(nt, p);
    let text =
        srqtm::circuit::emit_circuit(&circuit).map_err(|e| CliError::Validation(e.to_string()))?;
    write_output(output, &text)
}

fn cmd_nt_universal(
    n: usize,
    precision: u32,
    circuit: bool,
    output: &Option<PathBuf>,
) -> Result<(), CliError> {
    if n < 1 {
        return Err(CliError::Usage("n must be at least 1".to_string()));
    }
    let p = Precision::new(precision).map_err(|e| CliError::Usage(e.to_string()))?;
    if circuit {
        let c = universal_circuit::<f64>(n, p);
        let text =
            srqtm::circuit::emit_circuit(&c).map_err(|e| CliError::Validation(e.to_string()))?;
        write_output(output, &text)
    } else {
        let m = universal_machine::<f64>(n, p).map_err(|e| CliError::Validation(e.to_string()))?;
        write_output(output, &emit_machine(&m))
    }
}
