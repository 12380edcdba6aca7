use clap::{Parser, Subcommand, ValueEnum};
use inquir::analyzer::{analyze, sweep, timeline_csv, CostModel, SweepResult};
use inquir::arch::ArchConfig;
use inquir::ast::{parse_program, System};
use inquir::checker::{check, has_errors, Severity};
use inquir::frontend::{compile_qasm, LowerOptions};
use inquir::qstate::{BackendKind, OutcomeOracle};
use inquir::runtime::{run, RunConfig, RunOutcome, SchedulerPolicy};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

// stdout writes that end the process quietly when the reader has gone away
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        if write!(std::io::stdout().lock(), $($t)*).is_err() {
            std::process::exit(0);
        }
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        out!($($t)*);
        out!("\n");
    }};
}

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "inquirc", version, about = "InQuIR compiler, checker, interpreter and analyzer")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Roundrobin,
    Random,
    Inorder,
    Depresolved,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Statevector,
    Abstract,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a program and print it back
    Parse {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run the static lints
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compile an OpenQASM 2.0 circuit to InQuIR
    Compile {
        file: PathBuf,
        /// Preset such as `linear:8x2,4`, or a JSON file
        #[arg(long)]
        arch: String,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Keep data qubits allocated at the end
        #[arg(long)]
        keep: bool,
    },
    /// Execute a program under the operational semantics
    Run {
        file: PathBuf,
        #[arg(long)]
        arch: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "roundrobin")]
        policy: Policy,
        #[arg(long, value_enum, default_value = "statevector")]
        backend: BackendArg,
        #[arg(long)]
        fuel: Option<u64>,
        /// Measurement outcomes as a string of 0/1 instead of sampling
        #[arg(long)]
        outcomes: Option<String>,
        /// Replace derived operations by primitive sequences first
        #[arg(long)]
        expand: bool,
        /// Write the JSON-lines trace here
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Resource counts, depths and estimated execution time
    Analyze {
        /// InQuIR program, or a .qasm circuit compiled on the fly
        file: PathBuf,
        #[arg(long)]
        arch: String,
        #[arg(long)]
        cost: Option<PathBuf>,
        /// Write the per-processor timeline CSV here
        #[arg(long)]
        timeline: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Analyze circuits over several architectures
    Sweep {
        files: Vec<PathBuf>,
        /// May be repeated
        #[arg(long, required = true)]
        arch: Vec<String>,
        #[arg(long)]
        cost: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

struct Painter(bool);

impl Painter {
    fn from_env() -> Self {
        Painter(matches!(std::env::var("INQUIRC_COLOR").as_deref(), Ok("1") | Ok("always")))
    }
    fn paint(&self, code: &str, s: &str) -> String {
        if self.0 {
            format!("\x1b[{}m{}\x1b[0m", code, s)
        } else {
            s.to_string()
        }
    }
}

type Fail = (u8, String);

fn read(p: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(p).map_err(|e| (EXIT_USAGE, format!("{}: {}", p.display(), e)))
}

fn write_out(p: Option<&PathBuf>, s: &str) -> Result<(), Fail> {
    match p {
        Some(p) => std::fs::write(p, s).map_err(|e| (EXIT_USAGE, format!("{}: {}", p.display(), e))),
        None => {
            out!("{}", s);
            Ok(())
        }
    }
}

fn load_arch(spec: &str) -> Result<ArchConfig, Fail> {
    let p = Path::new(spec);
    let r = if p.is_file() { ArchConfig::from_json(&read(p)?) } else { ArchConfig::parse_preset(spec) };
    r.map_err(|e| (EXIT_USAGE, format!("architecture `{}`: {}", spec, e)))
}

fn load_cost(p: Option<&PathBuf>) -> Result<CostModel, Fail> {
    match p {
        None => Ok(CostModel::default()),
        Some(p) => CostModel::from_json(&read(p)?).map_err(|e| (EXIT_USAGE, format!("{}: {}", p.display(), e))),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn is_qasm(p: &Path) -> bool {
    p.extension().is_some_and(|e| e == "qasm")
}

fn load_program(p: &Path, arch: Option<&ArchConfig>) -> Result<System, Fail> {
    let src = read(p)?;
    if is_qasm(p) {
        let arch = arch.ok_or((EXIT_USAGE, "compiling a circuit needs --arch".to_string()))?;
        compile_qasm(&src, arch, &LowerOptions::default())
            .map(|(s, _)| s)
            .map_err(|e| (EXIT_INPUT, format!("{}: {}", p.display(), e)))
    } else {
        parse_program(&src).map_err(|e| (EXIT_INPUT, format!("{}: {}", p.display(), e)))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("{}: {}", Painter::from_env().paint("31", "error"), msg);
            ExitCode::from(code)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<u8, Fail> {
    let paint = Painter::from_env();
    match cmd {
        Cmd::Parse { file, format } => {
            let sys = load_program(&file, None)?;
            match format {
                Format::Text => out!("{}", sys),
                Format::Json => outln!("{}", sys.to_json()),
            }
            Ok(0)
        }
        Cmd::Check { file, format } => {
            let sys = load_program(&file, None)?;
            let ds = check(&sys);
            match format {
                Format::Json => outln!("{}", serde_json::to_string_pretty(&ds).expect("diagnostics serialize")),
                Format::Text => {
                    for d in &ds {
                        let c = if d.severity == Severity::Error { "31" } else { "33" };
                        outln!("{}", paint.paint(c, &d.to_string()));
                    }
                    if ds.is_empty() {
                        outln!("ok");
                    }
                }
            }
            Ok(if has_errors(&ds) { EXIT_INPUT } else { 0 })
        }
        Cmd::Compile { file, arch, out, format, keep } => {
            let arch = load_arch(&arch)?;
            let opts = LowerOptions { release_at_end: !keep, ..Default::default() };
            let (sys, stats) =
                compile_qasm(&read(&file)?, &arch, &opts).map_err(|e| (EXIT_INPUT, format!("{}: {}", file.display(), e)))?;
            let text = match format {
                Format::Text => sys.to_string(),
                Format::Json => sys.to_json() + "\n",
            };
            write_out(out.as_ref(), &text)?;
            eprintln!(
                "{} qubits, {} remote CX over {} hops, {} swaps",
                stats.qubits, stats.remote_cx, stats.hops, stats.swaps
            );
            Ok(0)
        }
        Cmd::Run { file, arch, seed, policy, backend, fuel, outcomes, expand, trace, format } => {
            let arch = load_arch(&arch)?;
            let sys = load_program(&file, Some(&arch))?;
            let oracle = match outcomes {
                Some(bits) => {
                    let v: Result<Vec<bool>, Fail> = bits
                        .chars()
                        .filter(|c| !c.is_whitespace() && *c != ',')
                        .map(|c| match c {
                            '0' => Ok(false),
                            '1' => Ok(true),
                            _ => Err((EXIT_USAGE, format!("bad outcome `{}`", c))),
                        })
                        .collect();
                    OutcomeOracle::scripted(v?)
                }
                None => OutcomeOracle::born(seed),
            };
            let policy = match policy {
                Policy::Roundrobin => SchedulerPolicy::RoundRobin,
                Policy::Random => SchedulerPolicy::SeededRandom { seed },
                Policy::Inorder => SchedulerPolicy::InOrderPerProcess,
                Policy::Depresolved => SchedulerPolicy::DependencyResolved,
            };
            let backend = match backend {
                BackendArg::Statevector => BackendKind::StateVector,
                BackendArg::Abstract => BackendKind::Abstract,
            };
            let cfg = RunConfig { backend, oracle, policy, fuel, expand, free_seed: seed };
            let outcome = run(&sys, &arch, &cfg).map_err(|e| (EXIT_INPUT, e.to_string()))?;
            if let Some(p) = trace {
                write_out(Some(&p), &outcome.trace().to_jsonl())?;
            }
            report_run(&outcome, format, &paint);
            Ok(outcome.exit_code() as u8)
        }
        Cmd::Analyze { file, arch, cost, timeline, format } => {
            let arch = load_arch(&arch)?;
            let cost = load_cost(cost.as_ref())?;
            let sys = load_program(&file, Some(&arch))?;
            let a = analyze(&sys, &arch, &cost).map_err(|e| (EXIT_INPUT, e.to_string()))?;
            if let Some(p) = timeline {
                write_out(Some(&p), &timeline_csv(&a.timeline))?;
            }
            match format {
                Format::Json => outln!("{}", a.report.to_json()),
                Format::Text => {
                    let r = &a.report;
                    outln!("E-count     {}", r.e_count);
                    outln!("C-count     {}", r.c_count);
                    outln!("E-depth     {}", r.e_depth);
                    outln!("C-depth     {}", r.c_depth);
                    outln!("cost (ns)   {}", r.total_cost_ns);
                }
            }
            Ok(0)
        }
        Cmd::Sweep { files, arch, cost, out, format } => {
            let cost = load_cost(cost.as_ref())?;
            let archs: Vec<(String, ArchConfig)> =
                arch.iter().map(|a| load_arch(a).map(|c| (a.clone(), c))).collect::<Result<_, _>>()?;
            let mut sources = std::collections::HashMap::new();
            let names: Vec<String> = files.iter().map(|f| f.display().to_string()).collect();
            for f in &files {
                sources.insert(f.display().to_string(), read(f)?);
            }
            let rows = sweep(&names, &archs, &cost, |name, arch| {
                let src = &sources[name];
                if name.ends_with(".qasm") {
                    compile_qasm(src, arch, &LowerOptions::default()).map(|(s, _)| s).map_err(|e| e.to_string())
                } else {
                    parse_program(src).map_err(|e| e.to_string())
                }
            });
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
                Format::Text => {
                    let mut s = String::from("circuit,arch,e_count,c_count,e_depth,c_depth,total_cost_ns,error\n");
                    for r in &rows {
                        let (c, a) = (csv_field(&r.circuit), csv_field(&r.arch));
                        match &r.result {
                            SweepResult::Ok(m) => s.push_str(&format!(
                                "{},{},{},{},{},{},{},\n",
                                c, a, m.e_count, m.c_count, m.e_depth, m.c_depth, m.total_cost_ns
                            )),
                            SweepResult::Err { error } => s.push_str(&format!("{},{},,,,,,{}\n", c, a, csv_field(error))),
                        }
                    }
                    s
                }
            };
            write_out(out.as_ref(), &text)?;
            Ok(0)
        }
    }
}

fn report_run(outcome: &RunOutcome, format: Format, paint: &Painter) {
    let st = outcome.state();
    if format == Format::Json {
        let envs: Vec<serde_json::Value> = st
            .procs
            .iter()
            .map(|p| {
                let mut m: Vec<(&String, &inquir::ast::Value)> = p.env.iter().collect();
                m.sort_by(|a, b| a.0.cmp(b.0));
                serde_json::json!({"name": p.name, "participant": p.loc, "env": m.into_iter().map(|(k, v)| (k.clone(), serde_json::to_value(v).expect("value"))).collect::<serde_json::Map<_, _>>()})
            })
            .collect();
        let mut o = serde_json::json!({"status": outcome.label(), "steps": st.steps(), "processes": envs});
        if let RunOutcome::Stuck { report, .. } = outcome {
            o["stuck"] = serde_json::to_value(report).expect("report");
        }
        outln!("{}", serde_json::to_string_pretty(&o).expect("json"));
        return;
    }
    match outcome {
        RunOutcome::Completed { .. } => outln!("{} after {} steps", paint.paint("32", "completed"), st.steps()),
        RunOutcome::FuelExhausted { .. } => outln!("{} after {} steps", paint.paint("33", "fuel exhausted"), st.steps()),
        RunOutcome::Stuck { report, .. } => {
            outln!("{} after {} steps: {}", paint.paint("31", "stuck"), st.steps(), report.kind.name());
            for b in &report.blocked {
                outln!("  {} @{}: {}", b.name, b.loc, b.instr);
            }
            for e in report.cycle_procs() {
                outln!("  cycle: {}", st.procs[e].name);
            }
        }
    }
    for w in outcome.trace().warnings() {
        outln!("{}: {}", paint.paint("33", "warning"), w);
    }
    for p in &st.procs {
        let mut kv: Vec<String> = p
            .env
            .iter()
            .filter(|(k, _)| !k.starts_with("_t"))
            .map(|(k, v)| match v {
                inquir::ast::Value::Bit(b) => format!("{}={}", k, *b as u8),
                inquir::ast::Value::Qubit(q) => format!("{}={}", k, q),
                inquir::ast::Value::Var(s) => format!("{}={}", k, s),
            })
            .collect();
        kv.sort();
        outln!("  {} @{}: {}", p.name, p.loc, kv.join(" "));
    }
}
