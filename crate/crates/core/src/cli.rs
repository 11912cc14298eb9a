//! Command dispatch for the `private-product` binary.
//!
//! Structured output is JSON on stdout, diagnostics go to stderr. Exit codes:
//! 0 success, 1 usage or input error, 2 internal consistency failure,
//! 3 no local solution.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::audit::{check_def3, empirical_chi_square, privacy_equivalence, AuditReport, ChiSquareResult};
use crate::encodings::{binary_minimal_operators, solve_local_params, EncodingId, EncodingRecord, PrivateProductFamily};
use crate::field::{Prime, PrimitiveRoot};
use crate::protocol::{
    dot_product, psi_intersect, run_protocol, run_protocol_forced, seeded_rng, ChannelMode,
    ProtocolConfig, ProtocolError,
};
use crate::qudit::{BellLabel, LocalOp, MAX_NUMERIC_PRIME};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;
pub const EXIT_NO_SOLUTION: i32 = 3;

/// Largest prime accepted by the exhaustive audit.
pub const MAX_AUDIT_PRIME: u32 = 13;

#[derive(Parser, Debug)]
#[command(name = "private-product", version, about = "Private product computation with entangled qudits")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, env = "PRIVATE_PRODUCT_SEED", default_value_t = 0)]
    seed: u64,
    /// Emit JSON where the default is human-readable.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Classical,
    Shared,
}

impl From<ModeArg> for ChannelMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Classical => ChannelMode::Classical,
            ModeArg::Shared => ChannelMode::SharedRandomness,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one protocol instance and print its transcript.
    Run {
        #[arg(long = "p")]
        p: u64,
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(long, value_enum, default_value = "classical")]
        mode: ModeArg,
        /// Use this encoding (`base:action:n:beta`) instead of sampling.
        /// Test hook for reproducing fixed runs.
        #[arg(long)]
        force_id: Option<String>,
        /// Shadow the symbolic run with a state-vector simulation.
        #[arg(long)]
        numeric: bool,
    },
    /// Build the private product family and print its partition sizes.
    Family {
        #[arg(long = "p")]
        p: u64,
        /// Write the full family as JSON to this path.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Audit the family exhaustively, optionally with an empirical test.
    Audit {
        #[arg(long = "p")]
        p: u64,
        /// Number of protocol runs for the chi-square test.
        #[arg(long)]
        empirical: Option<usize>,
        /// Product value the empirical test conditions on.
        #[arg(long, default_value_t = 0)]
        product: u64,
    },
    /// Solve for local operator parameters realizing an encoding.
    Solve {
        #[arg(long = "p")]
        p: u64,
        /// Encoding JSON file.
        #[arg(long)]
        encoding: PathBuf,
    },
    /// Binary set intersection over a universe `0..universe`.
    Psi {
        #[arg(long)]
        universe: usize,
        /// Comma-separated elements of Alice's set.
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        /// Comma-separated elements of Bob's set.
        #[arg(long, allow_hyphen_values = true)]
        b: String,
    },
    /// Binary dot product of two bit strings.
    Dot {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Print the three binary encodings and their label tables.
    DemoBinary,
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            stderr: String::new(),
            code: EXIT_OK,
        }
    }

    fn fail(code: i32, msg: impl std::fmt::Display) -> Self {
        Outcome {
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
            code,
        }
    }

    fn with_code(mut self, code: i32) -> Self {
        self.code = code;
        self
    }
}

fn line(v: impl Serialize) -> String {
    let mut s = serde_json::to_string(&v).expect("output serializes");
    s.push('\n');
    s
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    return Outcome::ok(e.to_string());
                }
                _ => EXIT_USAGE,
            };
            return Outcome {
                stdout: String::new(),
                stderr: e.to_string(),
                code,
            };
        }
    };
    let seed = cli.seed;
    match cli.command {
        Command::Run {
            p,
            a,
            b,
            mode,
            force_id,
            numeric,
        } => cmd_run(p, a, b, seed, mode.into(), force_id.as_deref(), numeric),
        Command::Family { p, export } => cmd_family(p, export, seed),
        Command::Audit {
            p,
            empirical,
            product,
        } => cmd_audit(p, empirical, product, seed),
        Command::Solve { p, encoding } => cmd_solve(p, encoding, seed),
        Command::Psi { universe, a, b } => cmd_psi(universe, &a, &b, seed),
        Command::Dot { a, b } => cmd_dot(&a, &b, seed),
        Command::DemoBinary => cmd_demo_binary(cli.json, seed),
    }
}

fn prime(p: u64) -> Result<Prime, Outcome> {
    Prime::new(p).map_err(|e| Outcome::fail(EXIT_USAGE, e))
}

fn protocol_failure(e: ProtocolError) -> Outcome {
    let code = match e {
        ProtocolError::NumericMismatch { .. } | ProtocolError::EncodingDisagreement { .. } => {
            EXIT_INTERNAL
        }
        _ => EXIT_USAGE,
    };
    Outcome::fail(code, e)
}

fn cmd_run(
    p: u64,
    a: u64,
    b: u64,
    seed: u64,
    mode: ChannelMode,
    force_id: Option<&str>,
    numeric: bool,
) -> Outcome {
    let p = match prime(p) {
        Ok(p) => p,
        Err(o) => return o,
    };
    if a >= p.get() as u64 || b >= p.get() as u64 {
        return Outcome::fail(EXIT_USAGE, format!("inputs must lie in [0, {p})"));
    }
    let cfg = match ProtocolConfig::for_prime(p).with_mode(mode).with_numeric_check(numeric) {
        Ok(c) => c,
        Err(e) => return protocol_failure(e),
    };
    let (a, b) = (p.elem(a as i64), p.elem(b as i64));
    let mut rng = seeded_rng(seed);
    let result = match force_id {
        Some(s) => match EncodingId::parse(s, p) {
            Ok(id) => run_protocol_forced(a, b, &cfg, id, &mut rng),
            Err(e) => return Outcome::fail(EXIT_USAGE, e),
        },
        None => run_protocol(a, b, &cfg, &mut rng),
    };
    match result {
        Ok(t) => {
            let out = Outcome::ok(line(t.record(mode, seed)));
            if t.is_correct() {
                out
            } else {
                Outcome {
                    stderr: format!("error: decoded {} but a*b = {}\n", t.product, a * b),
                    ..out
                }
                .with_code(EXIT_INTERNAL)
            }
        }
        Err(e) => protocol_failure(e),
    }
}

fn cmd_family(p: u64, export: Option<PathBuf>, seed: u64) -> Outcome {
    let p = match prime(p) {
        Ok(p) => p,
        Err(o) => return o,
    };
    if p.get() > MAX_NUMERIC_PRIME {
        return Outcome::fail(EXIT_USAGE, format!("family enumeration is limited to p <= {MAX_NUMERIC_PRIME}"));
    }
    let family = PrivateProductFamily::build(PrimitiveRoot::find(p));
    if let Some(path) = &export {
        let body = serde_json::to_string(&family.export()).expect("family serializes");
        if let Err(e) = std::fs::write(path, body) {
            return Outcome::fail(EXIT_USAGE, format!("cannot write {}: {e}", path.display()));
        }
    }
    Outcome::ok(line(json!({
        "p": p.get(),
        "alpha": family.alpha().get().value(),
        "size": family.len(),
        "partition": family.partition(),
        "seed": seed,
    })))
}

#[derive(Serialize)]
struct EmpiricalRecord {
    n_runs: usize,
    product: u32,
    chi_square: ChiSquareResult,
}

#[derive(Serialize)]
struct AuditOutput {
    #[serde(flatten)]
    report: AuditReport,
    privacy_equivalence: bool,
    empirical: Option<EmpiricalRecord>,
    seed: u64,
}

fn cmd_audit(p: u64, empirical: Option<usize>, product: u64, seed: u64) -> Outcome {
    let p = match prime(p) {
        Ok(p) => p,
        Err(o) => return o,
    };
    if p.get() > MAX_AUDIT_PRIME {
        return Outcome::fail(EXIT_USAGE, format!("exhaustive audit is limited to p <= {MAX_AUDIT_PRIME}"));
    }
    if product >= p.get() as u64 {
        return Outcome::fail(EXIT_USAGE, format!("product must lie in [0, {p})"));
    }
    let alpha = PrimitiveRoot::find(p);
    let family = PrivateProductFamily::build(alpha);
    let report = check_def3(p, family.members());
    let equivalent = privacy_equivalence(p, family.members());
    let empirical = match empirical {
        Some(n) if n < 1000 => {
            return Outcome::fail(EXIT_USAGE, "--empirical needs at least 1000 runs");
        }
        Some(n) => {
            let cfg = ProtocolConfig::new(alpha);
            let v = p.elem(product as i64);
            match empirical_chi_square(n, &cfg, &mut seeded_rng(seed), v) {
                Ok(chi_square) => Some(EmpiricalRecord {
                    n_runs: n,
                    product: v.value(),
                    chi_square,
                }),
                Err(e) => return protocol_failure(e),
            }
        }
        None => None,
    };
    let passed = report.passed && equivalent && empirical.as_ref().is_none_or(|e| e.chi_square.passed);
    let out = Outcome::ok(line(AuditOutput {
        report,
        privacy_equivalence: equivalent,
        empirical,
        seed,
    }));
    if passed {
        out
    } else {
        out.with_code(EXIT_INTERNAL)
    }
}

fn cmd_solve(p: u64, path: PathBuf, seed: u64) -> Outcome {
    let p = match prime(p) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return Outcome::fail(EXIT_USAGE, format!("cannot read {}: {e}", path.display())),
    };
    let record = match EncodingRecord::from_json(&text) {
        Ok(r) => r,
        Err(e) => return Outcome::fail(EXIT_USAGE, e),
    };
    if record.p != p.get() {
        return Outcome::fail(EXIT_USAGE, format!("file is over p = {}, not {p}", record.p));
    }
    let encoding = match record.to_encoding() {
        Ok(e) => e,
        Err(e) => return Outcome::fail(EXIT_USAGE, e),
    };
    match solve_local_params(&encoding) {
        Ok(params) => Outcome::ok(line(json!({ "params": params, "seed": seed }))),
        Err(no) => Outcome {
            stdout: line(json!({ "no_solution": no, "seed": seed })),
            stderr: format!("{no}\n"),
            code: EXIT_NO_SOLUTION,
        },
    }
}

fn parse_set(s: &str) -> Result<BTreeSet<usize>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| format!("bad set element {t:?}")))
        .collect()
}

fn parse_bits(s: &str) -> Result<Vec<bool>, String> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(format!("bad bit {c:?} in {s:?}")),
        })
        .collect()
}

fn binary_config() -> ProtocolConfig {
    ProtocolConfig::for_prime(Prime::new(2).expect("2 is prime"))
}

fn cmd_psi(universe: usize, a: &str, b: &str, seed: u64) -> Outcome {
    let (set_a, set_b) = match (parse_set(a), parse_set(b)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return Outcome::fail(EXIT_USAGE, e),
    };
    let cfg = binary_config();
    match psi_intersect(universe, &set_a, &set_b, &cfg, &mut seeded_rng(seed)) {
        Ok(out) => Outcome::ok(line(json!({
            "universe": universe,
            "intersection": out.intersection,
            "transcripts": out
                .transcripts
                .iter()
                .map(|t| t.record(cfg.mode(), seed))
                .collect::<Vec<_>>(),
            "seed": seed,
        }))),
        Err(e) => protocol_failure(e),
    }
}

fn cmd_dot(a: &str, b: &str, seed: u64) -> Outcome {
    let (va, vb) = match (parse_bits(a), parse_bits(b)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return Outcome::fail(EXIT_USAGE, e),
    };
    let cfg = binary_config();
    match dot_product(&va, &vb, &cfg, &mut seeded_rng(seed)) {
        Ok(out) => Outcome::ok(line(json!({
            "dot": out.value,
            "permutation": out.permutation,
            "received": out.received,
            "transcripts": out
                .transcripts
                .iter()
                .map(|t| t.record(cfg.mode(), seed))
                .collect::<Vec<_>>(),
            "seed": seed,
        }))),
        Err(e) => protocol_failure(e),
    }
}

/// One binary encoding as operator names and labels, indexed `[a][b]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BinaryDemoTable {
    pub operators: [[String; 2]; 2],
    pub labels: [[BellLabel; 2]; 2],
}

fn binary_op_name(op: LocalOp) -> &'static str {
    match (op.x.value(), op.z.value()) {
        (0, 0) => "I",
        (1, 0) => "X",
        (0, 1) => "Z",
        _ => "XZ",
    }
}

/// Operator tables of the minimal binary family and the labels each entry
/// produces on `|φ00⟩`.
pub fn binary_demo_tables() -> Vec<BinaryDemoTable> {
    let two = Prime::new(2).expect("2 is prime");
    binary_minimal_operators()
        .iter()
        .map(|ops| {
            let entry = |a: i64, b: i64| {
                let (a, b) = (two.elem(a), two.elem(b));
                let name = format!("{}⊗{}", binary_op_name(ops.alice_op(a)), binary_op_name(ops.bob_op(b)));
                (name, ops.label(a, b))
            };
            let [(o00, l00), (o01, l01), (o10, l10), (o11, l11)] =
                [entry(0, 0), entry(0, 1), entry(1, 0), entry(1, 1)];
            BinaryDemoTable {
                operators: [[o00, o01], [o10, o11]],
                labels: [[l00, l01], [l10, l11]],
            }
        })
        .collect()
}

fn cmd_demo_binary(as_json: bool, seed: u64) -> Outcome {
    let tables = binary_demo_tables();
    if as_json {
        return Outcome::ok(line(json!({ "encodings": tables, "seed": seed })));
    }
    let mut s = String::new();
    for (k, t) in tables.iter().enumerate() {
        s.push_str(&format!("encoding {}\n", k + 1));
        s.push_str("  a\\b  0          1\n");
        for a in 0..2 {
            s.push_str(&format!(
                "  {a}    {:<10} {:<10}   {:<6} {}\n",
                t.operators[a][0], t.operators[a][1], t.labels[a][0], t.labels[a][1]
            ));
        }
    }
    s.push_str(&format!("seed {seed}\n"));
    Outcome::ok(s)
}
