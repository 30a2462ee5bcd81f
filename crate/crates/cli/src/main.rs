//! `featline`: batch analyses of feature models and the HTTP server.
//!
//! Exit codes: 0 success, 1 negative answer (invalid or void model, no
//! solution), 2 usage or parse error, 3 internal error.

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use featline_core::analysis::{Assignment, Report, DEFAULT_CAP};
use featline_core::{
    compile, parse_unchecked, validate_model, AnalysisError, AnalysisReport, Compiled, Diagnostic, FeatureModel,
    Projection,
};
use featline_fd::{Limits, Strategy, ValueOrder, VarOrder};

const OK: u8 = 0;
const NEGATIVE: u8 = 1;
const USAGE: u8 = 2;
const INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "featline", version, about = "Feature model analysis and configuration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print results as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Report elapsed solver time.
    #[arg(long, global = true)]
    timing: bool,
    /// Variable selection for search.
    #[arg(long, global = true, value_enum, default_value_t = VarOrderArg::Declaration)]
    var_order: VarOrderArg,
    /// Value order for search.
    #[arg(long, global = true, value_enum, default_value_t = ValueOrderArg::Ascending)]
    value_order: ValueOrderArg,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model and test whether it has any configuration.
    Check { file: PathBuf },
    /// Count configurations.
    Count {
        file: PathBuf,
        /// Stop counting here (default: FEATLINE_CAP or 1000000).
        #[arg(long)]
        cap: Option<u64>,
        /// Which variables distinguish configurations.
        #[arg(long, value_enum, default_value_t = ProjectArg::All)]
        project: ProjectArg,
    },
    /// List configurations in search order.
    Enumerate {
        file: PathBuf,
        #[arg(long)]
        limit: u64,
    },
    /// Best configuration for a declared goal.
    Optimize {
        file: PathBuf,
        #[arg(long)]
        goal: String,
    },
    /// First configuration in search order.
    Solve { file: PathBuf },
    /// Core and dead features.
    Analyze { file: PathBuf },
    /// Print the lowered constraint program.
    EmitCsp { file: PathBuf },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VarOrderArg {
    Declaration,
    FirstFail,
}

#[derive(Clone, Copy, ValueEnum)]
enum ValueOrderArg {
    Ascending,
    Descending,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProjectArg {
    All,
    Features,
}

/// A failed run: exit code plus a message for standard error.
struct Failure {
    code: u8,
    token: &'static str,
    message: String,
    diagnostics: Vec<Diagnostic>,
}

impl Failure {
    fn new(code: u8, token: &'static str, message: impl Into<String>) -> Self {
        Failure {
            code,
            token,
            message: message.into(),
            diagnostics: Vec::new(),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        let (code, token) = match &e {
            AnalysisError::VoidModel => (NEGATIVE, "void_model"),
            AnalysisError::Unsatisfiable => (NEGATIVE, "unsatisfiable"),
            AnalysisError::UnknownGoal(_) => (USAGE, "unknown_goal"),
            AnalysisError::UnknownName(_) | AnalysisError::Incomplete(_) | AnalysisError::InvalidArgument(_) => {
                (USAGE, "bad_request")
            }
            AnalysisError::Interrupted => (INTERNAL, "interrupted"),
            AnalysisError::Compile(_) => (INTERNAL, "internal"),
        };
        Failure::new(code, token, e.to_string())
    }
}

struct Ctx {
    json: bool,
    timing: bool,
    strategy: Strategy,
}

impl Ctx {
    /// Prints `report` and returns `code`.
    fn emit(&self, report: Report, elapsed: Instant, human: String, code: u8) -> Result<u8, Failure> {
        let ms = elapsed.elapsed().as_millis() as u64;
        if self.json {
            let r = AnalysisReport {
                report,
                elapsed_ms: self.timing.then_some(ms),
            };
            let text = serde_json::to_string_pretty(&r).map_err(|e| Failure::new(INTERNAL, "internal", e.to_string()))?;
            println!("{text}");
        } else {
            print!("{human}");
            if self.timing {
                eprintln!("elapsed: {ms} ms");
            }
        }
        Ok(code)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)
            .map_err(|e| Failure::new(USAGE, "io_error", format!("cannot read standard input: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path)
        .map_err(|e| Failure::new(USAGE, "io_error", format!("cannot read {}: {e}", path.display())))
}

// Syntax errors are usage errors; a model that parses but fails
// validation is returned with its diagnostics.
fn load_unchecked(path: &Path) -> Result<(FeatureModel, Vec<Diagnostic>), Failure> {
    let text = read(path)?;
    let m = parse_unchecked(&text).map_err(|d| Failure {
        diagnostics: d,
        ..Failure::new(USAGE, "parse_error", format!("{}: cannot parse", path.display()))
    })?;
    let diagnostics = validate_model(&m).err().unwrap_or_default();
    Ok((m, diagnostics))
}

fn load(path: &Path) -> Result<Compiled, Failure> {
    let (m, diagnostics) = load_unchecked(path)?;
    if !diagnostics.is_empty() {
        return Err(Failure {
            diagnostics,
            ..Failure::new(NEGATIVE, "invalid_model", format!("{}: invalid model", path.display()))
        });
    }
    compile(&m).map_err(|e| Failure::new(INTERNAL, "internal", e.to_string()))
}

fn line(a: &Assignment) -> String {
    let parts: Vec<String> = a.iter().map(|(k, v)| format!("{k}={v}")).collect();
    parts.join(" ") + "\n"
}

fn none_if_empty(xs: &[String]) -> String {
    if xs.is_empty() {
        "(none)".to_string()
    } else {
        xs.join(", ")
    }
}

fn env_cap() -> Result<u64, Failure> {
    match std::env::var("FEATLINE_CAP") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| Failure::new(USAGE, "bad_request", format!("FEATLINE_CAP={v}: {e}"))),
        Err(_) => Ok(DEFAULT_CAP),
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let ctx = Ctx {
        json: cli.json,
        timing: cli.timing,
        strategy: Strategy {
            var_order: match cli.var_order {
                VarOrderArg::Declaration => VarOrder::DeclarationOrder,
                VarOrderArg::FirstFail => VarOrder::FirstFail,
            },
            value_order: match cli.value_order {
                ValueOrderArg::Ascending => ValueOrder::Ascending,
                ValueOrderArg::Descending => ValueOrder::Descending,
            },
        },
    };
    let lim = Limits::none();
    match cli.command {
        Command::Check { file } => {
            let (m, diagnostics) = load_unchecked(&file)?;
            let t = Instant::now();
            for d in &diagnostics {
                eprintln!("{}: {d}", file.display());
            }
            let void = if diagnostics.is_empty() {
                let mut c = compile(&m).map_err(|e| Failure::new(INTERNAL, "internal", e.to_string()))?;
                Some(c.is_void(&lim)?)
            } else {
                None
            };
            let (human, code) = match void {
                None => ("invalid\n", NEGATIVE),
                Some(true) => ("valid, void\n", NEGATIVE),
                Some(false) => ("valid, not void\n", OK),
            };
            let report = Report::Check {
                valid: diagnostics.is_empty(),
                void,
                diagnostics,
            };
            ctx.emit(report, t, human.into(), code)
        }
        Command::Count { file, cap, project } => {
            let cap = match cap {
                Some(c) => c,
                None => env_cap()?,
            };
            let projection = match project {
                ProjectArg::All => Projection::All,
                ProjectArg::Features => Projection::Features,
            };
            let mut c = load(&file)?;
            let t = Instant::now();
            let r = c.count(cap, projection, &lim);
            let human = if r.exact {
                format!("{}\n", r.count)
            } else {
                format!("at least {} (cap reached)\n", r.count)
            };
            let code = if r.count == 0 { NEGATIVE } else { OK };
            let report = Report::Count {
                count: (r.count.min(i64::MAX as u64) as i64).into(),
                exact: r.exact,
                projection,
            };
            ctx.emit(report, t, human, code)
        }
        Command::Enumerate { file, limit } => enumerate(&ctx, &file, limit),
        Command::Solve { file } => enumerate(&ctx, &file, 1),
        Command::Optimize { file, goal } => {
            let mut c = load(&file)?;
            let t = Instant::now();
            let r = c.optimize_goal(&goal, ctx.strategy, &lim)?;
            let human = format!(
                "{} = {} ({})\n{}",
                r.goal,
                r.value,
                if r.proven { "optimal" } else { "best found" },
                line(&r.solution)
            );
            ctx.emit(Report::Optimize(r), t, human, OK)
        }
        Command::Analyze { file } => {
            let mut c = load(&file)?;
            let t = Instant::now();
            let (core, dead) = c.core_and_dead(&lim)?;
            let human = format!("core: {}\ndead: {}\n", none_if_empty(&core), none_if_empty(&dead));
            ctx.emit(Report::CoreDead { core, dead }, t, human, OK)
        }
        Command::EmitCsp { file } => {
            let c = load(&file)?;
            let csp = c.emit_csp();
            if ctx.json {
                println!("{}", serde_json::json!({ "csp": csp }));
            } else {
                print!("{csp}");
            }
            Ok(OK)
        }
        Command::Serve { port, host } => serve(SocketAddr::new(host, port)),
    }
}

fn enumerate(ctx: &Ctx, file: &Path, limit: u64) -> Result<u8, Failure> {
    let mut c = load(file)?;
    let t = Instant::now();
    let (solutions, complete) = c.enumerate(limit, ctx.strategy, Projection::All, &Limits::none())?;
    let human: String = solutions.iter().map(line).collect();
    if solutions.is_empty() && !ctx.json {
        eprintln!("no solution");
    }
    let code = if solutions.is_empty() { NEGATIVE } else { OK };
    ctx.emit(Report::Enumerate { solutions, complete }, t, human, code)
}

fn serve(addr: SocketAddr) -> Result<u8, Failure> {
    let config = featline_service::Config::from_env().map_err(|e| Failure::new(USAGE, "bad_request", e))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::new(INTERNAL, "internal", e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::new(INTERNAL, "internal", format!("cannot listen on {addr}: {e}")))?;
        let local = listener.local_addr().unwrap_or(addr);
        eprintln!("listening on http://{local}");
        featline_service::serve(listener, featline_service::AppState::new(config))
            .await
            .map_err(|e| Failure::new(INTERNAL, "internal", e.to_string()))
    })?;
    Ok(OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if json {
                let body = serde_json::json!({
                    "code": f.token,
                    "message": f.message,
                    "diagnostics": f.diagnostics,
                });
                eprintln!("{body}");
            } else {
                eprintln!("featline: {}", f.message);
                for d in &f.diagnostics {
                    eprintln!("  {d}");
                }
            }
            ExitCode::from(f.code)
        }
    }
}
