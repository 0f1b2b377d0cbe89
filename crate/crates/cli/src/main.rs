mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use twofold::ensemble::{run_ensemble, EnsembleConfig};
use twofold::filippov::{integrate, IntegratorOptions};
use twofold::model::{eval_h, ContactKind};
use twofold::scan::{scan, ScanWindow};
use twofold::singularity::{design_singularity, find_singularities, normal_form, CaseTag, Design, SearchGrid};
use twofold::tyre::{force_moment_raw, TyreParams};
use twofold::{State, SystemParams};

use config::{ParamArgs, RunConfig};
use output::Outputs;

#[derive(Debug, Parser)]
#[command(name = "twofold", version, about = "Wheel-on-turntable friction dynamics and two-fold singularity analysis")]
struct Cli {
    /// Directory receiving all output files
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory of the piecewise-smooth system
    Simulate(SimulateArgs),
    /// Evaluate the singularity condition masks over an (r*, omega*) grid
    Scan(ScanArgs),
    /// Place a two-fold singularity at (r*, omega*) by choosing kappa and k2
    Design(DesignArgs),
    /// Report curvature constants, invariants and case of two-fold singularities
    Classify(ClassifyArgs),
    /// Tabulate the tyre force and moment against the slip angle
    TyreCurve(TyreArgs),
    /// Run a re-injection ensemble from the escaping region of the singularity
    Ensemble(EnsembleArgs),
}

/// Optional designed singularity; when given, kappa and k2 come from the designer.
#[derive(Debug, Clone, Args)]
struct Target {
    #[arg(long, allow_hyphen_values = true)]
    r_star: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega_star: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct Tolerances {
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
    #[arg(long, default_value_t = 0.05)]
    h_max: f64,
}

impl Tolerances {
    fn options(&self, t_max: f64) -> IntegratorOptions {
        IntegratorOptions { t_max, rtol: self.rtol, atol: self.atol, h_max: self.h_max, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum Mode {
    /// From the sign of h (stick when h = 0)
    Auto,
    SlipPos,
    SlipNeg,
    Stick,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    target: Target,
    #[arg(long, allow_hyphen_values = true)]
    r: f64,
    #[arg(long, allow_hyphen_values = true)]
    v: f64,
    #[arg(long, allow_hyphen_values = true)]
    omega: f64,
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    mode: Mode,
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    /// Allow stick segments starting in the escaping region
    #[arg(long)]
    allow_escaping_stick: bool,
    #[command(flatten)]
    tol: Tolerances,
    /// Base name of the trajectory file
    #[arg(long, default_value = "trajectory")]
    name: String,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Nodes per axis
    #[arg(long, default_value_t = 8)]
    grid: usize,
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    r_min: f64,
    #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
    r_max: f64,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    omega_min: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    omega_max: f64,
}

#[derive(Debug, Args)]
struct DesignArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, allow_hyphen_values = true)]
    r_star: f64,
    #[arg(long, allow_hyphen_values = true)]
    omega_star: f64,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    target: Target,
    /// Classify this point instead of searching (requires --v and --omega too)
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    v: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<f64>,
    /// Newton seeds per axis for the search
    #[arg(long, default_value_t = 24)]
    seeds: usize,
}

#[derive(Debug, Args)]
struct TyreArgs {
    /// Number of slip angles
    #[arg(long, default_value_t = 91)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    phi_min: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    phi_max: f64,
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Use the specialization with friction-moment arm kappa (overrides k, a, sigma, delta, rho)
    #[arg(long)]
    kappa: Option<f64>,
    /// Friction magnitude multiplying the specialized law
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    target: Target,
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200.0)]
    t_max: f64,
    #[arg(long, default_value_t = 5e-3)]
    return_radius: f64,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: String,
    config: &'a RunConfig,
    tolerances: Option<&'a IntegratorOptions>,
    outputs: Vec<String>,
    wall_time_s: f64,
    finished_unix_s: f64,
}

struct Ctx {
    out_dir: PathBuf,
    started: Instant,
    files: Outputs,
}

impl Ctx {
    fn add(&mut self, name: &str, body: String) {
        self.files.add(self.out_dir.join(name), body);
    }

    fn finish(mut self, cfg: &RunConfig, tolerances: Option<&IntegratorOptions>) -> Result<()> {
        let outputs =
            self.files.paths().iter().filter_map(|p| p.file_name()?.to_str().map(String::from)).collect();
        let meta = Meta {
            tool: "twofold",
            version: env!("CARGO_PKG_VERSION"),
            command: &cfg.command,
            config_hash: cfg.hash(),
            config: cfg,
            tolerances,
            outputs,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            finished_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        };
        let name = format!("{}.meta.json", cfg.output);
        self.add(&name, output::json(&meta)?);
        let dir = self.out_dir.clone();
        self.files.commit(&dir)
    }
}

fn resolve(params: &ParamArgs, target: &Target) -> Result<(SystemParams, Option<Design>)> {
    match (target.r_star, target.omega_star) {
        (Some(r), Some(w)) => {
            let base = params.base()?;
            let design = design_singularity(r, w, &base)?;
            Ok((base.with_design(design.k2, design.kappa)?, Some(design)))
        }
        (None, None) => {
            let p = params.full()?.ok_or_else(|| {
                anyhow!("k2 and kappa are required (in --config or as flags), or pass --r-star and --omega-star")
            })?;
            Ok((p, None))
        }
        _ => bail!("--r-star and --omega-star must be given together"),
    }
}

fn simulate(a: SimulateArgs, mut ctx: Ctx) -> Result<()> {
    let (p, design) = resolve(&a.params, &a.target)?;
    let s0 = State::new(a.r, a.v, a.omega);
    let mode = match a.mode {
        Mode::SlipPos => ContactKind::SlipPositive,
        Mode::SlipNeg => ContactKind::SlipNegative,
        Mode::Stick => ContactKind::Stick,
        Mode::Auto => {
            let h = eval_h(&s0, &p);
            if h > 0.0 {
                ContactKind::SlipPositive
            } else if h < 0.0 {
                ContactKind::SlipNegative
            } else {
                ContactKind::Stick
            }
        }
    };
    let opts = IntegratorOptions { allow_escaping_stick: a.allow_escaping_stick, ..a.tol.options(a.t_max) };
    let segments = integrate(s0, mode, &p, &opts)?;
    ctx.add(&format!("{}.csv", a.name), output::trajectory_csv(&segments, &p)?);
    let cfg = RunConfig {
        command: "simulate".into(),
        params: Some(p),
        base: None,
        options: json!({
            "initial_state": s0,
            "mode": mode,
            "design": design,
        }),
        output: a.name.clone(),
    };
    ctx.finish(&cfg, Some(&opts))
}

fn run_scan(a: ScanArgs, mut ctx: Ctx) -> Result<()> {
    if a.grid == 0 {
        bail!("--grid must be at least 1");
    }
    let base = a.params.base()?;
    let window = ScanWindow { r_min: a.r_min, r_max: a.r_max, omega_min: a.omega_min, omega_max: a.omega_max };
    let result = scan(&base, &window, a.grid);
    for (name, body) in output::scan_csvs(&result)? {
        ctx.add(&name, body);
    }
    let cfg = RunConfig {
        command: "scan".into(),
        params: None,
        base: Some(base),
        options: json!({ "grid": a.grid, "window": window }),
        output: "scan".into(),
    };
    ctx.finish(&cfg, None)
}

fn design(a: DesignArgs, mut ctx: Ctx) -> Result<()> {
    let base = a.params.base()?;
    let d = design_singularity(a.r_star, a.omega_star, &base)?;
    let body = output::json(&json!({
        "r_star": a.r_star,
        "omega_star": a.omega_star,
        "v_star": d.v_star,
        "kappa": d.kappa,
        "k2": d.k2,
        "residuals": { "h": d.residual_h, "plus": d.residual_plus, "minus": d.residual_minus },
    }))?;
    print!("{body}");
    ctx.add("design.json", body);
    let cfg = RunConfig {
        command: "design".into(),
        params: None,
        base: Some(base),
        options: json!({ "r_star": a.r_star, "omega_star": a.omega_star }),
        output: "design".into(),
    };
    ctx.finish(&cfg, None)
}

fn classify(a: ClassifyArgs, mut ctx: Ctx) -> Result<()> {
    let (p, design) = resolve(&a.params, &a.target)?;
    let point = match (a.r, a.v, a.omega) {
        (Some(r), Some(v), Some(w)) => Some(State::new(r, v, w)),
        (None, None, None) => design.map(|d| d.x_star),
        _ => bail!("--r, --v and --omega must be given together"),
    };
    let body = match point {
        Some(x) => output::json(&normal_form(&x, &p))?,
        None => {
            let grid = SearchGrid { n_r: a.seeds, n_omega: a.seeds, ..SearchGrid::around(&p) };
            let roots = find_singularities(&p, &grid);
            if roots.len() > 4 {
                eprintln!("warning: {} singularities found, more than the expected four", roots.len());
            }
            let reports: Vec<_> = roots.iter().map(|x| normal_form(x, &p)).collect();
            output::json(&reports)?
        }
    };
    print!("{body}");
    ctx.add("classify.json", body);
    let cfg = RunConfig {
        command: "classify".into(),
        params: Some(p),
        base: None,
        options: json!({ "point": point, "seeds": a.seeds }),
        output: "classify".into(),
    };
    ctx.finish(&cfg, None)
}

fn tyre_curve(a: TyreArgs, mut ctx: Ctx) -> Result<()> {
    let (tp, scale) = match a.kappa {
        Some(k) => (TyreParams::specialized(k)?, a.mu),
        None => (TyreParams::new(a.k, a.a, a.sigma, a.delta, a.rho)?, 1.0),
    };
    if a.n < 2 {
        bail!("--n must be at least 2");
    }
    let mut rows = Vec::with_capacity(a.n);
    for i in 0..a.n {
        let phi = a.phi_min + (a.phi_max - a.phi_min) * i as f64 / (a.n - 1) as f64;
        let mut out = force_moment_raw(phi, &tp)?;
        out.force *= scale;
        out.moment *= scale;
        rows.push((phi, out));
    }
    ctx.add("tyre_curve.csv", output::tyre_csv(&rows)?);
    let cfg = RunConfig {
        command: "tyre-curve".into(),
        params: None,
        base: None,
        options: json!({ "tyre": tp, "scale": scale, "n": a.n, "phi_min": a.phi_min, "phi_max": a.phi_max }),
        output: "tyre_curve".into(),
    };
    ctx.finish(&cfg, None)
}

fn ensemble(a: EnsembleArgs, mut ctx: Ctx) -> Result<()> {
    let (p, design) = resolve(&a.params, &a.target)?;
    let x_star = match design {
        Some(d) => d.x_star,
        None => {
            let roots = find_singularities(&p, &SearchGrid::around(&p));
            roots
                .into_iter()
                .find(|x| normal_form(x, &p).case_tag == CaseTag::Case1)
                .context("no case-1 singularity found for these parameters")?
        }
    };
    let cfg = EnsembleConfig { n: a.n, eps: a.eps, seed: a.seed, t_max: a.t_max, return_radius: a.return_radius };
    let opts = a.tol.options(a.t_max);
    let outcomes = run_ensemble(&x_star, &p, &cfg, &opts)?;
    let width = (a.n.max(2) - 1).to_string().len();
    for o in &outcomes {
        ctx.add(&format!("member_{:0width$}.csv", o.member_id), output::trajectory_csv(&o.segments, &p)?);
    }
    ctx.add("summary.csv", output::ensemble_summary_csv(&outcomes)?);
    let run = RunConfig {
        command: "ensemble".into(),
        params: Some(p),
        base: None,
        options: json!({ "ensemble": cfg, "x_star": x_star }),
        output: "ensemble".into(),
    };
    ctx.finish(&run, Some(&opts))
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx { out_dir: cli.out_dir.clone(), started: Instant::now(), files: Outputs::default() };
    match cli.command {
        Command::Simulate(a) => simulate(a, ctx),
        Command::Scan(a) => run_scan(a, ctx),
        Command::Design(a) => design(a, ctx),
        Command::Classify(a) => classify(a, ctx),
        Command::TyreCurve(a) => tyre_curve(a, ctx),
        Command::Ensemble(a) => ensemble(a, ctx),
    }
}

fn error_line(kind: &str, message: &str) -> String {
    json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("{}", error_line("run", &chain.join(": ")));
            ExitCode::FAILURE
        }
    }
}
