//! Subcommands. Each handler validates its inputs, computes, and only then
//! returns the text to be written.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use divbound_core::divergences::divergence;
use divbound_core::transport::{w1_dual, wasserstein};
use divbound_core::{DiscreteMeasure, DivergenceKind, Duality, FiniteMetricSpace, Tolerances};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::experiment;
use crate::formats::{self, num, rate_json, space_json, RateSpec};
use crate::parallel::{self, TRIAL_CHUNK};
use crate::presets;

/// Exit code when an inequality under test is violated.
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "divbound", version, about = "Divergences, transport distances and generalization bounds on finite spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// D(ν‖μ) between two measures.
    Divergence(DivergenceArgs),
    /// Primal and dual W_p between two measures.
    Wasserstein(WassersteinArgs),
    /// Randomized search for violations of W₁(μ,ν) ≤ (φ*)⁻¹(D(ν‖μ)).
    TciCheck(TciArgs),
    /// Exact generalization error and bounds over γ and n sweeps.
    Genexp(GenexpArgs),
    /// Tables of φ* and its generalized inverse.
    Conjugate(ConjugateArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    /// kl, tv, chi2, chi2form or hellinger:<alpha>.
    #[arg(long)]
    pub kind: String,
    /// Reference measure μ.
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub nu: PathBuf,
    /// Optional space; only checked for size.
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct WassersteinArgs {
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub nu: PathBuf,
    /// Tolerance override, NAME=VALUE.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TciArgs {
    /// Shipped configuration (pinsker). Explicit flags override it.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long)]
    pub mu: Option<PathBuf>,
    #[arg(long)]
    pub divergence: Option<String>,
    /// Rate function as inline JSON or a file path; `"c":auto` means diam²/4.
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiplies the rate constant, e.g. 0.5 for a negative control.
    #[arg(long, default_value_t = 1.0)]
    pub constant_scale: f64,
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GenexpArgs {
    /// Experiment config file (one experiment or a list).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Shipped experiment family (tiny-gibbs).
    #[arg(long)]
    pub preset: Option<String>,
    /// Also write one CSV row per configuration here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DualityArg {
    /// Supremum over all λ.
    Lf,
    /// Supremum over λ > 0.
    Young,
}

#[derive(Debug, Args)]
pub struct ConjugateArgs {
    /// Rate function as inline JSON or a file path.
    #[arg(long)]
    pub phi: String,
    #[arg(long, value_enum, default_value_t = DualityArg::Lf)]
    pub duality: DualityArg,
    /// Tabulate φₙ = φ/n instead of φ.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, default_value_t = 4.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 33)]
    pub points: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// What a successful run writes, and its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    /// JSON document, to `output` or stdout.
    pub json: String,
    pub output: Option<PathBuf>,
    /// Extra files, written after the JSON.
    pub files: Vec<(PathBuf, String)>,
}

impl Outcome {
    fn new(code: i32, value: &Value, out: &OutputArgs) -> CliResult<Self> {
        let mut json = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        json.push('\n');
        Ok(Outcome { code, json, output: out.output.clone(), files: Vec::new() })
    }

    /// Writes files, returning the text destined for stdout.
    pub fn commit(&self) -> CliResult<String> {
        let write = |path: &Path, text: &str| {
            std::fs::write(path, text).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
        };
        for (path, text) in &self.files {
            write(path, text)?;
        }
        match &self.output {
            Some(path) => {
                write(path, &self.json)?;
                Ok(String::new())
            }
            None => Ok(self.json.clone()),
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Divergence(a) => cmd_divergence(a),
        Command::Wasserstein(a) => cmd_wasserstein(a),
        Command::TciCheck(a) => cmd_tci_check(a),
        Command::Genexp(a) => cmd_genexp(a),
        Command::Conjugate(a) => cmd_conjugate(a),
    }
}

/// Applies `NAME=VALUE` overrides to the defaults.
pub fn parse_tolerances(overrides: &[String]) -> CliResult<Tolerances> {
    let mut tol = Tolerances::DEFAULT;
    for item in overrides {
        let (name, value) =
            item.split_once('=').ok_or_else(|| CliError::Config(format!("tolerance `{item}` is not NAME=VALUE")))?;
        let value: f64 = value
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| *v >= 0.0 && v.is_finite())
            .ok_or_else(|| CliError::Config(format!("tolerance `{item}` needs a nonnegative number")))?;
        let slot = match name.trim() {
            "triangle" => &mut tol.triangle,
            "probability_sum" => &mut tol.probability_sum,
            "marginal" => &mut tol.marginal,
            "plan_clamp" => &mut tol.plan_clamp,
            "duality_gap" => &mut tol.duality_gap,
            "violation" => &mut tol.violation,
            "convexity" => &mut tol.convexity,
            "pivot" => &mut tol.pivot,
            other => return Err(CliError::Config(format!("unknown tolerance `{other}`"))),
        };
        *slot = value;
    }
    Ok(tol)
}

fn tolerances_json(t: &Tolerances) -> Value {
    json!({
        "triangle": t.triangle,
        "probability_sum": t.probability_sum,
        "marginal": t.marginal,
        "plan_clamp": t.plan_clamp,
        "duality_gap": t.duality_gap,
        "violation": t.violation,
        "convexity": t.convexity,
        "pivot": t.pivot,
    })
}

fn parse_kind(name: &str) -> CliResult<DivergenceKind> {
    DivergenceKind::from_str(name).map_err(CliError::Core)
}

fn check_size(space: &FiniteMetricSpace, m: &DiscreteMeasure, what: &str) -> CliResult<()> {
    if space.len() != m.len() {
        return Err(CliError::Config(format!("{what} has {} weights but the space has {} points", m.len(), space.len())));
    }
    Ok(())
}

fn rate_spec(arg: &str) -> CliResult<RateSpec> {
    if arg.trim_start().starts_with('{') {
        formats::parse_json(arg, "--phi")
    } else {
        formats::read_json(Path::new(arg))
    }
}

pub fn cmd_divergence(a: &DivergenceArgs) -> CliResult<Outcome> {
    let kind = parse_kind(&a.kind)?;
    let mu = formats::load_measure(&a.mu)?;
    let nu = formats::load_measure(&a.nu)?;
    if let Some(path) = &a.space {
        let space = formats::load_space(path)?;
        check_size(&space, &mu, "mu")?;
        check_size(&space, &nu, "nu")?;
    }
    let d = divergence(kind, &nu, &mu)?;
    let value = json!({
        "config": { "kind": kind.to_string(), "mu": a.mu, "nu": a.nu, "space": a.space },
        "kind": kind.to_string(),
        "value": num(d.value),
        "absolutely_continuous": d.absolutely_continuous,
    });
    Outcome::new(0, &value, &a.out)
}

pub fn cmd_wasserstein(a: &WassersteinArgs) -> CliResult<Outcome> {
    let tol = parse_tolerances(&a.tol)?;
    let space = formats::load_space(&a.space)?;
    let mu = formats::load_measure(&a.mu)?;
    let nu = formats::load_measure(&a.nu)?;
    check_size(&space, &mu, "mu")?;
    check_size(&space, &nu, "nu")?;
    let result = wasserstein(&space, a.p, &mu, &nu)?;
    let mut value = formats::transport_json(&result);
    let obj = value.as_object_mut().expect("object");
    if a.p == 1.0 {
        let dual = w1_dual(&space, &mu, &nu)?;
        obj.insert("dual_distance".into(), num(dual.distance));
    }
    obj.insert("gap_within_tolerance".into(), json!(result.duality_gap <= tol.duality_gap));
    obj.insert(
        "config".into(),
        json!({ "p": num(a.p), "space": a.space, "mu": a.mu, "nu": a.nu, "tolerances": tolerances_json(&tol) }),
    );
    Outcome::new(0, &value, &a.out)
}

pub fn cmd_tci_check(a: &TciArgs) -> CliResult<Outcome> {
    let tol = parse_tolerances(&a.tol)?;
    let preset = a.preset.as_deref().map(presets::tci).transpose()?;
    let space = match (&a.space, &preset) {
        (Some(path), _) => formats::load_space(path)?,
        (None, Some(p)) => FiniteMetricSpace::new(p.space.labels.clone(), p.space.metric.clone())?,
        (None, None) => return Err(CliError::Config("tci-check needs --space or --preset".into())),
    };
    let mu = match (&a.mu, &preset) {
        (Some(path), _) => formats::load_measure(path)?,
        (None, Some(p)) => DiscreteMeasure::new(p.mu.weights.clone())?,
        (None, None) => return Err(CliError::Config("tci-check needs --mu or --preset".into())),
    };
    check_size(&space, &mu, "mu")?;
    mu.require_probability()?;
    let kind = parse_kind(a.divergence.as_deref().or(preset.as_ref().map(|p| p.divergence.as_str())).unwrap_or("kl"))?;
    let spec = match (&a.phi, &preset) {
        (Some(arg), _) => rate_spec(arg)?,
        (None, Some(p)) => p.phi.clone(),
        (None, None) => return Err(CliError::Config("tci-check needs --phi or --preset".into())),
    };
    let phi = spec.resolve(Some(&space), a.constant_scale)?;
    let trials = a.trials.or(preset.as_ref().map(|p| p.trials)).unwrap_or(1000);
    let seed = a.seed.or(preset.as_ref().map(|p| p.seed)).unwrap_or(0);

    let pool = parallel::thread_pool()?;
    let report = parallel::tci_check(&pool, &space, &mu, &phi, kind, seed, trials, &tol)?;
    let code = if report.passed() { 0 } else { EXIT_VIOLATION };
    let mut value = formats::tci_report_json(&report);
    value.as_object_mut().expect("object").insert(
        "config".into(),
        json!({
            "preset": a.preset,
            "space": space_json(&space),
            "mu": mu.weights(),
            "divergence": kind.to_string(),
            "phi": rate_json(&phi),
            "constant_auto": spec.is_auto(),
            "constant_scale": num(a.constant_scale),
            "trials": trials,
            "seed": seed,
            "chunk": TRIAL_CHUNK,
            "tolerances": tolerances_json(&tol),
        }),
    );
    Outcome::new(code, &value, &a.out)
}

pub fn cmd_genexp(a: &GenexpArgs) -> CliResult<Outcome> {
    let tol = parse_tolerances(&a.tol)?;
    let (text, what) = match (&a.config, &a.preset) {
        (Some(path), None) => (formats::read_text(path)?, path.display().to_string()),
        (None, Some(name)) => (presets::experiment(name)?.to_string(), format!("preset {name}")),
        _ => return Err(CliError::Config("genexp needs exactly one of --config and --preset".into())),
    };
    let experiments = experiment::parse_experiments(&text, &what)?;
    let pool = parallel::thread_pool()?;
    let rows = experiment::run(&pool, &experiments)?;
    let violations: Vec<Value> = rows
        .iter()
        .filter_map(|r| {
            let names = r.report.violations(tol.violation);
            (!names.is_empty())
                .then(|| json!({ "experiment": r.experiment, "gamma": num(r.report.gamma), "n": r.report.n, "bounds": names }))
        })
        .collect();
    let code = if violations.is_empty() { 0 } else { EXIT_VIOLATION };
    let value = json!({
        "config": {
            "source": what,
            "experiments": experiments.iter().map(|e| e.resolved_json()).collect::<Vec<_>>(),
            "tolerances": tolerances_json(&tol),
        },
        "reports": experiment::rows_json(&rows),
        "violations": violations,
    });
    let mut outcome = Outcome::new(code, &value, &a.out)?;
    if let Some(path) = &a.csv {
        outcome.files.push((path.clone(), experiment::rows_csv(&rows)?));
    }
    Ok(outcome)
}

pub fn cmd_conjugate(a: &ConjugateArgs) -> CliResult<Outcome> {
    let spec = rate_spec(&a.phi)?;
    if spec.is_auto() {
        return Err(CliError::Config("conjugate has no space, so the constant cannot be `auto`".into()));
    }
    if a.points < 2 || !(a.t_max > 0.0 && a.t_max.is_finite()) {
        return Err(CliError::Config("need --points ≥ 2 and a positive finite --t-max".into()));
    }
    let base = spec.resolve(None, 1.0)?;
    let duality = match a.duality {
        DualityArg::Lf => Duality::LegendreFenchel,
        DualityArg::Young => Duality::Young,
    };
    let scaled = a.n.map(|n| base.scale_by_n(n)).transpose()?;
    let rate = scaled.as_ref().map_or(&base, |s| s.scaled());
    let conj = rate.conjugate(duality)?;
    let rows: Vec<Value> = (0..a.points)
        .map(|k| {
            let t = a.t_max * k as f64 / (a.points - 1) as f64;
            let inv = conj.generalized_inverse(t);
            let mut row = json!({ "t": num(t), "phi_star": num(conj.value(t)), "inverse": num(inv.value), "saturated": inv.saturated });
            if let Some(s) = &scaled {
                row.as_object_mut().expect("object").insert("inverse_via_base".into(), num(s.inverse_conjugate_via_base(t).value));
            }
            row
        })
        .collect();
    let value = json!({
        "config": {
            "phi": rate_json(&base),
            "duality": match a.duality { DualityArg::Lf => "lf", DualityArg::Young => "young" },
            "n": a.n,
            "t_max": num(a.t_max),
            "points": a.points,
        },
        "table": rows,
    });
    Outcome::new(0, &value, &a.out)
}
