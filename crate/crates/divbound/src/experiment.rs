//! Generalization-error experiment configs, sweeps and CSV output.

use divbound_core::learning::bound_report;
use divbound_core::{BoundReport, BoundSelection, DiscreteMeasure, GibbsAlgorithm, LearningProblem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::formats::{bound_report_json, num};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub z_labels: Vec<String>,
    pub h_labels: Vec<String>,
    /// `loss[h][z]`.
    pub loss: Vec<Vec<f64>>,
    pub p_z: Vec<f64>,
    /// One sample size or a list of them.
    pub n: OneOrMany<u32>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    /// Uniform when absent.
    pub prior: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub gamma_sweep: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundName {
    Mi,
    Chi2,
    Ismi,
    Cmi,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub problem: ProblemSpec,
    pub algorithm: AlgorithmSpec,
    pub bounds: Option<Vec<BoundName>>,
    pub seed: Option<u64>,
}

/// A validated experiment: every `(n, γ)` pair is ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub problem: LearningProblem,
    pub prior: Vec<f64>,
    pub ns: Vec<u32>,
    pub gammas: Vec<f64>,
    pub bounds: Vec<BoundName>,
    pub seed: u64,
}

impl Experiment {
    pub fn from_config(config: &ExperimentConfig, index: usize) -> CliResult<Self> {
        let name = config.name.clone().unwrap_or_else(|| format!("experiment-{index}"));
        let p = &config.problem;
        let ns = p.n.to_vec();
        let first = *ns.first().ok_or_else(|| CliError::Config(format!("{name}: empty sample-size list")))?;
        let law = DiscreteMeasure::probability(p.p_z.clone())?;
        let problem = LearningProblem::new(p.z_labels.clone(), p.h_labels.clone(), p.loss.clone(), law, first)?;
        for &n in &ns {
            problem.with_n(n)?;
        }
        let gammas = match (&config.algorithm.gamma, &config.algorithm.gamma_sweep) {
            (Some(g), None) => vec![*g],
            (None, Some(sweep)) if !sweep.is_empty() => sweep.clone(),
            _ => return Err(CliError::Config(format!("{name}: give exactly one of `gamma` and a nonempty `gamma_sweep`"))),
        };
        let prior = config.algorithm.prior.clone().unwrap_or_else(|| vec![1.0 / problem.h_count() as f64; problem.h_count()]);
        for &g in &gammas {
            GibbsAlgorithm::new(DiscreteMeasure::probability(prior.clone())?, g)?;
        }
        let bounds = config.bounds.clone().unwrap_or_else(|| vec![BoundName::Mi, BoundName::Chi2, BoundName::Ismi, BoundName::Cmi]);
        Ok(Experiment { name, problem, prior, ns, gammas, bounds, seed: config.seed.unwrap_or(0) })
    }

    fn selection(&self) -> BoundSelection {
        BoundSelection {
            mi: self.bounds.contains(&BoundName::Mi),
            chi2: self.bounds.contains(&BoundName::Chi2),
            ismi: self.bounds.contains(&BoundName::Ismi),
            cmi: self.bounds.contains(&BoundName::Cmi),
        }
    }

    /// The fully resolved config, as echoed in the output.
    pub fn resolved_json(&self) -> Value {
        let p = &self.problem;
        let loss: Vec<Vec<f64>> = (0..p.h_count()).map(|h| (0..p.z_count()).map(|z| p.loss(h, z)).collect()).collect();
        json!({
            "name": self.name,
            "problem": {
                "z_labels": p.z_labels(),
                "h_labels": p.h_labels(),
                "loss": loss,
                "p_z": p.data_law().weights(),
                "n": self.ns,
            },
            "algorithm": { "prior": self.prior, "gamma_sweep": self.gammas.iter().map(|g| num(*g)).collect::<Vec<_>>() },
            "bounds": self.bounds,
            "seed": self.seed,
        })
    }
}

/// Parses a config file holding one experiment or a list of them.
pub fn parse_experiments(text: &str, what: &str) -> CliResult<Vec<Experiment>> {
    let configs: OneOrMany<ExperimentConfig> = crate::formats::parse_json(text, what)?;
    let configs = configs.to_vec();
    if configs.is_empty() {
        return Err(CliError::Config(format!("{what}: no experiments")));
    }
    configs.iter().enumerate().map(|(i, c)| Experiment::from_config(c, i)).collect()
}

#[derive(Debug, Clone)]
pub struct Row {
    pub experiment: String,
    pub report: BoundReport,
}

/// Runs every `(experiment, n, γ)` configuration; rows keep config order.
pub fn run(pool: &rayon::ThreadPool, experiments: &[Experiment]) -> CliResult<Vec<Row>> {
    let mut jobs = Vec::new();
    for (e, exp) in experiments.iter().enumerate() {
        for &n in &exp.ns {
            for &g in &exp.gammas {
                jobs.push((e, n, g));
            }
        }
    }
    let rows: Vec<CliResult<Row>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(e, n, gamma)| {
                let exp = &experiments[e];
                let problem = exp.problem.with_n(n)?;
                let alg = GibbsAlgorithm::new(DiscreteMeasure::probability(exp.prior.clone())?, gamma)?;
                let report = bound_report(&problem, &alg, exp.selection())?;
                Ok(Row { experiment: exp.name.clone(), report })
            })
            .collect()
    });
    rows.into_iter().collect()
}

pub fn rows_json(rows: &[Row]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                let mut v = bound_report_json(&r.report);
                v.as_object_mut().expect("object").insert("experiment".into(), json!(r.experiment));
                v
            })
            .collect(),
    )
}

pub const CSV_HEADER: [&str; 8] = ["experiment", "gamma", "n", "gen_err", "mi_bound", "chi2_bound", "ismi_bound", "cmi_bound"];

fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// One row per configuration; disabled or over-budget bounds are empty cells.
pub fn rows_csv(rows: &[Row]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Internal(e.to_string());
    w.write_record(CSV_HEADER).map_err(fail)?;
    for row in rows {
        let r = &row.report;
        let opt = |b: Option<divbound_core::learning::BoundEntry>| b.map_or(String::new(), |b| cell(b.value));
        w.write_record([
            row.experiment.clone(),
            cell(r.gamma),
            r.n.to_string(),
            cell(r.gen_err),
            opt(r.mi_bound),
            opt(r.chi2_bound),
            opt(r.ismi_bound),
            opt(r.cmi_bound),
        ])
        .map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLIP: &str = r#"{
        "problem": {"z_labels":["a","b"],"h_labels":["g","h"],"loss":[[0,1],[1,0]],"p_z":[0.5,0.5],"n":[1,2]},
        "algorithm": {"gamma_sweep":[0, 1e6]},
        "bounds": ["mi","chi2"]
    }"#;

    #[test]
    fn parses_and_resolves() {
        let exps = parse_experiments(FLIP, "flip").unwrap();
        assert_eq!(exps.len(), 1);
        let e = &exps[0];
        assert_eq!((e.name.as_str(), e.ns.as_slice(), e.gammas.as_slice()), ("experiment-0", &[1u32, 2][..], &[0.0, 1e6][..]));
        assert_eq!(e.prior, vec![0.5, 0.5]);
        assert_eq!(e.resolved_json()["bounds"], json!(["mi", "chi2"]));
    }

    #[test]
    fn rejects_bad_configs() {
        let both = FLIP.replace(r#""gamma_sweep":[0, 1e6]"#, r#""gamma":1,"gamma_sweep":[0]"#);
        assert!(parse_experiments(&both, "x").is_err());
        let over_budget = FLIP.replace(r#""n":[1,2]"#, r#""n":[1,40]"#);
        assert!(matches!(parse_experiments(&over_budget, "x"), Err(CliError::Core(divbound_core::Error::BudgetExceeded { .. }))));
        let unknown = FLIP.replace(r#""bounds""#, r#""bound""#);
        assert!(parse_experiments(&unknown, "x").is_err());
        assert!(parse_experiments("[]", "x").is_err());
    }

    #[test]
    fn sweep_rows_and_csv() {
        let exps = parse_experiments(FLIP, "flip").unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let rows = run(&pool, &exps).unwrap();
        assert_eq!(rows.len(), 4);
        // independent learner first
        assert_eq!(rows[0].report.gen_err, 0.0);
        assert!(rows[0].report.mi_bound.unwrap().value.abs() < 1e-12);
        // ERM on one sample: training risk 0, true risk 1/2
        assert!((rows[1].report.gen_err + 0.5).abs() < 1e-12);
        let csv = rows_csv(&rows).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "experiment,gamma,n,gen_err,mi_bound,chi2_bound,ismi_bound,cmi_bound");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].ends_with(",,"), "ismi and cmi were not requested: {}", lines[1]);
    }
}
