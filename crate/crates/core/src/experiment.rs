//! Monte Carlo estimation of finite-horizon shadowing probabilities and the
//! two experiments built on it.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bounds::{attractor_quantities, transitive_quantities, AttractorReport, TransitiveQuantities, DEFAULT_COVER_HORIZON};
use crate::error::{Error, Result};
use crate::io::write_text;
use crate::pseudotraj::{generate_trial, trial_seed};
use crate::scalar::{parse_rational, Scalar};
use crate::shadowcheck::{rotation_oracle_checked, shadow_set_forward, verdict_at, CheckerConfig, Verdict};
use crate::spaces::Point;
use crate::systems::{MapKind, MapSystem};
use crate::Exact;

/// A real parameter kept as its literal, so `0.02` means exactly `1/50`.
/// Deserializes from a JSON number or string.
#[derive(Clone, PartialEq, Eq)]
pub struct Literal(String);

impl Literal {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        parse_rational(&text)?;
        Ok(Literal(text.trim().to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn value<S: Scalar>(&self) -> S {
        S::from_rational(&parse_rational(&self.0).expect("validated literal"))
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Literal {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(serde_json::Number),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Number(n) => n.to_string(),
            Raw::Text(t) => t,
        };
        Literal::new(text).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckerMode {
    /// Big-rational arithmetic; verdicts are never `Unknown`.
    #[default]
    Exact,
    /// `f64` outer enclosures; undecided trials are `Unknown`.
    Outer,
}

impl std::str::FromStr for CheckerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CheckerMode::Exact),
            "outer" => Ok(CheckerMode::Outer),
            other => Err(Error::Parse(format!("unknown checker mode `{other}` (exact|outer)"))),
        }
    }
}

fn default_fragment_cap() -> usize {
    CheckerConfig::default().fragment_cap
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: String,
    /// Point literal, `x` or `r,theta`.
    pub y0: String,
    pub d: Literal,
    pub eps: Literal,
    pub horizons: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub mode: CheckerMode,
    #[serde(default = "default_fragment_cap")]
    pub fragment_cap: usize,
}

impl ExperimentConfig {
    pub fn new(system: &str, y0: &str, d: &str, eps: &str, horizons: Vec<usize>, trials: usize, seed: u64) -> Result<Self> {
        let config = ExperimentConfig {
            system: system.to_string(),
            y0: y0.to_string(),
            d: Literal::new(d)?,
            eps: Literal::new(eps)?,
            horizons,
            trials,
            seed,
            mode: CheckerMode::Exact,
            fragment_cap: default_fragment_cap(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Usage("trials must be >= 1".into()));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Usage(format!("horizons must be strictly increasing, got {:?}", self.horizons)));
        }
        if self.d.value::<Exact>() <= Exact::from_ratio(0, 1) {
            return Err(Error::Domain(format!("d must be positive, got {}", self.d)));
        }
        if self.eps.value::<Exact>() <= Exact::from_ratio(0, 1) {
            return Err(Error::Domain(format!("eps must be positive, got {}", self.eps)));
        }
        if self.fragment_cap == 0 {
            return Err(Error::Usage("fragment cap must be >= 1".into()));
        }
        let system = MapSystem::<Exact>::parse(&self.system)?;
        system.space().parse_point(&self.y0)?;
        Ok(())
    }

    pub fn max_horizon(&self) -> usize {
        self.horizons.last().copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonSummary {
    pub horizon: usize,
    /// Decided trials (`Yes` + `No`).
    pub trials: usize,
    pub shadowable: usize,
    pub unknown: usize,
    pub p_hat: Option<f64>,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Theoretical upper bound on the shadowing probability at this horizon.
    pub bound: Option<f64>,
    /// Trials where the certified verdict differs from the rotation closed form.
    pub oracle_disagreements: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    /// Verdict at the largest horizon.
    pub verdict: Verdict,
    pub first_empty: Option<usize>,
    /// Shadowing initial point at the largest horizon, exact literals.
    pub witness: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundDiagnostics {
    pub eta: f64,
    pub block_length: Option<usize>,
    pub log10_eta_pow_block: Option<f64>,
    pub quantities: TransitiveQuantities,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub curve: Vec<HorizonSummary>,
    pub trials: Vec<TrialRecord>,
    pub bounds: Option<BoundDiagnostics>,
}

struct TrialOutcome {
    record: TrialRecord,
    verdicts: Vec<Verdict>,
    oracle: Option<Vec<bool>>,
}

/// Runs `config.trials` independent pseudotrajectories to the largest
/// horizon and decides every prefix from one propagated chain.
pub fn estimate_probability(config: &ExperimentConfig) -> Result<ExperimentResult> {
    estimate_with_hook(config, |_| Ok(()))
}

/// [`estimate_probability`] with a per-trajectory check (exact points).
fn estimate_with_hook<H>(config: &ExperimentConfig, hook: H) -> Result<ExperimentResult>
where
    H: Fn(&[Point<Exact>]) -> Result<()> + Sync,
{
    config.validate()?;
    let outcomes = match config.mode {
        CheckerMode::Exact => run_trials::<Exact, _>(config, &hook)?,
        CheckerMode::Outer => run_trials::<f64, _>(config, &|pts: &[Point<f64>]| {
            let exact: Vec<Point<Exact>> = pts.iter().map(Point::convert).collect();
            hook(&exact)
        })?,
    };
    let bounds = bound_diagnostics(config)?;
    let curve = config
        .horizons
        .iter()
        .enumerate()
        .map(|(i, &h)| summarize(i, h, &outcomes, bounds.as_ref()))
        .collect();
    Ok(ExperimentResult {
        config: config.clone(),
        curve,
        trials: outcomes.into_iter().map(|o| o.record).collect(),
        bounds,
    })
}

fn run_trials<S: Scalar, H>(config: &ExperimentConfig, hook: &H) -> Result<Vec<TrialOutcome>>
where
    H: Fn(&[Point<S>]) -> Result<()> + Sync,
{
    let system = MapSystem::<S>::parse(&config.system)?;
    let y0 = system.space().parse_point(&config.y0)?;
    let d: S = config.d.value();
    let eps: S = config.eps.value();
    let checker = CheckerConfig {
        fragment_cap: config.fragment_cap,
    };
    let n = config.max_horizon();
    let with_oracle = matches!(system.kind(), MapKind::Rotation { .. })
        && eps < S::from_ratio(1, 4)
        && d < S::half();
    (0..config.trials as u64)
        .into_par_iter()
        .map(|t| {
            let traj = generate_trial(&system, &y0, &d, n, config.seed, t)?;
            hook(&traj.points)?;
            let chain = shadow_set_forward(&system, &traj, &eps, &checker)?;
            let mut verdicts = Vec::with_capacity(config.horizons.len());
            let mut last = None;
            for &h in &config.horizons {
                let v = verdict_at(&system, &traj, &eps, &chain, h);
                if v.verdict == Verdict::Unknown && chain.exact {
                    return Err(Error::Invariant(format!(
                        "trial {t}: exact chain nonempty at {h} but no witness"
                    )));
                }
                verdicts.push(v.verdict);
                last = Some(v);
            }
            let oracle = if with_oracle {
                Some(
                    config
                        .horizons
                        .iter()
                        .map(|&h| rotation_oracle_checked(&system, &traj.prefix(h), &eps))
                        .collect::<Result<Vec<bool>>>()?,
                )
            } else {
                None
            };
            let record = TrialRecord {
                trial: t,
                seed: trial_seed(config.seed, t),
                verdict: last.as_ref().map_or(Verdict::Yes, |v| v.verdict),
                first_empty: chain.first_empty,
                witness: last
                    .and_then(|v| v.witness)
                    .map(|w| w.coords.iter().map(|c| crate::systems::exact_string(c)).collect()),
            };
            Ok(TrialOutcome { record, verdicts, oracle })
        })
        .collect()
}

fn summarize(i: usize, horizon: usize, outcomes: &[TrialOutcome], bounds: Option<&BoundDiagnostics>) -> HorizonSummary {
    let count = |v: Verdict| outcomes.iter().filter(|o| o.verdicts[i] == v).count();
    let yes = count(Verdict::Yes);
    let no = count(Verdict::No);
    let unknown = count(Verdict::Unknown);
    let ci = crate::stats::clopper_pearson_95(yes, yes + no);
    let oracle_disagreements = outcomes
        .iter()
        .map(|o| {
            o.oracle.as_ref().map(|orc| {
                let v = o.verdicts[i];
                usize::from(v != Verdict::Unknown && (v == Verdict::Yes) != orc[i])
            })
        })
        .sum::<Option<usize>>();
    HorizonSummary {
        horizon,
        trials: yes + no,
        shadowable: yes,
        unknown,
        p_hat: (yes + no > 0).then_some(ci.p_hat),
        ci_lo: ci.lo,
        ci_hi: ci.hi,
        bound: bounds.and_then(|b| shadowing_upper_bound(b, horizon)),
        oracle_disagreements,
    }
}

/// `(1 - eta^L)^floor(h / L)`: the prefix of length `h` contains
/// `floor(h / L)` disjoint blocks, each failing with probability at least
/// `eta^L` independently of the past.
fn shadowing_upper_bound(b: &BoundDiagnostics, horizon: usize) -> Option<f64> {
    let l = b.block_length?;
    let blocks = (horizon / l) as f64;
    let p_block = 10f64.powf(b.log10_eta_pow_block?);
    Some((blocks * (-p_block).ln_1p()).exp())
}

fn bound_diagnostics(config: &ExperimentConfig) -> Result<Option<BoundDiagnostics>> {
    let system = MapSystem::<Exact>::parse(&config.system)?;
    if !matches!(system.kind(), MapKind::Rotation { .. }) {
        return Ok(None);
    }
    let q = transitive_quantities(
        &system,
        &config.d.value(),
        &config.eps.value(),
        &Point::scalar(Exact::from_ratio(0, 1)),
        DEFAULT_COVER_HORIZON,
    )?;
    Ok(Some(BoundDiagnostics {
        eta: q.eta,
        block_length: q.block_length,
        log10_eta_pow_block: q.log10_eta_pow_block,
        quantities: q,
    }))
}

pub const CURVE_HEADER: &str = "horizon,trials,shadowable,p_hat,ci_lo,ci_hi,bound,unknown";
pub const TRIALS_HEADER: &str = "trial,seed,verdict,first_empty";

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn curve_csv(result: &ExperimentResult) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for r in &result.curve {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.horizon,
            r.trials,
            r.shadowable,
            opt(r.p_hat),
            r.ci_lo,
            r.ci_hi,
            opt(r.bound),
            r.unknown
        ));
    }
    out
}

pub fn trials_csv(result: &ExperimentResult) -> String {
    let mut out = format!("{TRIALS_HEADER}\n");
    for t in &result.trials {
        out.push_str(&format!("{},{},{},{}\n", t.trial, t.seed, t.verdict.as_str(), opt(t.first_empty)));
    }
    out
}

/// Writes `summary.json`, `curve.csv` and `trials.csv` into `dir`.
pub fn emit(result: &ExperimentResult, dir: &Path) -> Result<()> {
    write_text(&dir.join("summary.json"), &(serde_json::to_string_pretty(result)? + "\n"))?;
    write_text(&dir.join("curve.csv"), &curve_csv(result))?;
    write_text(&dir.join("trials.csv"), &trials_csv(result))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyRow {
    pub horizon: usize,
    pub p_hat_shadowing: Option<f64>,
    pub p_hat_nonshadowing: Option<f64>,
    pub bound_nonshadowing: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub shadowing: ExperimentResult,
    pub nonshadowing: ExperimentResult,
    pub table: Vec<DichotomyRow>,
}

/// Doubling map (shadowing branch) against rotation by 610/987.
pub fn default_dichotomy_configs() -> (ExperimentConfig, ExperimentConfig) {
    let shadowing = ExperimentConfig::new("doubling", "0", "0.02", "0.05", vec![10, 50, 200], 200, 42)
        .expect("valid default config");
    let nonshadowing = ExperimentConfig::new("rotation:alpha=610/987", "0", "0.02", "0.05", vec![10, 50, 200, 500], 400, 42)
        .expect("valid default config");
    (shadowing, nonshadowing)
}

pub fn run_dichotomy_experiment(shadowing: &ExperimentConfig, nonshadowing: &ExperimentConfig) -> Result<DichotomyReport> {
    let a = estimate_probability(shadowing)?;
    let b = estimate_probability(nonshadowing)?;
    let mut horizons: Vec<usize> = a.curve.iter().chain(&b.curve).map(|r| r.horizon).collect();
    horizons.sort_unstable();
    horizons.dedup();
    let find = |res: &ExperimentResult, h: usize| res.curve.iter().find(|r| r.horizon == h).cloned();
    let table = horizons
        .into_iter()
        .map(|h| {
            let (ra, rb) = (find(&a, h), find(&b, h));
            DichotomyRow {
                horizon: h,
                p_hat_shadowing: ra.and_then(|r| r.p_hat),
                p_hat_nonshadowing: rb.as_ref().and_then(|r| r.p_hat),
                bound_nonshadowing: rb.and_then(|r| r.bound),
            }
        })
        .collect();
    Ok(DichotomyReport {
        shadowing: a,
        nonshadowing: b,
        table,
    })
}

/// `summary.json` and `table.csv` at the top, one emitted result per branch
/// in `shadowing/` and `nonshadowing/`.
pub fn emit_dichotomy(report: &DichotomyReport, dir: &Path) -> Result<()> {
    write_text(&dir.join("summary.json"), &(serde_json::to_string_pretty(report)? + "\n"))?;
    let mut table = String::from("horizon,p_hat_shadowing,p_hat_nonshadowing,bound_nonshadowing\n");
    for r in &report.table {
        table.push_str(&format!(
            "{},{},{},{}\n",
            r.horizon,
            opt(r.p_hat_shadowing),
            opt(r.p_hat_nonshadowing),
            opt(r.bound_nonshadowing)
        ));
    }
    write_text(&dir.join("table.csv"), &table)?;
    emit(&report.shadowing, &dir.join("shadowing"))?;
    emit(&report.nonshadowing, &dir.join("nonshadowing"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractorExperiment {
    pub quantities: AttractorReport,
    /// Containment `y_n in W` was checked for every `n >= containment_from`.
    pub containment_from: usize,
    pub containment_violations: usize,
    /// Shadowing is tested at `eps0 = eps / 4`.
    pub result: ExperimentResult,
}

/// Margin applied to `d0` and `delta`.
pub fn default_attractor_margin() -> Exact {
    Exact::from_ratio(crate::bounds::DEFAULT_D0_MARGIN.0, crate::bounds::DEFAULT_D0_MARGIN.1)
}

/// `lambda = 1/2`, `alpha = 610/987`, `w = 1/2`, `eps = 0.2`,
/// `y0 = (1.4, 0)`, `d = d0 / 2`, horizons up to 1000.
pub fn default_attractor_config() -> ExperimentConfig {
    let system = "annulus:lambda=1/2,alpha=610/987,w=1/2";
    let sys = MapSystem::<Exact>::parse(system).expect("valid system");
    let y0 = sys.space().parse_point("1.4,0").expect("valid point");
    let eps = Exact::from_ratio(1, 5);
    let aq = attractor_quantities(&sys, &eps, &y0, None, &default_attractor_margin()).expect("valid quantities");
    ExperimentConfig::new(system, "1.4,0", &aq.d.to_string(), "0.2", vec![10, 50, 200, 500, 1000], 200, 42)
        .expect("valid default config")
}

/// `config.eps` is the attractor-scale `eps`; trajectories are checked for
/// `eps0 = eps / 4` shadowing and for containment in `W` after entry.
pub fn run_attractor_experiment(config: &ExperimentConfig) -> Result<AttractorExperiment> {
    config.validate()?;
    let sys = MapSystem::<Exact>::parse(&config.system)?;
    let y0 = sys.space().parse_point(&config.y0)?;
    let eps: Exact = config.eps.value();
    let d: Exact = config.d.value();
    let margin = default_attractor_margin();
    let base = attractor_quantities(&sys, &eps, &y0, None, &margin)?;
    if d >= base.d0 {
        return Err(Error::Domain(format!("d = {d} must be below d0 = {}", base.d0)));
    }
    let aq = attractor_quantities(&sys, &eps, &y0, Some(&d), &margin)?;
    let from = aq.n0.max(aq.entry);
    let inner = ExperimentConfig {
        eps: Literal::new(aq.eps0.to_string())?,
        ..config.clone()
    };
    let result = estimate_with_hook(&inner, |pts: &[Point<Exact>]| {
        match pts.iter().enumerate().skip(from).find(|(_, y)| !aq.in_absorbing_set(y)) {
            Some((n, y)) => Err(Error::Invariant(format!(
                "pseudotrajectory left W at step {n} ({y}) with d = {d} < d0"
            ))),
            None => Ok(()),
        }
    })?;
    Ok(AttractorExperiment {
        quantities: aq.report(),
        containment_from: from,
        containment_violations: 0,
        result,
    })
}

pub fn emit_attractor(report: &AttractorExperiment, dir: &Path) -> Result<()> {
    emit(&report.result, dir)?;
    write_text(&dir.join("attractor.json"), &(serde_json::to_string_pretty(report)? + "\n"))
}
