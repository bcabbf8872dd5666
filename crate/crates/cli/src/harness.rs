//! Experiment runners. Each returns typed results and renders them as a
//! [`Table`]; draws are evaluated in parallel and collected in index order.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rkur_core::models::random::stream_seed;
use rkur_core::models::{limiting_oracles, two_level_model, Parameter, TwoLevelParams};
use rkur_core::rkur::{evaluate_bound, fisher_terms, qfi_oracle, RkurReport};
use rkur_core::steady_fcs::{ResponseRoute, SteadyPoint};
use rkur_core::trajectories::{default_dt, ensemble_stats, simulate_ensemble, EnsembleStats};

use crate::config::{ExperimentConfig, ExperimentKind, Resolved, CROSSCHECK_TOLERANCE};
use crate::error::Result;
use crate::output::{float, opt_float, Table};

/// Largest allowed `|η_computed − η_theory|` in the sweep.
pub const SWEEP_TOLERANCE: f64 = 1e-8;

/// Slack on `η ≤ 1` for sampled draws.
pub const ETA_SLACK: f64 = 1e-9;

/// Standard errors allowed between trajectory and counting statistics.
pub const TRAJECTORY_SIGMAS: f64 = 3.0;

const PARAM_COLUMNS: [&str; 5] = ["gamma", "rabi", "omega", "omega_d", "beta"];

fn param_cells(p: &TwoLevelParams) -> Vec<String> {
    vec![float(p.gamma), float(p.rabi), float(p.omega), float(p.omega_d), float(p.beta)]
}

fn draw_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, index as u64))
}

// ---------------------------------------------------------------- sweep

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub ratio: f64,
    pub theta: Parameter,
    pub eta_theory: f64,
    pub eta_computed: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn abs_diff(&self) -> Option<f64> {
        self.eta_computed.map(|e| (e - self.eta_theory).abs())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// `η(θ=γ)` at `γ/Ω = √8`.
    pub critical_eta: Option<f64>,
}

impl SweepOutcome {
    /// Largest deviation on one branch, infinite if any point failed.
    pub fn max_diff(&self, theta: Parameter) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.theta == theta)
            .map(|r| r.abs_diff().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_diff(Parameter::Gamma) <= SWEEP_TOLERANCE
            && self.max_diff(Parameter::Rabi) <= SWEEP_TOLERANCE
            && self.critical_eta.is_some_and(|e| e <= 1e-10)
    }
}

fn limiting_eta(gamma: f64, rabi: f64, theta: Parameter) -> rkur_core::Result<Option<f64>> {
    let fam = two_level_model(TwoLevelParams::limiting(gamma, rabi), theta, [1.0, 1.0])?;
    let value = if theta == Parameter::Gamma { gamma } else { rabi };
    Ok(evaluate_bound(&fam, value, None)?.eta)
}

/// Log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp()).collect()
}

pub fn run_sweep(r: &Resolved) -> SweepOutcome {
    let rabi = r.base.rabi;
    let ratios = log_space(r.sweep.ratio_min, r.sweep.ratio_max, r.sweep.points);
    let jobs: Vec<(f64, Parameter)> = ratios
        .iter()
        .flat_map(|&x| [(x, Parameter::Gamma), (x, Parameter::Rabi)])
        .collect();
    let rows = jobs
        .into_par_iter()
        .map(|(ratio, theta)| {
            let gamma = ratio * rabi;
            let theory = limiting_oracles(gamma, rabi)
                .map(|o| if theta == Parameter::Gamma { o.eta_gamma } else { o.eta_rabi })
                .unwrap_or(f64::NAN);
            match limiting_eta(gamma, rabi, theta) {
                Ok(eta) => SweepRow { ratio, theta, eta_theory: theory, eta_computed: eta, error: None },
                Err(e) => SweepRow { ratio, theta, eta_theory: theory, eta_computed: None, error: Some(e.code().into()) },
            }
        })
        .collect();
    let critical_eta = limiting_eta(8f64.sqrt() * rabi, rabi, Parameter::Gamma).ok().flatten();
    SweepOutcome { rows, critical_eta }
}

pub fn sweep_table(o: &SweepOutcome) -> Table {
    let mut t = Table::new(&["ratio", "theta", "eta_theory", "eta_computed", "abs_diff", "error"]);
    for r in &o.rows {
        t.push(vec![
            float(r.ratio),
            r.theta.name().into(),
            float(r.eta_theory),
            opt_float(r.eta_computed),
            opt_float(r.abs_diff()),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    t.summarize("max_abs_diff_gamma", float(o.max_diff(Parameter::Gamma)));
    t.summarize("max_abs_diff_rabi", float(o.max_diff(Parameter::Rabi)));
    t.summarize("eta_gamma_at_sqrt8", opt_float(o.critical_eta));
    t.summarize("passed", o.passed());
    t
}

// --------------------------------------------------------------- sample

#[derive(Clone, Debug, PartialEq)]
pub struct Draw {
    pub index: usize,
    pub params: TwoLevelParams,
    pub outcome: std::result::Result<RkurReport, rkur_core::Error>,
}

impl Draw {
    pub fn exclusion(&self) -> Option<&'static str> {
        self.outcome.as_ref().err().map(|e| e.code())
    }
}

fn evaluate_draw(index: usize, params: TwoLevelParams, perturbed: Parameter, weights: [f64; 2]) -> Draw {
    let outcome = two_level_model(params, perturbed, weights)
        .and_then(|fam| evaluate_bound(&fam, params.get(perturbed), None));
    Draw { index, params, outcome }
}

/// Draw `index` of a sampling run; independent of every other draw.
pub fn sample_draw(r: &Resolved, index: usize) -> Draw {
    let params = r.ranges.sample(&mut draw_rng(r.seed, index), r.perturbed);
    evaluate_draw(index, params, r.perturbed, r.weights)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleSummary {
    pub draws: usize,
    pub valid: usize,
    pub exclusions: BTreeMap<&'static str, usize>,
    pub max_eta: Option<f64>,
    /// Valid draws with `η > 1 + 1e-9`.
    pub eta_above_one: usize,
    pub eta_z_above_one: usize,
    pub eta_a_above_one: usize,
    pub violations: usize,
}

impl SampleSummary {
    pub fn from_draws(draws: &[Draw]) -> Self {
        let mut s = SampleSummary { draws: draws.len(), ..Default::default() };
        for d in draws {
            match &d.outcome {
                Ok(r) => {
                    s.valid += 1;
                    if let Some(eta) = r.eta {
                        s.max_eta = Some(s.max_eta.map_or(eta, |m: f64| m.max(eta)));
                        s.eta_above_one += (eta > 1.0 + ETA_SLACK) as usize;
                    }
                    s.eta_z_above_one += r.eta_z.is_some_and(|x| x > 1.0) as usize;
                    s.eta_a_above_one += r.eta_a.is_some_and(|x| x > 1.0) as usize;
                    s.violations += r.is_violation() as usize;
                }
                Err(e) => *s.exclusions.entry(e.code()).or_default() += 1,
            }
        }
        s
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.eta_above_one == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleOutcome {
    pub perturbed: Parameter,
    pub draws: Vec<Draw>,
    pub summary: SampleSummary,
}

pub fn run_sample(r: &Resolved) -> SampleOutcome {
    let draws: Vec<Draw> = (0..r.draws).into_par_iter().map(|i| sample_draw(r, i)).collect();
    let summary = SampleSummary::from_draws(&draws);
    SampleOutcome { perturbed: r.perturbed, draws, summary }
}

const REPORT_COLUMNS: [&str; 28] = [
    "theta",
    "mean_rate",
    "variance_rate",
    "response",
    "response_route",
    "response_fd",
    "response_analytic",
    "lhs",
    "da",
    "x_term",
    "z1_re",
    "z1_im",
    "z2_re",
    "z2_im",
    "z",
    "a2max",
    "a2max_channel",
    "rhs",
    "qfi_rate",
    "eta",
    "eta_z",
    "eta_a",
    "hamiltonian_only",
    "scaled_jumps",
    "violation",
    "exclusion",
    "exclusion_detail",
    "perturbed",
];

fn report_cells(d: &Draw, perturbed: Parameter) -> Vec<String> {
    let mut cells = match &d.outcome {
        Ok(r) => vec![
            float(r.theta),
            float(r.mean_rate),
            float(r.variance_rate),
            float(r.response.value),
            match r.response.route {
                ResponseRoute::Analytic => "analytic".into(),
                ResponseRoute::FiniteDifference => "finite_difference".into(),
            },
            float(r.response.finite_difference),
            opt_float(r.response.analytic),
            float(r.lhs),
            float(r.da),
            float(r.x_term),
            float(r.z1.re),
            float(r.z1.im),
            float(r.z2.re),
            float(r.z2.im),
            float(r.z),
            float(r.a2max),
            r.a2max_channel.clone().unwrap_or_default(),
            float(r.rhs),
            float(r.qfi_rate),
            opt_float(r.eta),
            opt_float(r.eta_z),
            opt_float(r.eta_a),
            r.flags.hamiltonian_only.to_string(),
            r.flags.scaled_jumps.to_string(),
            r.is_violation().to_string(),
            String::new(),
            String::new(),
        ],
        Err(e) => {
            let mut v = vec![float(d.params.get(perturbed))];
            v.resize(REPORT_COLUMNS.len() - 3, String::new());
            v.push(e.code().into());
            v.push(e.to_string());
            v
        }
    };
    cells.push(perturbed.name().into());
    cells
}

fn draw_columns(extra: &[&'static str]) -> Vec<&'static str> {
    let mut cols = vec!["index"];
    cols.extend(PARAM_COLUMNS);
    cols.extend(REPORT_COLUMNS);
    cols.extend(extra);
    cols
}

fn draw_row(d: &Draw, perturbed: Parameter) -> Vec<String> {
    let mut row = vec![d.index.to_string()];
    row.extend(param_cells(&d.params));
    row.extend(report_cells(d, perturbed));
    row
}

pub fn sample_table(o: &SampleOutcome) -> Table {
    let mut t = Table::new(&draw_columns(&[]));
    for d in &o.draws {
        t.push(draw_row(d, o.perturbed));
    }
    let s = &o.summary;
    t.summarize("draws", s.draws);
    t.summarize("valid", s.valid);
    t.summarize("excluded", s.draws - s.valid);
    for (code, n) in &s.exclusions {
        t.summarize(&format!("excluded_{code}"), n);
    }
    t.summarize("max_eta", opt_float(s.max_eta));
    t.summarize("eta_above_one", s.eta_above_one);
    t.summarize("eta_z_above_one", s.eta_z_above_one);
    t.summarize("eta_a_above_one", s.eta_a_above_one);
    t.summarize("violations", s.violations);
    t.summarize("passed", s.passed());
    t
}

// --------------------------------------------------------------- single

#[derive(Clone, Debug, PartialEq)]
pub struct SingleOutcome {
    pub perturbed: Parameter,
    pub draw: Draw,
    pub qfi_oracle: Option<f64>,
}

pub fn run_single(r: &Resolved) -> SingleOutcome {
    let draw = evaluate_draw(0, r.base, r.perturbed, r.weights);
    let qfi = two_level_model(r.base, r.perturbed, r.weights)
        .and_then(|fam| qfi_oracle(&fam, r.base.get(r.perturbed)))
        .ok();
    SingleOutcome { perturbed: r.perturbed, draw, qfi_oracle: qfi }
}

pub fn single_table(o: &SingleOutcome) -> Table {
    let mut t = Table::new(&draw_columns(&["qfi_oracle"]));
    let mut row = draw_row(&o.draw, o.perturbed);
    row.push(opt_float(o.qfi_oracle));
    t.push(row);
    t.summarize("passed", o.draw.outcome.as_ref().map_or(true, |r| !r.is_violation()));
    t
}

// ----------------------------------------------------------- crosscheck

#[derive(Clone, Debug, PartialEq)]
pub struct CrossRow {
    pub index: usize,
    pub params: TwoLevelParams,
    pub x_term: Option<f64>,
    pub z: Option<f64>,
    pub oracle: Option<f64>,
    pub error: Option<String>,
}

impl CrossRow {
    pub fn fisher(&self) -> Option<f64> {
        Some(self.x_term? + self.z?)
    }

    /// `|(𝒳+𝒵) − oracle| / max(|𝒳+𝒵|, 1)`.
    pub fn relative_gap(&self) -> Option<f64> {
        let f = self.fisher()?;
        Some((f - self.oracle?).abs() / f.abs().max(1.0))
    }

    pub fn passed(&self) -> bool {
        self.relative_gap().is_some_and(|g| g <= CROSSCHECK_TOLERANCE)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrosscheckOutcome {
    pub perturbed: Parameter,
    pub rows: Vec<CrossRow>,
}

impl CrosscheckOutcome {
    pub fn max_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.relative_gap().unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.passed()).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

pub fn crosscheck_row(index: usize, params: TwoLevelParams, perturbed: Parameter, weights: [f64; 2]) -> CrossRow {
    let mut row = CrossRow { index, params, x_term: None, z: None, oracle: None, error: None };
    let theta = params.get(perturbed);
    let fam = match two_level_model(params, perturbed, weights) {
        Ok(f) => f,
        Err(e) => {
            row.error = Some(e.code().into());
            return row;
        }
    };
    let mut errors = Vec::new();
    match fisher_terms(&fam, theta) {
        Ok((x, z)) => (row.x_term, row.z) = (Some(x), Some(z)),
        Err(e) => errors.push(e.code()),
    }
    match qfi_oracle(&fam, theta) {
        Ok(q) => row.oracle = Some(q),
        Err(e) => errors.push(e.code()),
    }
    if !errors.is_empty() {
        row.error = Some(errors.join(";"));
    }
    row
}

pub fn run_crosscheck(r: &Resolved) -> CrosscheckOutcome {
    let rows = (0..r.draws)
        .into_par_iter()
        .map(|i| {
            let params = r.ranges.sample(&mut draw_rng(r.seed, i), r.perturbed);
            crosscheck_row(i, params, r.perturbed, r.weights)
        })
        .collect();
    CrosscheckOutcome { perturbed: r.perturbed, rows }
}

pub fn crosscheck_table(o: &CrosscheckOutcome) -> Table {
    let mut cols = vec!["index"];
    cols.extend(PARAM_COLUMNS);
    cols.extend(["perturbed", "x_term", "z", "fisher_rate", "qfi_oracle", "relative_gap", "error"]);
    let mut t = Table::new(&cols);
    for r in &o.rows {
        let mut row = vec![r.index.to_string()];
        row.extend(param_cells(&r.params));
        row.extend([
            o.perturbed.name().into(),
            opt_float(r.x_term),
            opt_float(r.z),
            opt_float(r.fisher()),
            opt_float(r.oracle),
            opt_float(r.relative_gap()),
            r.error.clone().unwrap_or_default(),
        ]);
        t.push(row);
    }
    t.summarize("draws", o.rows.len());
    t.summarize("max_relative_gap", float(o.max_gap()));
    t.summarize("tolerance", float(CROSSCHECK_TOLERANCE));
    t.summarize("failures", o.failures());
    t.summarize("passed", o.passed());
    t
}

// --------------------------------------------------------- trajectories

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleRow {
    pub dt: f64,
    pub stats: Option<EnsembleStats>,
    pub fcs_mean: f64,
    pub fcs_variance: f64,
    pub error: Option<String>,
}

fn z_score(estimate: f64, target: f64, se: f64) -> Option<f64> {
    (se > 0.0).then(|| (estimate - target) / se)
}

impl EnsembleRow {
    pub fn mean_z(&self) -> Option<f64> {
        self.stats.and_then(|s| z_score(s.mean_rate, self.fcs_mean, s.mean_se))
    }

    pub fn variance_z(&self) -> Option<f64> {
        self.stats.and_then(|s| z_score(s.variance_rate, self.fcs_variance, s.variance_se))
    }

    /// Both estimates within three standard errors of the counting statistics.
    pub fn passed(&self) -> bool {
        self.stats.is_some_and(|s| {
            (s.mean_rate - self.fcs_mean).abs() <= TRAJECTORY_SIGMAS * s.mean_se
                && (s.variance_rate - self.fcs_variance).abs() <= TRAJECTORY_SIGMAS * s.variance_se
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryOutcome {
    pub rows: Vec<EnsembleRow>,
    /// `(time, channel label)` of trajectory 0 in the first ensemble.
    pub first_events: Vec<(f64, String)>,
}

impl TrajectoryOutcome {
    pub fn verdict_unchanged(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].passed() == w[1].passed())
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(EnsembleRow::passed)
    }
}

pub fn run_trajectories(r: &Resolved) -> Result<TrajectoryOutcome> {
    let model = r.base.point()?.model()?.with_weights(&r.weights)?;
    let steady = SteadyPoint::new(model.clone())?;
    let (fcs_mean, fcs_variance) = (steady.mean_rate()?, steady.variance_rate()?);
    let spec = &r.trajectories;
    let dt = spec.dt.unwrap_or_else(|| default_dt(&model));
    let steps = if spec.halve_dt { vec![dt, dt / 2.0] } else { vec![dt] };

    let mut rows = Vec::new();
    let mut first_events = Vec::new();
    for (k, &step) in steps.iter().enumerate() {
        let run = simulate_ensemble(&model, &steady.bundle.pi, spec.horizon, step, r.seed, spec.count)
            .and_then(|recs| ensemble_stats(&recs).map(|s| (recs, s)));
        match run {
            Ok((recs, stats)) => {
                if k == 0 {
                    first_events = recs[0].labelled_events(&model).map(|(t, c)| (t, c.to_string())).collect();
                }
                rows.push(EnsembleRow { dt: step, stats: Some(stats), fcs_mean, fcs_variance, error: None });
            }
            Err(e) => rows.push(EnsembleRow { dt: step, stats: None, fcs_mean, fcs_variance, error: Some(e.to_string()) }),
        }
    }
    Ok(TrajectoryOutcome { rows, first_events })
}

pub fn trajectory_table(o: &TrajectoryOutcome) -> Table {
    let mut t = Table::new(&[
        "dt",
        "count",
        "horizon",
        "mean_rate",
        "mean_se",
        "fcs_mean",
        "mean_z",
        "variance_rate",
        "variance_se",
        "fcs_variance",
        "variance_z",
        "verdict",
        "error",
    ]);
    for r in &o.rows {
        let s = r.stats;
        t.push(vec![
            float(r.dt),
            s.map(|s| s.count.to_string()).unwrap_or_default(),
            opt_float(s.map(|s| s.horizon)),
            opt_float(s.map(|s| s.mean_rate)),
            opt_float(s.map(|s| s.mean_se)),
            float(r.fcs_mean),
            opt_float(r.mean_z()),
            opt_float(s.map(|s| s.variance_rate)),
            opt_float(s.map(|s| s.variance_se)),
            float(r.fcs_variance),
            opt_float(r.variance_z()),
            if r.passed() { "pass" } else { "fail" }.into(),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    t.summarize("verdict_unchanged", o.verdict_unchanged());
    t.summarize("passed", o.passed());
    t
}

/// `time,channel` CSV of one trajectory's events.
pub fn events_table(events: &[(f64, String)]) -> Table {
    let mut t = Table::new(&["time", "channel"]);
    for (time, channel) in events {
        t.push(vec![float(*time), channel.clone()]);
    }
    t
}

// -------------------------------------------------------------- dispatch

/// A finished run rendered as CSV plus its overall verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub table: Table,
    pub passed: bool,
    pub events: Option<Table>,
}

/// Resolves `cfg`, runs it on `threads` workers (all cores when `None`) and
/// returns the annotated table.
pub fn run(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutput> {
    let resolved = cfg.resolve()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let (mut table, passed, events) = pool.install(|| -> Result<_> {
        Ok(match resolved.kind {
            ExperimentKind::Sweep => {
                let o = run_sweep(&resolved);
                (sweep_table(&o), o.passed(), None)
            }
            ExperimentKind::Sample => {
                let o = run_sample(&resolved);
                (sample_table(&o), o.summary.passed(), None)
            }
            ExperimentKind::Single => {
                let o = run_single(&resolved);
                let passed = o.draw.outcome.as_ref().map_or(true, |r| !r.is_violation());
                (single_table(&o), passed, None)
            }
            ExperimentKind::Crosscheck => {
                let o = run_crosscheck(&resolved);
                (crosscheck_table(&o), o.passed(), None)
            }
            ExperimentKind::Trajectories => {
                let o = run_trajectories(&resolved)?;
                (trajectory_table(&o), o.passed(), Some(events_table(&o.first_events)))
            }
        })
    })?;
    let header = vec![
        ("rkur".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("kind".into(), resolved.kind.to_string()),
        ("config_sha256".into(), cfg.digest()),
        ("seed".into(), resolved.seed.to_string()),
    ];
    table.metadata.splice(0..0, header);
    Ok(RunOutput { table, passed, events })
}
