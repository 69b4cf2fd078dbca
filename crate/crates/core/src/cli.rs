//! Command-line front end: configuration, dispatch and artifact output.
//!
//! [`execute`] is shared with the C ABI; it performs no I/O. [`run`] adds the
//! file outputs and the exit-code contract.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::construction::{build_heights, product_degree_bound, sample_omega, ConstructionParams};
use crate::error::{Error, Result};
use crate::experiments::{
    auto_rule_l1, centered_comparison, clt_distribution_test, decay_experiment, estimate_mean_abs, fubini_check,
    lindeberg_ladder, verify, CircleRule, ExperimentReport, GridChoice, GridSpec, MonteCarlo, VerifyOptions,
};
use crate::polyeval::{CircleGrid, ENUMERATION_LIMIT, SAMPLING_GRID_SIZE};
use crate::presets::{preset, LINDEBERG_LADDER};
use crate::riesz::{exact_mass, fourier_window, integrate_circle, partial_abs_product, Power};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_GATE_FAILED: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "RIESZ_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Decay,
    Clt,
    MeanAbs,
    Bound,
    Fubini,
    Lindeberg,
    Density,
    Verify,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Decay,
        Experiment::Clt,
        Experiment::MeanAbs,
        Experiment::Bound,
        Experiment::Fubini,
        Experiment::Lindeberg,
        Experiment::Density,
        Experiment::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Decay => "decay",
            Experiment::Clt => "clt",
            Experiment::MeanAbs => "mean-abs",
            Experiment::Bound => "bound",
            Experiment::Fubini => "fubini",
            Experiment::Lindeberg => "lindeberg",
            Experiment::Density => "density",
            Experiment::Verify => "verify",
        }
    }

    fn default_preset(self) -> &'static str {
        match self {
            Experiment::Decay => "decay",
            Experiment::Clt | Experiment::MeanAbs => "clt",
            Experiment::Bound => "bound-t99-sym",
            Experiment::Lindeberg => "lindeberg",
            Experiment::Fubini | Experiment::Density | Experiment::Verify => "small-exhaustive",
        }
    }

    fn default_samples(self) -> usize {
        match self {
            Experiment::Decay => 2048,
            Experiment::Clt => 100_000,
            Experiment::MeanAbs | Experiment::Bound => 16,
            Experiment::Fubini => 1024,
            Experiment::Lindeberg => 20_000,
            Experiment::Density => 1,
            Experiment::Verify => 512,
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
            Error::InvalidConfig(format!("unknown experiment `{s}`; valid experiments: {}", names.join(", ")))
        })
    }
}

/// Everything a run depends on. JSON config files use these keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub preset: Option<String>,
    pub params: Option<ConstructionParams>,
    pub seed: u64,
    /// Omega replicates, or `(omega, z)` samples for `clt` and `lindeberg`.
    pub n_omega: Option<usize>,
    pub grid: GridSpec,
    /// Circle points per replicate when the grid is sampled.
    pub z_points: Option<u64>,
    pub out: Option<PathBuf>,
    /// Stage for single-stage experiments.
    pub stage: Option<usize>,
    /// `N` or `N_max` for multi-stage experiments.
    pub stages: Option<usize>,
    pub eps: Option<f64>,
    /// Inner draws per stage for the product-of-means side of `fubini`.
    pub inner: Option<usize>,
    /// Fourier window half-width for `density` and `verify`.
    pub n_max: Option<i64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            preset: None,
            params: None,
            seed: 0,
            n_omega: None,
            grid: GridSpec::Auto,
            z_points: None,
            out: None,
            stage: None,
            stages: None,
            eps: None,
            inner: None,
            n_max: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("config: {e}")))
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.experiment.ok_or_else(|| Error::InvalidConfig("no experiment given".into()))
    }

    pub fn resolve_params(&self) -> Result<ConstructionParams> {
        let params = match (&self.params, &self.preset) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig("give either a preset or explicit params, not both".into()))
            }
            (Some(p), None) => p.clone(),
            (None, Some(name)) => preset(name)?,
            (None, None) => preset(self.experiment()?.default_preset())?,
        };
        params.validate()?;
        build_heights(&params)?;
        Ok(params)
    }

    fn samples(&self) -> Result<usize> {
        Ok(self.n_omega.unwrap_or(self.experiment()?.default_samples()))
    }

    fn stage(&self) -> usize {
        self.stage.unwrap_or(1)
    }

    fn multi_stages(&self, params: &ConstructionParams) -> usize {
        self.stages.unwrap_or(params.stages)
    }

    /// Rule for an `L^1` integral over the given stages.
    fn l1_rule(&self, params: &ConstructionParams, stages: &[usize]) -> Result<CircleRule> {
        let choice = match self.grid {
            GridSpec::Auto => auto_rule_l1(params, stages, self.seed)?,
            GridSpec::Size(m) => GridChoice::explicit(m, self.z_points)?,
        };
        Ok(match (choice.rule, self.z_points) {
            (CircleRule::Sampled { grid, .. }, Some(points)) => CircleRule::Sampled { grid, points },
            (rule, _) => rule,
        })
    }

    /// Grid for point-sampling experiments.
    fn point_grid(&self) -> Result<CircleGrid> {
        match self.grid {
            GridSpec::Auto => CircleGrid::new(SAMPLING_GRID_SIZE),
            GridSpec::Size(m) => CircleGrid::new(m),
        }
    }
}

/// A CSV file produced by a run, in addition to the report's series.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub tables: Vec<Table>,
}

/// Runs the configured experiment without touching the filesystem.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    let exp = config.experiment()?;
    let params = config.resolve_params()?;
    let samples = config.samples()?;
    let seed = config.seed;
    let stage = config.stage();
    let mut tables = Vec::new();

    let report = match exp {
        Experiment::MeanAbs => {
            let rule = config.l1_rule(&params, &[stage])?;
            estimate_mean_abs(&params, stage, &MonteCarlo::new(samples, rule, seed))?
        }
        Experiment::Bound => {
            let rule = config.l1_rule(&params, &[stage])?;
            centered_comparison(&params, stage, &MonteCarlo::new(samples, rule, seed))?
        }
        Experiment::Clt => clt_distribution_test(&params, stage, samples, seed, &config.point_grid()?)?,
        Experiment::Lindeberg => lindeberg_ladder(
            &params,
            stage,
            LINDEBERG_LADDER,
            config.eps.unwrap_or(0.1),
            samples,
            seed,
            &config.point_grid()?,
        )?,
        Experiment::Decay => {
            let n = config.multi_stages(&params);
            let stages: Vec<usize> = (1..=n).collect();
            let rule = config.l1_rule(&params, &stages)?;
            decay_experiment(&params, n, &MonteCarlo::new(samples, rule, seed))?
        }
        Experiment::Fubini => {
            let n = config.multi_stages(&params);
            let stages: Vec<usize> = (1..=n).collect();
            let rule = config.l1_rule(&params, &stages)?;
            fubini_check(
                &params,
                n,
                &MonteCarlo::new(samples, rule, seed),
                config.inner.unwrap_or(crate::experiments::DEFAULT_INNER_DRAWS),
            )?
        }
        Experiment::Verify => verify(
            &params,
            &VerifyOptions { seed, n_omega: samples, n_max: config.n_max.unwrap_or(8), ..VerifyOptions::default() },
        )?,
        Experiment::Density => {
            let (report, density, fourier) = density_dump(config, &params)?;
            tables.push(density);
            tables.push(fourier);
            report
        }
    };
    Ok(RunOutput { report, tables })
}

/// `R_N^2` of one omega draw on an exact grid, plus its Fourier window.
fn density_dump(config: &RunConfig, params: &ConstructionParams) -> Result<(ExperimentReport, Table, Table)> {
    let started = std::time::Instant::now();
    let n = config.multi_stages(params);
    let heights = build_heights(params)?;
    let degree = product_degree_bound(params, &heights, n);
    let grid = match config.grid {
        GridSpec::Auto => CircleGrid::oversampled(degree)?,
        GridSpec::Size(m) => CircleGrid::new(m)?,
    };
    if grid.size() > ENUMERATION_LIMIT {
        return Err(Error::GridTooLarge { size: grid.size(), limit: ENUMERATION_LIMIT });
    }
    grid.require_exact(degree)?;
    let omega = sample_omega(params, config.seed, n)?;
    let pp = partial_abs_product(params, &heights, &omega, n, &grid)?;
    let mass = integrate_circle(&pp, &grid, Power::Two)?;
    let exps = crate::construction::all_exponents(params, &heights, &omega, n)?;
    let n_max = config.n_max.unwrap_or(16).min(grid.size() as i64 / 2 - 1);
    let window = fourier_window(&pp, n_max, &grid)?;

    let mut density = String::from("index,value\n");
    for (l, v) in pp.values(Power::Two).iter().enumerate() {
        writeln!(density, "{l},{v:e}").expect("writing to a String");
    }
    let mut fourier = String::from("index,re,im\n");
    for (k, c) in &window {
        writeln!(fourier, "{k},{:e},{:e}", c.re, c.im).expect("writing to a String");
    }

    let rule = CircleRule::Full(grid);
    let mut report = ExperimentReport::new("density", params, config.seed, Some(&rule), 1);
    report
        .push_exact("stages", n as f64)
        .push_exact("mass_grid", mass)
        .push_exact("mass_coefficients", exact_mass(&exps));
    report.gate(
        "mass_is_one",
        (mass - 1.0).abs() <= 1e-9 || !crate::construction::check_dissociation(params, &heights).dissociated_through(n),
        format!("grid mass {mass:.12}"),
    );
    Ok((
        report.finish(started),
        Table { file_name: "density.csv".into(), contents: density },
        Table { file_name: "fourier.csv".into(), contents: fourier },
    ))
}

/// CSV of one series: `index,value,stderr`.
pub fn series_csv(series: &crate::experiments::Series) -> String {
    let mut out = String::from("index,value,stderr\n");
    for p in &series.points {
        writeln!(out, "{},{:e},{:e}", p.index, p.value, p.stderr).expect("writing to a String");
    }
    out
}

/// Writes `report.json`, one CSV per series and any extra tables.
pub fn write_artifacts(output: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: &str| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    put("report.json", &(output.report.to_json()? + "\n"))?;
    for s in &output.report.series {
        put(&format!("{}.csv", s.name), &series_csv(s))?;
    }
    for t in &output.tables {
        put(&t.file_name, &t.contents)?;
    }
    Ok(written)
}

/// One line per result and per gate.
pub fn summary_lines(report: &ExperimentReport) -> Vec<String> {
    let mut lines: Vec<String> = report
        .results
        .iter()
        .map(|r| {
            if r.stderr == 0.0 {
                format!("{}: {:.6}", r.label, r.value)
            } else {
                format!("{}: {:.6} +- {:.2e}", r.label, r.value, r.stderr)
            }
        })
        .collect();
    for s in &report.series {
        let vals: Vec<String> = s.points.iter().map(|p| format!("{}={:.5}", p.index, p.value)).collect();
        lines.push(format!("{}: {}", s.name, vals.join(" ")));
    }
    for g in &report.gates {
        lines.push(format!("[{}] {}: {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail));
    }
    lines
}

#[derive(Debug, Parser)]
#[command(name = "riesz-lab", version, about = "Monte Carlo experiments on random generalized Riesz products")]
pub struct Cli {
    /// Experiment: decay, clt, mean-abs, bound, fubini, lindeberg, density or verify
    pub experiment: String,
    /// Named parameter set
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON file with explicit construction parameters
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// JSON run configuration; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Omega replicates (or point samples for clt and lindeberg)
    #[arg(long)]
    pub samples: Option<usize>,
    /// Grid size M, or `auto`
    #[arg(long)]
    pub grid: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub stage: Option<usize>,
    /// Number of stages N for decay, fubini and density
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Circle points per replicate when the grid is sampled
    #[arg(long)]
    pub z_points: Option<u64>,
    #[arg(long)]
    pub inner: Option<usize>,
    /// Fourier window half-width
    #[arg(long)]
    pub n_max: Option<i64>,
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json(&std::fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        cfg.experiment = Some(self.experiment.parse()?);
        if let Some(path) = &self.params {
            let text = std::fs::read_to_string(path)?;
            cfg.params = Some(serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("params: {e}")))?);
            cfg.preset = None;
        }
        if let Some(p) = self.preset {
            cfg.preset = Some(p);
            if self.params.is_none() {
                cfg.params = None;
            }
        }
        if let Some(g) = &self.grid {
            cfg.grid = g.parse()?;
        }
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.n_omega = self.samples.or(cfg.n_omega);
        cfg.out = self.out.or(cfg.out);
        cfg.stage = self.stage.or(cfg.stage);
        cfg.stages = self.stages.or(cfg.stages);
        cfg.eps = self.eps.or(cfg.eps);
        cfg.z_points = self.z_points.or(cfg.z_points);
        cfg.inner = self.inner.or(cfg.inner);
        cfg.n_max = self.n_max.or(cfg.n_max);
        Ok(cfg)
    }
}

pub const DEFAULT_OUT_DIR: &str = "riesz-lab-out";

/// Full CLI behaviour for already-parsed arguments; returns the exit code.
pub fn run(cli: Cli, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32 {
    let result = cli.into_config().and_then(|cfg| {
        let output = execute(&cfg)?;
        let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        write_artifacts(&output, &dir)?;
        Ok((output, dir))
    });
    match result {
        Ok((output, dir)) => {
            for line in summary_lines(&output.report) {
                let _ = writeln!(stdout, "{line}");
            }
            let _ = writeln!(stdout, "wrote {}", dir.join("report.json").display());
            if output.report.passed() {
                EXIT_OK
            } else {
                EXIT_GATE_FAILED
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_CONFIG
        }
    }
}

/// Parses `args` (including the program name) and runs.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, stdout, stderr),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
            } else {
                let _ = write!(stdout, "{}", e.render());
            }
            code
        }
    }
}

/// Sizes the global thread pool from [`THREADS_ENV`].
pub fn init_threads_from_env() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Internal(e.to_string()))?;
    }
    Ok(())
}
