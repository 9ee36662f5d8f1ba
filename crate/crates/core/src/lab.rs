//! Experiment harness: replicated Monte Carlo runs over the forest and
//! linear-tree builders, summary statistics, kernel density estimates,
//! and deterministic CSV emission.
//!
//! Every experiment is a pure function of its config: replicate `r` draws
//! from RNG stream `r`, replicates merge by index, and emitted files embed
//! the config as a `#`-prefixed JSON header line, so a rerun reproduces
//! output byte for byte regardless of worker count.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{self, lln_limit};
use crate::dlt::{build_dlf, dlf_weight, root_edge_weight};
use crate::fixedpoint::{sample_d1_centred, sample_dickman};
use crate::format::sig17;
use crate::geometry::{ConeOrder, Point, Rect};
use crate::mdsf::{build_forest, restricted_weight, total_weight};
use crate::pointproc::{
    add_root, binomial_process, poisson_count, poisson_process, unit_open_closed,
    uniform_sequence, SeedSpec,
};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("empty sample set")]
    EmptyInput,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, LabError> {
    Err(LabError::Config(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Lln,
    TotalLaw,
    DltDensity,
    Dickman,
    Boundary,
    CltRegion,
    Coupling,
    AnalyticTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Binomial,
    Poisson,
}

/// Full description of one experiment. `n` sizes planar point sets (count
/// for binomial, intensity for Poisson), `m` sizes one-dimensional
/// arrival sequences; each experiment reads the fields it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: u64,
    pub m: u64,
    pub reps: u64,
    pub alpha: f64,
    pub theta: f64,
    pub phi: f64,
    pub rooted: bool,
    pub process: ProcessKind,
    pub sigma: f64,
    pub epsilon: f64,
    pub base_seed: u64,
    pub kde_bandwidth: f64,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            n: 10_000,
            m: 1_000,
            reps: 100,
            alpha: 1.0,
            theta: std::f64::consts::FRAC_PI_2,
            phi: std::f64::consts::FRAC_PI_2,
            rooted: false,
            process: ProcessKind::Binomial,
            sigma: 0.58,
            epsilon: 0.05,
            base_seed: 1,
            kde_bandwidth: 0.0025,
            out: None,
        }
    }

    fn cone(&self) -> Result<ConeOrder, LabError> {
        ConeOrder::new(self.theta, self.phi).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Check every constraint the experiment kind actually consumes.
    /// `sigma` governs the boundary/coupling strips, `epsilon` the
    /// interior region; no statistic reads both, so each is validated
    /// where it is used.
    pub fn validate(&self) -> Result<(), LabError> {
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return config_err(format!("alpha must be positive and finite, got {}", self.alpha));
        }
        if self.kind != ExperimentKind::AnalyticTable && self.reps == 0 {
            return config_err("reps must be at least 1");
        }
        let need_n = matches!(
            self.kind,
            ExperimentKind::Lln
                | ExperimentKind::TotalLaw
                | ExperimentKind::Boundary
                | ExperimentKind::CltRegion
                | ExperimentKind::Coupling
        );
        if need_n && self.n == 0 {
            return config_err("n must be at least 1");
        }
        let need_m = matches!(self.kind, ExperimentKind::DltDensity | ExperimentKind::Dickman);
        if need_m && self.m == 0 {
            return config_err("m must be at least 1");
        }
        if matches!(
            self.kind,
            ExperimentKind::Lln
                | ExperimentKind::TotalLaw
                | ExperimentKind::Boundary
                | ExperimentKind::CltRegion
        ) {
            self.cone()?;
        }
        let need_sigma = matches!(self.kind, ExperimentKind::Boundary | ExperimentKind::Coupling);
        if need_sigma && !(self.sigma > 0.5 && self.sigma < 2.0 / 3.0) {
            return config_err(format!(
                "sigma must lie in (1/2, 2/3), got {}",
                self.sigma
            ));
        }
        match self.kind {
            ExperimentKind::Lln => {
                if self.alpha >= 2.0 {
                    return config_err(format!(
                        "lln requires alpha in (0, 2), got {}",
                        self.alpha
                    ));
                }
            }
            ExperimentKind::Boundary => {
                if self.alpha < 1.0 {
                    return config_err(format!(
                        "boundary requires alpha >= 1, got {}",
                        self.alpha
                    ));
                }
            }
            ExperimentKind::CltRegion => {
                if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
                    return config_err(format!(
                        "epsilon must lie in (0, 1/2), got {}",
                        self.epsilon
                    ));
                }
                if self.alpha < 1.0 && self.epsilon >= (1.0 - self.alpha) / 2.0 {
                    return config_err(format!(
                        "for alpha < 1, epsilon must stay below (1 - alpha)/2, got {}",
                        self.epsilon
                    ));
                }
            }
            ExperimentKind::DltDensity => {
                if self.alpha != 1.0 {
                    return config_err("the centred linear-tree density is defined at alpha = 1");
                }
                if !(self.kde_bandwidth > 0.0 && self.kde_bandwidth.is_finite()) {
                    return config_err("kde bandwidth must be positive");
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub count: u64,
    pub mean: f64,
    /// Unbiased (n−1) sample variance.
    pub variance: f64,
    pub central_moment_3: f64,
    pub central_moment_4: f64,
    pub skewness: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    pub se_skewness: f64,
    pub min: f64,
    pub max: f64,
}

/// Standard unbiased estimators with large-sample standard errors:
/// `se(s^2) = sqrt((m4 - s^4)/n)`, `se(skew) = sqrt(6/n)`.
pub fn summarize(samples: &[f64]) -> Result<SummaryStats, LabError> {
    if samples.is_empty() {
        return Err(LabError::EmptyInput);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        min = min.min(x);
        max = max.max(x);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let variance = if samples.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 };
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    let se_variance = ((m4 - variance * variance).max(0.0) / n).sqrt();
    Ok(SummaryStats {
        count: samples.len() as u64,
        mean,
        variance,
        central_moment_3: m3,
        central_moment_4: m4,
        skewness,
        se_mean: (variance / n).sqrt(),
        se_variance,
        se_skewness: (6.0 / n).sqrt(),
        min,
        max,
    })
}

impl SummaryStats {
    pub fn excess_kurtosis(&self) -> f64 {
        if self.variance > 0.0 {
            self.central_moment_4 / (self.variance * self.variance) - 3.0
        } else {
            0.0
        }
    }

    fn rows(&self) -> Vec<(&'static str, f64, Option<f64>)> {
        vec![
            ("count", self.count as f64, None),
            ("mean", self.mean, Some(self.se_mean)),
            ("variance", self.variance, Some(self.se_variance)),
            ("central_moment_3", self.central_moment_3, None),
            ("central_moment_4", self.central_moment_4, None),
            ("skewness", self.skewness, Some(self.se_skewness)),
            ("min", self.min, None),
            ("max", self.max, None),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: Vec<(f64, f64)>,
    pub bandwidth: f64,
    pub kernel: &'static str,
}

const KDE_GRID_POINTS: usize = 1024;

/// Gaussian-kernel density estimate on a 1024-point grid spanning
/// `[min - 4h, max + 4h]`; the grid captures all but `2(1 - Phi(4))` of
/// each kernel's mass, so the trapezoidal integral sits within 1% of 1.
pub fn kde(samples: &[f64], bandwidth: f64) -> Result<DensityEstimate, LabError> {
    if samples.is_empty() {
        return Err(LabError::EmptyInput);
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return config_err("kde bandwidth must be positive");
    }
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = min - 4.0 * bandwidth;
    let hi = max + 4.0 * bandwidth;
    let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * bandwidth * samples.len() as f64);
    let grid: Vec<(f64, f64)> = (0..KDE_GRID_POINTS)
        .into_par_iter()
        .map(|i| {
            let x = lo + step * i as f64;
            let mut acc = 0.0;
            for &s in samples {
                let z = (x - s) / bandwidth;
                acc += (-0.5 * z * z).exp();
            }
            (x, acc * norm)
        })
        .collect();
    Ok(DensityEstimate {
        grid,
        bandwidth,
        kernel: "gaussian",
    })
}

/// Trapezoidal integral of the estimate over its grid.
pub fn density_mass(density: &DensityEstimate) -> f64 {
    density
        .grid
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum()
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Per-replicate primary statistic, after any centring and scaling.
    pub samples: Vec<f64>,
    pub stats: SummaryStats,
    /// Experiment-specific summary rows: (name, value, std. error).
    pub extra: Vec<(&'static str, f64, Option<f64>)>,
    pub density: Option<DensityEstimate>,
}

fn replicate_values<F>(reps: u64, f: F) -> Vec<f64>
where
    F: Fn(u64) -> f64 + Sync + Send,
{
    (0..reps).into_par_iter().map(f).collect()
}

fn planar_sample(cfg: &ExperimentConfig, rep: u64) -> Vec<Point> {
    let seed = SeedSpec::new(cfg.base_seed, rep);
    let mut sample = match cfg.process {
        ProcessKind::Binomial => binomial_process(cfg.n as usize, &seed),
        ProcessKind::Poisson => {
            poisson_process(cfg.n as f64, &seed).expect("validated intensity")
        }
    };
    if cfg.rooted {
        add_root(&mut sample).expect("fresh sample");
    }
    sample.points
}

fn batch_centre(values: &mut [f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in values.iter_mut() {
        *v -= mean;
    }
    mean
}

/// Law-of-large-numbers statistic: `n^(alpha/2 - 1) * L^alpha` per
/// replicate, with the analytic limit attached for comparison.
pub fn run_lln(cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
    cfg.validate()?;
    let order = cfg.cone()?;
    let scale = (cfg.n as f64).powf(cfg.alpha / 2.0 - 1.0);
    let samples = replicate_values(cfg.reps, |r| {
        let points = planar_sample(cfg, r);
        let forest = build_forest(points, cfg.rooted, order).expect("continuous sample");
        scale * total_weight(&forest, cfg.alpha)
    });
    let stats = summarize(&samples)?;
    let target = lln_limit(cfg.alpha, cfg.phi).map_err(|e| LabError::Config(e.to_string()))?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        samples,
        stats,
        extra: vec![("target", target, None)],
        density: None,
    })
}

/// Total-weight fluctuation statistic: batch-centred `L^alpha`, scaled by
/// `n^((alpha-1)/2)` when `alpha < 1` (where the raw fluctuations shrink).
pub fn run_total_law(cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
    cfg.validate()?;
    let order = cfg.cone()?;
    let mut samples = replicate_values(cfg.reps, |r| {
        let points = planar_sample(cfg, r);
        let forest = build_forest(points, cfg.rooted, order).expect("continuous sample");
        total_weight(&forest, cfg.alpha)
    });
    let raw_mean = batch_centre(&mut samples);
    if cfg.alpha < 1.0 {
        let scale = (cfg.n as f64).powf((cfg.alpha - 1.0) / 2.0);
        for v in samples.iter_mut() {
            *v *= scale;
        }
    }
    let stats = summarize(&samples)?;
    let density = kde(&samples, cfg.kde_bandwidth)?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        samples,
        stats,
        extra: vec![("raw_mean", raw_mean, None)],
        density: Some(density),
    })
}

/// Weight restricted to the L-shaped margin `(0,1]^2 without
/// (n^-sigma, 1]^2`, batch-centred.
pub fn run_boundary(cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
    cfg.validate()?;
    let order = cfg.cone()?;
    let inner_lo = (cfg.n as f64).powf(-cfg.sigma);
    let inner = Rect::new(inner_lo, 1.0, inner_lo, 1.0).expect("sigma in range");
    let mut samples = replicate_values(cfg.reps, |r| {
        let points = planar_sample(cfg, r);
        let forest = build_forest(points, cfg.rooted, order).expect("continuous sample");
        total_weight(&forest, cfg.alpha) - restricted_weight(&forest, &inner, cfg.alpha)
    });
    let raw_mean = batch_centre(&mut samples);
    let stats = summarize(&samples)?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        samples,
        stats,
        extra: vec![("raw_mean", raw_mean, None)],
        density: None,
    })
}

/// Interior central-limit statistic: `n^((alpha-1)/2)` times the
/// batch-centred weight restricted to `(n^(eps-1/2), 1]^2`, with
/// normality diagnostics.
pub fn run_clt_region(cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
    cfg.validate()?;
    let order = cfg.cone()?;
    let lo = (cfg.n as f64).powf(cfg.epsilon - 0.5);
    let region = Rect::new(lo, 1.0, lo, 1.0).expect("epsilon in range");
    let mut samples = replicate_values(cfg.reps, |r| {
        let points = planar_sample(cfg, r);
        let forest = build_forest(points, cfg.rooted, order).expect("continuous sample");
        restricted_weight(&forest, &region, cfg.alpha)
    });
    let raw_mean = batch_centre(&mut samples);
    let scale = (cfg.n as f64).powf((cfg.alpha - 1.0) / 2.0);
    for v in samples.iter_mut() {
        *v *= scale;
    }
    let stats = summarize(&samples)?;
    let kurt_se = (24.0 / cfg.reps as f64).sqrt();
    let extra = vec![
        ("raw_mean", raw_mean, None),
        ("excess_kurtosis", stats.excess_kurtosis(), Some(kurt_se)),
    ];
    Ok(ExperimentResult {
        config: cfg.clone(),
        samples,
        stats,
        extra,
        density: None,
    })
}

/// Strip coupling between the planar forest and the linear forest of the
/// strip's x-coordinates (arrival order = increasing y). The per-replicate
/// gap `L^alpha - D^alpha` must be nonnegative, and for `alpha >= 1` at
/// most `alpha * 2^(alpha-1) * N * n^-sigma`; violations are counted
/// pathwise. The strip is intrinsically Poisson, so `process` is ignored.
pub fn run_coupling(cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
    cfg.validate()?;
    let n = cfg.n as f64;
    let strip_height = n.powf(-cfg.sigma);
    let intensity = n * strip_height;
    let order = ConeOrder::coordinatewise();
    let per_rep: Vec<(f64, f64)> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let seed = SeedSpec::new(cfg.base_seed, r);
            let mut rng = seed.rng();
            let count = poisson_count(intensity, &mut rng).expect("validated intensity");
            let mut pts: Vec<Point> = (0..count)
                .map(|_| {
                    let x = unit_open_closed(&mut rng);
                    let y = strip_height * unit_open_closed(&mut rng);
                    Point::new(x, y)
                })
                .collect();
            pts.sort_by(|a, b| a.y.partial_cmp(&b.y).unwrap());
            let xs = crate::pointproc::UniformSequence {
                values: pts.iter().map(|p| p.x).collect(),
                rooted: false,
            };
            let forest = build_forest(pts, false, order).expect("continuous sample");
            let linear = build_dlf(&xs).expect("continuous sample");
            let gap = total_weight(&forest, cfg.alpha) - dlf_weight(&linear, cfg.alpha);
            let bound = cfg.alpha * 2f64.powf(cfg.alpha - 1.0) * count as f64 * strip_height;
            (gap, bound)
        })
        .collect();
    let samples: Vec<f64> = per_rep.iter().map(|&(g, _)| g).collect();
    let violations = per_rep
        .iter()
        .filter(|&&(g, b)| g < 0.0 || (cfg.alpha >= 1.0 && g > b))
        .count();
    let mean_bound = per_rep.iter().map(|&(_, b)| b).sum::<f64>() / cfg.reps as f64;
    let stats = summarize(&samples)?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        samples,
        stats,
        extra: vec![
            ("violations", violations as f64, None),
            ("mean_bound", mean_bound, None),
        ],
        density: None,
    })
}

/// Density study of the centred linear-tree weight: replicated exact-mean
/// centred draws plus a Gaussian KDE.
pub fn run_dlt_density(cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
    cfg.validate()?;
    let samples = replicate_values(cfg.reps, |r| {
        sample_d1_centred(cfg.m, &SeedSpec::new(cfg.base_seed, r)).0
    });
    let stats = summarize(&samples)?;
    let density = kde(&samples, cfg.kde_bandwidth)?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        samples,
        stats,
        extra: Vec::new(),
        density: Some(density),
    })
}

/// Two independent estimators of the same limit: the direct series
/// sampler, and the root-incident weight of a rooted linear tree on `m`
/// arrivals. Their means must agree within joint Monte Carlo error.
pub fn run_dickman(cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
    cfg.validate()?;
    let samples = replicate_values(cfg.reps, |r| {
        sample_dickman(cfg.alpha, &SeedSpec::new(cfg.base_seed, 2 * r))
    });
    let via_tree = replicate_values(cfg.reps, |r| {
        let seq = uniform_sequence(cfg.m as usize, &SeedSpec::new(cfg.base_seed, 2 * r + 1), true);
        let forest = build_dlf(&seq).expect("continuous sample");
        root_edge_weight(&forest, cfg.alpha).expect("rooted build")
    });
    let stats = summarize(&samples)?;
    let tree_stats = summarize(&via_tree)?;
    let joint_se = (stats.se_mean * stats.se_mean + tree_stats.se_mean * tree_stats.se_mean).sqrt();
    let z = if joint_se > 0.0 {
        (stats.mean - tree_stats.mean).abs() / joint_se
    } else {
        0.0
    };
    Ok(ExperimentResult {
        config: cfg.clone(),
        samples,
        stats,
        extra: vec![
            ("root_edge_mean", tree_stats.mean, Some(tree_stats.se_mean)),
            ("root_edge_variance", tree_stats.variance, Some(tree_stats.se_variance)),
            ("estimator_gap_z", z, None),
        ],
        density: None,
    })
}

/// Dispatch an experiment config to its runner. The analytic table is not
/// a replicated experiment; emit it with [`write_analytic_table`].
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
    match cfg.kind {
        ExperimentKind::Lln => run_lln(cfg),
        ExperimentKind::TotalLaw => run_total_law(cfg),
        ExperimentKind::DltDensity => run_dlt_density(cfg),
        ExperimentKind::Dickman => run_dickman(cfg),
        ExperimentKind::Boundary => run_boundary(cfg),
        ExperimentKind::CltRegion => run_clt_region(cfg),
        ExperimentKind::Coupling => run_coupling(cfg),
        ExperimentKind::AnalyticTable => {
            config_err("analytic_table is emitted directly, not run as replicates")
        }
    }
}

fn header_line(cfg: &ExperimentConfig) -> String {
    format!(
        "# {}",
        serde_json::to_string(cfg).expect("config serializes")
    )
}

/// Closed-form table with the standard config echo, for the CLI.
pub fn write_analytic_table<W: std::io::Write>(
    w: &mut W,
    cfg: &ExperimentConfig,
) -> Result<(), LabError> {
    cfg.validate()?;
    writeln!(w, "{}", header_line(cfg))?;
    analytic::write_table(w, &analytic::table())?;
    Ok(())
}

/// The `summary.csv` content for a result: config echo, `stat,value,std_err`
/// header, the standard statistic rows, then experiment-specific rows.
pub fn summary_csv(result: &ExperimentResult) -> String {
    let mut summary = String::new();
    summary.push_str(&header_line(&result.config));
    summary.push_str("\nstat,value,std_err\n");
    let mut rows = result.stats.rows();
    rows.extend(result.extra.iter().cloned());
    for (name, value, se) in rows {
        let se_col = se.map(sig17).unwrap_or_default();
        summary.push_str(&format!("{},{},{}\n", name, sig17(value), se_col));
    }
    summary
}

/// Write `samples.csv`, `summary.csv`, and (when present) `density.csv`
/// into the directory `path`, creating it if needed. Every file starts
/// with the JSON config echo.
pub fn emit(result: &ExperimentResult, path: &Path) -> Result<(), LabError> {
    fs::create_dir_all(path)?;
    let header = header_line(&result.config);

    let mut samples = String::new();
    samples.push_str(&header);
    samples.push_str("\nreplicate,value\n");
    for (r, v) in result.samples.iter().enumerate() {
        samples.push_str(&format!("{},{}\n", r, sig17(*v)));
    }
    fs::write(path.join("samples.csv"), samples)?;

    fs::write(path.join("summary.csv"), summary_csv(result))?;

    if let Some(density) = &result.density {
        let mut out = String::new();
        out.push_str(&header);
        out.push_str("\nx,density\n");
        for &(x, d) in &density.grid {
            out.push_str(&format!("{},{}\n", sig17(x), sig17(d)));
        }
        fs::write(path.join("density.csv"), out)?;
    }
    Ok(())
}
