//! Release gate: twelve checks covering the closed forms, the recursive
//! samplers, both forest builders, and the experiment harness end to end.
//! Each check prints one pass/fail line directly to the terminal (bypassing
//! test capture) and the test fails if any criterion fails.

use std::io::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use mdsf_core::analytic::{
    cov_z1z2, d1_moment_recursion, d1_variance, d1f1_covariance, d_alpha_mean, d_alpha_var,
    dickman_moments, dlt_mean, expected_minimal, f_alpha_mean, f_alpha_var, j_alpha, lln_limit,
    zm_moment,
};
use mdsf_core::dlt::{build_dlf, increments};
use mdsf_core::fixedpoint::{
    sample_d, sample_d1_centred, sample_dickman, sample_f, TruncationPolicy,
};
use mdsf_core::lab::{
    emit, run, run_boundary, run_clt_region, run_coupling, run_lln, run_total_law, summary_csv,
    write_analytic_table, ExperimentConfig, ExperimentKind, ExperimentResult, ProcessKind,
};
use mdsf_core::mdsf::{build_forest, build_forest_naive};
use mdsf_core::pointproc::{binomial_process, uniform_sequence};
use mdsf_core::{ConeOrder, Point, SeedSpec};

use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Write straight to the process stdout so the line shows even when the
/// harness captures test output.
fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

#[derive(Default)]
struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn report(&mut self, idx: usize, name: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        say(&format!("[{tag}] criterion {idx:2} ({name}): {detail}"));
        if !pass {
            self.failures.push(format!("{idx} ({name}): {detail}"));
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn central_moment(xs: &[f64], k: i32) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(k)).sum::<f64>() / xs.len() as f64
}

/// Sample covariance and the standard error of that estimate (the spread
/// of the centred cross products over sqrt(n)).
fn cov_with_se(xy: &[(f64, f64)]) -> (f64, f64) {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let prods: Vec<f64> = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).collect();
    let c = prods.iter().sum::<f64>() / (n - 1.0);
    let spread = prods.iter().map(|w| (w - c) * (w - c)).sum::<f64>() / n;
    (c, (spread / n).sqrt())
}

fn extra_value(result: &ExperimentResult, name: &str) -> f64 {
    result
        .extra
        .iter()
        .find(|&&(n, _, _)| n == name)
        .unwrap_or_else(|| panic!("extra row {name} missing"))
        .1
}

fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

fn secs(t: Instant) -> String {
    format!("{:.1}s", t.elapsed().as_secs_f64())
}

// Closed forms the analytic module must reproduce, frozen as decimal
// literals so every comparison crosses an independent route.
const VAR_D1: f64 = 0.35506593315177356; // 2 - pi^2/6
const COV_D1F1: f64 = 0.10506593315177356; // 7/4 - pi^2/6
const THIRD_MOMENT_D1: f64 = 0.15411;
const BOUNDARY_VAR_AT_1E5: f64 = 0.7101;

fn criterion_1(gate: &mut Gate) {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_name = "";
    let mut chk = |name: &'static str, got: f64, want: f64| {
        let rel = rel_err(got, want);
        if rel > worst {
            worst = rel;
            worst_name = name;
        }
    };
    chk("zm_moment(1,1)", zm_moment(1, 1.0).unwrap(), 0.5);
    chk(
        "Var[Z_2]",
        zm_moment(2, 2.0).unwrap() - zm_moment(2, 1.0).unwrap().powi(2),
        1.0 / 18.0,
    );
    chk("dlt_mean(2,1)", dlt_mean(2, 1.0).unwrap(), 5.0 / 6.0);
    chk("j_alpha(2)", j_alpha(2.0).unwrap(), 1.0 / 30.0);
    chk("d_alpha_mean(2)", d_alpha_mean(2.0).unwrap(), 1.0);
    chk("d_alpha_var(2)", d_alpha_var(2.0).unwrap(), 2.0 / 9.0);
    chk("f_alpha_mean(2)", f_alpha_mean(2.0).unwrap(), 0.5);
    chk("f_alpha_var(2)", f_alpha_var(2.0).unwrap(), 7.0 / 72.0);
    chk("d1_variance", d1_variance(), VAR_D1);
    chk("d1f1_covariance", d1f1_covariance(), COV_D1F1);
    chk("lln_limit(1,pi/2)", lln_limit(1.0, FRAC_PI_2).unwrap(), 1.0);
    chk("lln_limit(1,2pi)", lln_limit(1.0, TAU).unwrap(), 0.5);
    let (dm1, dm2) = dickman_moments(1.0).unwrap();
    chk("dickman mean", dm1, 1.0);
    chk("dickman 2nd moment", dm2, 1.5);
    chk("expected_minimal(3)", expected_minimal(3), 11.0 / 6.0);
    gate.report(
        1,
        "closed-form constants",
        worst <= 1e-10,
        format!("max rel err {worst:.2e} at {worst_name} [{}]", secs(t)),
    );
}

fn criterion_2(gate: &mut Gate) {
    let t = Instant::now();
    let ms = d1_moment_recursion(3);
    let e2 = (ms[1] - d1_variance()).abs();
    let e3 = (ms[2] - THIRD_MOMENT_D1).abs();
    let pass = ms[0].abs() < 1e-12 && e2 <= 1e-8 && e3 <= 5e-5;
    gate.report(
        2,
        "moment recursion",
        pass,
        format!(
            "m1 {:.2e}, m2 err {e2:.2e}, m3 {:.6} (err {e3:.2e}) [{}]",
            ms[0],
            ms[2],
            secs(t)
        ),
    );
}

fn criterion_3(gate: &mut Gate) {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut at = String::new();
    for &m in &[1u64, 10, 1_000, 10_000] {
        for &alpha in &[0.5, 1.0, 1.5, 2.0] {
            let direct = dlt_mean(m, alpha).unwrap();
            // Ascending magnitude: the late gaps are the small terms.
            let sum: f64 = (1..=m).rev().map(|i| zm_moment(i, alpha).unwrap()).sum();
            let rel = (direct - sum).abs() / direct.abs().max(1.0);
            if rel > worst {
                worst = rel;
                at = format!("m={m} alpha={alpha}");
            }
        }
    }
    gate.report(
        3,
        "mean telescoping",
        worst <= 1e-10,
        format!("max rel err {worst:.2e} at {at} [{}]", secs(t)),
    );
}

fn criterion_4(gate: &mut Gate) {
    let t = Instant::now();
    const DRAWS: u64 = 50_000;
    let pairs: Vec<(f64, f64)> = (0..DRAWS)
        .into_par_iter()
        .map(|i| sample_d1_centred(2_000, &SeedSpec::new(0xACC4, i)))
        .collect();
    let (ds, fs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let var_d = variance(&ds);
    let md = mean(&ds);
    let mf = mean(&fs);
    let cov: f64 = ds
        .iter()
        .zip(&fs)
        .map(|(a, b)| (a - md) * (b - mf))
        .sum::<f64>()
        / (DRAWS as f64 - 1.0);
    let m3 = central_moment(&ds, 3);

    const FIG_DRAWS: u64 = 200_000;
    let fig: Vec<f64> = (0..FIG_DRAWS)
        .into_par_iter()
        .map(|i| sample_d1_centred(1_000, &SeedSpec::new(0xACC4 + 1, i)).0)
        .collect();
    let fig_var = variance(&fig);

    let e_var = rel_err(var_d, d1_variance());
    let e_cov = rel_err(cov, d1f1_covariance());
    let e_m3 = rel_err(m3, THIRD_MOMENT_D1);
    let fig_ok = (0.350..=0.359).contains(&fig_var);
    let pass = e_var <= 0.02 && e_cov <= 0.05 && e_m3 <= 0.15 && fig_ok;
    gate.report(
        4,
        "linear-tree limit moments",
        pass,
        format!(
            "var {var_d:.5} (rel {e_var:.4}), cov {cov:.5} (rel {e_cov:.4}), m3 {m3:.5} (rel {e_m3:.4}), var@m=1000 {fig_var:.4} [{}]",
            secs(t)
        ),
    );
}

fn criterion_5(gate: &mut Gate) {
    let t = Instant::now();
    const DRAWS: u64 = 1_000_000;
    // Looser coefficient floor than the default: the substitution keeps the
    // mean exactly unbiased and perturbs the variance far below these bands,
    // while cutting the node count per draw by two orders of magnitude.
    let policy = TruncationPolicy {
        coefficient_floor: 1e-6,
        ..TruncationPolicy::default()
    };
    let d: Vec<f64> = (0..DRAWS)
        .into_par_iter()
        .map(|i| sample_d(2.0, &SeedSpec::new(0xACC5, i), &policy).unwrap())
        .collect();
    let f: Vec<f64> = (0..DRAWS)
        .into_par_iter()
        .map(|i| sample_f(2.0, &SeedSpec::new(0xACC5 + 1, i), &policy).unwrap())
        .collect();
    let x: Vec<f64> = (0..DRAWS)
        .into_par_iter()
        .map(|i| sample_dickman(1.0, &SeedSpec::new(0xACC5 + 2, i)))
        .collect();
    let (dm, dv) = (mean(&d), variance(&d));
    let (fm, fv) = (mean(&f), variance(&f));
    let xm = mean(&x);
    let xm2 = x.iter().map(|v| v * v).sum::<f64>() / DRAWS as f64;
    let pass = rel_err(dm, 1.0) <= 0.01
        && rel_err(dv, 2.0 / 9.0) <= 0.03
        && rel_err(fm, 0.5) <= 0.01
        && rel_err(fv, 7.0 / 72.0) <= 0.03
        && rel_err(xm, 1.0) <= 0.01
        && rel_err(xm2, 1.5) <= 0.02;
    gate.report(
        5,
        "fixed-point samplers",
        pass,
        format!(
            "D: {dm:.4}/{dv:.4}, F: {fm:.4}/{fv:.4}, dickman: {xm:.4}/{xm2:.4} [{}]",
            secs(t)
        ),
    );
}

fn criterion_6(gate: &mut Gate) {
    let t = Instant::now();
    const SEQS: u64 = 1_000_000;
    let gaps = |m: usize, seed: u64, i: u64| -> Vec<f64> {
        let seq = uniform_sequence(m, &SeedSpec::new(seed, i), true);
        increments(&build_dlf(&seq).unwrap()).unwrap()
    };
    let z2z5: Vec<(f64, f64)> = (0..SEQS)
        .into_par_iter()
        .map(|i| {
            let g = gaps(5, 0xACC6, i);
            (g[1], g[4])
        })
        .collect();
    let sq: Vec<(f64, f64)> = (0..SEQS)
        .into_par_iter()
        .map(|i| {
            let g = gaps(2, 0xACC6 + 1, i);
            (g[0] * g[0], g[1] * g[1])
        })
        .collect();
    let rt: Vec<(f64, f64)> = (0..SEQS)
        .into_par_iter()
        .map(|i| {
            let g = gaps(2, 0xACC6 + 2, i);
            (g[0].sqrt(), g[1].sqrt())
        })
        .collect();
    let (c1, se1) = cov_with_se(&z2z5);
    let (c2, se2) = cov_with_se(&sq);
    let (c3, se3) = cov_with_se(&rt);
    let want2 = cov_z1z2(2.0).unwrap();
    let z3 = c3 / se3;
    let pass = c1.abs() <= 4.0 * se1 && (c2 - want2).abs() <= 4.0 * se2 && c3 < 0.0 && z3 < -3.0;
    gate.report(
        6,
        "increment orthogonality",
        pass,
        format!(
            "cov(Z2,Z5) {c1:.2e} ({:+.1} se), cov(Z1^2,Z2^2) err {:.2e} ({:+.1} se), sqrt-cov z {z3:+.1} [{}]",
            c1 / se1,
            c2 - want2,
            (c2 - want2) / se2,
            secs(t)
        ),
    );
}

fn criterion_7(gate: &mut Gate) {
    let t = Instant::now();
    // For alpha > 1 the two boundary strips carry an O(1) weight that the
    // n^(alpha/2-1) scaling suppresses only like n^(1/2-alpha/2), so the
    // alpha=3/2 case needs a much larger sample before the limit shows:
    // at n=5e4 the excess is ~11% of the target no matter how many
    // replicates are averaged.
    let cases = [
        (1.0, FRAC_PI_2, FRAC_PI_2, 0.03, 50_000u64, 20u64),
        (1.0, FRAC_PI_2, PI, 0.03, 50_000, 20),
        (1.0, 0.0, TAU, 0.03, 50_000, 20),
        (0.5, FRAC_PI_2, FRAC_PI_2, 0.05, 50_000, 20),
        (1.5, FRAC_PI_2, FRAC_PI_2, 0.05, 20_000_000, 6),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (alpha, theta, phi, tol, n, reps) in cases {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Lln);
        cfg.n = n;
        cfg.reps = reps;
        cfg.alpha = alpha;
        cfg.theta = theta;
        cfg.phi = phi;
        cfg.base_seed = 0xACC7;
        let res = run_lln(&cfg).unwrap();
        let target = extra_value(&res, "target");
        let rel = rel_err(res.stats.mean, target);
        pass &= rel <= tol;
        detail.push_str(&format!("a={alpha} phi={phi:.2}: rel {rel:.4}; "));
    }
    gate.report(
        7,
        "weight law of large numbers",
        pass,
        format!("{detail}[{}]", secs(t)),
    );
}

fn criterion_8(gate: &mut Gate) {
    let t = Instant::now();
    let orders = [
        ConeOrder::coordinatewise(),
        ConeOrder::full(),
        ConeOrder::new(0.3, 2.2).unwrap(),
        ConeOrder::new(5.1, PI).unwrap(),
    ];
    let mut mismatches = 0usize;
    for inst in 0..500u64 {
        let order = orders[(inst % 4) as usize];
        let rooted = (inst / 4) % 2 == 1;
        let n = 1 + ((inst * 37) % 200) as usize;
        let mut pts = binomial_process(n, &SeedSpec::new(0xACC8, inst)).points;
        if rooted {
            pts.insert(0, Point::ORIGIN);
        }
        let fast = build_forest(pts.clone(), rooted, order).unwrap();
        let slow = build_forest_naive(pts, rooted, order).unwrap();
        if fast != slow {
            mismatches += 1;
        }
    }
    gate.report(
        8,
        "grid/naive equivalence",
        mismatches == 0,
        format!("{mismatches} mismatches in 500 instances [{}]", secs(t)),
    );
}

fn criterion_9(gate: &mut Gate) {
    let t = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for &alpha in &[1.0, 2.0] {
        let mut prev = f64::INFINITY;
        for &n in &[10_000u64, 1_000_000] {
            let mut cfg = ExperimentConfig::new(ExperimentKind::Coupling);
            cfg.n = n;
            cfg.alpha = alpha;
            cfg.reps = 256;
            cfg.base_seed = 0xACC9;
            let res = run_coupling(&cfg).unwrap();
            let violations = extra_value(&res, "violations");
            pass &= violations == 0.0 && res.stats.mean < prev;
            detail.push_str(&format!("a={alpha} n={n}: gap {:.4}; ", res.stats.mean));
            prev = res.stats.mean;
        }
    }
    gate.report(9, "strip coupling bounds", pass, format!("{detail}[{}]", secs(t)));
}

fn criterion_10(gate: &mut Gate) {
    let t = Instant::now();
    let mut cfg = ExperimentConfig::new(ExperimentKind::TotalLaw);
    cfg.alpha = 2.0;
    cfg.n = 100_000;
    cfg.reps = 2_000;
    cfg.process = ProcessKind::Poisson;
    cfg.base_seed = 0xACCA;
    let unrooted_var = run_total_law(&cfg).unwrap().stats.variance;
    cfg.rooted = true;
    let rooted_var = run_total_law(&cfg).unwrap().stats.variance;

    let mut bcfg = ExperimentConfig::new(ExperimentKind::Boundary);
    bcfg.alpha = 1.0;
    bcfg.n = 100_000;
    bcfg.reps = 2_000;
    bcfg.process = ProcessKind::Poisson;
    bcfg.base_seed = 0xACCA + 1;
    let boundary_var = run_boundary(&bcfg).unwrap().stats.variance;

    let e_u = rel_err(unrooted_var, 7.0 / 36.0);
    let e_r = rel_err(rooted_var, 4.0 / 9.0);
    let e_b = rel_err(boundary_var, BOUNDARY_VAR_AT_1E5);
    let pass = e_u <= 0.15 && e_r <= 0.15 && e_b <= 0.10;
    gate.report(
        10,
        "fluctuation variances",
        pass,
        format!(
            "unrooted {unrooted_var:.4} (rel {e_u:.3}), rooted {rooted_var:.4} (rel {e_r:.3}), boundary {boundary_var:.4} (rel {e_b:.3}) [{}]",
            secs(t)
        ),
    );
}

fn criterion_11(gate: &mut Gate) {
    let t = Instant::now();
    let mk = |n: u64, process: ProcessKind| {
        let mut cfg = ExperimentConfig::new(ExperimentKind::CltRegion);
        cfg.alpha = 1.0;
        cfg.n = n;
        cfg.reps = 2_000;
        cfg.process = process;
        cfg.base_seed = 0xACCC;
        cfg
    };
    let pois_big = run_clt_region(&mk(80_000, ProcessKind::Poisson)).unwrap();
    let bin_big = run_clt_region(&mk(80_000, ProcessKind::Binomial)).unwrap();
    let pois_small = run_clt_region(&mk(20_000, ProcessKind::Poisson)).unwrap();

    let s2 = pois_big.stats.variance;
    let t2 = bin_big.stats.variance;
    let joint =
        (pois_big.stats.se_variance.powi(2) + bin_big.stats.se_variance.powi(2)).sqrt();
    let order_ok = t2 <= s2 + 3.0 * joint;
    let ratio = pois_small.stats.variance / s2;
    let ratio_ok = (0.85..=1.18).contains(&ratio);
    let skew = pois_big.stats.skewness;
    let skew_se = (6.0 / 2_000.0f64).sqrt();
    let skew_ok = skew.abs() <= 4.0 * skew_se;
    let pass = order_ok && ratio_ok && skew_ok;
    gate.report(
        11,
        "interior-region normality",
        pass,
        format!(
            "t^2 {t2:.4} vs s^2 {s2:.4} (+3se {:.4}), ratio {ratio:.3}, skew {skew:+.3} ({:+.1} se) [{}]",
            s2 + 3.0 * joint,
            skew / skew_se,
            secs(t)
        ),
    );
}

fn criterion_12(gate: &mut Gate) {
    let t = Instant::now();
    let mut cfg = ExperimentConfig::new(ExperimentKind::DltDensity);
    cfg.m = 80;
    cfg.reps = 60;
    cfg.kde_bandwidth = 0.01;
    cfg.base_seed = 0xACCD;
    let r1 = run(&cfg).unwrap();
    let r2 = run(&cfg).unwrap();
    let summary_same = summary_csv(&r1) == summary_csv(&r2);
    let bits_same = r1.samples.len() == r2.samples.len()
        && r1
            .samples
            .iter()
            .zip(&r2.samples)
            .all(|(a, b)| a.to_bits() == b.to_bits());

    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a"), dir.path().join("b"));
    emit(&r1, &pa).unwrap();
    emit(&r2, &pb).unwrap();
    let files_same = ["samples.csv", "summary.csv", "density.csv"].iter().all(|name| {
        std::fs::read(pa.join(name)).unwrap() == std::fs::read(pb.join(name)).unwrap()
    });

    let tcfg = ExperimentConfig::new(ExperimentKind::AnalyticTable);
    let (mut t1, mut t2) = (Vec::new(), Vec::new());
    write_analytic_table(&mut t1, &tcfg).unwrap();
    write_analytic_table(&mut t2, &tcfg).unwrap();
    let table_same = !t1.is_empty() && t1 == t2;

    let pass = summary_same && bits_same && files_same && table_same;
    gate.report(
        12,
        "bit-identical reruns",
        pass,
        format!(
            "summary {summary_same}, samples {bits_same}, files {files_same}, table {table_same} [{}]",
            secs(t)
        ),
    );
}

#[test]
fn acceptance_criteria() {
    let mut gate = Gate::default();
    criterion_1(&mut gate);
    criterion_2(&mut gate);
    criterion_3(&mut gate);
    criterion_4(&mut gate);
    criterion_5(&mut gate);
    criterion_6(&mut gate);
    criterion_7(&mut gate);
    criterion_8(&mut gate);
    criterion_9(&mut gate);
    criterion_10(&mut gate);
    criterion_11(&mut gate);
    criterion_12(&mut gate);
    assert!(
        gate.failures.is_empty(),
        "failed acceptance criteria:\n{}",
        gate.failures.join("\n")
    );
}
