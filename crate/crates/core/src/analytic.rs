//! Exact moments, limit constants, and the fixed-point moment recursion.
//!
//! Everything here is deterministic numerics: log-gamma based closed forms,
//! an adaptive Gauss-Legendre quadrature engine, and the recursion that
//! pins the central moments of the centred linear-tree limit. Closed forms
//! and quadrature double-check each other in the tests.

use std::collections::HashMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::format::sig17;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error("{quantity} requires {requirement}, got {got}")]
    Domain {
        quantity: &'static str,
        requirement: &'static str,
        got: f64,
    },
}

fn domain(quantity: &'static str, requirement: &'static str, got: f64) -> AnalyticError {
    AnalyticError::Domain {
        quantity,
        requirement,
        got,
    }
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// Stirling-series tail coefficients: the `z^{-(2n-1)}` terms of the
/// asymptotic expansion of `ln Gamma`. Truncated after `z^-15`; at the
/// shift threshold below the first omitted term is under 1e-18.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Arguments below this are shifted upward by the recurrence before the
/// Stirling series is applied.
const STIRLING_MIN: f64 = 13.0;

/// `ln Gamma(x)` for `x > 0`, accurate to a few ulp: upward recurrence onto
/// `x >= 13`, then the Stirling series.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma needs x > 0, got {x}");
    let mut shift = 0.0;
    let mut z = x;
    while z < STIRLING_MIN {
        shift += z.ln();
        z += 1.0;
    }
    let inv2 = (1.0 / z) * (1.0 / z);
    let mut tail = 0.0;
    for &c in STIRLING.iter().rev() {
        tail = tail * inv2 + c;
    }
    tail /= z;
    (z - 0.5) * z.ln() - z + 0.5 * (std::f64::consts::TAU).ln() + tail - shift
}

/// `Gamma(a) / Gamma(b)` through the log, stable for arguments whose gammas
/// would overflow individually.
pub fn gamma_ratio(a: f64, b: f64) -> f64 {
    (ln_gamma(a) - ln_gamma(b)).exp()
}

/// `x * ln x` extended continuously by 0 at `x = 0`.
#[inline]
pub fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Legendre quadrature
// ---------------------------------------------------------------------------

/// 15-point Gauss-Legendre nodes on [0, 1] (node, weight). Exact for
/// polynomials up to degree 29 on a single panel.
const GL15: [(f64, f64); 15] = [
    (0.5, 0.202_578_241_925_561_27 * 0.5),
    (0.5 - 0.201_194_093_997_434_52 * 0.5, 0.198_431_485_327_111_58 * 0.5),
    (0.5 + 0.201_194_093_997_434_52 * 0.5, 0.198_431_485_327_111_58 * 0.5),
    (0.5 - 0.394_151_347_077_563_37 * 0.5, 0.186_161_000_015_562_21 * 0.5),
    (0.5 + 0.394_151_347_077_563_37 * 0.5, 0.186_161_000_015_562_21 * 0.5),
    (0.5 - 0.570_972_172_608_538_85 * 0.5, 0.166_269_205_816_993_93 * 0.5),
    (0.5 + 0.570_972_172_608_538_85 * 0.5, 0.166_269_205_816_993_93 * 0.5),
    (0.5 - 0.724_417_731_360_170_05 * 0.5, 0.139_570_677_926_154_31 * 0.5),
    (0.5 + 0.724_417_731_360_170_05 * 0.5, 0.139_570_677_926_154_31 * 0.5),
    (0.5 - 0.848_206_583_410_427_22 * 0.5, 0.107_159_220_467_171_93 * 0.5),
    (0.5 + 0.848_206_583_410_427_22 * 0.5, 0.107_159_220_467_171_93 * 0.5),
    (0.5 - 0.937_273_392_400_705_90 * 0.5, 0.070_366_047_488_108_12 * 0.5),
    (0.5 + 0.937_273_392_400_705_90 * 0.5, 0.070_366_047_488_108_12 * 0.5),
    (0.5 - 0.987_992_518_020_485_43 * 0.5, 0.030_753_241_996_117_27 * 0.5),
    (0.5 + 0.987_992_518_020_485_43 * 0.5, 0.030_753_241_996_117_27 * 0.5),
];

/// Quadrature result with a conservative error bound (the accumulated
/// panel-refinement discrepancies).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub err_estimate: f64,
}

fn gl15_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let h = b - a;
    GL15.iter().map(|&(x, w)| w * f(a + x * h)).sum::<f64>() * h
}

/// Adaptive composite Gauss-Legendre integration of `f` over `[a, b]`:
/// a panel is accepted when bisecting it moves the value by at most its
/// share of `tol`, otherwise it is split. Integrable endpoint behaviour
/// (e.g. `u ln u`) is handled by the bisection cascading toward the
/// endpoint; the nodes themselves never touch `a` or `b`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Quad {
    const MAX_DEPTH: u32 = 52;
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        out: &mut Quad,
    ) {
        let mid = 0.5 * (a + b);
        let left = gl15_panel(f, a, mid);
        let right = gl15_panel(f, mid, b);
        let refined = left + right;
        let diff = (refined - whole).abs();
        if diff <= tol || depth >= MAX_DEPTH || mid <= a || mid >= b {
            out.value += refined;
            out.err_estimate += diff;
        } else {
            recurse(f, a, mid, left, 0.5 * tol, depth + 1, out);
            recurse(f, mid, b, right, 0.5 * tol, depth + 1, out);
        }
    }
    let mut out = Quad {
        value: 0.0,
        err_estimate: 0.0,
    };
    recurse(f, a, b, gl15_panel(f, a, b), tol, 0, &mut out);
    out
}

/// Default absolute tolerance for the exact-constant work.
pub const QUAD_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Insertion-gap laws
// ---------------------------------------------------------------------------

/// CDF of the m-th insertion gap: `1 - (1 - t)^m` on `[0, 1]`.
pub fn zm_cdf(m: u64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        1.0 - (1.0 - t).powi(m as i32)
    }
}

/// `E[Z_m^beta] = Gamma(m+1) Gamma(1+beta) / Gamma(1+beta+m)`, computed in
/// log space so large `m` cannot overflow.
pub fn zm_moment(m: u64, beta: f64) -> Result<f64, AnalyticError> {
    if m == 0 {
        return Err(domain("zm_moment", "m >= 1", 0.0));
    }
    if !(beta > 0.0) {
        return Err(domain("zm_moment", "beta > 0", beta));
    }
    let m = m as f64;
    Ok((ln_gamma(m + 1.0) + ln_gamma(1.0 + beta) - ln_gamma(1.0 + beta + m)).exp())
}

/// Mean total weight of the rooted on-line linear tree on `m` arrivals with
/// gap exponent `alpha`. Equals the telescoped sum of the per-insertion gap
/// moments; the `alpha = 1` branch is the harmonic form of the same sum.
pub fn dlt_mean(m: u64, alpha: f64) -> Result<f64, AnalyticError> {
    if !(alpha > 0.0) {
        return Err(domain("dlt_mean", "alpha > 0", alpha));
    }
    if alpha == 1.0 {
        // Sum smallest-first for accuracy.
        let mut s = 0.0;
        for i in (1..=m).rev() {
            s += 1.0 / (i as f64 + 1.0);
        }
        return Ok(s);
    }
    let mf = m as f64;
    let ratio = (ln_gamma(1.0 + alpha) + ln_gamma(mf + 2.0) - ln_gamma(mf + 1.0 + alpha)).exp();
    Ok((1.0 - ratio) / (alpha - 1.0))
}

// ---------------------------------------------------------------------------
// Law-of-large-numbers and fixed-point constants
// ---------------------------------------------------------------------------

/// Limit of `n^{alpha/2 - 1} L^alpha` for the cone of opening `phi`:
/// `(2/phi)^{alpha/2} Gamma(1 + alpha/2)`, valid for `0 < alpha < 2` and
/// `phi` in `(0, pi]` or `2*pi`.
pub fn lln_limit(alpha: f64, phi: f64) -> Result<f64, AnalyticError> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(domain("lln_limit", "0 < alpha < 2", alpha));
    }
    let full = (phi - std::f64::consts::TAU).abs() <= 1e-12;
    if !full && !(phi > 0.0 && phi <= std::f64::consts::PI) {
        return Err(domain("lln_limit", "phi in (0, pi] or 2*pi", phi));
    }
    Ok((2.0 / phi).powf(0.5 * alpha) * ln_gamma(1.0 + 0.5 * alpha).exp())
}

/// `J(alpha) = Int_0^1 u^alpha (1-u)^alpha du = B(alpha+1, alpha+1)`.
pub fn j_alpha(alpha: f64) -> Result<f64, AnalyticError> {
    if !(alpha > 0.0) {
        return Err(domain("j_alpha", "alpha > 0", alpha));
    }
    Ok((2.0 * ln_gamma(alpha + 1.0) - ln_gamma(2.0 * alpha + 2.0)).exp())
}

/// Mean of the rooted total-weight fixed point: `1/(alpha - 1)`, `alpha > 1`.
pub fn d_alpha_mean(alpha: f64) -> Result<f64, AnalyticError> {
    if !(alpha > 1.0) {
        return Err(domain("d_alpha_mean", "alpha > 1", alpha));
    }
    Ok(1.0 / (alpha - 1.0))
}

/// Mean of the unrooted total-weight fixed point: `1/(alpha(alpha-1))`.
pub fn f_alpha_mean(alpha: f64) -> Result<f64, AnalyticError> {
    if !(alpha > 1.0) {
        return Err(domain("f_alpha_mean", "alpha > 1", alpha));
    }
    Ok(1.0 / (alpha * (alpha - 1.0)))
}

/// Variance of the rooted total-weight fixed point, `alpha > 1`:
/// `alpha (alpha - 2 + 2(2 alpha + 1) J(alpha)) / ((alpha-1)^2 (2 alpha - 1))`.
pub fn d_alpha_var(alpha: f64) -> Result<f64, AnalyticError> {
    if !(alpha > 1.0) {
        return Err(domain("d_alpha_var", "alpha > 1", alpha));
    }
    let j = j_alpha(alpha)?;
    let am1 = alpha - 1.0;
    Ok(alpha * (alpha - 2.0 + 2.0 * (2.0 * alpha + 1.0) * j) / (am1 * am1 * (2.0 * alpha - 1.0)))
}

/// Variance of the unrooted total-weight fixed point, `alpha > 1`.
pub fn f_alpha_var(alpha: f64) -> Result<f64, AnalyticError> {
    if !(alpha > 1.0) {
        return Err(domain("f_alpha_var", "alpha > 1", alpha));
    }
    let j = j_alpha(alpha)?;
    let am1 = alpha - 1.0;
    Ok(d_alpha_var(alpha)? / (2.0 * alpha)
        + (alpha + 2.0 * (2.0 * alpha + 1.0) * j - 2.0) / (2.0 * alpha * alpha * am1 * am1))
}

/// Variance of the centred rooted fixed point at exponent 1: `2 - pi^2/6`.
pub fn d1_variance() -> f64 {
    2.0 - std::f64::consts::PI * std::f64::consts::PI / 6.0
}

/// Covariance of the coupled centred rooted/unrooted limits at exponent 1:
/// `7/4 - pi^2/6`.
pub fn d1f1_covariance() -> f64 {
    1.75 - std::f64::consts::PI * std::f64::consts::PI / 6.0
}

/// First and second moments `(1/alpha, (alpha+2)/(2 alpha^2))` of the
/// generalized Dickman law with parameter `1/alpha`.
pub fn dickman_moments(alpha: f64) -> Result<(f64, f64), AnalyticError> {
    if !(alpha > 0.0) {
        return Err(domain("dickman_moments", "alpha > 0", alpha));
    }
    Ok((1.0 / alpha, (alpha + 2.0) / (2.0 * alpha * alpha)))
}

/// `Cov[Z_1^alpha, Z_2^alpha]`: zero at `alpha = 1`, positive above,
/// negative below.
pub fn cov_z1z2(alpha: f64) -> Result<f64, AnalyticError> {
    if !(alpha > 0.0) {
        return Err(domain("cov_z1z2", "alpha > 0", alpha));
    }
    let g2a3 = ln_gamma(2.0 * alpha + 3.0).exp();
    let ga2 = ln_gamma(alpha + 2.0).exp();
    let a1 = alpha + 1.0;
    let a2 = alpha + 2.0;
    Ok(((alpha - 2.0) * g2a3 + 2.0 * a2 * ga2 * ga2) / (2.0 * a1 * a1 * a2 * g2a3))
}

/// `H_k`: expected number of minimal points among `k` exchangeable arrivals
/// under the coordinatewise order.
pub fn expected_minimal(k: u64) -> f64 {
    let mut s = 0.0;
    for i in (1..=k).rev() {
        s += 1.0 / i as f64;
    }
    s
}

/// Large-`m` behaviour of the mean total weight of the unrooted on-line
/// linear forest, by exponent regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DlfMeanLimit {
    /// `alpha > 1`: the mean converges to this constant.
    Constant(f64),
    /// `alpha = 1`: the mean is `ln m` plus this offset, in the limit.
    LogOffset(f64),
    /// `alpha < 1`: the mean grows like `coefficient * m^exponent`.
    PowerLaw { exponent: f64, coefficient: f64 },
}

impl DlfMeanLimit {
    /// The regime's single number, for tabulation.
    pub fn value(&self) -> f64 {
        match *self {
            DlfMeanLimit::Constant(c) => c,
            DlfMeanLimit::LogOffset(c) => c,
            DlfMeanLimit::PowerLaw { coefficient, .. } => coefficient,
        }
    }
}

pub fn dlf_mean_limit(alpha: f64) -> Result<DlfMeanLimit, AnalyticError> {
    if !(alpha > 0.0) {
        return Err(domain("dlf_mean_limit", "alpha > 0", alpha));
    }
    Ok(if alpha > 1.0 {
        DlfMeanLimit::Constant(1.0 / (alpha * (alpha - 1.0)))
    } else if alpha == 1.0 {
        DlfMeanLimit::LogOffset(EULER_GAMMA - 2.0)
    } else {
        DlfMeanLimit::PowerLaw {
            exponent: 1.0 - alpha,
            coefficient: ln_gamma(alpha + 1.0).exp() / (1.0 - alpha),
        }
    })
}

// ---------------------------------------------------------------------------
// Central-moment recursion for the centred linear-tree limit
// ---------------------------------------------------------------------------

/// The inhomogeneous term of the exponent-1 centred fixed point:
/// `f(u) = u ln u + (1-u) ln(1-u) + u`. Integrates to zero.
pub fn d1_drift(u: f64) -> f64 {
    xlnx(u) + xlnx(1.0 - u) + u
}

/// Central moments `m_1 .. m_k_max` of the exponent-1 centred fixed point,
/// from the self-consistency of `X = U X' + (1-U) X'' + f(U)`:
/// raising to the k-th power, taking expectations, and solving for `m_k`
/// (which enters both sides; the diagonal coefficient is `1 - 2/(k+1)`).
/// All expectations over `U` are evaluated by quadrature at tolerance
/// `1e-12`; `m_1` is the integral of `f`, i.e. zero up to quadrature error.
pub fn d1_moment_recursion(k_max: usize) -> Vec<f64> {
    let mut cache: HashMap<(u32, u32, u32), f64> = HashMap::new();
    // E[f(U)^c U^a (1-U)^b]
    let mut iexp = |c: u32, a: u32, b: u32| -> f64 {
        *cache.entry((c, a, b)).or_insert_with(|| {
            integrate(
                &|u: f64| {
                    d1_drift(u).powi(c as i32)
                        * u.powi(a as i32)
                        * (1.0 - u).powi(b as i32)
                },
                0.0,
                1.0,
                QUAD_TOL,
            )
            .value
        })
    };
    let choose = |n: usize, r: usize| -> f64 {
        let mut v = 1.0;
        for t in 0..r {
            v = v * (n - t) as f64 / (t + 1) as f64;
        }
        v
    };
    let mut m = vec![0.0; k_max + 1];
    m[0] = 1.0;
    if k_max == 0 {
        return Vec::new();
    }
    m[1] = iexp(1, 0, 0);
    for k in 2..=k_max {
        let mut rhs = iexp(k as u32, 0, 0);
        for i in 1..=k {
            for j in 0..=i {
                if i == k && (j == 0 || j == k) {
                    continue; // the m_k terms, moved to the left-hand side
                }
                rhs += choose(k, i)
                    * choose(i, j)
                    * iexp((k - i) as u32, j as u32, (i - j) as u32)
                    * m[j]
                    * m[i - j];
            }
        }
        let diag = 1.0 - iexp(0, k as u32, 0) - iexp(0, 0, k as u32);
        m[k] = rhs / diag;
    }
    m.remove(0);
    m
}

// ---------------------------------------------------------------------------
// Moment table
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Quadrature,
}

impl Method {
    fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
        }
    }
}

/// One tabulated quantity. Parameter columns are `None` when the quantity
/// does not take that parameter.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub quantity: &'static str,
    pub alpha: Option<f64>,
    pub m: Option<u64>,
    pub phi: Option<f64>,
    pub k: Option<u64>,
    pub value: f64,
    pub method: Method,
    pub err_estimate: f64,
}

impl MomentReport {
    fn closed(quantity: &'static str, value: f64) -> Self {
        MomentReport {
            quantity,
            alpha: None,
            m: None,
            phi: None,
            k: None,
            value,
            method: Method::ClosedForm,
            err_estimate: 0.0,
        }
    }

    fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    fn with_m(mut self, m: u64) -> Self {
        self.m = Some(m);
        self
    }

    fn with_phi(mut self, phi: f64) -> Self {
        self.phi = Some(phi);
        self
    }

    fn with_k(mut self, k: u64) -> Self {
        self.k = Some(k);
        self
    }
}

/// The full catalog of exact quantities at representative parameters.
pub fn table() -> Vec<MomentReport> {
    use std::f64::consts::{FRAC_PI_2, PI, TAU};
    let mut rows = Vec::new();
    for &m in &[1u64, 2, 5] {
        for &a in &[0.5, 1.0, 2.0] {
            rows.push(
                MomentReport::closed("zm_moment", zm_moment(m, a).unwrap())
                    .with_m(m)
                    .with_alpha(a),
            );
        }
    }
    for &m in &[2u64, 1000] {
        for &a in &[0.5, 1.0, 1.5, 2.0] {
            rows.push(
                MomentReport::closed("dlt_mean", dlt_mean(m, a).unwrap())
                    .with_m(m)
                    .with_alpha(a),
            );
        }
    }
    for &a in &[0.5, 1.0, 1.5] {
        for &phi in &[FRAC_PI_2, PI, TAU] {
            rows.push(
                MomentReport::closed("lln_limit", lln_limit(a, phi).unwrap())
                    .with_alpha(a)
                    .with_phi(phi),
            );
        }
    }
    for &a in &[1.0, 2.0, 3.0] {
        rows.push(MomentReport::closed("j_alpha", j_alpha(a).unwrap()).with_alpha(a));
    }
    for &a in &[1.5, 2.0, 3.0] {
        rows.push(MomentReport::closed("d_alpha_mean", d_alpha_mean(a).unwrap()).with_alpha(a));
        rows.push(MomentReport::closed("d_alpha_var", d_alpha_var(a).unwrap()).with_alpha(a));
        rows.push(MomentReport::closed("f_alpha_mean", f_alpha_mean(a).unwrap()).with_alpha(a));
        rows.push(MomentReport::closed("f_alpha_var", f_alpha_var(a).unwrap()).with_alpha(a));
    }
    rows.push(MomentReport::closed("d1_variance", d1_variance()));
    rows.push(MomentReport::closed("d1f1_covariance", d1f1_covariance()));
    for &a in &[0.5, 1.0, 2.0] {
        let (mean, second) = dickman_moments(a).unwrap();
        rows.push(MomentReport::closed("dickman_mean", mean).with_alpha(a));
        rows.push(MomentReport::closed("dickman_second_moment", second).with_alpha(a));
    }
    let k_max = 4;
    let moments = d1_moment_recursion(k_max);
    for k in 2..=k_max {
        let mut r = MomentReport::closed("d1_central_moment", moments[k - 1]).with_k(k as u64);
        r.method = Method::Quadrature;
        r.err_estimate = QUAD_TOL;
        rows.push(r);
    }
    for &a in &[0.5, 1.0, 2.0] {
        rows.push(MomentReport::closed("cov_z1z2", cov_z1z2(a).unwrap()).with_alpha(a));
    }
    for &k in &[1u64, 2, 3, 10, 100] {
        rows.push(MomentReport::closed("expected_minimal", expected_minimal(k)).with_k(k));
    }
    for &a in &[0.5, 1.0, 2.0] {
        let lim = dlf_mean_limit(a).unwrap();
        let name = match lim {
            DlfMeanLimit::Constant(_) => "dlf_mean_limit",
            DlfMeanLimit::LogOffset(_) => "dlf_mean_log_offset",
            DlfMeanLimit::PowerLaw { .. } => "dlf_mean_power_coeff",
        };
        rows.push(MomentReport::closed(name, lim.value()).with_alpha(a));
    }
    rows
}

/// Write the table as CSV (header plus rows; no leading echo line).
pub fn write_table<W: Write>(w: &mut W, rows: &[MomentReport]) -> io::Result<()> {
    writeln!(w, "quantity,alpha,m,phi,k,value,method,err_estimate")?;
    let opt_f = |v: Option<f64>| v.map(sig17).unwrap_or_default();
    let opt_u = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.quantity,
            opt_f(r.alpha),
            opt_u(r.m),
            opt_f(r.phi),
            opt_u(r.k),
            sig17(r.value),
            r.method.as_str(),
            sig17(r.err_estimate),
        )?;
    }
    Ok(())
}
