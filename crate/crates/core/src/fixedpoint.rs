//! Direct samplers for the limit distributions, and the one-step
//! fixed-point maps they solve.
//!
//! `D` and `F` (for weight exponent `alpha > 1`) are sampled by expanding
//! their recursive trees breadth-agnostically with an explicit work stack;
//! a subtree whose multiplicative coefficient has fallen below the policy
//! floor is replaced by its exact mean, which leaves the sampler mean
//! exactly unbiased. Every node draws its uniform by hashing (draw key,
//! node position), so shrinking the floor refines a tree in place instead
//! of resampling it — truncation error can be measured pathwise.
//!
//! The centred limit at `alpha = 1` has no such tree with summable drift,
//! so its canonical sampler builds one rooted on-line linear tree and
//! centres the exact finite-size mean.

use rand::Rng;
use thiserror::Error;

use crate::analytic::{d_alpha_mean, dlt_mean, f_alpha_mean, xlnx};
use crate::dlt::{build_dlf, dlf_weight, root_edge_weight};
use crate::geometry::pow_weight;
use crate::pointproc::{mix64, uniform_sequence, SeedSpec};

#[derive(Debug, Error, PartialEq)]
pub enum FixedPointError {
    #[error("alpha must exceed 1, got {0}")]
    AlphaNotAboveOne(f64),
    #[error("policy requires a positive finite coefficient floor below 1 and max_depth <= 60")]
    InvalidPolicy,
}

/// Controls where the recursive expansion stops. Once a subtree's
/// multiplicative coefficient drops below `coefficient_floor` (or its
/// depth exceeds `max_depth`), the subtree is replaced by coefficient
/// times the exact subtree mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub coefficient_floor: f64,
    pub max_depth: u32,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            coefficient_floor: 1e-10,
            max_depth: 60,
        }
    }
}

/// Node positions are encoded as heap paths `(1 << depth) | path`, so the
/// depth cap keeps ids inside 64 bits.
const MAX_SUPPORTED_DEPTH: u32 = 60;

/// Terms of the Dickman series smaller than this are dropped; the residual
/// mean bias is at most `cutoff / alpha` by the geometric tail bound.
const DICKMAN_TERM_CUTOFF: f64 = 1e-12;

fn validate(alpha: f64, policy: &TruncationPolicy) -> Result<(), FixedPointError> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(FixedPointError::AlphaNotAboveOne(alpha));
    }
    let floor_ok = policy.coefficient_floor > 0.0
        && policy.coefficient_floor < 1.0
        && policy.coefficient_floor.is_finite();
    if !floor_ok || policy.max_depth > MAX_SUPPORTED_DEPTH {
        return Err(FixedPointError::InvalidPolicy);
    }
    Ok(())
}

const INV_2_53: f64 = 1.0 / 9_007_199_254_740_992.0;

/// Uniform on (0, 1] addressed by (draw key, node position): the same node
/// sees the same uniform no matter in which order, or how deep, the tree
/// around it is expanded.
#[inline]
fn node_uniform(key: u64, id: u64) -> f64 {
    let h = mix64(key.wrapping_add(id.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    1.0 - (h >> 11) as f64 * INV_2_53
}

#[derive(Clone, Copy)]
enum NodeKind {
    /// Contributes `coef * u^alpha` drift and recurses into two copies.
    D,
    /// No drift; left child continues the chain, right child starts a
    /// `D` tree.
    F,
}

fn walk(alpha: f64, key: u64, policy: &TruncationPolicy, root: NodeKind) -> f64 {
    let d_mean = d_alpha_mean(alpha).expect("alpha validated");
    let f_mean = f_alpha_mean(alpha).expect("alpha validated");
    let floor = policy.coefficient_floor;
    let mut total = 0.0;
    let mut stack: Vec<(u64, f64, NodeKind)> = vec![(1, 1.0, root)];
    while let Some((id, coef, kind)) = stack.pop() {
        let u = node_uniform(key, id);
        let cu = coef * pow_weight(u, alpha);
        let cv = coef * pow_weight(1.0 - u, alpha);
        let child_depth = 64 - id.leading_zeros();
        let deep = child_depth > policy.max_depth;
        match kind {
            NodeKind::D => {
                total += cu;
                for (ccoef, cid) in [(cu, id << 1), (cv, (id << 1) | 1)] {
                    if ccoef < floor || deep {
                        total += ccoef * d_mean;
                    } else {
                        stack.push((cid, ccoef, NodeKind::D));
                    }
                }
            }
            NodeKind::F => {
                if cu < floor || deep {
                    total += cu * f_mean;
                } else {
                    stack.push((id << 1, cu, NodeKind::F));
                }
                if cv < floor || deep {
                    total += cv * d_mean;
                } else {
                    stack.push(((id << 1) | 1, cv, NodeKind::D));
                }
            }
        }
    }
    total
}

/// One draw of the fixed point `D = U^a D' + (1-U)^a D'' + U^a`.
pub fn sample_d(
    alpha: f64,
    seed: &SeedSpec,
    policy: &TruncationPolicy,
) -> Result<f64, FixedPointError> {
    validate(alpha, policy)?;
    Ok(walk(alpha, seed.key(), policy, NodeKind::D))
}

/// One draw of the fixed point `F = U^a F' + (1-U)^a D`: the chain of
/// `U^a` coefficients, each link feeding an independent `D` subtree.
pub fn sample_f(
    alpha: f64,
    seed: &SeedSpec,
    policy: &TruncationPolicy,
) -> Result<f64, FixedPointError> {
    validate(alpha, policy)?;
    Ok(walk(alpha, seed.key(), policy, NodeKind::F))
}

fn dickman_with_rng<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    let mut term = 1.0;
    let mut total = 0.0;
    loop {
        let u = 1.0 - rng.random::<f64>();
        term *= pow_weight(u, alpha);
        total += term;
        if term < DICKMAN_TERM_CUTOFF {
            return total;
        }
    }
}

/// One draw of the generalized Dickman distribution with parameter
/// `1/alpha`, as the almost-surely convergent series
/// `U1^a + (U1 U2)^a + ...`.
pub fn sample_dickman(alpha: f64, seed: &SeedSpec) -> f64 {
    debug_assert!(alpha > 0.0);
    dickman_with_rng(alpha, &mut seed.rng())
}

/// Exact mean of the root-incident weight of a rooted linear tree on `m`
/// uniform arrivals at unit exponent: arrival `i` is a lower record with
/// probability `1/i`, and the record's mean value is `1/(i+1)`, so the
/// mean telescopes to `m/(m+1)`.
pub fn root_weight_mean(m: u64) -> f64 {
    m as f64 / (m as f64 + 1.0)
}

/// One coupled draw of the centred total weight at exponent 1, as
/// `(d_tilde, f_tilde)`: one rooted linear tree on `m` uniforms gives the
/// rooted total and, minus its root-incident edges, the unrooted total;
/// both are centred by their exact finite-`m` means.
pub fn sample_d1_centred(m: u64, seed: &SeedSpec) -> (f64, f64) {
    let seq = uniform_sequence(m as usize, seed, true);
    let forest = build_dlf(&seq).expect("distinct uniforms");
    let rooted_total = dlf_weight(&forest, 1.0);
    let root_part = root_edge_weight(&forest, 1.0).expect("rooted build");
    let rooted_mean = dlt_mean(m, 1.0).expect("unit exponent");
    let d_tilde = rooted_total - rooted_mean;
    let f_tilde = (rooted_total - root_part) - (rooted_mean - root_weight_mean(m));
    (d_tilde, f_tilde)
}

/// One step of the centred fixed-point map at exponent 1:
/// `u x1 + (1-u) x2 + u ln u + (1-u) ln(1-u) + u`.
pub fn apply_d1_map(x1: f64, x2: f64, u: f64) -> f64 {
    u * x1 + (1.0 - u) * x2 + d1_drift(u)
}

/// Drift of the exponent-1 map; integrates to 0 over `u`.
pub fn d1_drift(u: f64) -> f64 {
    xlnx(u) + xlnx(1.0 - u) + u
}

/// Drift of the centred `D` map; vanishes in mean and equals 1 at `u = 1`.
pub fn d_alpha_drift(u: f64, alpha: f64) -> f64 {
    let a1 = alpha - 1.0;
    (alpha / a1) * pow_weight(u, alpha) + pow_weight(1.0 - u, alpha) / a1 - 1.0 / a1
}

/// Drift of the centred `F` map.
pub fn f_alpha_drift(u: f64, alpha: f64) -> f64 {
    let a1 = alpha - 1.0;
    pow_weight(u, alpha) / (alpha * a1) + pow_weight(1.0 - u, alpha) / a1 - 1.0 / (alpha * a1)
}

/// One step of the centred `D` fixed-point map for `alpha > 1`.
pub fn apply_d_alpha_map(x1: f64, x2: f64, u: f64, alpha: f64) -> Result<f64, FixedPointError> {
    validate(alpha, &TruncationPolicy::default())?;
    Ok(pow_weight(u, alpha) * x1 + pow_weight(1.0 - u, alpha) * x2 + d_alpha_drift(u, alpha))
}

/// One step of the centred `F` fixed-point map for `alpha > 1`; `xf`
/// enters with coefficient `u^alpha`, `xd` with `(1-u)^alpha`.
pub fn apply_f_alpha_map(xf: f64, xd: f64, u: f64, alpha: f64) -> Result<f64, FixedPointError> {
    validate(alpha, &TruncationPolicy::default())?;
    Ok(pow_weight(u, alpha) * xf + pow_weight(1.0 - u, alpha) * xd + f_alpha_drift(u, alpha))
}

/// Second-moment contraction coefficient of the two-child smoothing maps:
/// `E[U^(2a) + (1-U)^(2a)] = 2/(2a+1)`, below 1 exactly when `a > 1/2`.
pub fn contraction_factor(alpha: f64) -> f64 {
    2.0 / (2.0 * alpha + 1.0)
}
