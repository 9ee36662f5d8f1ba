//! On-line directed linear forests and trees.
//!
//! Values arrive one at a time; each arrival is joined to the largest
//! earlier value strictly below it, when one exists. Prepending 0 to the
//! sequence roots the structure: every arrival in `(0, 1]` then has a
//! parent, and the edges into the root are exactly the running minima.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::pow_weight;
use crate::pointproc::UniformSequence;

#[derive(Debug, Error, PartialEq)]
pub enum DltError {
    #[error("sequence contains duplicate values")]
    DuplicateValues,
    #[error("operation requires a rooted sequence")]
    NotRooted,
}

/// Edge of the linear forest: arrival `index` hangs below `parent`, at gap
/// `values[index] - values[parent] > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearEdge {
    pub index: usize,
    pub parent: usize,
    pub gap: f64,
}

/// The built structure. Edges are stored in arrival order of their child.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForest {
    pub edges: Vec<LinearEdge>,
    pub rooted: bool,
    /// Total number of sequence entries, root included when present.
    pub len: usize,
}

/// Order-preserving key for finite floats, so a `BTreeMap` over keys is a
/// predecessor structure over values.
#[inline]
fn order_key(v: f64) -> u64 {
    let b = v.to_bits();
    if v >= 0.0 {
        b | (1 << 63)
    } else {
        !b
    }
}

/// Build the linear forest with an ordered-map predecessor structure:
/// `O(log m)` insertion and strictly-below lookup per arrival. Duplicate
/// values are rejected (the key map is value-bijective, so an insert that
/// displaces an entry is exactly a duplicate).
pub fn build_dlf(seq: &UniformSequence) -> Result<LinearForest, DltError> {
    let mut by_value: BTreeMap<u64, usize> = BTreeMap::new();
    let mut edges = Vec::with_capacity(seq.values.len().saturating_sub(1));
    for (i, &v) in seq.values.iter().enumerate() {
        if let Some((_, &j)) = by_value.range(..order_key(v)).next_back() {
            edges.push(LinearEdge {
                index: i,
                parent: j,
                gap: v - seq.values[j],
            });
        }
        if by_value.insert(order_key(v), i).is_some() {
            return Err(DltError::DuplicateValues);
        }
    }
    Ok(LinearForest {
        edges,
        rooted: seq.rooted,
        len: seq.values.len(),
    })
}

/// Quadratic reference builder: scan all earlier values for the largest one
/// strictly below. Validates `build_dlf`.
pub fn build_dlf_naive(seq: &UniformSequence) -> Result<LinearForest, DltError> {
    let vals = &seq.values;
    for i in 0..vals.len() {
        if vals[..i].contains(&vals[i]) {
            return Err(DltError::DuplicateValues);
        }
    }
    let mut edges = Vec::new();
    for i in 0..vals.len() {
        let mut best: Option<usize> = None;
        for j in 0..i {
            if vals[j] < vals[i] && best.is_none_or(|b| vals[j] > vals[b]) {
                best = Some(j);
            }
        }
        if let Some(j) = best {
            edges.push(LinearEdge {
                index: i,
                parent: j,
                gap: vals[i] - vals[j],
            });
        }
    }
    Ok(LinearForest {
        edges,
        rooted: seq.rooted,
        len: vals.len(),
    })
}

/// Total weight: the sum of `gap^alpha` over all edges.
pub fn dlf_weight(forest: &LinearForest, alpha: f64) -> f64 {
    forest
        .edges
        .iter()
        .map(|e| pow_weight(e.gap, alpha))
        .sum()
}

/// The insertion gaps `Z_1, ..., Z_m` of a rooted sequence, in arrival
/// order. Rooted sequences have exactly one edge per arrival.
pub fn increments(forest: &LinearForest) -> Result<Vec<f64>, DltError> {
    if !forest.rooted {
        return Err(DltError::NotRooted);
    }
    debug_assert_eq!(forest.edges.len() + 1, forest.len);
    Ok(forest.edges.iter().map(|e| e.gap).collect())
}

/// Weight of the edges incident to the root: the lower-record arrivals'
/// values, each to the power `alpha`.
pub fn root_edge_weight(forest: &LinearForest, alpha: f64) -> Result<f64, DltError> {
    if !forest.rooted {
        return Err(DltError::NotRooted);
    }
    Ok(forest
        .edges
        .iter()
        .filter(|e| e.parent == 0)
        .map(|e| pow_weight(e.gap, alpha))
        .sum())
}

/// The `m + 1` spacings that the arrival values cut out of `(0, 1]`
/// (endpoints 0 and 1 included), sorted ascending. They sum to 1.
pub fn ordered_spacings(seq: &UniformSequence) -> Vec<f64> {
    let mut vals: Vec<f64> = if seq.rooted {
        seq.values[1..].to_vec()
    } else {
        seq.values.clone()
    };
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut gaps = Vec::with_capacity(vals.len() + 1);
    let mut prev = 0.0;
    for &v in &vals {
        gaps.push(v - prev);
        prev = v;
    }
    gaps.push(1.0 - prev);
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    gaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointproc::{uniform_sequence, SeedSpec};
    use proptest::prelude::*;

    fn seq(values: &[f64], rooted: bool) -> UniformSequence {
        UniformSequence {
            values: values.to_vec(),
            rooted,
        }
    }

    #[test]
    fn hand_traced_rooted_tree() {
        // Arrivals 0.5, 0.2, 0.7 onto the root 0: 0.5 hangs on 0, 0.2 hangs
        // on 0, 0.7 hangs on 0.5.
        let s = seq(&[0.0, 0.5, 0.2, 0.7], true);
        let f = build_dlf(&s).unwrap();
        let parents: Vec<(usize, usize)> = f.edges.iter().map(|e| (e.index, e.parent)).collect();
        assert_eq!(parents, vec![(1, 0), (2, 0), (3, 1)]);
        let gaps = increments(&f).unwrap();
        assert_eq!(gaps, vec![0.5, 0.2, 0.7 - 0.5]);
        assert!((dlf_weight(&f, 1.0) - 0.9).abs() < 1e-15);
        for &alpha in &[0.5, 1.0, 2.0] {
            let want = 0.5f64.powf(alpha) + 0.2f64.powf(alpha);
            assert!((root_edge_weight(&f, alpha).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn unrooted_forest_skips_minima() {
        // 0.5 arrives first (no predecessor), 0.2 is a new minimum (no
        // predecessor), 0.7 hangs on 0.5.
        let s = seq(&[0.5, 0.2, 0.7], false);
        let f = build_dlf(&s).unwrap();
        let parents: Vec<(usize, usize)> = f.edges.iter().map(|e| (e.index, e.parent)).collect();
        assert_eq!(parents, vec![(2, 0)]);
        assert!(increments(&f).is_err());
        assert!(root_edge_weight(&f, 1.0).is_err());
    }

    #[test]
    fn duplicates_are_rejected() {
        let s = seq(&[0.3, 0.7, 0.3], false);
        assert_eq!(build_dlf(&s), Err(DltError::DuplicateValues));
        assert_eq!(build_dlf_naive(&s), Err(DltError::DuplicateValues));
    }

    #[test]
    fn root_edges_are_the_running_minima() {
        let s = uniform_sequence(500, &SeedSpec::new(11, 0), true);
        let f = build_dlf(&s).unwrap();
        let mut running_min = f64::INFINITY;
        let mut record_sum = 0.0;
        for &v in &s.values[1..] {
            if v < running_min {
                running_min = v;
                record_sum += v;
            }
        }
        assert!((root_edge_weight(&f, 1.0).unwrap() - record_sum).abs() < 1e-12);
    }

    #[test]
    fn rooted_and_unrooted_builds_share_non_root_edges() {
        let rooted = uniform_sequence(300, &SeedSpec::new(12, 5), true);
        let unrooted = UniformSequence {
            values: rooted.values[1..].to_vec(),
            rooted: false,
        };
        let fr = build_dlf(&rooted).unwrap();
        let fu = build_dlf(&unrooted).unwrap();
        let total_r = dlf_weight(&fr, 1.3);
        let total_u = dlf_weight(&fu, 1.3);
        let roots = root_edge_weight(&fr, 1.3).unwrap();
        assert!((total_r - roots - total_u).abs() < 1e-12);
    }

    #[test]
    fn spacings_partition_the_interval() {
        let s = uniform_sequence(40, &SeedSpec::new(13, 0), true);
        let gaps = ordered_spacings(&s);
        assert_eq!(gaps.len(), 41);
        assert!((gaps.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(gaps.windows(2).all(|w| w[0] <= w[1]));
        assert!(gaps.iter().all(|&g| g >= 0.0));
    }

    #[test]
    fn last_gap_is_a_uniformly_ranked_spacing() {
        // The m-th insertion gap always coincides with one of the m + 1
        // spacings of the full arrival set (its predecessor is adjacent in
        // sorted order), and it matches each rank with probability
        // 1 / (m + 1).
        let m = 4usize;
        let reps = 20_000u64;
        let mut rank_counts = vec![0u64; m + 1];
        for r in 0..reps {
            let s = uniform_sequence(m, &SeedSpec::new(99, r), true);
            let f = build_dlf(&s).unwrap();
            let z_last = *increments(&f).unwrap().last().unwrap();
            let gaps = ordered_spacings(&s);
            let rank = gaps
                .iter()
                .position(|&g| g == z_last)
                .expect("last gap must be one of the spacings");
            rank_counts[rank] += 1;
        }
        let p = 1.0 / (m as f64 + 1.0);
        let four_sigma = 4.0 * (p * (1.0 - p) / reps as f64).sqrt();
        for (rank, &count) in rank_counts.iter().enumerate() {
            let freq = count as f64 / reps as f64;
            assert!(
                (freq - p).abs() < four_sigma,
                "rank {rank}: frequency {freq} vs {p}"
            );
        }
    }

    proptest! {
        #[test]
        fn ordered_map_builder_matches_naive(
            values in proptest::collection::vec(0.001..1.0f64, 0..60),
            rooted in proptest::bool::ANY,
        ) {
            let mut v = values;
            if rooted {
                v.insert(0, 0.0);
            }
            let s = seq(&v, rooted);
            let fast = build_dlf(&s);
            let slow = build_dlf_naive(&s);
            match (fast, slow) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.edges, b.edges);
                    prop_assert_eq!(a.len, b.len);
                }
                (Err(a), Err(b)) => prop_assert_eq!(a, b),
                (a, b) => prop_assert!(false, "disagree: {:?} vs {:?}", a, b),
            }
        }
    }
}
