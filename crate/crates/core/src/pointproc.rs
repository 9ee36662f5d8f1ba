//! Reproducible point processes on the half-open unit square and uniform
//! sequences on the half-open unit interval.
//!
//! Uniform draws live in `(0, 1]`, produced by sampling `[0, 1)` and taking
//! `1 - u`. The half-open convention keeps the origin strictly outside the
//! support, so in the coordinatewise order the adjoined root precedes every
//! process point and nothing ever collides with it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::geometry::{Point, Rect};

#[derive(Debug, Error, PartialEq)]
pub enum PointProcessError {
    #[error("sample is already rooted")]
    AlreadyRooted,
    #[error("intensity must be finite and non-negative, got {0}")]
    InvalidIntensity(f64),
}

/// Identifies one reproducible random stream: a base seed plus a stream
/// index. The mapping `(base_seed, stream_index) -> generator state` is pure,
/// so any work item (a replicate, a draw) can be given its own independent
/// stream and produce identical output on every machine and at any thread
/// count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SeedSpec {
    pub base_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(base_seed: u64, stream_index: u64) -> Self {
        SeedSpec {
            base_seed,
            stream_index,
        }
    }

    /// Same base seed, different stream.
    pub fn with_stream(&self, stream_index: u64) -> Self {
        SeedSpec {
            base_seed: self.base_seed,
            stream_index,
        }
    }

    /// The stream's generator: ChaCha8 keyed by the base seed, with the
    /// stream index selecting one of 2^64 independent keystream counters.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// A 64-bit key mixing both fields, for counter-based (stateless)
    /// generators that index randomness by position instead of drawing
    /// sequentially.
    pub fn key(&self) -> u64 {
        mix64(mix64(self.base_seed) ^ self.stream_index)
    }
}

/// SplitMix64 finalizer (Stafford mix 13): a strong 64-bit mixing function.
/// Bijective, so distinct inputs never collide.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in `(0, 1]`.
#[inline]
pub fn unit_open_closed<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// A point sample on `(0, 1]^2`, optionally with the origin adjoined at
/// index 0. `intensity_or_count` echoes the requested size: the fixed count
/// for a binomial sample, the intensity for a Poisson sample.
#[derive(Debug, Clone)]
pub struct PointSample {
    pub points: Vec<Point>,
    pub rooted: bool,
    pub intensity_or_count: f64,
}

impl PointSample {
    /// Number of process points, excluding any root.
    pub fn process_len(&self) -> usize {
        self.points.len() - usize::from(self.rooted)
    }
}

/// A sequence of values in `(0, 1]` in arrival order, optionally with the
/// value 0 prepended as a root.
#[derive(Debug, Clone)]
pub struct UniformSequence {
    pub values: Vec<f64>,
    pub rooted: bool,
}

impl UniformSequence {
    /// Number of arrivals, excluding any root.
    pub fn arrivals(&self) -> usize {
        self.values.len() - usize::from(self.rooted)
    }
}

/// `count` independent uniform points in the half-open rectangle.
pub fn uniform_points_in<R: Rng + ?Sized>(rect: &Rect, count: usize, rng: &mut R) -> Vec<Point> {
    (0..count)
        .map(|_| {
            let u = unit_open_closed(rng);
            let v = unit_open_closed(rng);
            Point::new(
                rect.x_lo + u * (rect.x_hi - rect.x_lo),
                rect.y_lo + v * (rect.y_hi - rect.y_lo),
            )
        })
        .collect()
}

/// Binomial process: exactly `n` uniform points on `(0, 1]^2`.
pub fn binomial_process(n: usize, seed: &SeedSpec) -> PointSample {
    let mut rng = seed.rng();
    PointSample {
        points: uniform_points_in(&Rect::unit(), n, &mut rng),
        rooted: false,
        intensity_or_count: n as f64,
    }
}

/// An exactly-Poisson count with the given mean.
pub fn poisson_count<R: Rng + ?Sized>(
    intensity: f64,
    rng: &mut R,
) -> Result<u64, PointProcessError> {
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(PointProcessError::InvalidIntensity(intensity));
    }
    if intensity == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(intensity).map_err(|_| PointProcessError::InvalidIntensity(intensity))?;
    Ok(dist.sample(rng) as u64)
}

/// Poisson process on `(0, 1]^2`: a Poisson-distributed number of points
/// (exact for every intensity), each uniform on the square.
pub fn poisson_process(intensity: f64, seed: &SeedSpec) -> Result<PointSample, PointProcessError> {
    let mut rng = seed.rng();
    let n = poisson_count(intensity, &mut rng)?;
    Ok(PointSample {
        points: uniform_points_in(&Rect::unit(), n as usize, &mut rng),
        rooted: false,
        intensity_or_count: intensity,
    })
}

/// Adjoin the origin at index 0. Fails if the sample is already rooted.
pub fn add_root(sample: &mut PointSample) -> Result<(), PointProcessError> {
    if sample.rooted {
        return Err(PointProcessError::AlreadyRooted);
    }
    sample.points.insert(0, Point::ORIGIN);
    sample.rooted = true;
    Ok(())
}

/// `m` uniform values on `(0, 1]` in arrival order; `rooted` prepends 0.
pub fn uniform_sequence(m: usize, seed: &SeedSpec, rooted: bool) -> UniformSequence {
    let mut rng = seed.rng();
    let mut values = Vec::with_capacity(m + usize::from(rooted));
    if rooted {
        values.push(0.0);
    }
    values.extend((0..m).map(|_| unit_open_closed(&mut rng)));
    UniformSequence { values, rooted }
}
