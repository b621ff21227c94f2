//! Network extent, Poisson point sampling and the annular layering used to
//! bound eavesdropper rates layer by layer.
//!
//! The transmitter sits at the origin of a square of side
//! `L = sqrt(n_l / lambda_l)`; the receiver sits at `(d_TR, 0)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_nonnegative, ensure_positive, Error, Result};

/// Largest Poisson mean [`sample_ppp`] will materialize in memory.
pub const MAX_SAMPLED_POINTS: f64 = 5.0e7;

/// Physical constants and extent of the network. Noise power is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub transmit_power: f64,
    /// Rayleigh parameter, `E{h^2} = 2 mu`.
    pub rayleigh_mu: f64,
    pub pathloss_gamma: f64,
    pub tx_rx_distance: f64,
    pub legit_density: f64,
    pub eaves_density: f64,
    pub n_legit: u64,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("transmit_power", self.transmit_power)?;
        ensure_positive("rayleigh_mu", self.rayleigh_mu)?;
        if !(self.pathloss_gamma.is_finite() && self.pathloss_gamma >= 2.0) {
            return Err(Error::param(
                "pathloss_gamma",
                format!("must be finite and >= 2, got {}", self.pathloss_gamma),
            ));
        }
        ensure_positive("tx_rx_distance", self.tx_rx_distance)?;
        ensure_positive("legit_density", self.legit_density)?;
        ensure_nonnegative("eaves_density", self.eaves_density)?;
        if self.n_legit == 0 {
            return Err(Error::param("n_legit", "must be >= 1"));
        }
        Ok(())
    }

    /// Side of the network square, `sqrt(n_l / lambda_l)`.
    pub fn side(&self) -> f64 {
        (self.n_legit as f64 / self.legit_density).sqrt()
    }

    pub fn receiver(&self) -> Point {
        Point::new(self.tx_rx_distance, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// The `k`-th layer: the ring between `2^(k-1) a_e` and `2^k a_e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub index: u32,
    pub inner: f64,
    pub outer: f64,
    pub area: f64,
}

impl Annulus {
    pub fn new(k: u32, a_e: f64) -> Self {
        let inner = pow2(k as i32 - 1) * a_e;
        Annulus { index: k, inner, outer: 2.0 * inner, area: layer_area(k, a_e) }
    }

    /// Lower edge inclusive, upper edge exclusive.
    pub fn contains_distance(&self, d: f64) -> bool {
        self.inner <= d && d < self.outer
    }
}

fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

/// Homogeneous Poisson process on the square `[-side/2, side/2]^2`.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, side: f64, rng: &mut R) -> Result<Vec<Point>> {
    ensure_nonnegative("density", density)?;
    ensure_positive("side", side)?;
    let count = poisson_count(density * side * side, rng)?;
    let half = side / 2.0;
    Ok((0..count)
        .map(|_| Point::new(rng.gen_range(-half..half), rng.gen_range(-half..half)))
        .collect())
}

/// Poisson draw with the given mean; zero mean gives zero.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    ensure_nonnegative("poisson mean", mean)?;
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::param("poisson mean", e.to_string()))?;
    Ok(dist.sample(rng) as u64)
}

/// Uniform point in the disc of `radius` around `center` (rejection from the
/// bounding square).
pub fn uniform_in_disc<R: Rng + ?Sized>(center: Point, radius: f64, rng: &mut R) -> Point {
    loop {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let y: f64 = rng.gen_range(-1.0..1.0);
        if x * x + y * y <= 1.0 {
            return Point::new(center.x + radius * x, center.y + radius * y);
        }
    }
}

/// Points within `radius` of `center` (boundary inclusive), in input order.
pub fn points_in_disc(points: &[Point], center: Point, radius: f64) -> Vec<Point> {
    points.iter().copied().filter(|p| p.distance(&center) <= radius).collect()
}

/// Index of the layer containing a point at `distance` from the transmitter.
pub fn layer_index(distance: f64, a_e: f64) -> Result<u32> {
    ensure_positive("a_e", a_e)?;
    if !distance.is_finite() {
        return Err(Error::param("distance", "must be finite"));
    }
    if distance < a_e {
        return Err(Error::OutsideLayers { distance, a_e });
    }
    let mut k = ((distance / a_e).log2().floor() as i64 + 1).max(1) as i32;
    // log2 can be off by one ulp at exact powers of two.
    while k > 1 && pow2(k - 1) * a_e > distance {
        k -= 1;
    }
    while pow2(k) * a_e <= distance {
        k += 1;
    }
    Ok(k as u32)
}

/// Area of layer `k`, `3 pi 4^(k-1) a_e^2`.
pub fn layer_area(k: u32, a_e: f64) -> f64 {
    debug_assert!(k >= 1);
    3.0 * PI * pow2(2 * (k as i32 - 1)) * a_e * a_e
}

/// Number of layers needed for the last ring to reach the square's corners.
pub fn num_layers(side: f64, a_e: f64) -> u32 {
    let circumradius = side * std::f64::consts::FRAC_1_SQRT_2;
    // Relative slack so that exact hand-picked ties are not lost to rounding.
    let target = circumradius * (1.0 - 1e-12);
    let mut k = 1u32;
    while pow2(k as i32) * a_e < target {
        k += 1;
    }
    k
}
