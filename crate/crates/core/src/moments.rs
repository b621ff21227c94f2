//! Fading moments of the beamformed received powers.
//!
//! With every path-loss factor set to one, the received powers reduce to
//! `P_l / P_T = (sum_i h_i^2)^2 / n_r` and
//! `P_e / P_T = |sum_i h_i^l h_i^e e^(j phi_i)|^2 / n_r`, whose first two
//! moments follow from the Rayleigh moments `E{H^2}, ..., E{H^8}`. The
//! geometric bounds with path loss and the two inequality lemmas used to
//! carry the variance bounds over are exposed as testable predicates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_fading, rayleigh_moment};
use crate::error::{ensure_positive, Error, Result};
use crate::geometry::NetworkConfig;
use crate::stats::Moments4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub h2: f64,
    pub h4: f64,
    pub h6: f64,
    pub h8: f64,
}

impl MomentSet {
    pub fn rayleigh(mu: f64) -> Self {
        MomentSet {
            h2: rayleigh_moment(mu, 2),
            h4: rayleigh_moment(mu, 4),
            h6: rayleigh_moment(mu, 6),
            h8: rayleigh_moment(mu, 8),
        }
    }
}

/// `E{P_l} / P_T` without path loss: `(n_r - 1) E^2{H^2} + E{H^4}`.
pub fn mean_pl_0(n_r: u64, mu: f64) -> f64 {
    let m = MomentSet::rayleigh(mu);
    (n_r as f64 - 1.0) * m.h2 * m.h2 + m.h4
}

/// `E{P_e} / P_T` without path loss, `E^2{H^2}` for every `n_r`.
pub fn mean_pe_0(mu: f64) -> f64 {
    let m = MomentSet::rayleigh(mu);
    m.h2 * m.h2
}

/// `Var{P_l} / P_T^2` without path loss, full expansion.
///
/// Writing `S^2 - E{S^2} = S_1 + S_2` with `S_1` the diagonal terms and
/// `S_2` the ordered off-diagonal pairs, `E{S_2^2}` collects
/// `2 n (n-1)` same-pair covariances and `4 n (n-1)(n-2)` one-shared-index
/// covariances.
pub fn var_pl_0(n_r: u64, mu: f64) -> f64 {
    let m = MomentSet::rayleigh(mu);
    let n = n_r as f64;
    let e2sq = m.h2 * m.h2;
    let e2p4 = e2sq * e2sq;
    let diag = n * (m.h8 - m.h4 * m.h4);
    let same_pair = 2.0 * n * (n - 1.0) * (m.h4 * m.h4 - e2p4);
    let shared_index = 4.0 * n * (n - 1.0) * (n - 2.0) * (m.h4 * e2sq - e2p4);
    let cross = 4.0 * n * (n - 1.0) * (m.h6 * m.h2 - m.h4 * e2sq);
    (diag + same_pair + shared_index + cross) / (n * n)
}

/// `Var{P_e} / P_T^2` without path loss.
pub fn var_pe_0(n_r: u64, mu: f64) -> f64 {
    let m = MomentSet::rayleigh(mu);
    let n = n_r as f64;
    let e2p4 = (m.h2 * m.h2).powi(2);
    (n - 1.0) / n * e2p4 + (m.h4 * m.h4 - e2p4) / n
}

/// Mean and variance bounds on the received powers with path loss,
/// normalized by `P_T` (means) and `P_T^2` (variances).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem4Bounds {
    pub mean_pl_lower: f64,
    pub mean_pe_upper: f64,
    pub var_pl_upper: f64,
    pub var_pe_upper: f64,
}

pub fn theorem4_bounds(
    cfg: &NetworkConfig,
    eta: f64,
    nu: f64,
    n_r: u64,
    a_l: f64,
    a_e: f64,
) -> Result<Theorem4Bounds> {
    let d = cfg.tx_rx_distance;
    let g = cfg.pathloss_gamma;
    if !(d > a_l) {
        return Err(Error::param("a_l", format!("receiver at {d} must lie outside the relay disc {a_l}")));
    }
    if !(a_e > a_l) {
        return Err(Error::param("a_e", format!("must exceed a_l = {a_l}, got {a_e}")));
    }
    let n = n_r as f64;
    let near = d - a_l;
    let gap = a_e - a_l;
    Ok(Theorem4Bounds {
        mean_pl_lower: eta * n * (d + a_l).powf(-2.0 * g),
        mean_pe_upper: eta * gap.powf(-g) * near.powf(-g),
        var_pl_upper: nu * nu * n * near.powf(-4.0 * g),
        var_pe_upper: nu * nu * gap.powf(-2.0 * g) * near.powf(-2.0 * g),
    })
}

/// Families of non-negative distributions used to exercise the lemmas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    Rayleigh { mu: f64 },
    TwoPoint { low: f64, high: f64, p_high: f64 },
    UniformMixture { components: Vec<UniformComponent> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformComponent {
    pub weight: f64,
    pub low: f64,
    pub high: f64,
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::Rayleigh { mu } => ensure_positive("mu", *mu)?,
            DistributionSpec::TwoPoint { low, high, p_high } => {
                if !(*low >= 0.0 && high >= low && (0.0..=1.0).contains(p_high)) {
                    return Err(Error::param("two_point", "need 0 <= low <= high and p in [0, 1]"));
                }
            }
            DistributionSpec::UniformMixture { components } => {
                if components.is_empty() {
                    return Err(Error::param("components", "empty mixture"));
                }
                let total: f64 = components.iter().map(|c| c.weight).sum();
                for c in components {
                    if !(c.weight >= 0.0 && c.low >= 0.0 && c.high >= c.low) {
                        return Err(Error::param("components", "need weight >= 0, 0 <= low <= high"));
                    }
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::param("components", format!("weights sum to {total}")));
                }
            }
        }
        if !(self.raw_moment(1) > 0.0) {
            return Err(Error::param("distribution", "mean must be positive"));
        }
        Ok(())
    }

    /// `E{X^k}`, exact.
    pub fn raw_moment(&self, k: u32) -> f64 {
        match self {
            DistributionSpec::Rayleigh { mu } => rayleigh_moment(*mu, k),
            DistributionSpec::TwoPoint { low, high, p_high } => {
                (1.0 - p_high) * low.powi(k as i32) + p_high * high.powi(k as i32)
            }
            DistributionSpec::UniformMixture { components } => components
                .iter()
                .map(|c| c.weight * uniform_moment(c.low, c.high, k))
                .sum(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DistributionSpec::Rayleigh { mu } => draw_fading(*mu, rng).magnitude,
            DistributionSpec::TwoPoint { low, high, p_high } => {
                if rng.gen::<f64>() < *p_high {
                    *high
                } else {
                    *low
                }
            }
            DistributionSpec::UniformMixture { components } => {
                let mut u: f64 = rng.gen();
                let last = components.len() - 1;
                for (i, c) in components.iter().enumerate() {
                    if u < c.weight || i == last {
                        return c.low + (c.high - c.low) * rng.gen::<f64>();
                    }
                    u -= c.weight;
                }
                unreachable!("mixture has at least one component")
            }
        }
    }
}

fn uniform_moment(low: f64, high: f64, k: u32) -> f64 {
    if high == low {
        return low.powi(k as i32);
    }
    let e = k as i32 + 1;
    (high.powi(e) - low.powi(e)) / (f64::from(e) * (high - low))
}

/// `E{H^3} - E{H^2} E{H}`; non-negative for every admissible distribution.
pub fn lemma4_gap(dist: &DistributionSpec) -> f64 {
    dist.raw_moment(3) - dist.raw_moment(2) * dist.raw_moment(1)
}

/// Exact `(Var[(aX + bY)^2], b^4 Var[(X + Y)^2])` for i.i.d. `X, Y ~ dist`.
pub fn lemma5_exact(a: f64, b: f64, dist: &DistributionSpec) -> (f64, f64) {
    let m: Vec<f64> = (0..=4).map(|k| dist.raw_moment(k)).collect();
    let var_sq = |a: f64, b: f64| {
        let second = (a * a + b * b) * m[2] + 2.0 * a * b * m[1] * m[1];
        let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
        let fourth: f64 = (0..=4)
            .map(|k| binom[k] * a.powi(k as i32) * b.powi(4 - k as i32) * m[k] * m[4 - k])
            .sum();
        fourth - second * second
    };
    (var_sq(a, b), b.powi(4) * var_sq(1.0, 1.0))
}

/// Monte Carlo estimate of both sides of the variance inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma5Estimate {
    pub lhs: f64,
    pub lhs_std_err: f64,
    pub rhs: f64,
    pub rhs_std_err: f64,
}

impl Lemma5Estimate {
    /// `(rhs - lhs) / std_err(rhs - lhs)`; negative when the sample contradicts `lhs < rhs`.
    pub fn margin_z(&self) -> f64 {
        let se = self.lhs_std_err.hypot(self.rhs_std_err);
        if se == 0.0 {
            if self.rhs > self.lhs { f64::INFINITY } else { f64::NEG_INFINITY }
        } else {
            (self.rhs - self.lhs) / se
        }
    }
}

/// Independent sample sets are used for the two sides.
pub fn lemma5_check<R: Rng + ?Sized>(
    a: f64,
    b: f64,
    dist: &DistributionSpec,
    samples: usize,
    rng: &mut R,
) -> Lemma5Estimate {
    let mut lhs = Moments4::new();
    let mut rhs = Moments4::new();
    for _ in 0..samples {
        let (x, y) = (dist.sample(rng), dist.sample(rng));
        lhs.push((a * x + b * y).powi(2));
        let (x, y) = (dist.sample(rng), dist.sample(rng));
        rhs.push((x + y).powi(2));
    }
    let b4 = b.powi(4);
    Lemma5Estimate {
        lhs: lhs.variance(),
        lhs_std_err: lhs.variance_std_err(),
        rhs: b4 * rhs.variance(),
        rhs_std_err: b4 * rhs.variance_std_err(),
    }
}
