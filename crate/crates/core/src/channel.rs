//! Rayleigh fading with path loss.
//!
//! A link of length `d` carries the complex gain `h d^(-gamma/2) e^(j theta)`
//! where `h` is Rayleigh with `E{h^2} = 2 mu` (so `h^2` is exponential with
//! mean `2 mu`) and `theta` is uniform. The path-loss constant is 1 and all
//! receivers see unit noise, so a link at power `P` supports
//! `log2(1 + P h^2 d^(-gamma))` bits per use.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_nonnegative, ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingDraw {
    pub magnitude: f64,
    pub phase: f64,
}

impl FadingDraw {
    pub fn power(&self) -> f64 {
        self.magnitude * self.magnitude
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexGain(pub Complex64);

impl ComplexGain {
    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

pub fn sample_fading<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> Result<FadingDraw> {
    ensure_positive("mu", mu)?;
    Ok(draw_fading(mu, rng))
}

/// Unchecked variant of [`sample_fading`] for hot loops.
#[inline]
pub(crate) fn draw_fading<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> FadingDraw {
    let magnitude = draw_power_gain(mu, rng).sqrt();
    let phase = rng.gen::<f64>() * TAU;
    FadingDraw { magnitude, phase }
}

/// `h^2` alone, exponential with mean `2 mu`.
#[inline]
pub(crate) fn draw_power_gain<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    2.0 * mu * e
}

/// `E{h^p} = (2 mu)^(p/2) Gamma(1 + p/2)`.
pub fn rayleigh_moment(mu: f64, order: u32) -> f64 {
    (2.0 * mu).powf(order as f64 / 2.0) * gamma_one_plus_half(order)
}

/// `Gamma(1 + p/2)` for integer `p`, exact product form.
fn gamma_one_plus_half(p: u32) -> f64 {
    if p % 2 == 0 {
        (1..=p / 2).map(f64::from).product()
    } else {
        // Gamma(n + 1/2) with n = (p + 1) / 2.
        let n = (p + 1) / 2;
        let mut acc = std::f64::consts::PI.sqrt();
        for i in 0..n {
            acc *= f64::from(i) + 0.5;
        }
        acc
    }
}

/// `d^(-gamma)` from the squared distance.
#[inline]
pub(crate) fn pathloss_from_sq(dist_sq: f64, gamma: f64) -> f64 {
    if gamma == 2.0 {
        1.0 / dist_sq
    } else if gamma == 4.0 {
        1.0 / (dist_sq * dist_sq)
    } else {
        dist_sq.powf(-0.5 * gamma)
    }
}

pub fn link_capacity(power: f64, magnitude: f64, distance: f64, gamma: f64) -> Result<f64> {
    ensure_nonnegative("power", power)?;
    ensure_nonnegative("magnitude", magnitude)?;
    ensure_nonnegative("distance", distance)?;
    if distance == 0.0 {
        return Err(Error::ZeroDistance("transmitter-receiver"));
    }
    Ok(capacity_from_snr(power * magnitude * magnitude * distance.powf(-gamma)))
}

#[inline]
pub(crate) fn capacity_from_snr(snr: f64) -> f64 {
    snr.ln_1p() / std::f64::consts::LN_2
}

pub fn complex_gain(distance: f64, draw: FadingDraw, gamma: f64) -> Result<ComplexGain> {
    ensure_nonnegative("distance", distance)?;
    if distance == 0.0 {
        return Err(Error::ZeroDistance("channel"));
    }
    let amplitude = draw.magnitude * distance.powf(-0.5 * gamma);
    Ok(ComplexGain(Complex64::from_polar(amplitude, draw.phase)))
}
