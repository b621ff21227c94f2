//! One realization of the two-stage scheme.
//!
//! Stage 1: the transmitter broadcasts to the relays; every eavesdropper in
//! the network listens. Stage 2: each relay re-sends the message weighted by
//! the conjugate of its channel to the receiver, scaled by `1/sqrt(n_r)`, so
//! the contributions add coherently at the receiver only.
//!
//! The relay-to-eavesdropper fading of stage 2 can be stored per link
//! ([`Stage2EavesFading::Explicit`]) or collapsed into one exponential draw
//! per eavesdropper ([`Stage2EavesFading::Collapsed`]). The collapsed form
//! uses that a weighted sum of independent circular Gaussian gains is again
//! circular Gaussian, so `P_e(j)` has the same law in both forms while the
//! collapsed form needs `n_e` draws instead of `n_r * n_e`.

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::channel::{capacity_from_snr, complex_gain, draw_fading, pathloss_from_sq, ComplexGain, FadingDraw};
use crate::error::{ensure_nonnegative, Error, Result};
use crate::geometry::{poisson_count, sample_ppp, uniform_in_disc, NetworkConfig, Point};
use crate::planner::{Mode, Plan};

/// In [`Stage2Mode::Auto`], per-link fading is stored when the number of
/// relay-eavesdropper pairs is at most this.
pub const EXPLICIT_PAIR_LIMIT: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelaySelection {
    /// Indices into the realization's legitimate points.
    Selected(Vec<usize>),
    /// Fewer than `n_r` legitimate nodes were inside the relay disc.
    Shortfall { available: usize },
}

impl RelaySelection {
    pub fn indices(&self) -> &[usize] {
        match self {
            RelaySelection::Selected(ix) => ix,
            RelaySelection::Shortfall { .. } => &[],
        }
    }

    pub fn is_shortfall(&self) -> bool {
        matches!(self, RelaySelection::Shortfall { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage2Mode {
    #[default]
    Auto,
    Explicit,
    Collapsed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stage2EavesFading {
    /// Eavesdropper-major: the draw for relay `i` and eavesdropper `j` sits
    /// at `j * n_relays + i`.
    Explicit(Vec<FadingDraw>),
    /// One unit-mean exponential per eavesdropper.
    Collapsed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    /// Legitimate nodes that were materialized; relays index into this.
    pub legit_points: Vec<Point>,
    pub eaves_points: Vec<Point>,
    pub relays: RelaySelection,
    /// Legitimate nodes inside the relay disc, which can exceed
    /// `legit_points.len()` when only the chosen relays were materialized.
    pub n_in_relay_disc: u64,
    /// Transmitter to each legitimate point.
    pub stage1_legit: Vec<FadingDraw>,
    /// Transmitter to each eavesdropper.
    pub stage1_eaves: Vec<FadingDraw>,
    /// Each relay (in selection order) to the receiver.
    pub stage2_receiver: Vec<FadingDraw>,
    pub stage2_eaves: Stage2EavesFading,
}

impl NetworkRealization {
    pub fn relay_points(&self) -> impl Iterator<Item = Point> + '_ {
        self.relays.indices().iter().map(|&i| self.legit_points[i])
    }

    pub fn n_relays(&self) -> usize {
        self.relays.indices().len()
    }

    /// Builds a realization from given node positions, choosing relays at
    /// random inside the disc of radius `a_l` and drawing every fading
    /// coefficient.
    pub fn from_points<R: Rng + ?Sized>(
        legit_points: Vec<Point>,
        eaves_points: Vec<Point>,
        a_l: f64,
        n_r: usize,
        mu: f64,
        mode: Stage2Mode,
        rng: &mut R,
    ) -> Self {
        let n_in_relay_disc = legit_points.iter().filter(|p| p.norm() <= a_l).count() as u64;
        let relays = select_relays(&legit_points, a_l, n_r, rng);
        draw_all_fading(legit_points, eaves_points, relays, n_in_relay_disc, mu, mode, rng)
    }
}

fn draw_all_fading<R: Rng + ?Sized>(
    legit_points: Vec<Point>,
    eaves_points: Vec<Point>,
    relays: RelaySelection,
    n_in_relay_disc: u64,
    mu: f64,
    mode: Stage2Mode,
    rng: &mut R,
) -> NetworkRealization {
    let stage1_legit = legit_points.iter().map(|_| draw_fading(mu, rng)).collect();
    let stage1_eaves = eaves_points.iter().map(|_| draw_fading(mu, rng)).collect();
    let n_relays = relays.indices().len();
    let stage2_receiver = (0..n_relays).map(|_| draw_fading(mu, rng)).collect();
    let n_eaves = eaves_points.len();
    let explicit = match mode {
        Stage2Mode::Explicit => true,
        Stage2Mode::Collapsed => false,
        Stage2Mode::Auto => n_relays.saturating_mul(n_eaves) <= EXPLICIT_PAIR_LIMIT,
    };
    let stage2_eaves = if explicit {
        Stage2EavesFading::Explicit((0..n_relays * n_eaves).map(|_| draw_fading(mu, rng)).collect())
    } else {
        Stage2EavesFading::Collapsed((0..n_eaves).map(|_| Exp1.sample(rng)).collect())
    };
    NetworkRealization {
        legit_points,
        eaves_points,
        relays,
        n_in_relay_disc,
        stage1_legit,
        stage1_eaves,
        stage2_receiver,
        stage2_eaves,
    }
}

/// Picks `n_r` of the points within `a_l` of the transmitter uniformly at
/// random without replacement. Indices come back in increasing order.
pub fn select_relays<R: Rng + ?Sized>(legit_points: &[Point], a_l: f64, n_r: usize, rng: &mut R) -> RelaySelection {
    let inside: Vec<usize> = legit_points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.norm() <= a_l)
        .map(|(i, _)| i)
        .collect();
    if inside.len() < n_r || n_r == 0 {
        return RelaySelection::Shortfall { available: inside.len() };
    }
    let mut chosen: Vec<usize> = index::sample(rng, inside.len(), n_r).into_iter().map(|k| inside[k]).collect();
    chosen.sort_unstable();
    RelaySelection::Selected(chosen)
}

/// Samples a realization under `plan` and the densities in `cfg`.
///
/// Only the legitimate nodes inside the relay disc matter, so the count
/// there is drawn from its Poisson law and, when it reaches `n_r`, only the
/// `n_r` chosen relays are placed (uniformly in the disc, which is the law
/// of a uniform `n_r`-subset of the disc's points). Eavesdroppers are placed
/// over the whole square.
pub fn sample_realization<R: Rng + ?Sized>(
    plan: &Plan,
    cfg: &NetworkConfig,
    mode: Stage2Mode,
    rng: &mut R,
) -> Result<NetworkRealization> {
    if plan.mode == Mode::Direct {
        return Err(Error::DirectMode);
    }
    let in_disc = poisson_count(cfg.legit_density * std::f64::consts::PI * plan.a_l * plan.a_l, rng)?;
    let n_r = usize::try_from(plan.n_r).map_err(|_| Error::param("n_r", "does not fit in memory"))?;
    let placed = if in_disc >= plan.n_r { n_r } else { in_disc as usize };
    let legit_points: Vec<Point> = (0..placed).map(|_| uniform_in_disc(Point::ORIGIN, plan.a_l, rng)).collect();
    let relays = if in_disc >= plan.n_r {
        RelaySelection::Selected((0..n_r).collect())
    } else {
        RelaySelection::Shortfall { available: placed }
    };
    let eaves_points = sample_ppp(cfg.eaves_density, cfg.side(), rng)?;
    Ok(draw_all_fading(legit_points, eaves_points, relays, in_disc, cfg.rayleigh_mu, mode, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage1Rates {
    /// Minimum over relays (or over all materialized disc nodes on a
    /// shortfall); 0 when there are none.
    pub min_relay_rate: f64,
    /// Maximum over every eavesdropper in the network; 0 when there are none.
    pub max_eaves_rate: f64,
    pub eaves_in_free_disc: bool,
}

pub fn stage1_rates(realization: &NetworkRealization, cfg: &NetworkConfig, a_e: f64) -> Stage1Rates {
    let p = cfg.transmit_power;
    let g = cfg.pathloss_gamma;
    let snr = |point: &Point, draw: &FadingDraw| p * draw.power() * pathloss_from_sq(point.distance_sq(&Point::ORIGIN), g);

    let receivers: Vec<usize> = match &realization.relays {
        RelaySelection::Selected(ix) => ix.clone(),
        RelaySelection::Shortfall { .. } => (0..realization.legit_points.len()).collect(),
    };
    let min_relay_snr = receivers
        .iter()
        .map(|&i| snr(&realization.legit_points[i], &realization.stage1_legit[i]))
        .fold(f64::INFINITY, f64::min);
    let max_eaves_snr = realization
        .eaves_points
        .iter()
        .zip(&realization.stage1_eaves)
        .map(|(pt, d)| snr(pt, d))
        .fold(0.0, f64::max);
    let a_e_sq = a_e * a_e;
    Stage1Rates {
        min_relay_rate: if receivers.is_empty() { 0.0 } else { capacity_from_snr(min_relay_snr) },
        max_eaves_rate: capacity_from_snr(max_eaves_snr),
        eaves_in_free_disc: realization.eaves_points.iter().any(|pt| pt.distance_sq(&Point::ORIGIN) <= a_e_sq),
    }
}

/// Complex gains from each relay to the receiver.
pub fn relay_receiver_gains(realization: &NetworkRealization, cfg: &NetworkConfig) -> Result<Vec<ComplexGain>> {
    let rx = cfg.receiver();
    realization
        .relay_points()
        .zip(&realization.stage2_receiver)
        .map(|(pt, draw)| complex_gain(pt.distance(&rx), *draw, cfg.pathloss_gamma))
        .collect()
}

/// `w_i = conj(g_i) / sqrt(n_r)`.
pub fn beamform_weights(gains: &[ComplexGain]) -> Result<Vec<Complex64>> {
    if gains.is_empty() {
        return Err(Error::param("relay gains", "need at least one relay"));
    }
    if let Some(bad) = gains.iter().find(|g| !(g.0.re.is_finite() && g.0.im.is_finite())) {
        return Err(Error::param("relay gains", format!("non-finite gain {}", bad.0)));
    }
    let scale = 1.0 / (gains.len() as f64).sqrt();
    Ok(gains.iter().map(|g| g.0.conj() * scale).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedPowers {
    pub legit: f64,
    pub eaves: Vec<f64>,
    pub per_relay: Vec<f64>,
    pub total_relay: f64,
}

/// Stage-2 received powers with conjugate weights, from the closed-form
/// sums. Fails on a shortfall or on any zero-length link.
pub fn received_powers(realization: &NetworkRealization, cfg: &NetworkConfig) -> Result<ReceivedPowers> {
    let n = realization.n_relays();
    if n == 0 {
        return Err(Error::param("relays", "stage 2 needs at least one relay"));
    }
    let p_t = cfg.transmit_power;
    let g = cfg.pathloss_gamma;
    let rx = cfg.receiver();
    let inv_n = 1.0 / n as f64;

    let relays: Vec<Point> = realization.relay_points().collect();
    // a_i = (d_i^l)^(-gamma) (h_i^l)^2, the relay's power gain to the receiver.
    let mut gain_to_rx = Vec::with_capacity(n);
    for (pt, draw) in relays.iter().zip(&realization.stage2_receiver) {
        let dsq = pt.distance_sq(&rx);
        if dsq == 0.0 {
            return Err(Error::ZeroDistance("relay-receiver"));
        }
        gain_to_rx.push(pathloss_from_sq(dsq, g) * draw.power());
    }
    let coherent: f64 = gain_to_rx.iter().sum();
    let per_relay: Vec<f64> = gain_to_rx.iter().map(|a| a * p_t * inv_n).collect();
    let total_relay = coherent * p_t * inv_n;
    let legit = coherent * coherent * inv_n * p_t;

    let eaves = match &realization.stage2_eaves {
        Stage2EavesFading::Explicit(draws) => {
            let amp_to_rx: Vec<f64> = gain_to_rx.iter().map(|a| a.sqrt()).collect();
            realization
                .eaves_points
                .iter()
                .enumerate()
                .map(|(j, e)| {
                    let row = &draws[j * n..(j + 1) * n];
                    let (mut re, mut im) = (0.0, 0.0);
                    for (i, pt) in relays.iter().enumerate() {
                        let dsq = pt.distance_sq(e);
                        if dsq == 0.0 {
                            return Err(Error::ZeroDistance("relay-eavesdropper"));
                        }
                        let amp = amp_to_rx[i] * pathloss_from_sq(dsq, g).sqrt() * row[i].magnitude;
                        let phase = row[i].phase - realization.stage2_receiver[i].phase;
                        re += amp * phase.cos();
                        im += amp * phase.sin();
                    }
                    Ok((re * re + im * im) * inv_n * p_t)
                })
                .collect::<Result<Vec<f64>>>()?
        }
        Stage2EavesFading::Collapsed(exps) => {
            let xs: Vec<f64> = relays.iter().map(|p| p.x).collect();
            let ys: Vec<f64> = relays.iter().map(|p| p.y).collect();
            let scale = 2.0 * cfg.rayleigh_mu * inv_n * p_t;
            realization
                .eaves_points
                .iter()
                .zip(exps)
                .map(|(e, &exp)| {
                    let spread = pathloss_weighted_sum(&xs, &ys, &gain_to_rx, *e, g);
                    if spread.is_finite() {
                        Ok(scale * spread * exp)
                    } else {
                        Err(Error::ZeroDistance("relay-eavesdropper"))
                    }
                })
                .collect::<Result<Vec<f64>>>()?
        }
    };
    Ok(ReceivedPowers { legit, eaves, per_relay, total_relay })
}

/// `sum_i w_i |r_i - e|^(-gamma)` over relay coordinates.
fn pathloss_weighted_sum(xs: &[f64], ys: &[f64], weights: &[f64], e: Point, gamma: f64) -> f64 {
    let dist_sq = |x: f64, y: f64| {
        let dx = x - e.x;
        let dy = y - e.y;
        dx * dx + dy * dy
    };
    if gamma == 2.0 {
        xs.iter().zip(ys).zip(weights).map(|((&x, &y), &w)| w / dist_sq(x, y)).sum()
    } else {
        xs.iter()
            .zip(ys)
            .zip(weights)
            .map(|((&x, &y), &w)| w * pathloss_from_sq(dist_sq(x, y), gamma))
            .sum()
    }
}

/// `(log2(1 + P_l), max_j log2(1 + P_e(j)))` with an empty max of 0.
pub fn stage2_rates(legit_power: f64, eaves_powers: &[f64]) -> Result<(f64, f64)> {
    ensure_nonnegative("legit power", legit_power)?;
    let mut max_eaves = 0.0f64;
    for &p in eaves_powers {
        if !(p >= 0.0) {
            return Err(Error::param("eavesdropper power", format!("must be >= 0, got {p}")));
        }
        max_eaves = max_eaves.max(p);
    }
    Ok((capacity_from_snr(legit_power), capacity_from_snr(max_eaves)))
}

/// Rates and powers of both stages of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRates {
    pub stage1_min_relay_rate: f64,
    pub stage1_max_eaves_rate: f64,
    pub stage2_legit_rate: f64,
    pub stage2_max_eaves_rate: f64,
    pub per_relay_powers: Vec<f64>,
    pub total_relay_power: f64,
    pub received_power_legit: f64,
    pub max_received_power_eaves: f64,
}

impl StageRates {
    /// Evaluates both stages; on a relay shortfall the stage-2 fields are 0.
    pub fn evaluate(realization: &NetworkRealization, cfg: &NetworkConfig, a_e: f64) -> Result<Self> {
        let s1 = stage1_rates(realization, cfg, a_e);
        let mut out = StageRates {
            stage1_min_relay_rate: s1.min_relay_rate,
            stage1_max_eaves_rate: s1.max_eaves_rate,
            stage2_legit_rate: 0.0,
            stage2_max_eaves_rate: 0.0,
            per_relay_powers: Vec::new(),
            total_relay_power: 0.0,
            received_power_legit: 0.0,
            max_received_power_eaves: 0.0,
        };
        if realization.relays.is_shortfall() {
            return Ok(out);
        }
        let powers = received_powers(realization, cfg)?;
        let (legit_rate, eaves_rate) = stage2_rates(powers.legit, &powers.eaves)?;
        out.stage2_legit_rate = legit_rate;
        out.stage2_max_eaves_rate = eaves_rate;
        out.received_power_legit = powers.legit;
        out.max_received_power_eaves = powers.eaves.iter().copied().fold(0.0, f64::max);
        out.total_relay_power = powers.total_relay;
        out.per_relay_powers = powers.per_relay;
        Ok(out)
    }
}
