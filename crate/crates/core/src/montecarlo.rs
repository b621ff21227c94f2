//! Trial orchestration and empirical verification.
//!
//! Each trial samples a fresh network under a [`Plan`], runs both stages and
//! scores seven sub-events, numbered as in [`EVENT_NAMES`]:
//!
//! | event | holds when |
//! |-------|------------|
//! | E1 | at least `n_r` legitimate nodes lie in the relay disc |
//! | E2 | no eavesdropper lies in the eavesdropper-free disc |
//! | E3 | every relay decodes stage 1 at `(1 + rho) R_S` |
//! | E4 | no eavesdropper exceeds `rho R_S` in stage 1 |
//! | E5 | the receiver gets `(1 + kappa) R_S` in stage 2 |
//! | E6 | no eavesdropper exceeds `kappa R_S` in stage 2 |
//! | E7 | the network holds at most `n_e_max` eavesdroppers |
//!
//! The outage budget is `epsilon'` for every event except E4, which gets
//! `2 epsilon'`. E7 is the premise under which E6's share was derived; it is
//! reported against `epsilon'` too but is not an extra share, so E1..E6 sum
//! to `7 epsilon' = epsilon`. A trial is *secure* when E1 holds and both stages keep a
//! rate gap of at least `R_S` between the intended and the best
//! eavesdropping receiver.
//!
//! Trial `t` under master seed `s` draws from [`stream`]`(s, t)` only, so a
//! run is reproducible regardless of how trials are scheduled.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamform::{sample_realization, NetworkRealization, Stage2Mode, StageRates, EXPLICIT_PAIR_LIMIT};
use crate::channel::{draw_fading, draw_power_gain, pathloss_from_sq};
use crate::error::{Error, Result};
use crate::geometry::{uniform_in_disc, NetworkConfig, Point};
use crate::moments::{
    lemma4_gap, lemma5_check, lemma5_exact, mean_pe_0, mean_pl_0, theorem4_bounds, var_pe_0, var_pl_0,
    DistributionSpec, UniformComponent,
};
use crate::planner::{Mode, Plan, SecrecyTarget};
use crate::rng::stream;
use crate::stats::{binomial_std_err, wilson_interval, Interval, Moments4, Z_95};
use crate::SCHEMA_VERSION;

pub const EVENT_NAMES: [&str; 7] = ["E1", "E2", "E3", "E4", "E5", "E6", "E7"];

/// Outage budget of each event in units of `epsilon'`.
pub const EVENT_BUDGET_SHARES: [f64; 7] = [1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0];

/// Header of the per-trial CSV.
pub const CSV_HEADER: [&str; 18] = [
    "trial_index",
    "E1",
    "E2",
    "E3",
    "E4",
    "E5",
    "E6",
    "E7",
    "composite",
    "min_relay_rate",
    "max_eaves_rate_s1",
    "rate_l_s2",
    "max_eaves_rate_s2",
    "P_l",
    "max_P_e",
    "total_relay_power",
    "n_in_Bl",
    "n_in_Be",
];

/// Samples per independent stream in the moment verifiers.
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimOptions {
    pub stage2: Stage2Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial_index: u64,
    /// E1..E7; `true` means the event holds (no outage).
    pub events: [bool; 7],
    pub composite_secure: bool,
    pub min_relay_rate: f64,
    pub max_eaves_rate_s1: f64,
    pub rate_l_s2: f64,
    pub max_eaves_rate_s2: f64,
    pub p_l: f64,
    pub max_p_e: f64,
    pub total_relay_power: f64,
    pub n_in_bl: u64,
    pub n_in_be: u64,
}

impl TrialOutcome {
    fn csv_record(&self) -> Vec<String> {
        let flag = |b: bool| if b { "1".to_string() } else { "0".to_string() };
        let mut row = Vec::with_capacity(CSV_HEADER.len());
        row.push(self.trial_index.to_string());
        row.extend(self.events.iter().map(|&e| flag(e)));
        row.push(flag(self.composite_secure));
        for x in [
            self.min_relay_rate,
            self.max_eaves_rate_s1,
            self.rate_l_s2,
            self.max_eaves_rate_s2,
            self.p_l,
            self.max_p_e,
            self.total_relay_power,
        ] {
            row.push(x.to_string());
        }
        row.push(self.n_in_bl.to_string());
        row.push(self.n_in_be.to_string());
        row
    }
}

/// One trial with default options.
pub fn run_trial(
    plan: &Plan,
    cfg: &NetworkConfig,
    target: &SecrecyTarget,
    trial_index: u64,
    seed: u64,
) -> Result<TrialOutcome> {
    run_trial_with(plan, cfg, target, trial_index, seed, &SimOptions::default())
}

pub fn run_trial_with(
    plan: &Plan,
    cfg: &NetworkConfig,
    target: &SecrecyTarget,
    trial_index: u64,
    seed: u64,
    options: &SimOptions,
) -> Result<TrialOutcome> {
    let mut rng = stream(seed, trial_index);
    let realization = sample_realization(plan, cfg, options.stage2, &mut rng)?;
    Ok(score(plan, cfg, target, trial_index, &realization))
}

fn score(
    plan: &Plan,
    cfg: &NetworkConfig,
    target: &SecrecyTarget,
    trial_index: u64,
    realization: &NetworkRealization,
) -> TrialOutcome {
    // A relay or eavesdropper landing exactly on another node has
    // probability zero; if it happens, count it against the scheme.
    let rates = StageRates::evaluate(realization, cfg, plan.a_e).unwrap_or_else(|_| {
        let s1 = crate::beamform::stage1_rates(realization, cfg, plan.a_e);
        StageRates {
            stage1_min_relay_rate: s1.min_relay_rate,
            stage1_max_eaves_rate: s1.max_eaves_rate,
            stage2_legit_rate: 0.0,
            stage2_max_eaves_rate: f64::INFINITY,
            per_relay_powers: Vec::new(),
            total_relay_power: 0.0,
            received_power_legit: 0.0,
            max_received_power_eaves: f64::INFINITY,
        }
    });
    let a_e_sq = plan.a_e * plan.a_e;
    let n_in_be = realization
        .eaves_points
        .iter()
        .filter(|p| p.distance_sq(&Point::ORIGIN) <= a_e_sq)
        .count() as u64;
    let n_e = realization.eaves_points.len() as u64;
    let r_s = target.secure_rate;
    let e1 = !realization.relays.is_shortfall();
    let events = [
        e1,
        n_in_be == 0,
        rates.stage1_min_relay_rate >= (1.0 + target.rho) * r_s,
        rates.stage1_max_eaves_rate <= target.rho * r_s,
        rates.stage2_legit_rate >= (1.0 + target.kappa) * r_s,
        rates.stage2_max_eaves_rate <= target.kappa * r_s,
        plan.n_e_max.map_or(true, |cap| n_e <= cap),
    ];
    let composite_secure = e1
        && rates.stage1_min_relay_rate - rates.stage1_max_eaves_rate >= r_s
        && rates.stage2_legit_rate - rates.stage2_max_eaves_rate >= r_s;
    TrialOutcome {
        trial_index,
        events,
        composite_secure,
        min_relay_rate: rates.stage1_min_relay_rate,
        max_eaves_rate_s1: rates.stage1_max_eaves_rate,
        rate_l_s2: rates.stage2_legit_rate,
        max_eaves_rate_s2: rates.stage2_max_eaves_rate,
        p_l: rates.received_power_legit,
        max_p_e: rates.max_received_power_eaves,
        total_relay_power: rates.total_relay_power,
        n_in_bl: realization.n_in_relay_disc,
        n_in_be,
    }
}

/// Runs trials `0..n_trials` in parallel; the result is in trial order.
pub fn run_trials(
    plan: &Plan,
    cfg: &NetworkConfig,
    target: &SecrecyTarget,
    n_trials: u64,
    seed: u64,
    options: &SimOptions,
) -> Result<Vec<TrialOutcome>> {
    if n_trials == 0 {
        return Err(Error::param("n_trials", "must be >= 1"));
    }
    if plan.mode == Mode::Direct {
        return Err(Error::DirectMode);
    }
    cfg.validate()?;
    target.validate()?;
    (0..n_trials)
        .into_par_iter()
        .map(|t| run_trial_with(plan, cfg, target, t, seed, options))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRate {
    pub name: String,
    pub outage: f64,
    pub budget: f64,
    /// Binomial standard error at the budget, `sqrt(b (1 - b) / n)`.
    pub budget_std_err: f64,
    pub interval: Interval,
}

impl EventRate {
    fn new(name: &str, failures: u64, trials: u64, budget: f64) -> Self {
        EventRate {
            name: name.to_string(),
            outage: failures as f64 / trials as f64,
            budget,
            budget_std_err: binomial_std_err(budget, trials),
            interval: wilson_interval(failures, trials, Z_95),
        }
    }

    /// Outage within the budget plus `k` standard errors.
    pub fn within_budget(&self, k: f64) -> bool {
        self.outage <= self.budget + k * self.budget_std_err
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageReport {
    pub spec_version: String,
    pub trials: u64,
    pub seed: u64,
    pub interval_method: String,
    pub events: Vec<EventRate>,
    pub composite: EventRate,
    pub mean_p_l: f64,
    pub var_p_l: f64,
    pub mean_max_p_e: f64,
    pub var_max_p_e: f64,
    pub mean_total_relay_power: f64,
    pub total_relay_power_std_err: f64,
}

impl OutageReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Document(e.to_string()))
    }
}

/// Aggregates outcomes (in the given order) into a report.
pub fn summarize(outcomes: &[TrialOutcome], target: &SecrecyTarget, seed: u64) -> OutageReport {
    let n = outcomes.len() as u64;
    let eps = target.epsilon_prime();
    let events = (0..7)
        .map(|k| {
            let failures = outcomes.iter().filter(|o| !o.events[k]).count() as u64;
            EventRate::new(EVENT_NAMES[k], failures, n, EVENT_BUDGET_SHARES[k] * eps)
        })
        .collect();
    let insecure = outcomes.iter().filter(|o| !o.composite_secure).count() as u64;
    // Moments over relay-complete trials only; shortfall trials carry no stage 2.
    let complete: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.events[0]).collect();
    let p_l: Moments4 = complete.iter().map(|o| o.p_l).collect();
    let p_e: Moments4 = complete.iter().map(|o| o.max_p_e).collect();
    let power: Moments4 = complete.iter().map(|o| o.total_relay_power).collect();
    OutageReport {
        spec_version: SCHEMA_VERSION.to_string(),
        trials: n,
        seed,
        interval_method: "wilson".to_string(),
        events,
        composite: EventRate::new("composite", insecure, n, target.outage),
        mean_p_l: p_l.mean(),
        var_p_l: p_l.variance(),
        mean_max_p_e: p_e.mean(),
        var_max_p_e: p_e.variance(),
        mean_total_relay_power: power.mean(),
        total_relay_power_std_err: power.mean_std_err(),
    }
}

pub fn estimate_outage(
    plan: &Plan,
    cfg: &NetworkConfig,
    target: &SecrecyTarget,
    n_trials: u64,
    seed: u64,
) -> Result<OutageReport> {
    let outcomes = run_trials(plan, cfg, target, n_trials, seed, &SimOptions::default())?;
    Ok(summarize(&outcomes, target, seed))
}

pub fn write_trials_csv<W: Write>(outcomes: &[TrialOutcome], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Document(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for o in outcomes {
        w.write_record(o.csv_record()).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Document(e.to_string()))
}

/// Sampled statistic against a reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub name: String,
    pub estimate: f64,
    pub std_err: f64,
    pub reference: f64,
    pub z: f64,
}

impl MomentCheck {
    fn new(name: &str, estimate: f64, std_err: f64, reference: f64) -> Self {
        MomentCheck { name: name.to_string(), estimate, std_err, reference, z: (estimate - reference) / std_err }
    }

    pub fn passes(&self, z_max: f64) -> bool {
        self.z.abs() < z_max
    }
}

fn chunked<F>(n_samples: u64, seed: u64, per_chunk: F) -> Vec<Moments4>
where
    F: Fn(&mut crate::rng::SimRng, u64) -> Vec<Moments4> + Sync,
{
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<Vec<Moments4>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(n_samples - c * CHUNK);
            per_chunk(&mut stream(seed, c), len)
        })
        .collect();
    let mut acc = vec![Moments4::new(); parts.first().map_or(0, Vec::len)];
    for part in &parts {
        for (a, p) in acc.iter_mut().zip(part) {
            a.merge(p);
        }
    }
    acc
}

/// Compares sampled received-power moments at unit distances (so only the
/// fading is random) with their closed forms. Powers are in absolute units,
/// scaled by `P_T`.
pub fn verify_moments(cfg: &NetworkConfig, n_r: u64, n_samples: u64, seed: u64) -> Result<Vec<MomentCheck>> {
    if n_r == 0 {
        return Err(Error::param("n_r", "must be >= 1"));
    }
    if n_samples < 2 {
        return Err(Error::param("n_samples", "must be >= 2"));
    }
    crate::error::ensure_positive("transmit_power", cfg.transmit_power)?;
    crate::error::ensure_positive("rayleigh_mu", cfg.rayleigh_mu)?;
    let mu = cfg.rayleigh_mu;
    let p_t = cfg.transmit_power;
    let n = n_r as usize;
    let acc = chunked(n_samples, seed, |rng, len| {
        let mut pl = Moments4::new();
        let mut pe = Moments4::new();
        for _ in 0..len {
            let (mut coherent, mut re, mut im) = (0.0, 0.0, 0.0);
            for _ in 0..n {
                let to_rx = draw_fading(mu, rng);
                let to_e = draw_fading(mu, rng);
                coherent += to_rx.power();
                let amp = to_rx.magnitude * to_e.magnitude;
                let phase = to_e.phase - to_rx.phase;
                re += amp * phase.cos();
                im += amp * phase.sin();
            }
            pl.push(p_t * coherent * coherent / n as f64);
            pe.push(p_t * (re * re + im * im) / n as f64);
        }
        vec![pl, pe]
    });
    let (pl, pe) = (&acc[0], &acc[1]);
    Ok(vec![
        MomentCheck::new("mean_P_l", pl.mean(), pl.mean_std_err(), p_t * mean_pl_0(n_r, mu)),
        MomentCheck::new("var_P_l", pl.variance(), pl.variance_std_err(), p_t * p_t * var_pl_0(n_r, mu)),
        MomentCheck::new("mean_P_e", pe.mean(), pe.mean_std_err(), p_t * mean_pe_0(mu)),
        MomentCheck::new("var_P_e", pe.variance(), pe.variance_std_err(), p_t * p_t * var_pe_0(n_r, mu)),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Lower,
    Upper,
}

/// Sampled statistic against a one-sided bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub sampled: f64,
    pub std_err: f64,
    pub bound: f64,
    pub kind: BoundKind,
    pub holds: bool,
}

impl BoundCheck {
    fn new(name: &str, m: &Moments4, variance: bool, bound: f64, kind: BoundKind) -> Self {
        let (sampled, std_err) =
            if variance { (m.variance(), m.variance_std_err()) } else { (m.mean(), m.mean_std_err()) };
        let holds = match kind {
            BoundKind::Lower => sampled >= bound,
            BoundKind::Upper => sampled <= bound,
        };
        BoundCheck { name: name.to_string(), sampled, std_err, bound, kind, holds }
    }
}

/// Uniform point of the square `[-side/2, side/2]^2` at distance more than
/// `radius` from the origin.
fn uniform_outside_disc<R: Rng + ?Sized>(radius: f64, side: f64, rng: &mut R) -> Point {
    let half = side / 2.0;
    loop {
        let p = Point::new(rng.gen_range(-half..half), rng.gen_range(-half..half));
        if p.norm() > radius {
            return p;
        }
    }
}

/// Samples `n_r` relays uniformly in the relay disc and one eavesdropper
/// uniformly over the square outside the eavesdropper-free disc, and checks
/// the sampled means and variances of the received powers (divided by `P_T`
/// and `P_T^2`) against the path-loss bounds.
pub fn verify_theorem4(plan: &Plan, cfg: &NetworkConfig, n_samples: u64, seed: u64) -> Result<Vec<BoundCheck>> {
    let explicit = usize::try_from(plan.n_r).map_or(false, |n| n <= EXPLICIT_PAIR_LIMIT);
    let bounds = theorem4_bounds(cfg, plan.eta, plan.nu, plan.n_r, plan.a_l, plan.a_e)?;
    let (pl, pe) = theorem4_moments(plan, cfg, n_samples, seed, explicit)?;
    Ok(vec![
        BoundCheck::new("mean_P_l", &pl, false, bounds.mean_pl_lower, BoundKind::Lower),
        BoundCheck::new("mean_P_e", &pe, false, bounds.mean_pe_upper, BoundKind::Upper),
        BoundCheck::new("var_P_l", &pl, true, bounds.var_pl_upper, BoundKind::Upper),
        BoundCheck::new("var_P_e", &pe, true, bounds.var_pe_upper, BoundKind::Upper),
    ])
}

/// Normalized `(P_l, P_e)` moments. With `explicit` every relay-eavesdropper
/// link gets its own fading; otherwise the collapsed law is streamed without
/// storing relays.
fn theorem4_moments(
    plan: &Plan,
    cfg: &NetworkConfig,
    n_samples: u64,
    seed: u64,
    explicit: bool,
) -> Result<(Moments4, Moments4)> {
    if n_samples < 2 {
        return Err(Error::param("n_samples", "must be >= 2"));
    }
    let side = cfg.side();
    if !(side / 2.0 * std::f64::consts::SQRT_2 > plan.a_e) {
        return Err(Error::param("side", "the network square lies inside the eavesdropper-free disc"));
    }
    let n = usize::try_from(plan.n_r).map_err(|_| Error::param("n_r", "too large"))?;
    let p_t = cfg.transmit_power;
    let mu = cfg.rayleigh_mu;
    let gamma = cfg.pathloss_gamma;
    let rx = cfg.receiver();
    let sample_once = |rng: &mut crate::rng::SimRng| -> Result<(f64, f64)> {
        if explicit {
            let relays: Vec<Point> = (0..n).map(|_| uniform_in_disc(Point::ORIGIN, plan.a_l, rng)).collect();
            let e = uniform_outside_disc(plan.a_e, side, rng);
            let r = NetworkRealization::from_points(relays, vec![e], plan.a_l, n, mu, Stage2Mode::Explicit, rng);
            let p = crate::beamform::received_powers(&r, cfg)?;
            return Ok((p.legit / p_t, p.eaves[0] / p_t));
        }
        let e = uniform_outside_disc(plan.a_e, side, rng);
        let (mut coherent, mut spread) = (0.0, 0.0);
        for _ in 0..n {
            let r = uniform_in_disc(Point::ORIGIN, plan.a_l, rng);
            let a = draw_power_gain(mu, rng) * pathloss_from_sq(r.distance_sq(&rx), gamma);
            coherent += a;
            spread += a * pathloss_from_sq(r.distance_sq(&e), gamma);
        }
        let exp: f64 = Exp1.sample(rng);
        let n = n as f64;
        Ok((coherent * coherent / n, 2.0 * mu * spread / n * exp))
    };
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<Result<[Moments4; 2]>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c);
            let mut acc = [Moments4::new(), Moments4::new()];
            for _ in 0..CHUNK.min(n_samples - c * CHUNK) {
                let (pl, pe) = sample_once(&mut rng)?;
                acc[0].push(pl);
                acc[1].push(pe);
            }
            Ok(acc)
        })
        .collect();
    let mut pl = Moments4::new();
    let mut pe = Moments4::new();
    for part in parts {
        let [a, b] = part?;
        pl.merge(&a);
        pe.merge(&b);
    }
    Ok((pl, pe))
}

/// Outcome of the two inequality predicates on one random instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaInstance {
    pub distribution: DistributionSpec,
    pub a: f64,
    pub b: f64,
    pub gap: f64,
    pub exact_lhs: f64,
    pub exact_rhs: f64,
    /// Sampled `(rhs - lhs)` in standard errors; `None` when no samples were drawn.
    pub sampled_margin_z: Option<f64>,
}

impl LemmaInstance {
    pub fn exact_holds(&self) -> bool {
        self.gap >= -1e-12 * self.distribution.raw_moment(3) && self.exact_lhs < self.exact_rhs
    }

    /// A sampled violation counts only beyond five standard errors.
    pub fn sampled_holds(&self) -> bool {
        self.sampled_margin_z.map_or(true, |z| z > -5.0)
    }
}

/// Random member of one of the three families, chosen by `family % 3`.
pub fn random_distribution<R: Rng + ?Sized>(family: u64, rng: &mut R) -> DistributionSpec {
    match family % 3 {
        0 => DistributionSpec::Rayleigh { mu: 10f64.powf(rng.gen_range(-2.0..2.0)) },
        1 => {
            let low = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..2.0) };
            DistributionSpec::TwoPoint { low, high: low + rng.gen_range(0.01..3.0), p_high: rng.gen_range(0.02..0.98) }
        }
        _ => {
            let k = rng.gen_range(1..=4);
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let components = raw
                .iter()
                .map(|w| {
                    let low = rng.gen_range(0.0..3.0);
                    UniformComponent { weight: w / total, low, high: low + rng.gen_range(0.01..2.0) }
                })
                .collect();
            DistributionSpec::UniformMixture { components }
        }
    }
}

/// Draws `instances` random `(distribution, 0 < a < b)` triples cycling
/// through the families and evaluates both predicates exactly and, when
/// `samples > 0`, by sampling.
pub fn verify_lemmas(instances: u64, samples: usize, seed: u64) -> Vec<LemmaInstance> {
    (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let distribution = random_distribution(i, &mut rng);
            let b = rng.gen_range(0.1..3.0);
            let a = b * rng.gen_range(0.01..0.99);
            let (exact_lhs, exact_rhs) = lemma5_exact(a, b, &distribution);
            let sampled_margin_z =
                (samples > 0).then(|| lemma5_check(a, b, &distribution, samples, &mut rng).margin_z());
            LemmaInstance { gap: lemma4_gap(&distribution), a, b, exact_lhs, exact_rhs, sampled_margin_z, distribution }
        })
        .collect()
}

/// Legitimate density putting `mean` nodes in the relay disc on average.
pub fn density_for_disc_mean(mean: f64, a_l: f64) -> f64 {
    mean / (PI * a_l * a_l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::plan;

    fn reference() -> (NetworkConfig, SecrecyTarget) {
        let cfg = NetworkConfig {
            transmit_power: 1.0,
            rayleigh_mu: 0.5,
            pathloss_gamma: 2.0,
            tx_rx_distance: 5.0,
            legit_density: 1.0,
            eaves_density: 0.0,
            n_legit: 1,
        };
        (cfg, SecrecyTarget::new(0.5, 0.35))
    }

    /// A small hand-made plan so tests run quickly.
    fn small_setup(eaves_density: f64) -> (Plan, NetworkConfig, SecrecyTarget) {
        let (base, target) = reference();
        let p = Plan {
            a_l: 0.5,
            a_l_raw: 1.0,
            a_e: 3.0,
            n_r: 20,
            lambda_l_min: 0.0,
            lambda_e_max: 0.0,
            n_e_max: Some(30),
            eta: 1.0,
            nu: 20f64.sqrt(),
            epsilon_prime: target.epsilon_prime(),
            mode: Mode::Beamforming,
        };
        let cfg = NetworkConfig {
            legit_density: density_for_disc_mean(40.0, 0.5),
            eaves_density,
            n_legit: (density_for_disc_mean(40.0, 0.5) * 900.0) as u64,
            tx_rx_distance: 2.0,
            ..base
        };
        (p, cfg, target)
    }

    #[test]
    fn budgets_sum_to_outage() {
        let t = SecrecyTarget::new(0.5, 0.35);
        // The count event E7 is the premise of E6's share rather than a
        // separate share, so E1..E6 already exhaust the outage.
        let shares: f64 = EVENT_BUDGET_SHARES[..6].iter().sum();
        assert_eq!(shares, 7.0);
        assert_eq!(shares * t.epsilon_prime(), t.outage);
    }

    #[test]
    fn no_eavesdroppers_means_no_eavesdropper_outage() {
        let (p, c, t) = small_setup(0.0);
        for o in run_trials(&p, &c, &t, 200, 3, &SimOptions::default()).unwrap() {
            assert!(o.events[1] && o.events[3] && o.events[5] && o.events[6]);
            assert_eq!(o.max_eaves_rate_s1, 0.0);
        }
    }

    #[test]
    fn easy_operating_point_is_secure() {
        let (mut c, t) = reference();
        c.tx_rx_distance = 1.0;
        let p = plan(&c, &t).unwrap();
        c.legit_density = 100.0 * p.lambda_l_min;
        c.n_legit = (c.legit_density * 1e4) as u64;
        let report = estimate_outage(&p, &c, &t, 100, 8).unwrap();
        assert!(report.composite.outage <= t.outage, "{}", report.composite.outage);
    }

    #[test]
    fn trials_are_reproducible() {
        let (p, c, t) = small_setup(0.05);
        let a = run_trial(&p, &c, &t, 17, 99).unwrap();
        let b = run_trial(&p, &c, &t, 17, 99).unwrap();
        assert_eq!(a, b);
        let batch = run_trials(&p, &c, &t, 30, 99, &SimOptions::default()).unwrap();
        assert_eq!(batch[17], a);
    }

    #[test]
    fn composite_implies_gaps_and_e1() {
        let (p, c, t) = small_setup(0.02);
        for o in run_trials(&p, &c, &t, 300, 4, &SimOptions::default()).unwrap() {
            if o.composite_secure {
                assert!(o.events[0]);
                assert!(o.min_relay_rate - o.max_eaves_rate_s1 >= t.secure_rate);
                assert!(o.rate_l_s2 - o.max_eaves_rate_s2 >= t.secure_rate);
            }
        }
    }

    #[test]
    fn shortfall_trials() {
        let (p, mut c, t) = small_setup(0.0);
        c.legit_density = density_for_disc_mean(2.0, p.a_l);
        let outs = run_trials(&p, &c, &t, 50, 5, &SimOptions::default()).unwrap();
        for o in outs {
            assert!(!o.events[0] && !o.composite_secure && !o.events[4] && o.events[5]);
            assert_eq!(o.p_l, 0.0);
        }
    }

    #[test]
    fn single_trial_rates_are_extreme() {
        let (p, c, t) = small_setup(0.01);
        let r = estimate_outage(&p, &c, &t, 1, 0).unwrap();
        for e in r.events.iter().chain(std::iter::once(&r.composite)) {
            assert!(e.outage == 0.0 || e.outage == 1.0);
            assert!(e.interval.lower <= e.outage && e.outage <= e.interval.upper);
        }
    }

    #[test]
    fn direct_mode_is_rejected() {
        let (mut p, c, t) = small_setup(0.0);
        p.mode = Mode::Direct;
        assert_eq!(run_trial(&p, &c, &t, 0, 0), Err(Error::DirectMode));
    }

    #[test]
    fn csv_is_stable() {
        let (p, c, t) = small_setup(0.02);
        let outs = run_trials(&p, &c, &t, 5, 1, &SimOptions::default()).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_trials_csv(&outs, &mut a).unwrap();
        write_trials_csv(&run_trials(&p, &c, &t, 5, 1, &SimOptions::default()).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert!(lines[1].starts_with("0,"));
        assert_eq!(lines[1].split(',').count(), CSV_HEADER.len());
    }

    #[test]
    fn moment_verifier_examples() {
        let (c, _) = reference();
        let checks = verify_moments(&c, 1, 200_000, 1).unwrap();
        assert_eq!(checks[0].reference, 2.0);
        assert!(checks.iter().all(|m| m.passes(5.0)), "{checks:?}");
        let checks = verify_moments(&c, 3, 200_000, 2).unwrap();
        assert!((checks[3].reference - 5.0 / 3.0).abs() < 1e-14);
        assert!(checks.iter().all(|m| m.passes(5.0)), "{checks:?}");
    }

    #[test]
    fn moment_references_scale_with_mu() {
        let (c, _) = reference();
        let doubled = NetworkConfig { rayleigh_mu: 1.0, ..c };
        let a = verify_moments(&c, 2, 2, 0).unwrap();
        let b = verify_moments(&doubled, 2, 2, 0).unwrap();
        for (k, factor) in [(0, 4.0), (1, 16.0), (2, 4.0), (3, 16.0)] {
            assert!((b[k].reference / a[k].reference - factor).abs() < 1e-12);
        }
    }

    #[test]
    fn theorem4_small_geometry() {
        let (p, mut c, _) = small_setup(0.0);
        c.n_legit = (c.legit_density * 400.0) as u64;
        for n_r in [1, 20] {
            let plan = Plan { n_r, ..p };
            let checks = verify_theorem4(&plan, &c, 20_000, 6).unwrap();
            assert!(checks.iter().all(|x| x.holds), "{checks:?}");
        }
        // Shrinking the relay disc makes the mean lower bound approach
        // eta n_r d^(-2 gamma) from below.
        let tiny = Plan { a_l: 1e-6, ..p };
        let checks = verify_theorem4(&tiny, &c, 20_000, 7).unwrap();
        let limit = tiny.eta * tiny.n_r as f64 * c.tx_rx_distance.powf(-4.0);
        assert!((checks[0].bound / limit - 1.0).abs() < 1e-5);
        assert!(checks[0].sampled > checks[0].bound);
    }

    #[test]
    fn streamed_theorem4_sampler_agrees_with_explicit() {
        let (p, mut c, _) = small_setup(0.0);
        c.n_legit = (c.legit_density * 100.0) as u64;
        let (pl_a, pe_a) = theorem4_moments(&p, &c, 30_000, 1, true).unwrap();
        let (pl_b, pe_b) = theorem4_moments(&p, &c, 30_000, 2, false).unwrap();
        for (a, b) in [(pl_a, pl_b), (pe_a, pe_b)] {
            let z = (a.mean() - b.mean()) / a.mean_std_err().hypot(b.mean_std_err());
            assert!(z.abs() < 5.0, "mean z {z}");
            let z = (a.variance() - b.variance()) / a.variance_std_err().hypot(b.variance_std_err());
            assert!(z.abs() < 5.0, "variance z {z}");
        }
    }

    #[test]
    fn lemma_instances_hold() {
        let inst = verify_lemmas(60, 2_000, 5);
        assert_eq!(inst.len(), 60);
        assert!(inst.iter().all(|i| i.exact_holds() && i.sampled_holds()));
        let families: std::collections::HashSet<_> =
            inst.iter().map(|i| std::mem::discriminant(&i.distribution)).collect();
        assert_eq!(families.len(), 3);
    }

    #[test]
    fn reference_plan_trial_runs() {
        let (mut c, t) = reference();
        let p = plan(&c, &t).unwrap();
        c.legit_density = p.lambda_l_min;
        c.eaves_density = p.lambda_e_max;
        c.n_legit = (p.lambda_l_min * 100.0 * 100.0) as u64;
        let o = run_trial(&p, &c, &t, 0, 1).unwrap();
        assert!(o.n_in_bl > 0);
    }
}
