//! Closed-form design constraints and the planning pipeline.
//!
//! Given `(R_S, epsilon)` the planner fixes, in order: the fading constants
//! `eta` and `nu`, the relay count `n_r`, the relay-disc radius `a_l` (halved
//! after solving its bound), the minimum legitimate density, the
//! eavesdropper-free radius `a_e`, the maximum eavesdropper density and the
//! tolerable eavesdropper count. The overall outage `epsilon` is split into
//! seven shares of `epsilon' = epsilon / 7`.
//!
//! Strict inequalities are realized as "smallest integer strictly above" for
//! counts and a relative margin of [`REL_MARGIN`] for real-valued radii and
//! densities.

use std::f64::consts::{LN_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Constraint, Error, Result};
use crate::geometry::{layer_area, num_layers, NetworkConfig};
use crate::moments::{var_pe_0, var_pl_0};
use crate::SCHEMA_VERSION;

/// Relative slack applied to real-valued strict inequalities.
pub const REL_MARGIN: f64 = 1e-9;

/// Upper end of the relay-count range scanned when certifying `nu`.
pub const NU_SCAN_CAP: u64 = 100_000;

/// Target secure rate and outage plus the two rate-split constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecrecyTarget {
    pub secure_rate: f64,
    pub outage: f64,
    pub rho: f64,
    pub kappa: f64,
}

impl SecrecyTarget {
    pub fn new(secure_rate: f64, outage: f64) -> Self {
        SecrecyTarget { secure_rate, outage, rho: 1.0, kappa: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("secure_rate", self.secure_rate)?;
        if !(self.outage > 0.0 && self.outage < 1.0) {
            return Err(Error::param("outage", format!("must lie in (0, 1), got {}", self.outage)));
        }
        ensure_positive("rho", self.rho)?;
        ensure_positive("kappa", self.kappa)?;
        Ok(())
    }

    /// Per-event share `epsilon / 7`.
    pub fn epsilon_prime(&self) -> f64 {
        self.outage / 7.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Beamforming,
    /// Receiver within `2 a_l`: the first stage alone delivers the message.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub a_l: f64,
    pub a_l_raw: f64,
    pub a_e: f64,
    pub n_r: u64,
    pub lambda_l_min: f64,
    pub lambda_e_max: f64,
    /// `None` in direct mode, where the relay stage is not used.
    pub n_e_max: Option<u64>,
    pub eta: f64,
    pub nu: f64,
    pub epsilon_prime: f64,
    pub mode: Mode,
}

/// Per-layer split of the eavesdropper budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerBudget {
    pub k: u32,
    pub epsilon_k: f64,
    pub beta_k: f64,
    pub slack: f64,
    pub count_cap: f64,
    pub radius_bound: f64,
}

fn eps_prime_checked(target: &SecrecyTarget) -> Result<f64> {
    target.validate()?;
    Ok(target.epsilon_prime())
}

/// Largest `a_l` for which every relay decodes at `(1 + rho) R_S` with
/// outage `epsilon' / n_r` each.
pub fn a_l_upper(cfg: &NetworkConfig, target: &SecrecyTarget, n_r: u64) -> Result<f64> {
    a_l_upper_at(cfg, target, eps_prime_checked(target)?, n_r)
}

fn a_l_upper_at(cfg: &NetworkConfig, target: &SecrecyTarget, eps: f64, n_r: u64) -> Result<f64> {
    if n_r == 0 {
        return Err(Error::param("n_r", "must be >= 1"));
    }
    let per_relay = eps / n_r as f64;
    if !(per_relay < 1.0) {
        return Err(Error::infeasible(Constraint::RelayRadius, format!("epsilon'/n_r = {per_relay} >= 1")));
    }
    let denom = ((1.0 + target.rho) * target.secure_rate).exp2() - 1.0;
    if !(denom > 0.0) {
        return Err(Error::infeasible(Constraint::RelayRadius, "rate threshold is not positive"));
    }
    let num = -cfg.transmit_power * cfg.rayleigh_mu * (-per_relay).ln_1p();
    Ok((num / denom).powf(1.0 / cfg.pathloss_gamma))
}

/// Chebyshev slack `t_k = sqrt(beta_k / (epsilon' lambda_e S_k))`.
pub fn t_slack(beta_k: f64, eps_prime: f64, lambda_e: f64, area: f64) -> f64 {
    (beta_k / (eps_prime * lambda_e * area)).sqrt()
}

/// Lower bound on `a_e` imposed by layer `k` with `(1 + t_k) lambda_e S_k`
/// eavesdroppers in it.
pub fn a_e_layer(
    cfg: &NetworkConfig,
    target: &SecrecyTarget,
    k: u32,
    lambda_e: f64,
    slack: f64,
    area: f64,
) -> Result<f64> {
    let eps = eps_prime_checked(target)?;
    if k == 0 {
        return Err(Error::param("k", "layers are numbered from 1"));
    }
    let per_eaves = eps / (2f64.powi(k as i32) * lambda_e * (1.0 + slack) * area);
    if !(per_eaves > 0.0 && per_eaves < 1.0) {
        return Err(Error::infeasible(
            Constraint::EavesFreeRadius,
            format!("layer {k}: per-eavesdropper outage {per_eaves} outside (0, 1)"),
        ));
    }
    let scale = cfg.transmit_power * cfg.rayleigh_mu / ((target.rho * target.secure_rate).exp2() - 1.0);
    Ok(2f64.powi(1 - k as i32) * (-scale * per_eaves.ln()).powf(1.0 / cfg.pathloss_gamma))
}

/// Closed-form eavesdropper-free radius, independent of the eavesdropper
/// density and of the network size.
pub fn a_e_min(cfg: &NetworkConfig, target: &SecrecyTarget) -> Result<f64> {
    let eps = eps_prime_checked(target)?;
    let log_keep = (-eps).ln_1p(); // ln(1 - eps'), negative
    let c1 = -3.0 * log_keep / (4.0 * eps);
    let c2 = (4.0 / (-3.0 * eps * log_keep)).sqrt();
    let g = cfg.pathloss_gamma;
    let prefactor = (cfg.transmit_power * cfg.rayleigh_mu).powf(1.0 / g)
        / ((target.rho * target.secure_rate).exp2() - 1.0).powf(1.0 / g);
    Ok(prefactor * (3.0 * LN_2 + c1.ln() + c2 / (4.0 * SQRT_2 * c1)))
}

/// `E^2{H^2} = 4 mu^2`.
pub fn eta(mu: f64) -> f64 {
    4.0 * mu * mu
}

/// Smallest `nu` with `nu^2 >= Var{P_l}/(n_r P_T^2)` and
/// `nu^2 >= Var{P_e}/P_T^2` (no path loss) for every `1 <= n_r <= cap`,
/// certified by evaluating the exact variances over the whole range.
pub fn nu(mu: f64, n_r_cap: u64) -> f64 {
    (1..=n_r_cap.max(1))
        .map(|n| (var_pl_0(n, mu) / n as f64).max(var_pe_0(n, mu)))
        .fold(0.0, f64::max)
        .sqrt()
}

fn rate_excess(exponent: f64) -> f64 {
    exponent.exp2() - 1.0
}

/// Geometry-aware relay-count bound (real-valued right-hand side).
pub fn n_r_bound_general(
    cfg: &NetworkConfig,
    target: &SecrecyTarget,
    eta: f64,
    nu: f64,
    a_l: f64,
) -> Result<f64> {
    n_r_bound_general_at(cfg, target, eps_prime_checked(target)?, eta, nu, a_l)
}

fn n_r_bound_general_at(
    cfg: &NetworkConfig,
    target: &SecrecyTarget,
    eps: f64,
    eta: f64,
    nu: f64,
    a_l: f64,
) -> Result<f64> {
    let d = cfg.tx_rx_distance;
    if !(d > a_l) {
        return Err(Error::infeasible(Constraint::RelayCountGeneral, format!("d_TR = {d} <= a_l = {a_l}")));
    }
    let g = cfg.pathloss_gamma;
    let near = (d - a_l).powf(-4.0 * g);
    let far2 = (d + a_l).powf(-2.0 * g);
    let far4 = (d + a_l).powf(-4.0 * g);
    let zeta = nu * nu / eps
        + 4.0 * eta * far2 / (cfg.transmit_power * near) * rate_excess((1.0 + target.kappa) * target.secure_rate);
    Ok(near / (4.0 * eta * eta * far4) * (nu / eps.sqrt() + zeta.sqrt()).powi(2))
}

pub fn n_r_min_general(cfg: &NetworkConfig, target: &SecrecyTarget, eta: f64, nu: f64, a_l: f64) -> Result<u64> {
    n_r_bound_general(cfg, target, eta, nu, a_l).and_then(|b| smallest_count_above(b, Constraint::RelayCountGeneral))
}

/// Simplified relay-count bound, valid when `a_l < d_TR / 2`.
pub fn n_r_bound_simplified(cfg: &NetworkConfig, target: &SecrecyTarget, eta: f64, nu: f64) -> Result<f64> {
    n_r_bound_simplified_at(cfg, target, eps_prime_checked(target)?, eta, nu)
}

fn n_r_bound_simplified_at(cfg: &NetworkConfig, target: &SecrecyTarget, eps: f64, eta: f64, nu: f64) -> Result<f64> {
    ensure_positive("transmit_power", cfg.transmit_power)?;
    let g = cfg.pathloss_gamma;
    let inner = nu * nu / eps
        + 4.0 * eta / cfg.transmit_power
            * cfg.tx_rx_distance.powf(2.0 * g)
            * rate_excess((1.0 + target.kappa) * target.secure_rate);
    Ok(81.0 / (4.0 * eta * eta) * (nu / eps.sqrt() + inner.sqrt()).powi(2))
}

pub fn n_r_min_simplified(cfg: &NetworkConfig, target: &SecrecyTarget, eta: f64, nu: f64) -> Result<u64> {
    n_r_bound_simplified(cfg, target, eta, nu).and_then(|b| smallest_count_above(b, Constraint::RelayCount))
}

fn smallest_count_above(bound: f64, constraint: Constraint) -> Result<u64> {
    if !bound.is_finite() || bound >= u64::MAX as f64 / 2.0 {
        return Err(Error::infeasible(constraint, format!("bound {bound} is not representable")));
    }
    Ok(bound.max(0.0).floor() as u64 + 1)
}

/// Real-valued right-hand side of the eavesdropper-count bound. The mean
/// term carries `P_T`.
pub fn n_e_bound(
    cfg: &NetworkConfig,
    target: &SecrecyTarget,
    eta: f64,
    nu: f64,
    a_l: f64,
    a_e: f64,
) -> Result<f64> {
    n_e_bound_at(cfg, target, eps_prime_checked(target)?, eta, nu, a_l, a_e)
}

fn n_e_bound_at(
    cfg: &NetworkConfig,
    target: &SecrecyTarget,
    eps: f64,
    eta: f64,
    nu: f64,
    a_l: f64,
    a_e: f64,
) -> Result<f64> {
    let d = cfg.tx_rx_distance;
    if !(a_e > a_l) || !(d > a_l) {
        return Err(Error::infeasible(
            Constraint::EavesCount,
            format!("need a_e > a_l and d_TR > a_l (a_l = {a_l}, a_e = {a_e}, d_TR = {d})"),
        ));
    }
    let g = cfg.pathloss_gamma;
    let geo = (a_e - a_l).powf(-g) * (d - a_l).powf(-g);
    let numerator = (target.kappa * target.secure_rate).exp2() - eta * geo * cfg.transmit_power - 1.0;
    if !(numerator > 0.0) {
        return Err(Error::infeasible(
            Constraint::EavesCount,
            format!("scheme infeasible at this geometry: mean eavesdropper SNR exceeds the rate threshold ({numerator})"),
        ));
    }
    Ok(eps * (numerator / (nu * geo * cfg.transmit_power)).powi(2))
}

/// Largest eavesdropper count strictly below [`n_e_bound`].
pub fn n_e_max(
    cfg: &NetworkConfig,
    target: &SecrecyTarget,
    eta: f64,
    nu: f64,
    a_l: f64,
    a_e: f64,
) -> Result<u64> {
    let bound = n_e_bound(cfg, target, eta, nu, a_l, a_e)?;
    if !bound.is_finite() {
        return Err(Error::infeasible(Constraint::EavesCount, "bound is not finite"));
    }
    Ok((bound.ceil() - 1.0).max(0.0) as u64)
}

/// `beta_l = 1 + 1/(2 eps' n_r) + sqrt((1 + 1/(2 eps' n_r))^2 - 1)`.
pub fn beta_l(eps_prime: f64, n_r: u64) -> f64 {
    let x = 1.0 / (2.0 * eps_prime * n_r as f64);
    // (1 + x)^2 - 1 = x (2 + x), avoids cancellation for small x.
    1.0 + x + (x * (2.0 + x)).sqrt()
}

/// Density that puts at least `n_r` legitimate nodes in the relay disc with
/// probability `1 - eps'` (Chebyshev).
pub fn lambda_l_min(eps_prime: f64, n_r: u64, a_l: f64) -> f64 {
    beta_l(eps_prime, n_r) * n_r as f64 / (PI * a_l * a_l)
}

/// Largest density keeping the disc of radius `a_e` empty with probability
/// `1 - eps'`.
pub fn lambda_e_max(eps_prime: f64, a_e: f64) -> f64 {
    -(-eps_prime).ln_1p() / (PI * a_e * a_e)
}

/// Per-layer budgets for layers `1..=K_L` with `beta_k = 2^k`.
pub fn layer_budget(
    cfg: &NetworkConfig,
    target: &SecrecyTarget,
    a_e: f64,
    lambda_e: f64,
    side: f64,
) -> Result<Vec<LayerBudget>> {
    let eps = eps_prime_checked(target)?;
    ensure_positive("a_e", a_e)?;
    ensure_positive("lambda_e", lambda_e)?;
    (1..=num_layers(side, a_e))
        .map(|k| {
            let beta_k = 2f64.powi(k as i32);
            let area = layer_area(k, a_e);
            let slack = t_slack(beta_k, eps, lambda_e, area);
            Ok(LayerBudget {
                k,
                epsilon_k: eps / beta_k,
                beta_k,
                slack,
                count_cap: (1.0 + slack) * lambda_e * area,
                radius_bound: a_e_layer(cfg, target, k, lambda_e, slack, area)?,
            })
        })
        .collect()
}

/// Runs the planning pipeline and self-checks the result.
pub fn plan(cfg: &NetworkConfig, target: &SecrecyTarget) -> Result<Plan> {
    let eps = eps_prime_checked(target)?;
    ensure_positive("transmit_power", cfg.transmit_power)?;
    ensure_positive("rayleigh_mu", cfg.rayleigh_mu)?;
    ensure_positive("tx_rx_distance", cfg.tx_rx_distance)?;
    if !(cfg.pathloss_gamma >= 2.0 && cfg.pathloss_gamma.is_finite()) {
        return Err(Error::param("pathloss_gamma", "must be finite and >= 2"));
    }

    let eta = eta(cfg.rayleigh_mu);
    let nu = nu(cfg.rayleigh_mu, NU_SCAN_CAP);
    let n_r = n_r_min_simplified(cfg, target, eta, nu)?;
    let a_l_raw = a_l_upper(cfg, target, n_r)?;
    let a_l = a_l_raw / 2.0;
    let lambda_l_min = lambda_l_min(eps, n_r, a_l) * (1.0 + REL_MARGIN);
    let a_e = a_e_min(cfg, target)? * (1.0 + REL_MARGIN);
    if !(a_e > a_l) {
        return Err(Error::infeasible(Constraint::RadiiOrder, format!("a_e = {a_e} <= a_l = {a_l}")));
    }
    let lambda_e_max = lambda_e_max(eps, a_e) * (1.0 - REL_MARGIN);
    let mode = if cfg.tx_rx_distance <= 2.0 * a_l { Mode::Direct } else { Mode::Beamforming };
    let n_e_max = match mode {
        Mode::Beamforming => Some(n_e_max(cfg, target, eta, nu, a_l, a_e)?),
        Mode::Direct => None,
    };

    let plan = Plan {
        a_l,
        a_l_raw,
        a_e,
        n_r,
        lambda_l_min,
        lambda_e_max,
        n_e_max,
        eta,
        nu,
        epsilon_prime: eps,
        mode,
    };
    if let Some(failed) = validate_plan(cfg, target, &plan).into_iter().find(|c| !c.satisfied) {
        return Err(Error::infeasible(failed.constraint, format!("self-check failed, margin {:?}", failed.margin)));
    }
    Ok(plan)
}

/// One re-evaluated constraint; `margin` is the signed slack (positive when
/// satisfied) or `None` when the bound could not be evaluated or does not
/// apply in the plan's mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub constraint: Constraint,
    pub satisfied: bool,
    pub margin: Option<f64>,
}

impl ConstraintCheck {
    fn from_margin(constraint: Constraint, margin: Result<f64>) -> Self {
        match margin {
            Ok(m) => ConstraintCheck { constraint, satisfied: m > 0.0, margin: Some(m) },
            Err(_) => ConstraintCheck { constraint, satisfied: false, margin: None },
        }
    }

    fn not_applicable(constraint: Constraint) -> Self {
        ConstraintCheck { constraint, satisfied: true, margin: None }
    }
}

/// Re-evaluates every design constraint against `plan`.
pub fn validate_plan(cfg: &NetworkConfig, target: &SecrecyTarget, plan: &Plan) -> Vec<ConstraintCheck> {
    let eps = target.epsilon_prime();
    let beamforming = plan.mode == Mode::Beamforming;
    let mut checks = vec![
        ConstraintCheck::from_margin(
            Constraint::RelayRadius,
            a_l_upper(cfg, target, plan.n_r).map(|bound| bound - plan.a_l),
        ),
        ConstraintCheck::from_margin(
            Constraint::EavesFreeRadius,
            a_e_min(cfg, target).map(|bound| plan.a_e - bound),
        ),
        ConstraintCheck::from_margin(
            Constraint::RelayCount,
            n_r_bound_simplified(cfg, target, plan.eta, plan.nu).map(|bound| plan.n_r as f64 - bound),
        ),
    ];
    if beamforming {
        checks.push(ConstraintCheck::from_margin(
            Constraint::RelayCountGeneral,
            n_r_bound_general(cfg, target, plan.eta, plan.nu, plan.a_l).map(|bound| plan.n_r as f64 - bound),
        ));
        checks.push(match plan.n_e_max {
            Some(n_e) => ConstraintCheck::from_margin(
                Constraint::EavesCount,
                n_e_bound(cfg, target, plan.eta, plan.nu, plan.a_l, plan.a_e).map(|bound| bound - n_e as f64),
            ),
            None => ConstraintCheck { constraint: Constraint::EavesCount, satisfied: false, margin: None },
        });
    } else {
        checks.push(ConstraintCheck::not_applicable(Constraint::RelayCountGeneral));
        checks.push(ConstraintCheck::not_applicable(Constraint::EavesCount));
    }
    checks.push(ConstraintCheck::from_margin(
        Constraint::LegitDensity,
        if plan.a_l > 0.0 && plan.n_r >= 1 {
            Ok(plan.lambda_l_min - lambda_l_min(eps, plan.n_r, plan.a_l))
        } else {
            Err(Error::param("a_l", "must be positive"))
        },
    ));
    checks.push(ConstraintCheck::from_margin(
        Constraint::EavesDensity,
        Ok(lambda_e_max(eps, plan.a_e) - plan.lambda_e_max),
    ));
    let geometry_margin = cfg.tx_rx_distance / 2.0 - plan.a_l;
    checks.push(ConstraintCheck {
        constraint: Constraint::ReceiverGeometry,
        satisfied: if beamforming { geometry_margin > 0.0 } else { geometry_margin <= 0.0 },
        margin: Some(geometry_margin),
    });
    checks.push(ConstraintCheck::from_margin(Constraint::RadiiOrder, Ok(plan.a_e - plan.a_l)));
    checks
}

/// Flat serialized form of a plan together with its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub spec_version: String,
    #[serde(flatten)]
    pub plan: Plan,
    #[serde(flatten)]
    pub target: SecrecyTarget,
    #[serde(flatten)]
    pub network: NetworkConfig,
}

impl PlanDocument {
    pub fn new(plan: Plan, target: SecrecyTarget, network: NetworkConfig) -> Self {
        PlanDocument { spec_version: SCHEMA_VERSION.to_string(), plan, target, network }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Document(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PlanDocument = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        if doc.spec_version != SCHEMA_VERSION {
            return Err(Error::Document(format!(
                "schema version {} does not match {}",
                doc.spec_version, SCHEMA_VERSION
            )));
        }
        Ok(doc)
    }
}
