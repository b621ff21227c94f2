//! End-to-end acceptance checks. Each test prints one PASS/FAIL line on
//! stderr (bypassing the test harness's capture) and then asserts.

use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use svbeam_core::beamform::{received_powers, Stage2EavesFading};
use svbeam_core::channel::complex_gain;
use svbeam_core::geometry::{layer_area, num_layers, uniform_in_disc};
use svbeam_core::moments::{lemma5_exact, mean_pl_0, var_pe_0, var_pl_0, DistributionSpec};
use svbeam_core::montecarlo::{run_trials, summarize, verify_lemmas, verify_moments, verify_theorem4, SimOptions};
use svbeam_core::planner::{a_e_layer, a_e_min, lambda_e_max, plan, t_slack, validate_plan};
use svbeam_core::rng::stream;
use svbeam_core::{NetworkConfig, NetworkRealization, Plan, Point, SecrecyTarget, Stage2Mode};

fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("[acceptance] criterion {criterion}: {verdict} - {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}

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

/// Network sized so that the expected eavesdropper count is half the
/// tolerated count, with both densities at their planned limits.
fn operating_point(p: &Plan, base: &NetworkConfig) -> NetworkConfig {
    let side_sq = p.n_e_max.expect("beamforming plan") as f64 / (2.0 * p.lambda_e_max);
    NetworkConfig {
        legit_density: p.lambda_l_min,
        eaves_density: p.lambda_e_max,
        n_legit: (p.lambda_l_min * side_sq) as u64,
        ..*base
    }
}

#[test]
fn criterion_1_planner_closure() {
    let (cfg, target) = reference();
    let start = Instant::now();
    let p = plan(&cfg, &target).expect("reference plan is feasible");
    let checks = validate_plan(&cfg, &target, &p);
    let elapsed = start.elapsed().as_secs_f64();
    let all_positive = checks.iter().all(|c| c.satisfied && c.margin.is_some_and(|m| m > 0.0));
    let pass = all_positive && elapsed < 1.0;
    report(
        1,
        pass,
        &format!(
            "n_r={} a_l={:.4e} a_e={:.4} lambda_l_min={:.4e} lambda_e_max={:.4e} n_e_max={:?}; {} rows positive; {:.3}s",
            p.n_r,
            p.a_l,
            p.a_e,
            p.lambda_l_min,
            p.lambda_e_max,
            p.n_e_max,
            checks.len(),
            elapsed
        ),
    );
    assert!(pass, "{checks:?}");
}

#[test]
fn criterion_2_outage_guarantee() {
    let (base, target) = reference();
    let p = plan(&base, &target).unwrap();
    let cfg = operating_point(&p, &base);
    let n = 10_000;
    let start = Instant::now();
    let outcomes = run_trials(&p, &cfg, &target, n, 2024, &SimOptions::default()).unwrap();
    let r = summarize(&outcomes, &target, 2024);
    // E7 carries no share of its own; E1..E6 are the budgeted events.
    let budgeted = r.events[..6].iter().all(|e| e.within_budget(3.0));
    let composite = r.composite.outage <= target.outage;
    let pass = budgeted && composite;
    let rates: Vec<String> = r.events.iter().map(|e| format!("{}={:.4}/{:.4}", e.name, e.outage, e.budget)).collect();
    report(
        2,
        pass,
        &format!(
            "{} trials in {:.0}s; {}; composite={:.4} <= {}",
            n,
            start.elapsed().as_secs_f64(),
            rates.join(" "),
            r.composite.outage,
            target.outage
        ),
    );
    assert!(pass, "{r:?}");
}

/// `Var{(sum X_i)^2} / n^2` for `X_i` exponential with mean `m`, using that
/// the sum is Gamma(n, m).
fn gamma_var_pl(n: u64, mu: f64) -> f64 {
    let m = 2.0 * mu;
    let n = n as f64;
    let raw = |k: i32| (0..k).map(|j| n + j as f64).product::<f64>() * m.powi(k);
    (raw(4) - raw(2).powi(2)) / (n * n)
}

/// `Var{|sum Z_i|^2} / n^2` for i.i.d. circular `Z` with `E|Z|^2 = s`,
/// `E|Z|^4 = t`.
fn circular_var_pe(n: u64, mu: f64) -> f64 {
    let s = (2.0 * mu).powi(2);
    let t = (2.0 * (2.0 * mu).powi(2)).powi(2);
    let n = n as f64;
    let fourth = n * t + 2.0 * n * (n - 1.0) * s * s;
    let second = n * s;
    (fourth - second * second) / (n * n)
}

#[test]
fn criterion_3_moment_exactness() {
    let spots = [
        (mean_pl_0(1, 0.5), 2.0, 2.0),
        (var_pl_0(1, 0.5), 20.0, gamma_var_pl(1, 0.5)),
        (var_pe_0(1, 0.5), 3.0, circular_var_pe(1, 0.5)),
        (var_pe_0(3, 0.5), 5.0 / 3.0, circular_var_pe(3, 0.5)),
    ];
    let spots_ok = spots
        .iter()
        .all(|&(formula, value, oracle)| (formula - value).abs() < 1e-12 && (oracle - value).abs() < 1e-12);

    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let (base, _) = reference();
    for (k, n_r) in [1u64, 2, 3, 8, 32].into_iter().enumerate() {
        for (j, mu) in [0.25, 0.5, 1.0].into_iter().enumerate() {
            let cfg = NetworkConfig { rayleigh_mu: mu, ..base };
            let oracle_ok = (var_pl_0(n_r, mu) / gamma_var_pl(n_r, mu) - 1.0).abs() < 1e-12
                && (var_pe_0(n_r, mu) / circular_var_pe(n_r, mu) - 1.0).abs() < 1e-12;
            let checks = verify_moments(&cfg, n_r, 1_000_000, 100 + 10 * k as u64 + j as u64).unwrap();
            for c in &checks {
                worst = worst.max(c.z.abs());
                if !c.passes(5.0) {
                    failures.push(format!("n_r={n_r} mu={mu} {} z={:.2}", c.name, c.z));
                }
            }
            if !oracle_ok {
                failures.push(format!("n_r={n_r} mu={mu} closed form differs from oracle"));
            }
        }
    }
    let pass = spots_ok && failures.is_empty();
    report(3, pass, &format!("15 grid points x 4 statistics, max |z| = {worst:.2}; spot values ok = {spots_ok}"));
    assert!(pass, "{failures:?}");
}

#[test]
fn criterion_4_theorem4_directions() {
    let (base, target) = reference();
    let p = plan(&base, &target).unwrap();
    let cfg = operating_point(&p, &base);
    let start = Instant::now();
    let checks = verify_theorem4(&p, &cfg, 100_000, 44).unwrap();
    let pass = checks.iter().all(|c| c.holds);
    let rows: Vec<String> = checks
        .iter()
        .map(|c| format!("{} {:.6e} vs {:?} {:.6e}", c.name, c.sampled, c.kind, c.bound))
        .collect();
    report(4, pass, &format!("{} ({:.0}s)", rows.join("; "), start.elapsed().as_secs_f64()));
    assert!(pass, "{checks:?}");
}

/// Exact `(lhs, rhs)` by enumerating the four outcomes of two i.i.d.
/// two-point variables.
fn enumerate_two_point(a: f64, b: f64, low: f64, high: f64, p: f64) -> (f64, f64) {
    let support = [(low, 1.0 - p), (high, p)];
    let var = |a: f64, b: f64| {
        let (mut m1, mut m2) = (0.0, 0.0);
        for &(x, px) in &support {
            for &(y, py) in &support {
                let v = (a * x + b * y).powi(2);
                m1 += px * py * v;
                m2 += px * py * v * v;
            }
        }
        m2 - m1 * m1
    };
    (var(a, b), b.powi(4) * var(1.0, 1.0))
}

#[test]
fn criterion_5_lemma_suites() {
    let instances = verify_lemmas(1_000, 20_000, 55);
    let lemma4 = instances.iter().filter(|i| i.gap < -1e-12 * i.distribution.raw_moment(3)).count();
    let exact5 = instances.iter().filter(|i| i.exact_lhs >= i.exact_rhs).count();
    let sampled5 = instances.iter().filter(|i| !i.sampled_holds()).count();

    let mut enumerated = 0;
    let mut enum_violations = 0;
    for i in &instances {
        if let DistributionSpec::TwoPoint { low, high, p_high } = i.distribution {
            let (lhs, rhs) = enumerate_two_point(i.a, i.b, low, high, p_high);
            let (el, er) = lemma5_exact(i.a, i.b, &i.distribution);
            let gap = (1.0 - p_high) * low.powi(3) + p_high * high.powi(3)
                - ((1.0 - p_high) * low.powi(2) + p_high * high.powi(2)) * ((1.0 - p_high) * low + p_high * high);
            enumerated += 1;
            let agree = (lhs - el).abs() <= 1e-9 * er.abs().max(1.0) && (rhs - er).abs() <= 1e-9 * er.abs().max(1.0);
            if !(lhs < rhs) || !agree || gap < -1e-12 {
                enum_violations += 1;
            }
        }
    }
    let pass = lemma4 == 0 && exact5 == 0 && sampled5 == 0 && enum_violations == 0 && enumerated > 0;
    report(
        5,
        pass,
        &format!(
            "1000 instances: lemma4 violations {lemma4}, lemma5 exact {exact5}, sampled beyond 5 SE {sampled5}; {enumerated} two-point enumerations, {enum_violations} violations"
        ),
    );
    assert!(pass);
}

/// The eavesdropper-free radius written with nested logarithms.
fn nested_log_form(cfg: &NetworkConfig, t: &SecrecyTarget) -> f64 {
    let eps = t.epsilon_prime();
    let g = cfg.pathloss_gamma;
    let pre = (cfg.transmit_power * cfg.rayleigh_mu).powf(1.0 / g) / ((t.rho * t.secure_rate).exp2() - 1.0).powf(1.0 / g);
    let ln6 = -6.0 * (-eps).ln_1p();
    let ln3 = -3.0 * (-eps).ln_1p();
    pre * ((ln6 / eps).ln() + (2.0 * eps / ln3.powi(3)).sqrt())
}

#[test]
fn criterion_6_eaves_radius_consistency() {
    let (cfg, base) = reference();
    let mut worst = 0.0f64;
    let mut argmax_ok = true;
    for eps in [1e-4, 1e-3, 1e-2, 0.05, 0.1] {
        let t = SecrecyTarget { outage: 7.0 * eps, ..base };
        let closed = a_e_min(&cfg, &t).unwrap();
        worst = worst.max((closed / nested_log_form(&cfg, &t) - 1.0).abs());

        let lam = lambda_e_max(t.epsilon_prime(), closed);
        let layers = num_layers(1e5, closed);
        let values: Vec<f64> = (1..=layers)
            .map(|k| {
                let area = layer_area(k, closed);
                let slack = t_slack(2f64.powi(k as i32), t.epsilon_prime(), lam, area);
                a_e_layer(&cfg, &t, k, lam, slack, area).unwrap()
            })
            .collect();
        let argmax = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i + 1);
        argmax_ok &= argmax == Some(1) && values[0] <= closed;
    }
    let pass = worst <= 1e-12 && argmax_ok;
    report(6, pass, &format!("max relative difference {worst:.2e}; argmax layer is 1 on all grid points = {argmax_ok}"));
    assert!(pass);
}

#[test]
fn criterion_7_beamforming_oracle() {
    let mut worst = 0.0f64;
    for seed in 0..1_000u64 {
        let mut rng = stream(7_000, seed);
        let n = rng.gen_range(1..=64);
        let n_e = rng.gen_range(0..=6);
        let cfg = NetworkConfig {
            transmit_power: rng.gen_range(0.1..10.0),
            rayleigh_mu: rng.gen_range(0.1..2.0),
            pathloss_gamma: rng.gen_range(2.0..5.0),
            tx_rx_distance: rng.gen_range(1.0..20.0),
            legit_density: 1.0,
            eaves_density: 0.0,
            n_legit: 1,
        };
        let a_l = 0.4 * cfg.tx_rx_distance;
        let legit = (0..n).map(|_| uniform_in_disc(Point::ORIGIN, a_l, &mut rng)).collect();
        let eaves = (0..n_e).map(|_| Point::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0))).collect();
        let r = NetworkRealization::from_points(legit, eaves, a_l, n, cfg.rayleigh_mu, Stage2Mode::Explicit, &mut rng);
        let closed = received_powers(&r, &cfg).unwrap();

        // Raw complex arithmetic: w_i = conj(G_i) / sqrt(n), |sum w_i G|^2 P_T.
        let rx = cfg.receiver();
        let relays: Vec<Point> = r.relay_points().collect();
        let g_rx: Vec<Complex64> = relays
            .iter()
            .zip(&r.stage2_receiver)
            .map(|(p, d)| complex_gain(p.distance(&rx), *d, cfg.pathloss_gamma).unwrap().value())
            .collect();
        let w: Vec<Complex64> = g_rx.iter().map(|g| g.conj() / (n as f64).sqrt()).collect();
        let legit: Complex64 = w.iter().zip(&g_rx).map(|(w, g)| w * g).sum();
        let mut rel = (closed.legit / (legit.norm_sqr() * cfg.transmit_power) - 1.0).abs();
        let Stage2EavesFading::Explicit(draws) = &r.stage2_eaves else { panic!("explicit mode requested") };
        for (j, e) in r.eaves_points.iter().enumerate() {
            let s: Complex64 = relays
                .iter()
                .enumerate()
                .map(|(i, p)| w[i] * complex_gain(p.distance(e), draws[j * n + i], cfg.pathloss_gamma).unwrap().value())
                .sum();
            rel = rel.max((closed.eaves[j] / (s.norm_sqr() * cfg.transmit_power) - 1.0).abs());
        }
        worst = worst.max(rel);
    }
    let pass = worst <= 1e-12;
    report(7, pass, &format!("1000 realizations, max relative difference {worst:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_8_zero_cost_scaling() {
    let (base, target) = reference();
    let reference_plan = plan(&base, &target).unwrap();
    let side = 100.0f64;
    let trials = 200;
    let bound_mean = 2.0 * base.rayleigh_mu * base.transmit_power
        * (base.tx_rx_distance - reference_plan.a_l).powf(-base.pathloss_gamma);
    let mut means = Vec::new();
    let mut plan_constant = true;
    let mut bounded = true;
    let mut e1_ok = true;
    for factor in [1.0, 10.0, 100.0, 1000.0] {
        let density = factor * reference_plan.lambda_l_min;
        let cfg = NetworkConfig {
            legit_density: density,
            eaves_density: reference_plan.lambda_e_max,
            n_legit: (density * side * side) as u64,
            ..base
        };
        let p = plan(&cfg, &target).unwrap();
        plan_constant &= p == reference_plan;
        let outcomes = run_trials(&p, &cfg, &target, trials, 8_000 + factor as u64, &SimOptions::default()).unwrap();
        let r = summarize(&outcomes, &target, 0);
        bounded &= r.mean_total_relay_power <= bound_mean + 5.0 * r.total_relay_power_std_err;
        e1_ok &= r.events[0].outage <= r.events[0].budget + 3.0 * r.events[0].budget_std_err;
        means.push(r.mean_total_relay_power);
    }
    let spread = means.iter().cloned().fold(f64::MIN, f64::max) / means.iter().cloned().fold(f64::MAX, f64::min);
    let pass = plan_constant && bounded && e1_ok && spread <= 1.01;
    report(
        8,
        pass,
        &format!(
            "lambda_l x {{1,10,100,1000}}: plan constant = {plan_constant}, mean relay power {:?} <= {bound_mean:.6} (+5 SE) = {bounded}, spread {spread:.5}",
            means.iter().map(|m| format!("{m:.6}")).collect::<Vec<_>>()
        ),
    );
    assert!(pass);
}
