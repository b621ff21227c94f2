use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;
use svbeam_core::montecarlo::{self, BoundCheck, LemmaInstance, MomentCheck, SimOptions};
use svbeam_core::planner::{self, validate_plan, ConstraintCheck};
use svbeam_core::{Error, Mode, NetworkConfig, Plan, PlanDocument, SecrecyTarget};

use crate::manifest::{manifest_path, RunManifest};
use crate::{PlanArgs, ScenarioArgs, SimulateArgs, VerifyLemmasArgs, VerifyMomentsArgs, VerifyTheorem4Args};

/// A check failed or the target is infeasible.
pub const EXIT_FAILURE: u8 = 1;
/// Bad flags; matches clap's own usage-error status.
pub const EXIT_USAGE: u8 = 2;

/// Z-score limit for the sampled checks.
const Z_LIMIT: f64 = 5.0;

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn scenario(args: &ScenarioArgs) -> (NetworkConfig, SecrecyTarget) {
    let cfg = NetworkConfig {
        transmit_power: args.power,
        rayleigh_mu: args.mu,
        pathloss_gamma: args.gamma,
        tx_rx_distance: args.dtr,
        legit_density: 1.0,
        eaves_density: 0.0,
        n_legit: 1,
    };
    let target = SecrecyTarget { secure_rate: args.rate, outage: args.outage, rho: args.rho, kappa: args.kappa };
    (cfg, target)
}

/// Network echo for a plan: both densities at their planned limits and,
/// unless given, a side for which the expected eavesdropper count is half of
/// `n_e_max` (a few `a_e` across in direct mode).
pub fn planned_network(cfg: &NetworkConfig, p: &Plan, n_legit: Option<u64>) -> NetworkConfig {
    let side_sq = match p.n_e_max {
        Some(n_e) if n_e > 0 => n_e as f64 / (2.0 * p.lambda_e_max),
        _ => (4.0 * p.a_e).powi(2),
    };
    NetworkConfig {
        legit_density: p.lambda_l_min,
        eaves_density: p.lambda_e_max,
        n_legit: n_legit.unwrap_or_else(|| ((p.lambda_l_min * side_sq) as u64).max(1)),
        ..*cfg
    }
}

fn check_table(checks: &[ConstraintCheck]) -> String {
    let mut out = String::from("constraint            status  margin\n");
    for c in checks {
        let margin = c.margin.map_or_else(|| "n/a".to_string(), |m| format!("{m:.6e}"));
        let status = if c.satisfied { "ok" } else { "FAIL" };
        out.push_str(&format!("{:<21} {:<7} {}\n", c.constraint.name(), status, margin));
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_text(path, &(text + "\n"))
}

fn exit_for(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}

pub fn plan(args: &PlanArgs) -> Result<ExitCode> {
    let (cfg, target) = scenario(&args.scenario);
    let p = match planner::plan(&cfg, &target) {
        Ok(p) => p,
        Err(Error::Infeasible { constraint, detail }) => {
            eprintln!("infeasible: constraint {constraint}: {detail}");
            return Ok(ExitCode::from(EXIT_FAILURE));
        }
        Err(e @ Error::InvalidParameter { .. }) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_USAGE));
        }
        Err(e) => return Err(e.into()),
    };
    let network = planned_network(&cfg, &p, args.scenario.nlegit);
    let doc = PlanDocument::new(p, target, network);
    let text = doc.to_json()? + "\n";
    match &args.out {
        Some(path) => write_text(path, &text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    let checks = validate_plan(&network, &target, &p);
    eprint!("{}", check_table(&checks));
    Ok(exit_for(checks.iter().all(|c| c.satisfied)))
}

fn read_plan(path: &Path) -> Result<PlanDocument> {
    let text = fs::read_to_string(path).with_context(|| format!("reading plan {}", path.display()))?;
    PlanDocument::from_json(&text).with_context(|| format!("parsing plan {}", path.display()))
}

pub fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let doc = read_plan(&args.plan)?;
    if doc.plan.mode == Mode::Direct {
        anyhow::bail!("plan is in direct mode; there is no relay stage to simulate");
    }
    let mut cfg = doc.network;
    if let Some(l) = args.lambda_l {
        cfg.legit_density = l;
    }
    if let Some(l) = args.lambda_e {
        cfg.eaves_density = l;
    }
    let options = SimOptions { stage2: args.stage2.into() };
    let outcomes = montecarlo::run_trials(&doc.plan, &cfg, &doc.target, args.trials, args.seed, &options)?;
    let report = montecarlo::summarize(&outcomes, &doc.target, args.seed);

    let csv = fs::File::create(&args.csv).with_context(|| format!("creating {}", args.csv.display()))?;
    montecarlo::write_trials_csv(&outcomes, BufWriter::new(csv))?;

    let manifest = RunManifest::new(
        "simulate",
        json!({
            "plan": args.plan.display().to_string(),
            "trials": args.trials,
            "stage2": format!("{:?}", options.stage2).to_lowercase(),
            "network": cfg,
            "target": doc.target,
        }),
        Some(args.seed),
        &[&args.csv, &args.json],
    );
    write_json(&manifest_path(&args.csv), &manifest)?;
    write_json(&args.json, &json!({ "manifest": manifest, "report": report }))?;

    eprintln!("trials {}  composite outage {:.5} (budget {})", report.trials, report.composite.outage, doc.target.outage);
    for e in &report.events {
        eprintln!(
            "{}  outage {:.5}  budget {:.5}  95% [{:.5}, {:.5}]",
            e.name, e.outage, e.budget, e.interval.lower, e.interval.upper
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn emit_report<T: Serialize>(path: Option<&Path>, command: &str, params: serde_json::Value, seed: u64, rows: &T) -> Result<()> {
    if let Some(path) = path {
        let manifest = RunManifest::new(command, params, Some(seed), &[path]);
        write_json(path, &json!({ "manifest": manifest, "checks": rows }))?;
    }
    Ok(())
}

fn print_moment_rows(rows: &[MomentCheck]) -> bool {
    println!("statistic   estimate        std_err         closed_form     z");
    let mut ok = true;
    for r in rows {
        let pass = r.passes(Z_LIMIT);
        ok &= pass;
        println!(
            "{:<11} {:<15.8e} {:<15.3e} {:<15.8e} {:+.3}{}",
            r.name,
            r.estimate,
            r.std_err,
            r.reference,
            r.z,
            if pass { "" } else { "  FAIL" }
        );
    }
    ok
}

pub fn verify_moments(args: &VerifyMomentsArgs) -> Result<ExitCode> {
    let cfg = NetworkConfig {
        transmit_power: args.power,
        rayleigh_mu: args.mu,
        pathloss_gamma: 2.0,
        tx_rx_distance: 1.0,
        legit_density: 1.0,
        eaves_density: 0.0,
        n_legit: 1,
    };
    let rows = montecarlo::verify_moments(&cfg, args.nr, args.samples, args.seed)?;
    let ok = print_moment_rows(&rows);
    if !ok {
        for r in rows.iter().filter(|r| !r.passes(Z_LIMIT)) {
            eprintln!("failed: {} z={:.3}", r.name, r.z);
        }
    }
    let params = json!({ "mu": args.mu, "nr": args.nr, "power": args.power, "samples": args.samples });
    emit_report(args.json.as_deref(), "verify moments", params, args.seed, &rows)?;
    Ok(exit_for(ok))
}

fn bound_z(b: &BoundCheck) -> f64 {
    if b.std_err > 0.0 {
        (b.sampled - b.bound) / b.std_err
    } else {
        0.0
    }
}

pub fn verify_theorem4(args: &VerifyTheorem4Args) -> Result<ExitCode> {
    let doc = read_plan(&args.plan)?;
    let mut p = doc.plan;
    if let Some(n) = args.nr {
        p.n_r = n;
    }
    let mut cfg = doc.network;
    if let Some(mu) = args.mu {
        cfg.rayleigh_mu = mu;
    }
    let rows = montecarlo::verify_theorem4(&p, &cfg, args.samples, args.seed)?;
    println!("statistic   sampled         bound           kind   z");
    for r in &rows {
        println!(
            "{:<11} {:<15.8e} {:<15.8e} {:<6} {:+.3}{}",
            r.name,
            r.sampled,
            r.bound,
            format!("{:?}", r.kind).to_lowercase(),
            bound_z(r),
            if r.holds { "" } else { "  FAIL" }
        );
    }
    for r in rows.iter().filter(|r| !r.holds) {
        eprintln!("failed: {} z={:.3}", r.name, bound_z(r));
    }
    let params = json!({ "plan": args.plan.display().to_string(), "nr": p.n_r, "mu": cfg.rayleigh_mu, "samples": args.samples });
    emit_report(args.json.as_deref(), "verify theorem4", params, args.seed, &rows)?;
    Ok(exit_for(rows.iter().all(|r| r.holds)))
}

pub fn verify_lemmas(args: &VerifyLemmasArgs) -> Result<ExitCode> {
    let samples = usize::try_from(args.samples).context("--samples too large")?;
    let rows: Vec<LemmaInstance> = montecarlo::verify_lemmas(args.instances, samples, args.seed);
    let failed: Vec<(usize, &LemmaInstance)> =
        rows.iter().enumerate().filter(|(_, r)| !(r.exact_holds() && r.sampled_holds())).collect();
    let worst = rows.iter().filter_map(|r| r.sampled_margin_z).fold(f64::INFINITY, f64::min);
    println!(
        "{} instances, {} samples each: {} failed; smallest sampled margin {:.2} standard errors",
        rows.len(),
        args.samples,
        failed.len(),
        worst
    );
    for (i, r) in &failed {
        eprintln!(
            "failed: instance {i} gap={:.3e} exact lhs={:.6e} rhs={:.6e} z={:?}",
            r.gap, r.exact_lhs, r.exact_rhs, r.sampled_margin_z
        );
    }
    let params = json!({ "instances": args.instances, "samples": args.samples });
    emit_report(args.json.as_deref(), "verify lemmas", params, args.seed, &rows)?;
    Ok(exit_for(failed.is_empty()))
}
