//! One-parameter grids over the planner.
//!
//! Every scenario flag accepts either a number or `lo:hi:steps`. Exactly one
//! flag may be a range; the grid is linear and includes both ends.

use std::fs::File;
use std::io::{self, Write};
use std::process::ExitCode;

use anyhow::Result;
use svbeam_core::planner;
use svbeam_core::{Mode, NetworkConfig, SecrecyTarget};

use crate::commands::UsageError;
use crate::SweepArgs;

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Fixed(f64),
    Range { lo: f64, hi: f64, steps: usize },
}

fn parse_value(flag: &str, text: &str) -> Result<Value, UsageError> {
    let bad = |why: &str| UsageError(format!("--{flag} {text:?}: {why}"));
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    match parts.as_slice() {
        [v] => Ok(Value::Fixed(num(v)?)),
        [lo, hi, steps] => {
            let steps: usize = steps.trim().parse().map_err(|_| bad("step count must be a positive integer"))?;
            if steps == 0 {
                return Err(bad("step count must be a positive integer"));
            }
            Ok(Value::Range { lo: num(lo)?, hi: num(hi)?, steps })
        }
        _ => Err(bad("expected a number or lo:hi:steps")),
    }
}

fn grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / (steps - 1) as f64;
    (0..steps).map(|i| if i + 1 == steps { hi } else { lo + h * i as f64 }).collect()
}

struct Scenario {
    rate: f64,
    outage: f64,
    rho: f64,
    kappa: f64,
    power: f64,
    mu: f64,
    gamma: f64,
    dtr: f64,
    lambda_l: Option<f64>,
}

impl Scenario {
    fn set(&mut self, flag: &str, v: f64) {
        match flag {
            "rate" => self.rate = v,
            "outage" => self.outage = v,
            "rho" => self.rho = v,
            "kappa" => self.kappa = v,
            "power" => self.power = v,
            "mu" => self.mu = v,
            "gamma" => self.gamma = v,
            "dtr" => self.dtr = v,
            "lambda_l" => self.lambda_l = Some(v),
            _ => unreachable!("unknown sweep flag {flag}"),
        }
    }
}

const HEADER: &str = "param,value,feasible,mode,n_r,a_l,a_e,lambda_l,lambda_l_min,lambda_e_max,n_e_max,error";

fn row(param: &str, value: f64, s: &Scenario) -> String {
    let cfg = NetworkConfig {
        transmit_power: s.power,
        rayleigh_mu: s.mu,
        pathloss_gamma: s.gamma,
        tx_rx_distance: s.dtr,
        legit_density: 1.0,
        eaves_density: 0.0,
        n_legit: 1,
    };
    let target = SecrecyTarget { secure_rate: s.rate, outage: s.outage, rho: s.rho, kappa: s.kappa };
    match planner::plan(&cfg, &target) {
        Ok(p) => {
            let mode = match p.mode {
                Mode::Beamforming => "beamforming",
                Mode::Direct => "direct",
            };
            let n_e = p.n_e_max.map_or_else(String::new, |n| n.to_string());
            let lambda_l = s.lambda_l.unwrap_or(p.lambda_l_min);
            format!(
                "{param},{value},true,{mode},{},{},{},{lambda_l},{},{},{n_e},",
                p.n_r, p.a_l, p.a_e, p.lambda_l_min, p.lambda_e_max
            )
        }
        Err(e) => {
            let msg = e.to_string().replace('"', "'");
            format!("{param},{value},false,,,,,,,,,\"{msg}\"")
        }
    }
}

pub fn run(args: &SweepArgs) -> Result<ExitCode> {
    let mut flags: Vec<(&str, &str)> = vec![
        ("rate", &args.rate),
        ("outage", &args.outage),
        ("rho", &args.rho),
        ("kappa", &args.kappa),
        ("power", &args.power),
        ("mu", &args.mu),
        ("gamma", &args.gamma),
        ("dtr", &args.dtr),
    ];
    if let Some(l) = &args.lambda_l {
        flags.push(("lambda_l", l));
    }

    let mut scenario = Scenario {
        rate: 0.0,
        outage: 0.0,
        rho: 0.0,
        kappa: 0.0,
        power: 0.0,
        mu: 0.0,
        gamma: 0.0,
        dtr: 0.0,
        lambda_l: None,
    };
    let mut swept: Option<(&str, f64, f64, usize)> = None;
    for (flag, text) in flags {
        match parse_value(flag, text)? {
            Value::Fixed(v) => scenario.set(flag, v),
            Value::Range { lo, hi, steps } => {
                if let Some((other, ..)) = swept {
                    return Err(UsageError(format!("only one flag may be swept, got --{other} and --{flag}")).into());
                }
                swept = Some((flag, lo, hi, steps));
            }
        }
    }
    let Some((param, lo, hi, steps)) = swept else {
        return Err(UsageError("no flag given as lo:hi:steps".into()).into());
    };

    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(io::BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(out, "{HEADER}")?;
    for v in grid(lo, hi, steps) {
        scenario.set(param, v);
        writeln!(out, "{}", row(param, v, &scenario))?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}
