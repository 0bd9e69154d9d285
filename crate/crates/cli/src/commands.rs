use std::sync::mpsc;
use std::time::{Duration, Instant};

use chrono::Utc;
use serde_json::{json, Value};

use egyptian::absorption::{construct_representation, AbsorptionParams, AbsorptionTrace};
use egyptian::counting::{count_brute, count_mitm, CountQuery, Mode};
use egyptian::entropy::{continuous_lambda, cx_constant, discrete_profile};
use egyptian::exactmath::{powersmooth_count, reciprocal_sum, smooth_density_linear};
use egyptian::modelsim::{model_moments, simulate};
use egyptian::modular::{min_subset_inverse_sum, residue_coverage, ModInstance};
use egyptian::{Error, Rational};

use crate::args::{Cli, Command, CountMethod, CountMode, Format, Global};
use crate::record::{emit, CliError, Outcome, RunRecord};

/// Largest sieve the `sieve` subcommand will allocate.
const SIEVE_LIMIT_CAP: u64 = 200_000_000;

struct Produced {
    parameters: Value,
    result: Value,
    csv: Option<String>,
    truncated: bool,
    /// Raised after the record is written.
    deferred: Option<Error>,
}

impl Produced {
    fn plain(parameters: Value, result: Value) -> Self {
        Produced {
            parameters,
            result,
            csv: None,
            truncated: false,
            deferred: None,
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let started = Utc::now();
    let budget = match cli.global.budget {
        Some(s) if s.is_finite() && s > 0.0 => Some(Duration::from_secs_f64(s)),
        Some(s) => {
            return Err(CliError::Usage(format!(
                "--budget must be a positive number of seconds, got {s}"
            )))
        }
        None => None,
    };
    let name = cli.command.name();
    let produced = match &cli.command {
        Command::Construct {
            n,
            x,
            seed,
            count,
            trace,
        } => construct(*n, x, *seed, *count, trace.as_deref(), budget)?,
        other => {
            let command = other.clone();
            match within_budget(budget, move || dispatch(&command)) {
                Some(r) => r?,
                None => Produced {
                    parameters: parameters_of(other),
                    result: json!({ "truncated": true }),
                    csv: None,
                    truncated: true,
                    deferred: None,
                },
            }
        }
    };
    let record = RunRecord::new(name, produced.parameters, produced.result, started);
    if produced.truncated {
        // CSV has no place for the flag; truncated runs are always JSON.
        let global = Global {
            format: Format::Json,
            ..cli.global.clone()
        };
        emit(&global, name, &record, None)?;
        return Ok(Outcome::Truncated);
    }
    emit(&cli.global, name, &record, produced.csv)?;
    match produced.deferred {
        Some(e) => Err(e.into()),
        None => Ok(Outcome::Complete),
    }
}

/// Run `f` on a worker thread; `None` if it outlives the budget.
fn within_budget<T: Send + 'static>(
    budget: Option<Duration>,
    f: impl FnOnce() -> T + Send + 'static,
) -> Option<T> {
    let Some(limit) = budget else {
        return Some(f());
    };
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let _ = tx.send(f());
    });
    rx.recv_timeout(limit).ok()
}

fn mode_name(m: CountMode) -> &'static str {
    match m {
        CountMode::Exact => "exact",
        CountMode::AtMost => "at_most",
    }
}

fn parameters_of(c: &Command) -> Value {
    match c {
        Command::Count { n, x, mode, method } => json!({
            "n": n, "x": x.to_string(), "mode": mode_name(*mode),
            "method": match method { CountMethod::Auto => "auto", CountMethod::Brute => "brute", CountMethod::Mitm => "mitm" },
        }),
        Command::Entropy { n, x } => json!({ "n": n, "x": x.to_string() }),
        Command::Lambda { x } | Command::Cx { x } => json!({ "x": x.to_string() }),
        Command::Simulate { n, x, trials, seed } => {
            json!({ "n": n, "x": x.to_string(), "trials": trials, "seed": seed })
        }
        Command::Modcover {
            q,
            interval,
            smax,
            target,
        } => json!({
            "q": q, "interval": interval.map(|(lo, hi)| format!("{lo}:{hi}")), "smax": smax, "target": target,
        }),
        Command::Construct {
            n,
            x,
            seed,
            count,
            trace,
        } => json!({
            "n": n, "x": x.to_string(), "seed": seed, "count": count,
            "trace": trace.as_ref().map(|p| p.display().to_string()),
        }),
        Command::Sieve { limit, t } => json!({ "limit": limit, "t": t }),
        Command::Verify { x, set, n } => json!({ "x": x.to_string(), "set": set, "n": n }),
    }
}

fn positive_f64(x: &Rational) -> Result<f64, CliError> {
    if !x.is_positive() {
        return Err(Error::Domain(format!("x = {x} must be positive")).into());
    }
    Ok(x.to_f64())
}

fn dispatch(c: &Command) -> Result<Produced, CliError> {
    let parameters = parameters_of(c);
    match c {
        Command::Count { n, x, mode, method } => {
            let m = match mode {
                CountMode::Exact => Mode::Exact,
                CountMode::AtMost => Mode::AtMost,
            };
            let q = CountQuery::new(*n, x.clone(), m)?;
            let r = match method {
                CountMethod::Brute => count_brute(&q)?,
                CountMethod::Mitm | CountMethod::Auto => count_mitm(&q)?,
            };
            let result = json!({
                "n": n,
                "x": x.to_string(),
                "mode": mode_name(*mode),
                "method": serde_json::to_value(r.method)?,
                "count": r.count.to_string(),
            });
            Ok(Produced::plain(parameters, result))
        }
        Command::Entropy { n, x } => {
            let prof = discrete_profile(*n, positive_f64(x)?)?;
            let result = json!({
                "n": n,
                "x": x.to_string(),
                "c": prof.c,
                "entropy_bits": prof.entropy_bits,
                "entropy_per_element": prof.entropy_bits / *n as f64,
                "budget_used": prof.budget_used(),
                "saturated": prof.saturated(),
            });
            Ok(Produced {
                csv: Some(prof.to_csv()),
                ..Produced::plain(parameters, result)
            })
        }
        Command::Lambda { x } => {
            let lambda = continuous_lambda(positive_f64(x)?)?;
            Ok(Produced::plain(
                parameters,
                json!({ "x": x.to_string(), "lambda": lambda }),
            ))
        }
        Command::Cx { x } => {
            let k = cx_constant(positive_f64(x)?)?;
            Ok(Produced::plain(
                parameters,
                json!({ "x": x.to_string(), "lambda": k.lambda, "c_x": k.c_x }),
            ))
        }
        Command::Simulate { n, x, trials, seed } => {
            let prof = discrete_profile(*n, positive_f64(x)?)?;
            let report = simulate(&prof, x, *trials, *seed)?;
            let m = model_moments(&prof);
            let result = json!({
                "n": n,
                "x": x.to_string(),
                "trials": trials,
                "seed": seed,
                "mean": report.mean,
                "variance": report.variance,
                "model_mean": m.mean,
                "model_variance": m.variance,
                "estimate": report.estimate,
                "stderr": report.stderr,
                "exact_fallbacks": report.exact_fallbacks,
            });
            Ok(Produced::plain(parameters, result))
        }
        Command::Modcover {
            q,
            interval,
            smax,
            target,
        } => {
            let (lo, hi) = interval.unwrap_or_else(|| {
                let s = ceil_sqrt(*q);
                (s, 2 * s)
            });
            let inst = ModInstance::coprime_filtered(*q, lo..=hi, smax.unwrap_or(usize::MAX))?;
            let cov = residue_coverage(&inst);
            let solution = target.map(|t| match min_subset_inverse_sum(&inst, t) {
                Some(s) => json!({ "target": s.target, "subset": s.subset, "size": s.size }),
                None => json!({ "target": t % q, "subset": null, "size": null }),
            });
            let result = json!({
                "q": q,
                "interval": [lo, hi],
                "elements": inst.elements().len(),
                "s_max": smax,
                "residues": cov.min_size.len(),
                "reachable": cov.reachable(),
                "complete": cov.is_total(),
                "max_min_size": cov.max_min_size(),
                "histogram": cov.histogram(),
                "solution": solution,
            });
            Ok(Produced {
                csv: Some(cov.to_csv()),
                ..Produced::plain(parameters, result)
            })
        }
        Command::Sieve { limit, t } => {
            if *limit == 0 || *limit > SIEVE_LIMIT_CAP {
                return Err(Error::AboveCap {
                    what: "sieve limit",
                    value: *limit,
                    cap: SIEVE_LIMIT_CAP,
                }
                .into());
            }
            let count = powersmooth_count(*limit, *t);
            let u = if *limit > 1 && *t > 1 {
                Some((*t as f64).ln() / (*limit as f64).ln())
            } else {
                None
            };
            let psi = u.and_then(|u| smooth_density_linear(u).ok());
            let result = json!({
                "limit": limit,
                "t": t,
                "count": count,
                "density": count as f64 / *limit as f64,
                "u": u,
                "psi_linear": psi,
            });
            Ok(Produced::plain(parameters, result))
        }
        Command::Verify { x, set, n } => {
            let sum = reciprocal_sum(set).ok();
            let verified = egyptian::absorption::verify_representation(set, *n, x);
            let result = json!({
                "verified": verified,
                "n": n,
                "x": x.to_string(),
                "size": set.len(),
                "sum": sum.map(|s| s.to_string()),
            });
            Ok(Produced::plain(parameters, result))
        }
        Command::Construct { .. } => unreachable!("handled separately"),
    }
}

fn ceil_sqrt(q: u64) -> u64 {
    let mut r = (q as f64).sqrt() as u64;
    while r * r < q {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= q {
        r -= 1;
    }
    r
}

fn witness_summary(seed: u64, trace: &AbsorptionTrace) -> Value {
    json!({
        "seed": seed,
        "verified": trace.verified,
        "size": trace.a.len(),
        "base_size": trace.base_set.len(),
        "steps": trace.steps.len(),
        "x_f": trace.x_f.as_ref().map(|r| r.to_string()),
        "A": trace.a,
    })
}

fn construct(
    n: u64,
    x: &Rational,
    seed: u64,
    count: u64,
    trace_path: Option<&std::path::Path>,
    budget: Option<Duration>,
) -> Result<Produced, CliError> {
    let parameters = parameters_of(&Command::Construct {
        n,
        x: x.clone(),
        seed,
        count,
        trace: trace_path.map(|p| p.to_path_buf()),
    });
    // reject bad inputs up front so they surface as domain errors
    egyptian::absorption::build_config(
        n,
        x,
        AbsorptionParams::default().l,
        AbsorptionParams::default().eta,
        seed,
    )?;
    let start = Instant::now();
    let mut witnesses = Vec::new();
    let mut failures = Vec::new();
    let mut traces = Vec::new();
    let mut truncated = false;
    let mut last_error = None;
    for s in seed..seed.saturating_add(count) {
        if budget.is_some_and(|b| start.elapsed() > b) {
            truncated = true;
            break;
        }
        let params = AbsorptionParams {
            seed: s,
            ..AbsorptionParams::default()
        };
        let remaining = budget.map(|b| b.saturating_sub(start.elapsed()));
        let xc = x.clone();
        let outcome = within_budget(remaining, move || construct_representation(n, &xc, &params));
        match outcome {
            None => {
                truncated = true;
                break;
            }
            Some(Ok(trace)) => {
                witnesses.push(witness_summary(s, &trace));
                traces.push(trace);
            }
            Some(Err(e)) => {
                failures.push(json!({ "seed": s, "reason": e.to_string() }));
                if let Error::Construction {
                    last_trace: Some(t),
                    ..
                } = &e
                {
                    traces.push((**t).clone());
                }
                last_error = Some(e);
            }
        }
    }
    if let Some(path) = trace_path {
        let body = if count == 1 && traces.len() == 1 {
            serde_json::to_string_pretty(&traces[0])?
        } else {
            serde_json::to_string_pretty(&traces)?
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, body + "\n")?;
    }
    let result = json!({
        "n": n,
        "x": x.to_string(),
        "requested": count,
        "succeeded": witnesses.len(),
        "witnesses": witnesses,
        "failures": failures,
        "truncated": truncated,
    });
    let deferred = if witnesses.is_empty() && !truncated {
        last_error
    } else {
        None
    };
    Ok(Produced {
        parameters,
        result,
        csv: None,
        truncated,
        deferred,
    })
}
