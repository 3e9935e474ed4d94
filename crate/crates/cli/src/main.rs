//! `asymgame`: values, responses, certificates, perturbations and
//! simulations for the persistent-state asymmetric-information game.
//!
//! Exit codes: 0 success, 1 computed but failed (certificate, inequality or
//! comparison), 2 usage error, 3 numerically inconclusive.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use asymgame_core::numeric::{parse_exact, Rational};
use asymgame_core::perturbation::{lemma_margin, margin_curve, PerturbationConfig, Verdict};
use asymgame_core::pressure::{
    certify_auto, certify_auto_escalating, certify_chain, certify_nine_interval_a, certify_nine_interval_b,
    certify_three_interval, RANGE_SAMPLES,
};
use asymgame_core::response::solve_and_verify;
use asymgame_core::sigma_star::{two_state_bound, value_ladder, value_matrix};
use asymgame_core::simulator::{payoff_independence_test, play, SimConfig, Strategy1, Strategy2};
use asymgame_core::{with_real, Error, GameParameter, Precision, Real};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use output::{f64_text, num, to_json, Sink};

#[derive(Parser, Debug)]
#[command(name = "asymgame", version, about, args_override_self = true)]
struct Cli {
    /// Arithmetic: float64, bigfloat[:BITS] or rational.
    #[arg(long, global = true, env = "ASYMGAME_PRECISION", default_value = "float64")]
    precision: Precision,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// JSON file whose keys mirror these flags; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for sweeps and simulations (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Ladder,
    Matrix,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scheme {
    Three,
    NineA,
    NineB,
    Auto,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Value of σ* at one p.
    #[command(args_override_self = true)]
    Value {
        /// Persistence parameter, as a decimal or a fraction.
        #[arg(long)]
        p: String,
        /// Truncation tolerance on 1/v (default: the working precision).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value_t = Method::Ladder)]
        method: Method,
    },
    /// v(σ*) with the bounds p/(4p − 1) and 1/4 over a grid of p.
    #[command(args_override_self = true)]
    Sweep {
        #[arg(long, default_value = "0.5")]
        p_min: String,
        #[arg(long, default_value = "0.99")]
        p_max: String,
        #[arg(long, default_value = "0.01")]
        step: String,
        /// Truncation tolerance on 1/v (default: the working precision).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Player 2's candidate response x(θ) and the inequality checks.
    #[command(args_override_self = true)]
    Respond {
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
        /// Uniform grid points on [1 − p, p] besides the orbit points.
        #[arg(long, default_value_t = 2000)]
        grid: usize,
    },
    /// Negative-pressure certificate.
    #[command(args_override_self = true)]
    Certify {
        #[arg(long, value_enum, default_value_t = Scheme::Auto)]
        scheme: Scheme,
        /// Single parameter (three, nine-a, auto).
        #[arg(long)]
        p: Option<f64>,
        /// Range start (nine-b, --auto).
        #[arg(long)]
        p_lo: Option<f64>,
        /// Range end (nine-b, --auto).
        #[arg(long)]
        p_hi: Option<f64>,
        /// Chain all schemes over [p-lo, p-hi].
        #[arg(long)]
        auto: bool,
        /// Orbit points used as cuts by the auto scheme.
        #[arg(long, default_value_t = 230)]
        depth: usize,
        /// Preimage order of ½ added as cuts; escalates from 0 when omitted.
        #[arg(long)]
        refinement: Option<usize>,
        /// Interior samples for range checks.
        #[arg(long, default_value_t = RANGE_SAMPLES)]
        samples: usize,
    },
    /// Compare σ_{k₀,ε} with σ*.
    #[command(args_override_self = true)]
    Perturb {
        #[arg(long)]
        p: String,
        #[arg(long)]
        k0: usize,
        #[arg(long)]
        epsilon: String,
        /// Truncation of the w sums (default 50 in float64, 200 otherwise).
        #[arg(long)]
        terms: Option<usize>,
        /// Comma-separated ε values: report the margin curve instead.
        #[arg(long)]
        eps_grid: Option<String>,
    },
    /// Monte-Carlo play.
    #[command(args_override_self = true)]
    Simulate {
        #[arg(long)]
        p: f64,
        /// sigma-star | uniform | greedy | perturbed:K0:EPS
        #[arg(long, default_value = "sigma-star")]
        strat1: String,
        /// always-l | always-r | uniform | tau-star | best-response | x-automaton[:DEPTH]
        #[arg(long, default_value = "always-l")]
        strat2: String,
        /// Second Player-2 strategy: run the payoff-independence test.
        #[arg(long)]
        compare: Option<String>,
        #[arg(long, default_value_t = 1_000_000)]
        rounds: u64,
        #[arg(long, default_value_t = 16)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Outcome of a command, mapped to the exit code.
enum Status {
    Pass,
    Fail(String),
    Inconclusive(String),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match config::merge(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail(msg)) => {
            eprintln!("failed: {msg}");
            ExitCode::from(1)
        }
        Ok(Status::Inconclusive(msg)) => {
            eprintln!("inconclusive: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::NonConvergence { .. }) => 3,
        Some(Error::NoContraction { .. }) => 1,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<Status> {
    let mut sink = Sink::open(cli.out.as_deref())?;
    let prec = cli.precision;
    match &cli.command {
        Command::Value { p, tol, method } => with_real!(prec, R => cmd_value::<R>(cli, &mut sink, p, *tol, *method)),
        Command::Sweep {
            p_min,
            p_max,
            step,
            tol,
        } => with_real!(prec, R => cmd_sweep::<R>(cli, &mut sink, p_min, p_max, step, *tol)),
        Command::Respond { p, tol, grid } => with_real!(prec, R => cmd_respond::<R>(cli, &mut sink, p, *tol, *grid)),
        Command::Certify {
            scheme,
            p,
            p_lo,
            p_hi,
            auto,
            depth,
            refinement,
            samples,
        } => cmd_certify(
            cli,
            &mut sink,
            *scheme,
            *p,
            (*p_lo, *p_hi),
            *auto,
            *depth,
            *refinement,
            *samples,
        ),
        Command::Perturb {
            p,
            k0,
            epsilon,
            terms,
            eps_grid,
        } => with_real!(prec, R => cmd_perturb::<R>(cli, &mut sink, p, *k0, epsilon, *terms, eps_grid.as_deref())),
        Command::Simulate {
            p,
            strat1,
            strat2,
            compare,
            rounds,
            replicates,
            seed,
        } => cmd_simulate(
            cli,
            &mut sink,
            *p,
            strat1,
            strat2,
            compare.as_deref(),
            *rounds,
            *replicates,
            *seed,
        ),
    }
}

/// Writes a single JSON object, or its scalar fields as one CSV row.
fn emit_record(cli: &Cli, sink: &mut Sink, v: &Value) -> Result<()> {
    match cli.format {
        Format::Json => sink.json(v),
        Format::Csv => {
            let obj = v.as_object().ok_or_else(|| anyhow!("record is not an object"))?;
            let (keys, vals): (Vec<&str>, Vec<String>) = obj
                .iter()
                .filter(|(_, x)| !x.is_object() && !x.is_array())
                .map(|(k, x)| {
                    let s = match x {
                        Value::String(s) => s.clone(),
                        Value::Null => String::new(),
                        other => other.to_string(),
                    };
                    (k.as_str(), s)
                })
                .unzip();
            sink.csv(&keys, &[vals])
        }
    }
}

/// Ladder truncation matched to the arithmetic: about one unit in the last
/// printed digit, and no finer than 1e-40 for exact rationals.
fn default_tol(prec: Precision) -> f64 {
    match prec {
        Precision::Float64 => 1e-17,
        Precision::BigFloat { .. } => 10f64.powi(-(prec.decimal_digits() as i32)),
        Precision::Rational => 1e-40,
    }
}

fn cmd_value<R: Real>(cli: &Cli, sink: &mut Sink, p: &str, tol: Option<f64>, method: Method) -> Result<Status> {
    let g = GameParameter::<R>::parse(p, cli.precision)?;
    let tol = tol.unwrap_or_else(|| default_tol(g.precision));
    let lad = value_ladder(&g, tol)?;
    let mut rec = json!({
        "p": num(&g.p, g.precision),
        "precision": g.precision.to_string(),
        "method": format!("{method:?}").to_lowercase(),
    });
    let o = rec.as_object_mut().expect("object");
    if method != Method::Matrix {
        o.insert("v".into(), num(&lad.v, g.precision));
        o.insert("inverse".into(), num(&lad.inverse(), g.precision));
        o.insert("terms".into(), json!(lad.terms()));
        o.insert("tail_bound".into(), num(&lad.tail_bound, g.precision));
    }
    if method != Method::Ladder {
        let m = value_matrix(&g, lad.terms())?;
        let v_m = g.one() / m.sum.clone();
        if method == Method::Matrix {
            o.insert("v".into(), num(&v_m, g.precision));
            o.insert("inverse".into(), num(&m.sum, g.precision));
            o.insert("terms".into(), json!(lad.terms()));
            o.insert("tail_bound".into(), num(&lad.tail_bound, g.precision));
        } else {
            o.insert("v_matrix".into(), num(&v_m, g.precision));
            let d = (v_m - lad.v.clone()).abs();
            o.insert("discrepancy".into(), num(&d, g.precision));
        }
    }
    emit_record(cli, sink, &rec)?;
    Ok(Status::Pass)
}

fn cmd_sweep<R: Real>(cli: &Cli, sink: &mut Sink, p_min: &str, p_max: &str, step: &str, tol: Option<f64>) -> Result<Status> {
    let tol = tol.unwrap_or_else(|| default_tol(cli.precision));
    let lo = parse_exact(p_min)?;
    let hi = parse_exact(p_max)?;
    let step = parse_exact(step)?;
    if step <= Rational::ZERO {
        return Err(Error::Invalid("step must be positive".into()).into());
    }
    if hi < lo {
        return Err(Error::Invalid("p-max is below p-min".into()).into());
    }
    let mut ps = Vec::new();
    let mut x = lo;
    while x <= hi {
        ps.push(x.clone());
        x = x + step.clone();
    }
    let prec = cli.precision;
    // ordered by p whatever order the workers finish in
    let rows: Vec<Result<[Value; 4]>> = ps
        .par_iter()
        .map(|p| {
            let g = GameParameter::<R>::from_rational(p, prec)?;
            let v = value_ladder(&g, tol)?.v;
            Ok([
                num(&g.p, prec),
                num(&v, prec),
                num(&two_state_bound(&g), prec),
                num(&g.c(1, 4), prec),
            ])
        })
        .collect();
    let rows: Vec<[Value; 4]> = rows.into_iter().collect::<Result<_>>()?;
    let header = ["p", "v_sigma_star", "upper_bound_p_over_4p_minus_1", "lower_bound_quarter"];
    match cli.format {
        Format::Csv => {
            let text: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(Value::to_string).collect()).collect();
            sink.csv(&header, &text)?;
        }
        Format::Json => {
            let arr: Vec<Value> = rows
                .into_iter()
                .map(|r| {
                    let mut o = serde_json::Map::new();
                    for (k, v) in header.iter().zip(r) {
                        o.insert(k.to_string(), v);
                    }
                    Value::Object(o)
                })
                .collect();
            sink.json(&Value::Array(arr))?;
        }
    }
    Ok(Status::Pass)
}

fn cmd_respond<R: Real>(cli: &Cli, sink: &mut Sink, p: &str, tol: f64, grid: usize) -> Result<Status> {
    let g = GameParameter::<R>::parse(p, cli.precision)?;
    let sol = solve_and_verify(&g, tol, grid)?;
    let pr = g.precision;
    let report = sol.inequality_report.as_ref().expect("verified");
    let x_table: Vec<Value> = sol
        .x_table
        .iter()
        .map(|(t, x)| json!({"theta": num(t, pr), "x": num(x, pr)}))
        .collect();
    let rec = json!({
        "p": num(&sol.p, pr),
        "precision": pr.to_string(),
        "v": num(&sol.v, pr),
        "z": num(&sol.z, pr),
        "w": [num(&sol.w.x, pr), num(&sol.w.y, pr)],
        "contraction_factor": to_json(&sol.contraction_factor)?,
        "preimage_of_half": sol.preimage_of_half,
        "passed": report.passed,
        "inequality_report": to_json(report)?,
        "x_table": x_table,
    });
    emit_record(cli, sink, &rec)?;
    if report.passed {
        Ok(Status::Pass)
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Ok(Status::Fail(format!("inequalities failed: {}", failed.join("; "))))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_certify(
    cli: &Cli,
    sink: &mut Sink,
    scheme: Scheme,
    p: Option<f64>,
    range: (Option<f64>, Option<f64>),
    auto: bool,
    depth: usize,
    refinement: Option<usize>,
    samples: usize,
) -> Result<Status> {
    if cli.precision != Precision::Float64 {
        log::warn!("certificates are computed in float64; --precision is ignored");
    }
    let need_p = || p.ok_or_else(|| anyhow!(Error::Invalid("--p is required for this scheme".into())));
    let need_range = || match range {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(anyhow!(Error::Invalid("--p-lo and --p-hi are required".into()))),
    };
    if auto {
        let (lo, hi) = need_range()?;
        let r = certify_chain(lo, hi, samples)?;
        emit_record(cli, sink, &to_json(&r)?)?;
        return Ok(if r.passed {
            Status::Pass
        } else {
            let gaps: Vec<String> = r.gaps.iter().map(|(a, b)| format!("[{}, {}]", f64_text(*a), f64_text(*b))).collect();
            Status::Fail(format!("uncovered: {}", gaps.join(", ")))
        });
    }
    let cert = match scheme {
        Scheme::Three => certify_three_interval(need_p()?)?,
        Scheme::NineA => certify_nine_interval_a(need_p()?)?,
        Scheme::NineB => {
            let (lo, hi) = match (range, p) {
                ((Some(a), Some(b)), _) => (a, b),
                (_, Some(x)) => (x, x),
                _ => need_range()?,
            };
            certify_nine_interval_b(lo, hi, samples)?
        }
        Scheme::Auto => match refinement {
            Some(r) => certify_auto(need_p()?, depth, r)?,
            None => certify_auto_escalating(need_p()?, depth)?,
        },
    };
    emit_record(cli, sink, &to_json(&cert)?)?;
    Ok(if cert.passed {
        Status::Pass
    } else {
        let failed: Vec<&str> = cert.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Status::Fail(format!("{}: {}", cert.scheme, failed.join("; ")))
    })
}

fn cmd_perturb<R: Real>(
    cli: &Cli,
    sink: &mut Sink,
    p: &str,
    k0: usize,
    epsilon: &str,
    terms: Option<usize>,
    eps_grid: Option<&str>,
) -> Result<Status> {
    let g = GameParameter::<R>::parse(p, cli.precision)?;
    let pr = g.precision;
    if let Some(grid) = eps_grid {
        let eps: Vec<&str> = grid.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        let n = terms.unwrap_or_else(|| asymgame_core::perturbation::default_terms(pr));
        let curve = margin_curve(&g, k0, &eps, n)?;
        match cli.format {
            Format::Csv => {
                let rows: Vec<Vec<String>> = curve
                    .iter()
                    .map(|(e, m)| vec![num(e, pr).to_string(), num(m, pr).to_string()])
                    .collect();
                sink.csv(&["epsilon", "margin"], &rows)?;
            }
            Format::Json => {
                let arr: Vec<Value> = curve
                    .iter()
                    .map(|(e, m)| json!({"epsilon": num(e, pr), "margin": num(m, pr)}))
                    .collect();
                sink.json(&Value::Array(arr))?;
            }
        }
        return Ok(Status::Pass);
    }
    let cfg = PerturbationConfig::new(k0, epsilon, terms, Some(pr))?;
    let r = lemma_margin(&g, &cfg)?;
    let mut v = serde_json::to_value(r.map(|x| num(x, pr)))?;
    v.as_object_mut()
        .expect("object")
        .insert("precision".into(), json!(pr.to_string()));
    emit_record(cli, sink, &v)?;
    Ok(match r.verdict {
        Verdict::Better => Status::Pass,
        Verdict::NotBetter => Status::Fail("the perturbed strategy does not improve on sigma*".into()),
        Verdict::Inconclusive => Status::Inconclusive("margin within the truncation budget".into()),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    cli: &Cli,
    sink: &mut Sink,
    p: f64,
    strat1: &str,
    strat2: &str,
    compare: Option<&str>,
    rounds: u64,
    replicates: usize,
    seed: u64,
) -> Result<Status> {
    let s1: Strategy1 = strat1.parse()?;
    let s2: Strategy2 = strat2.parse()?;
    let cfg = SimConfig {
        p,
        rounds,
        replicates,
        seed,
    };
    if let Some(other) = compare {
        let s2b: Strategy2 = other.parse()?;
        let r = payoff_independence_test(&cfg, s1, (&s2, &s2b))?;
        emit_record(cli, sink, &to_json(&r)?)?;
        return Ok(Status::Pass);
    }
    let s = play(&cfg, s1, &s2)?;
    match cli.format {
        Format::Json => sink.json(&to_json(&s)?)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = s
                .rows()
                .iter()
                .map(|r| {
                    vec![
                        r.seed.to_string(),
                        r.rounds.to_string(),
                        f64_text(r.mean),
                        f64_text(r.ci95),
                        r.strat1.clone(),
                        r.strat2.clone(),
                        f64_text(r.p),
                    ]
                })
                .collect();
            sink.csv(&["seed", "rounds", "mean", "ci95", "strat1", "strat2", "p"], &rows)?;
        }
    }
    Ok(Status::Pass)
}
