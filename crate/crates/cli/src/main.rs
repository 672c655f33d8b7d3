//! `liouville` — exact DOZZ-side evaluations and their Monte Carlo
//! counterparts from one command line.
//!
//! Every run emits a single JSON record (or a CSV table for survival curves
//! and verify sweeps). Monte Carlo commands default to a fixed seed so the
//! documented results reproduce verbatim; pass --seed to change it.

mod config;
mod emit;

use clap::{Parser, Subcommand};
use config::{parse_alphas, parse_complex, FileConfig, OutputFormat};
use emit::{CsvTable, ParamsRecord, ResultRecord};
use liouville_core::cylinder::{self, CylinderError};
use liouville_core::sphere::{self, SphereError};
use liouville_core::{bpz, kpz, special, Complex64, Insertion, LiouvilleParams, McEstimate};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "liouville", version, about)]
struct Cli {
    /// Optional TOML config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path (stdout if omitted).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format: json or csv.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    /// Worker threads (0 = auto). The count never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the DOZZ three-point constant C(α₁, α₂, α₃).
    EvalDozz {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        /// Comma-separated α₁,α₂,α₃.
        #[arg(long, value_parser = parse_alphas)]
        alphas: Option<Vec<f64>>,
    },
    /// Evaluate Υ at a (possibly complex) point.
    EvalUpsilon {
        #[arg(long)]
        gamma: Option<f64>,
        /// Point, e.g. "0.8" or "0.3+0.1i".
        #[arg(long)]
        z: Option<String>,
    },
    /// Evaluate the DOZZ reflection coefficient R(α).
    Reflection {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Monte Carlo three-point structure constant vs its closed form.
    McThreepoint {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, value_parser = parse_alphas)]
        alphas: Option<Vec<f64>>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        resolution: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte Carlo reduced four-point function vs the BPZ closed form.
    McFourpoint {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        /// Degenerate weight, −γ/2 or −2/γ.
        #[arg(long)]
        alpha0: Option<f64>,
        #[arg(long, value_parser = parse_alphas)]
        alphas: Option<Vec<f64>>,
        /// Cross-ratio point, |z| ≤ 0.7.
        #[arg(long)]
        z: Option<String>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        resolution: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sample I(α) and fit the survival tail slope.
    Tail {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Unit-volume reflection coefficient R̄(α) and full R(α) vs closed form.
    Rbar {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Closed-form shift/crossing identity residual sweep.
    Verify {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, value_parser = parse_alphas)]
        alphas: Option<Vec<f64>>,
        /// Number of sweep points per identity.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Central-charge and weight-equation solvers.
    Kpz {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        c_matter: Option<f64>,
        #[arg(long)]
        delta_sigma: Option<f64>,
    },
    /// Dotsenko–Fateev n=1 quadrature vs closed form.
    DfCheck {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        a1: Option<f64>,
        #[arg(long)]
        a2: Option<f64>,
    },
    /// Girsanov shift identity on a small ensemble.
    Girsanov {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum RunError {
    Admissibility(String),
    Internal(String),
}

impl RunError {
    fn exit_code(&self) -> i32 {
        match self {
            RunError::Admissibility(_) => 2,
            RunError::Internal(_) => 1,
        }
    }
    fn message(&self) -> &str {
        match self {
            RunError::Admissibility(m) | RunError::Internal(m) => m,
        }
    }
}

impl From<SphereError> for RunError {
    fn from(e: SphereError) -> Self {
        match e {
            SphereError::InadmissibleWeights
            | SphereError::GammaOutOfRange(_)
            | SphereError::ClosedFormOnlyParams
            | SphereError::GammaPole(_) => RunError::Admissibility(e.to_string()),
            other => RunError::Internal(other.to_string()),
        }
    }
}

impl From<CylinderError> for RunError {
    fn from(e: CylinderError) -> Self {
        match e {
            CylinderError::AlphaOutOfRange(_) | CylinderError::ClosedFormOnlyParams => {
                RunError::Admissibility(e.to_string())
            }
            other => RunError::Internal(other.to_string()),
        }
    }
}

impl From<bpz::BpzError> for RunError {
    fn from(e: bpz::BpzError) -> Self {
        match e {
            bpz::BpzError::InadmissibleWeights => RunError::Admissibility(e.to_string()),
            bpz::BpzError::Sphere(s) => s.into(),
            other => RunError::Internal(other.to_string()),
        }
    }
}

macro_rules! internal {
    ($e:expr) => {
        $e.map_err(|err| RunError::Internal(err.to_string()))
    };
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };

    // Thread override: environment beats flag; 0 keeps rayon's default.
    let threads = std::env::var("LIOUVILLE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or(cli.threads)
        .unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }

    let file = match &cli.config {
        Some(p) => match FileConfig::load(p) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("{}", error_json("config", &e));
                std::process::exit(1);
            }
        },
        None => FileConfig::default(),
    };

    let start = Instant::now();
    let name = command_name(&cli.command);
    match run(&cli.command, &file) {
        Ok((mut record, csv)) => {
            record.runtime_s = start.elapsed().as_secs_f64();
            let format = cli
                .format
                .clone()
                .or_else(|| file.format.as_deref().and_then(|f| f.parse().ok()))
                .unwrap_or(OutputFormat::Json);
            let path = cli.output.clone().or_else(|| file.output.clone());
            if let Err(e) = emit::emit(&record, csv.as_ref(), &format, path.as_deref()) {
                eprintln!("{}", error_json(name, &format!("io error: {e}")));
                std::process::exit(1);
            }
        }
        Err(e) => {
            eprintln!("{}", error_json(name, e.message()));
            std::process::exit(e.exit_code());
        }
    }
}

fn error_json(command: &str, message: &str) -> String {
    serde_json::json!({
        "command": command,
        "error": message,
        "version": env!("CARGO_PKG_VERSION"),
    })
    .to_string()
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::EvalDozz { .. } => "eval-dozz",
        Command::EvalUpsilon { .. } => "eval-upsilon",
        Command::Reflection { .. } => "reflection",
        Command::McThreepoint { .. } => "mc-threepoint",
        Command::McFourpoint { .. } => "mc-fourpoint",
        Command::Tail { .. } => "tail",
        Command::Rbar { .. } => "rbar",
        Command::Verify { .. } => "verify",
        Command::Kpz { .. } => "kpz",
        Command::DfCheck { .. } => "df-check",
        Command::Girsanov { .. } => "girsanov",
    }
}

fn need<T: Clone>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, RunError> {
    flag.or(file)
        .ok_or_else(|| RunError::Internal(format!("missing required parameter --{name}")))
}

fn make_params(gamma: f64, mu: f64) -> Result<LiouvilleParams, RunError> {
    internal!(LiouvilleParams::new(gamma, mu))
}

fn record(
    command: &str,
    params: Option<&LiouvilleParams>,
    alphas: Option<Vec<f64>>,
    zs: Option<Vec<Complex64>>,
    value: f64,
) -> ResultRecord {
    ResultRecord {
        command: command.to_string(),
        params: ParamsRecord {
            gamma: params.map_or(f64::NAN, |p| p.gamma),
            mu: params.map_or(f64::NAN, |p| p.mu),
            alphas,
            zs: zs.map(|v| v.iter().map(|z| format!("{}+{}i", z.re, z.im)).collect()),
        },
        value,
        stderr: None,
        n_samples: None,
        seed: None,
        diagnostics: None,
        runtime_s: 0.0,
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

fn attach_estimate(mut rec: ResultRecord, est: &McEstimate) -> ResultRecord {
    rec.value = est.value;
    rec.stderr = Some(est.stderr);
    rec.n_samples = Some(est.n_samples);
    rec.seed = Some(est.seed);
    if !est.diagnostics.is_empty() {
        rec.diagnostics = Some(est.diagnostics.clone());
    }
    rec
}

fn three_alphas(v: Vec<f64>) -> Result<[f64; 3], RunError> {
    <[f64; 3]>::try_from(v)
        .map_err(|v| RunError::Internal(format!("need exactly 3 weights, got {}", v.len())))
}

#[allow(clippy::type_complexity)]
fn run(cmd: &Command, file: &FileConfig) -> Result<(ResultRecord, Option<CsvTable>), RunError> {
    match cmd {
        Command::EvalDozz { gamma, mu, alphas } => {
            let g = need(*gamma, file.gamma, "gamma")?;
            let m = need(*mu, file.mu, "mu")?;
            let a = three_alphas(need(alphas.clone(), file.alphas.clone(), "alphas")?)?;
            let params = make_params(g, m)?;
            let v = internal!(special::dozz_c(&params, a[0], a[1], a[2]))?;
            Ok((
                record("eval-dozz", Some(&params), Some(a.to_vec()), None, v),
                None,
            ))
        }
        Command::EvalUpsilon { gamma, z } => {
            let g = need(*gamma, file.gamma, "gamma")?;
            let ztext = need(z.clone(), file.z.clone(), "z")?;
            let zc = parse_complex(&ztext).map_err(RunError::Internal)?;
            let params = make_params(g, 1.0)?;
            let v = internal!(special::upsilon(zc, g))?;
            let mut rec = record("eval-upsilon", Some(&params), None, Some(vec![zc]), v.re);
            rec.diagnostics = Some(BTreeMap::from([("im".to_string(), v.im)]));
            Ok((rec, None))
        }
        Command::Reflection { gamma, mu, alpha } => {
            let g = need(*gamma, file.gamma, "gamma")?;
            let m = need(*mu, file.mu, "mu")?;
            let a = need(*alpha, file.alpha, "alpha")?;
            let params = make_params(g, m)?;
            let v = internal!(special::reflection_dozz(&params, a))?;
            Ok((
                record("reflection", Some(&params), Some(vec![a]), None, v),
                None,
            ))
        }
        Command::McThreepoint {
            gamma,
            mu,
            alphas,
            samples,
            resolution,
            seed,
        } => {
            let g = need(*gamma, file.gamma, "gamma")?;
            let m = need(*mu, file.mu, "mu")?;
            let a = three_alphas(need(alphas.clone(), file.alphas.clone(), "alphas")?)?;
            let n = samples
                .or(file.samples)
                .unwrap_or(config::DEFAULT_SAMPLES);
            let res = resolution
                .or(file.resolution)
                .unwrap_or(config::DEFAULT_RESOLUTION);
            let sd = seed.or(file.seed).unwrap_or(config::DEFAULT_SEED);
            let params = make_params(g, m)?;
            let est = sphere::structure_constant_estimate(&params, res, a, n, sd)?;
            let mut rec = attach_estimate(
                record("mc-threepoint", Some(&params), Some(a.to_vec()), None, 0.0),
                &est,
            );
            // The closed form rides along for immediate comparison.
            if let Ok(exact) = special::dozz_c(&params, a[0], a[1], a[2]) {
                rec.diagnostics
                    .get_or_insert_with(BTreeMap::new)
                    .insert("dozz_closed_form".to_string(), exact);
            }
            Ok((rec, None))
        }
        Command::McFourpoint {
            gamma,
            mu,
            alpha0,
            alphas,
            z,
            samples,
            resolution,
            seed,
        } => {
            let g = need(*gamma, file.gamma, "gamma")?;
            let m = need(*mu, file.mu, "mu")?;
            let a0 = need(*alpha0, file.alpha0, "alpha0")?;
            let a = three_alphas(need(alphas.clone(), file.alphas.clone(), "alphas")?)?;
            let ztext = need(z.clone(), file.z.clone(), "z")?;
            let zc = parse_complex(&ztext).map_err(RunError::Internal)?;
            let n = samples
                .or(file.samples)
                .unwrap_or(config::DEFAULT_SAMPLES);
            let res = resolution
                .or(file.resolution)
                .unwrap_or(config::DEFAULT_RESOLUTION);
            let sd = seed.or(file.seed).unwrap_or(config::DEFAULT_SEED);
            let params = make_params(g, m)?;
            let spec = bpz::FourPointSpec::new(&params, a0, a, zc)?;
            let ens = bpz::four_point_ensemble(&params, res, &spec)?;
            let est = bpz::t_mc(&params, &ens, &spec, n, sd)?;
            let mut rec = attach_estimate(
                record(
                    "mc-fourpoint",
                    Some(&params),
                    Some(vec![a0, a[0], a[1], a[2]]),
                    Some(vec![zc]),
                    0.0,
                ),
                &est,
            );
            if let Ok(exact) = bpz::t_bpz(&params, &spec) {
                rec.diagnostics
                    .get_or_insert_with(BTreeMap::new)
                    .insert("t_bpz_closed_form".to_string(), exact);
            }
            Ok((rec, None))
        }
        Command::Tail {
            gamma,
            mu,
            alpha,
            samples,
            seed,
        } => {
            let g = need(*gamma, file.gamma, "gamma")?;
            let m = need(*mu, file.mu, "mu")?;
            let a = need(*alpha, file.alpha, "alpha")?;
            let n = samples.or(file.samples).unwrap_or(200_000);
            let sd = seed.or(file.seed).unwrap_or(config::DEFAULT_SEED);
            let params = make_params(g, m)?;
            let draws = cylinder::i_alpha_samples(&params, a, n, sd)?;
            let fit = cylinder::tail_fit(&draws, -2.0 * (params.q - a) / g)?;
            let expected = -2.0 * (params.q - a) / g;
            let mut rec = record("tail", Some(&params), Some(vec![a]), None, fit.slope);
            rec.stderr = Some(fit.slope_err);
            rec.n_samples = Some(n);
            rec.seed = Some(sd);
            rec.diagnostics = Some(BTreeMap::from([
                ("expected_slope".to_string(), expected),
                ("window_lo".to_string(), fit.window.0),
                ("window_hi".to_string(), fit.window.1),
            ]));
            // Full survival curve for plotting.
            let mut sorted = draws.clone();
            sorted.sort_by(f64::total_cmp);
            let lo = sorted[sorted.len() / 2];
            let hi = sorted[sorted.len() - 2];
            let mut curve = Vec::new();
            for k in 0..200 {
                let t = lo * (hi / lo).powf(k as f64 / 199.0);
                let exceed = sorted.len() - sorted.partition_point(|&x| x <= t);
                curve.push((t, exceed as f64 / sorted.len() as f64));
            }
            Ok((rec, Some(CsvTable::Survival(curve))))
        }
        Command::Rbar {
            gamma,
            mu,
            alpha,
            samples,
            seed,
        } => {
            let g = need(*gamma, file.gamma, "gamma")?;
            let m = need(*mu, file.mu, "mu")?;
            let a = need(*alpha, file.alpha, "alpha")?;
            let n = samples.or(file.samples).unwrap_or(10_000);
            let sd = seed.or(file.seed).unwrap_or(config::DEFAULT_SEED);
            let params = make_params(g, m)?;
            let est = cylinder::rbar_estimate(&params, a, n, sd)?;
            let full = cylinder::full_reflection(&params, a, est.value)?;
            let mut rec = attach_estimate(
                record("rbar", Some(&params), Some(vec![a]), None, 0.0),
                &est,
            );
            let d = rec.diagnostics.get_or_insert_with(BTreeMap::new);
            d.insert("full_reflection".to_string(), full);
            if let Ok(exact) = special::reflection_dozz(&params, a) {
                d.insert("reflection_closed_form".to_string(), exact);
            }
            Ok((rec, None))
        }
        Command::Verify {
            gamma,
            mu,
            alphas,
            points,
        } => {
            let g = need(*gamma, file.gamma, "gamma")?;
            let m = need(*mu, file.mu, "mu")?;
            let a = three_alphas(
                alphas
                    .clone()
                    .or(file.alphas.clone())
                    .unwrap_or_else(|| vec![1.62, 1.81, 1.55]),
            )?;
            let n_points = points.or(file.points).unwrap_or(5);
            let params = make_params(g, m)?;
            let mut rows = Vec::new();
            let mut per_identity: BTreeMap<String, f64> = BTreeMap::new();
            for k in 0..n_points {
                let da = 0.05 * k as f64 / n_points.max(1) as f64;
                let point = [a[0] + da, a[1], a[2]];
                let label = format!("a1={:.4};a2={:.4};a3={:.4}", point[0], point[1], point[2]);
                for which in bpz::ShiftIdentity::ALL {
                    let r = internal!(bpz::shift_residuals(&params, point, which))?;
                    rows.push((which.name().to_string(), label.clone(), r));
                    let e = per_identity.entry(which.name().to_string()).or_insert(0.0);
                    *e = e.max(r);
                }
                let r = internal!(special::dozz_shift_residual(
                    &params, point[0], point[1], point[2]
                ))?;
                rows.push(("dozz-shift".to_string(), label.clone(), r));
                let e = per_identity.entry("dozz-shift".to_string()).or_insert(0.0);
                *e = e.max(r);
            }
            let rep = internal!(bpz::periodicity_check(&params, a, n_points))?;
            per_identity.insert("periodicity".to_string(), rep.max_residual);
            per_identity.insert(
                "gamma_sq_rational".to_string(),
                if rep.gamma_sq_rational { 1.0 } else { 0.0 },
            );
            let max_res = rows.iter().map(|r| r.2).fold(rep.max_residual, f64::max);
            let mut rec = record("verify", Some(&params), Some(a.to_vec()), None, max_res);
            rec.diagnostics = Some(per_identity);
            Ok((rec, Some(CsvTable::Verify(rows))))
        }
        Command::Kpz {
            gamma,
            c_matter,
            delta_sigma,
        } => {
            let c_m = c_matter.or(file.c_matter);
            let ds = delta_sigma.or(file.delta_sigma);
            match (c_m, ds) {
                (Some(c), None) => {
                    let g = internal!(kpz::gamma_from_central_charge(c))?;
                    let params = make_params(g, 1.0)?;
                    let mut rec = record("kpz", Some(&params), None, None, g);
                    rec.diagnostics = Some(BTreeMap::from([
                        ("c_matter".to_string(), c),
                        ("c_liouville".to_string(), kpz::liouville_central_charge(g)),
                    ]));
                    Ok((rec, None))
                }
                (None, Some(d)) => {
                    let g = need(*gamma, file.gamma, "gamma")?;
                    let params = make_params(g, 1.0)?;
                    let sol = internal!(kpz::alpha_from_weight(&params, d))?;
                    let mut rec = record("kpz", Some(&params), None, None, sol.alpha);
                    rec.diagnostics = Some(BTreeMap::from([
                        ("delta_sigma".to_string(), sol.delta_sigma),
                        ("delta_alpha".to_string(), sol.delta_alpha),
                        ("c_matter".to_string(), sol.c_matter),
                    ]));
                    Ok((rec, None))
                }
                _ => Err(RunError::Internal(
                    "kpz needs exactly one of --c-matter or --delta-sigma".to_string(),
                )),
            }
        }
        Command::DfCheck { gamma, a1, a2 } => {
            let g = need(*gamma, file.gamma, "gamma")?;
            let x1 = need(*a1, file.a1, "a1")?;
            let x2 = need(*a2, file.a2, "a2")?;
            let params = make_params(g, 1.0)?;
            let check = internal!(sphere::df_check(g, x1, x2))?;
            let mut rec = record(
                "df-check",
                Some(&params),
                Some(vec![x1, x2, check.a3]),
                None,
                check.quadrature,
            );
            rec.diagnostics = Some(BTreeMap::from([
                ("closed_form".to_string(), check.closed_form),
                (
                    "rel_error".to_string(),
                    (check.quadrature - check.closed_form).abs() / check.closed_form.abs(),
                ),
            ]));
            Ok((rec, None))
        }
        Command::Girsanov {
            gamma,
            mu,
            samples,
            seed,
        } => {
            let g = need(*gamma, file.gamma, "gamma")?;
            let m = need(*mu, file.mu, "mu")?;
            let n = samples.or(file.samples).unwrap_or(40_000);
            let sd = seed.or(file.seed).unwrap_or(config::DEFAULT_SEED);
            let params = make_params(g, m)?;
            let ens = sphere::SphereEnsemble::build(&params, 8, &[], 0.0)?;
            let mut diagnostics = BTreeMap::new();
            let mut worst: f64 = 0.0;
            for (pair, check) in girsanov_pairs(&params, &ens, n, sd)?.into_iter().enumerate() {
                let sig = check.sigma_distance().abs();
                worst = worst.max(sig);
                diagnostics.insert(format!("pair{pair}_lhs"), check.lhs);
                diagnostics.insert(format!("pair{pair}_rhs"), check.rhs);
                diagnostics.insert(format!("pair{pair}_sigma"), sig);
            }
            let mut rec = record("girsanov", Some(&params), None, None, worst);
            rec.n_samples = Some(n);
            rec.seed = Some(sd);
            rec.diagnostics = Some(diagnostics);
            Ok((rec, None))
        }
    }
}

/// Five deterministic (f, F) pairs on the small ensemble.
fn girsanov_pairs(
    params: &LiouvilleParams,
    ens: &sphere::SphereEnsemble,
    n_samples: u64,
    seed: u64,
) -> Result<Vec<sphere::GirsanovCheck>, RunError> {
    let n = ens.n_cells();
    let mut out = Vec::new();
    for pair in 0..5u64 {
        // f: a handful of cells with position-dependent weights.
        let mut f = vec![0.0; n];
        for (i, c) in ens.cells.iter().enumerate() {
            if i % (7 + pair as usize) == 0 {
                f[i] = 1.0 + 0.3 * (c.center.re * (1.0 + pair as f64)).sin();
            }
        }
        // F: normalized exponential of a sparse linear functional.
        let picks: Vec<usize> = (0..4).map(|k| ((k + 1) * (pair as usize + 3) * 11) % n).collect();
        let coef = 0.15;
        let var: f64 = {
            let mut v = 0.0;
            for &i in &picks {
                for &j in &picks {
                    v += coef * coef * ens.covariance(i, j);
                }
            }
            v
        };
        let observable = move |field: &[f64]| {
            let lin: f64 = picks.iter().map(|&i| coef * field[i]).sum();
            (lin - 0.5 * var).exp()
        };
        out.push(sphere::girsanov_residual(
            params, ens, &f, observable, n_samples, seed,
        )?);
    }
    Ok(out)
}
