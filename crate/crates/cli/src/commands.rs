use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use virusperiod::bounds::{check_hypothesis, compute_bounds, AprioriBounds, HypothesisReport};
use virusperiod::certify::{certify, Verdict};
use virusperiod::integrate::integrate;
use virusperiod::periodic::Extrema;
use virusperiod::solver::{find_periodic, multi_start, FindResult, GuessSource, MultiStartReport};
use virusperiod::{Coefficient, CoefficientSet, Model, PeriodicFn, PeriodicOrbit, State, SystemKind};

use crate::config::{self, Loaded, Variants};
use crate::output::{to_value, write_json, write_trajectory_csv, Envelope};
use crate::{Cli, CliError, Command, Exit, TOOL, VERSION};

/// What a command prints and how the process exits.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit: Exit,
    pub stdout: String,
    /// Human-readable reason for a non-zero exit.
    pub message: Option<String>,
}

pub const THREADS_ENV: &str = "VIRUSPERIOD_THREADS";

#[derive(Debug, Clone, Serialize)]
pub struct OrbitSummary {
    pub converged: bool,
    /// Log-coordinate initial point.
    pub x0: [f64; 3],
    /// `(S, L, A)` at `t = 0`.
    pub y0: [f64; 3],
    pub residual: f64,
    pub residual_sum: f64,
    pub iterations: usize,
    pub poincare_iterations: usize,
    pub history: Vec<f64>,
    pub guess: [f64; 3],
    pub guess_source: GuessSource,
    pub monodromy: [[f64; 3]; 3],
    /// `[re, im]` by decreasing modulus.
    pub floquet_multipliers: Vec<[f64; 2]>,
    pub spectral_radius: f64,
    pub box_margin: Option<f64>,
}

impl OrbitSummary {
    pub fn new(orbit: &PeriodicOrbit, bounds: Option<&AprioriBounds>) -> Self {
        Self {
            converged: orbit.converged,
            x0: orbit.x0.to_array(),
            y0: orbit.x0.from_log().to_array(),
            residual: orbit.residual,
            residual_sum: orbit.residual_sum,
            iterations: orbit.iterations,
            poincare_iterations: orbit.poincare_iterations,
            history: orbit.history.clone(),
            guess: orbit.guess.to_array(),
            guess_source: orbit.guess_source,
            monodromy: orbit.monodromy,
            floquet_multipliers: orbit.floquet_multipliers.iter().map(|z| [z.re, z.im]).collect(),
            spectral_radius: orbit.spectral_radius(),
            box_margin: bounds
                .filter(|b| b.is_consistent())
                .map(|b| b.margin(orbit.x0.to_array())),
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let name = cli.command.name();
    let loaded = match cli.config.as_deref() {
        None => Err(CliError::config("--config <file> is required")),
        Some(path) => config::load(path).map(|l| apply_overrides(l, cli)),
    };
    let loaded = match loaded {
        Ok(l) => l,
        Err(e) => {
            let env = Envelope::new(name, None, None).with_status(e.exit, Some(e.message));
            return finish(cli.out.as_deref(), name, env);
        }
    };
    if cli.command == Command::Sweep {
        return match sweep(&loaded, cli.out.as_deref()) {
            Ok(o) => o,
            Err(e) => finish(
                cli.out.as_deref(),
                name,
                Envelope::new(name, Some(loaded.hash.clone()), Some(loaded.variants()))
                    .with_status(e.exit, Some(e.message)),
            ),
        };
    }

    let base = Envelope::new(name, Some(loaded.hash.clone()), Some(loaded.variants()));
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let env = match cli.command {
        Command::Validate => validate(&loaded, base),
        Command::Hypothesis => hypothesis(&loaded, base),
        Command::Bounds => bounds(&loaded, base),
        Command::Simulate => simulate(&loaded, base, &out_dir),
        Command::FindPeriodic => find(&loaded, base, &out_dir, false),
        Command::Certify => find(&loaded, base, &out_dir, true),
        Command::Sweep => unreachable!(),
    };
    let env = env.unwrap_or_else(|(base, e)| base.with_status(e.exit, Some(e.message)));
    finish(cli.out.as_deref(), name, env)
}

fn finish(out: Option<&Path>, name: &str, env: Envelope) -> Outcome {
    let mut env = env;
    if let Some(dir) = out {
        if let Err(e) = write_json(dir, &format!("{name}.json"), &env) {
            env = env.with_status(e.exit, Some(e.message));
        }
    }
    Outcome {
        exit: env.status,
        stdout: serde_json::to_string_pretty(&env).expect("envelope serializes") + "\n",
        message: env.message.clone(),
    }
}

fn apply_overrides(mut l: Loaded, cli: &Cli) -> Loaded {
    if let Some(v) = cli.d1_variant {
        l.config.d1_variant = v.into();
    }
    if let Some(v) = cli.a_decay {
        l.config.a_decay = v.into();
    }
    if let Some(n) = cli.multi_start {
        l.config.multi_start = Some(n);
    }
    if let Some(n) = cli.grid_n {
        l.config.grid_n = n;
    }
    l
}

type CommandResult = Result<Envelope, (Envelope, CliError)>;

/// Attaches the partially built envelope to an error.
fn ctx<T>(base: &Envelope, r: Result<T, impl Into<CliError>>) -> Result<T, (Envelope, CliError)> {
    r.map_err(|e| (base.clone(), e.into()))
}

fn model(l: &Loaded) -> Model<'_> {
    Model::with_a_decay(&l.coefficients, l.config.a_decay)
}

fn validate(l: &Loaded, base: Envelope) -> CommandResult {
    if l.config.grid_n < 3 {
        return Err((base, CliError::config("grid_n must be at least 3")));
    }
    let grid_n = l.config.grid_n;
    let violations = l.coefficients.positivity_violations(grid_n);
    let summary: BTreeMap<&str, serde_json::Value> = l
        .coefficients
        .functions()
        .iter()
        .map(|(c, f)| {
            let Extrema { min, max, .. } = f.min_max(grid_n);
            (c.name(), json!({ "mean": f.mean(), "min": min, "max": max }))
        })
        .collect();
    let result = json!({
        "omega": l.coefficients.omega(),
        "grid_n": grid_n,
        "positivity_ok": violations.is_empty(),
        "positivity_violations": to_value(&violations),
        "coefficients": summary,
    });
    let env = base.with_result(&result);
    if violations.is_empty() {
        return Ok(env);
    }
    let names: Vec<String> = violations
        .iter()
        .map(|v| format!("{} (min {} at t = {})", v.coefficient, v.min, v.argmin))
        .collect();
    Ok(env.with_status(
        Exit::Positivity,
        Some(format!(
            "coefficients must be strictly positive: {}",
            names.join(", ")
        )),
    ))
}

fn hypothesis_report(l: &Loaded, base: &Envelope) -> Result<HypothesisReport, (Envelope, CliError)> {
    ctx(base, check_hypothesis(&l.coefficients, l.config.grid_n))
}

fn hypothesis_message(h: &HypothesisReport) -> String {
    if !h.positivity_ok {
        let names: Vec<&str> = h
            .positivity_violations
            .iter()
            .map(|v| v.coefficient.name())
            .collect();
        format!("hypothesis fails: not strictly positive: {}", names.join(", "))
    } else {
        format!(
            "hypothesis fails: max alpha1(alpha2+gamma2)/(alpha1+mu2) = {} exceeds min(mu3+alpha2+gamma2) = {}",
            h.lhs_max, h.rhs_min
        )
    }
}

fn hypothesis(l: &Loaded, base: Envelope) -> CommandResult {
    let h = hypothesis_report(l, &base)?;
    let env = base.with_result(&h);
    Ok(if h.holds {
        env
    } else {
        let msg = hypothesis_message(&h);
        env.with_status(Exit::Hypothesis, Some(msg))
    })
}

fn bounds(l: &Loaded, base: Envelope) -> CommandResult {
    let h = hypothesis_report(l, &base)?;
    let b = compute_bounds(&l.coefficients, l.config.d1_variant, l.config.grid_n);
    let result = json!({
        "hypothesis": to_value(&h),
        "bounds": b.as_ref().ok().map(to_value),
    });
    let env = base.with_result(&result);
    if !h.holds {
        let msg = hypothesis_message(&h);
        return Ok(env.with_status(Exit::Hypothesis, Some(msg)));
    }
    match b {
        Err(e) => {
            let e = CliError::from(e);
            Ok(env.with_status(e.exit, Some(e.message)))
        }
        Ok(b) if !b.is_consistent() => {
            let comps: Vec<String> = b.empty_components.iter().map(|i| format!("x{}", i + 1)).collect();
            Ok(env.with_status(
                Exit::BoundsInconsistency,
                Some(format!("a priori box is empty for {}", comps.join(", "))),
            ))
        }
        Ok(_) => Ok(env),
    }
}

fn simulate(l: &Loaded, base: Envelope, out: &Path) -> CommandResult {
    let Some(spec) = l.config.simulate.clone() else {
        return Err((
            base,
            CliError::config("simulate needs a \"simulate\" section with y0 and t1"),
        ));
    };
    let y0 = State::from_array(spec.y0);
    let start = match spec.system {
        SystemKind::Transformed => ctx(&base, y0.to_log())?.to_array(),
        SystemKind::Original => y0.to_array(),
    };
    let traj = ctx(
        &base,
        integrate(
            model(l),
            spec.system,
            start,
            spec.t0,
            spec.t1,
            &l.config.integrator,
        ),
    )?;
    let rows = ctx(&base, write_trajectory_csv(out, "trajectory.csv", &traj))?;
    let last = traj.last();
    let (final_state, final_log) = match spec.system {
        SystemKind::Transformed => (last.map(f64::exp), last),
        SystemKind::Original => (last, last.map(f64::ln)),
    };
    let min_component = traj
        .states
        .iter()
        .flat_map(|s| {
            s.iter().map(move |&v| match traj.system {
                SystemKind::Transformed => v.exp(),
                SystemKind::Original => v,
            })
        })
        .fold(f64::INFINITY, f64::min);
    Ok(base.with_result(&json!({
        "system": spec.system,
        "t0": spec.t0,
        "t1": spec.t1,
        "steps": traj.steps(),
        "rows": rows,
        "final_state": final_state,
        "final_log_state": final_log,
        "min_component": min_component,
        "csv": out.join("trajectory.csv"),
    })))
}

fn find(l: &Loaded, base: Envelope, out: &Path, with_certificate: bool) -> CommandResult {
    let m = model(l);
    let cfg = &l.config;
    let h = hypothesis_report(l, &base)?;
    let b = compute_bounds(&l.coefficients, cfg.d1_variant, cfg.grid_n).ok();
    let user = match cfg.initial_guess {
        Some(g) => Some(ctx(&base, State::from_array(g).to_log())?),
        None => None,
    };

    let mut result = json!({ "hypothesis": to_value(&h), "bounds": to_value(&b) });
    let found: Result<FindResult, CliError> =
        find_periodic(m, b.as_ref(), user, &cfg.shooting, &cfg.integrator).map_err(CliError::from);
    let multi: Option<Result<MultiStartReport, CliError>> = match (cfg.multi_start, &b) {
        (Some(n), Some(bb)) if n > 0 && bb.is_consistent() => Some(thread_pool().and_then(|pool| {
            pool.install(|| multi_start(m, bb, n, &cfg.shooting, &cfg.integrator))
                .map_err(CliError::from)
        })),
        (Some(n), _) if n > 0 => Some(Err(CliError::new(
            Exit::BoundsInconsistency,
            "multi-start needs a non-empty a priori box",
        ))),
        _ => None,
    };
    if let Some(r) = &multi {
        result["multi_start"] = match r {
            Ok(rep) => json!({
                "starts": rep.starts,
                "converged": rep.converged,
                "orbits": rep.orbits.iter().map(|o| OrbitSummary::new(o, b.as_ref())).collect::<Vec<_>>(),
            }),
            Err(e) => json!({ "error": e.message }),
        };
    }

    let hyp_fail = (!h.holds).then(|| hypothesis_message(&h));
    let found = match found {
        Ok(f) => f,
        Err(e) => {
            result["orbit"] = serde_json::Value::Null;
            let env = base.with_result(&result);
            return Ok(match hyp_fail.filter(|_| with_certificate) {
                Some(msg) => env.with_status(Exit::Hypothesis, Some(format!("{msg}; {}", e.message))),
                None => env.with_status(e.exit, Some(e.message)),
            });
        }
    };
    let orbit = &found.orbit;
    result["orbit"] = to_value(&OrbitSummary::new(orbit, b.as_ref()));
    result["averaged"] = to_value(&found.averaged);
    result["failed_attempts"] = to_value(&found.failed_attempts);
    ctx(&base, write_trajectory_csv(out, "orbit.csv", &orbit.trajectory))?;

    let mut status: Option<(Exit, String)> = None;
    if with_certificate {
        let cert = ctx(
            &base,
            certify(m, orbit, &h, b.as_ref(), &cfg.certify, &cfg.integrator),
        )?;
        result["certificate"] = to_value(&cert);
        if let Some(msg) = hyp_fail {
            status = Some((Exit::Hypothesis, msg));
        } else if !orbit.converged {
            status = Some((
                Exit::NonConvergence,
                format!("shooting did not converge (residual {:e})", orbit.residual),
            ));
        } else if cert.verdict == Verdict::Failed {
            status = Some((Exit::CertificationFailed, cert.failures.join("; ")));
        }
    } else if !orbit.converged {
        status = Some((
            Exit::NonConvergence,
            format!("shooting did not converge (residual {:e})", orbit.residual),
        ));
    }
    let env = base.with_result(&result);
    Ok(match status {
        Some((exit, msg)) => env.with_status(exit, Some(msg)),
        None => env,
    })
}

/// Rayon pool sized by `VIRUSPERIOD_THREADS`, or rayon's default.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::config(format!("cannot start thread pool: {e}")))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub variants: Variants,
    pub index: usize,
    pub coefficient: Coefficient,
    pub value: f64,
    pub hypothesis: Option<HypothesisReport>,
    pub bounds: Option<AprioriBounds>,
    pub orbit: Option<OrbitSummary>,
    pub error: Option<String>,
}

fn sweep_point(
    l: &Loaded,
    coefficient: Coefficient,
    value: f64,
    solve: bool,
) -> Result<(HypothesisReport, Option<AprioriBounds>, Option<OrbitSummary>), CliError> {
    let f = PeriodicFn::constant(l.coefficients.omega(), value)?;
    let c: CoefficientSet = l.coefficients.with(coefficient, f)?;
    let h = check_hypothesis(&c, l.config.grid_n)?;
    let b = compute_bounds(&c, l.config.d1_variant, l.config.grid_n).ok();
    let orbit = if solve {
        let m = Model::with_a_decay(&c, l.config.a_decay);
        let found = find_periodic(m, b.as_ref(), None, &l.config.shooting, &l.config.integrator)?;
        Some(OrbitSummary::new(&found.orbit, b.as_ref()))
    } else {
        None
    };
    Ok((h, b, orbit))
}

fn sweep(l: &Loaded, out: Option<&Path>) -> Result<Outcome, CliError> {
    let spec = l
        .config
        .sweep
        .clone()
        .ok_or_else(|| CliError::config("sweep needs a \"sweep\" section with coefficient and values"))?;
    if spec.values.is_empty() {
        return Err(CliError::config("sweep.values is empty"));
    }
    let pool = thread_pool()?;
    let records: Vec<SweepRecord> = pool.install(|| {
        spec.values
            .par_iter()
            .enumerate()
            .map(|(index, &value)| {
                let r = sweep_point(l, spec.coefficient, value, spec.solve);
                let mut rec = SweepRecord {
                    tool: TOOL,
                    version: VERSION,
                    config_hash: l.hash.clone(),
                    variants: l.variants(),
                    index,
                    coefficient: spec.coefficient,
                    value,
                    hypothesis: None,
                    bounds: None,
                    orbit: None,
                    error: None,
                };
                match r {
                    Ok((h, b, o)) => {
                        rec.hypothesis = Some(h);
                        rec.bounds = b;
                        rec.orbit = o;
                    }
                    Err(e) => rec.error = Some(e.message),
                }
                rec
            })
            .collect()
    });
    let mut stdout = String::new();
    for r in &records {
        stdout.push_str(&serde_json::to_string(r).expect("records serialize"));
        stdout.push('\n');
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .and_then(|_| std::fs::write(dir.join("sweep.jsonl"), &stdout))
            .map_err(|e| CliError::config(format!("cannot write sweep.jsonl: {e}")))?;
    }
    Ok(Outcome {
        exit: Exit::Success,
        stdout,
        message: None,
    })
}
