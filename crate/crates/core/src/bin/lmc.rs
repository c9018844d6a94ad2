use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use lmc_core::asymptotics::{
    circle_sup, d_from_flux, default_window, estimate_decay, fit_a, fit_bcd, harmonic_fit, log_radii, RadiusSweep,
};
use lmc_core::config::Config;
use lmc_core::fields::{read_field, write_field, PolarGrid, ScalarField};
use lmc_core::lewy::lewy_roundtrip_check;
use lmc_core::nonlocal::{
    commutator_defect, cross_term, frac_laplacian, product_rule_defect, riesz_potential, Bump, FracParams, Gaussian,
    PlaneFunction, PowerTail,
};
use lmc_core::oracle::{oracle_field, OracleField};
use lmc_core::phase::{phase, PhaseParams};
use lmc_core::scenario::{oracle_from_config, run_scenario, Check, GridSpec, ScenarioConfig, SCENARIO_KEYS};
use lmc_core::solver::{initial_guess, newton_solve, ExteriorProblem};
use lmc_core::{Error, Result};

#[derive(Parser)]
#[command(name = "lmc", version, about = "Exterior asymptotics for the 2D Lagrangian mean curvature equation")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// config file (flat key = value)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory; defaults to the config's `out` key, then `out/<verb>`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// exit with status 1 when any check fails
    #[arg(long, global = true)]
    strict: bool,
    /// multiplies n_r and n_phi
    #[arg(long, global = true)]
    grid_scale: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// sample an oracle family and its right-hand side
    Oracle,
    /// re-solve an oracle problem with Newton from its boundary data
    Solve,
    /// fit A, b, c, d (and harmonic modes) to an oracle or a field file
    Fit,
    /// measure the remainder decay exponent and log power
    Decay,
    /// rotate an oracle solution and check the transformed problem
    Lewy,
    /// evaluate nonlocal operators and their decay
    Nonlocal,
    /// run a full scenario and write report.json
    Scenario,
}

impl Verb {
    fn name(self) -> &'static str {
        match self {
            Verb::Oracle => "oracle",
            Verb::Solve => "solve",
            Verb::Fit => "fit",
            Verb::Decay => "decay",
            Verb::Lewy => "lewy",
            Verb::Nonlocal => "nonlocal",
            Verb::Scenario => "scenario",
        }
    }
}

struct Ctx {
    cfg: Config,
    out: PathBuf,
    grid_scale: usize,
}

impl Ctx {
    fn write_json(&self, name: &str, v: &impl Serialize) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        std::fs::write(self.out.join(name), s)?;
        Ok(())
    }

    fn write_field(&self, name: &str, u: &ScalarField) -> Result<()> {
        write_field(u, BufWriter::new(File::create(self.out.join(name))?))
    }

    fn grid(&self) -> Result<PolarGrid> {
        GridSpec::from_config(&self.cfg)?.build(self.grid_scale)
    }

    fn oracle(&self) -> Result<OracleField> {
        let spec = oracle_from_config(&self.cfg)?;
        oracle_field(&spec, &self.grid()?)
    }

    /// A field file named by `field`, or the oracle described by the config.
    fn source(&self) -> Result<Source> {
        if self.cfg.has("field") {
            let path = PathBuf::from(self.cfg.str("field")?);
            let u = read_field(BufReader::new(File::open(&path)?))?;
            Ok(Source::File(u))
        } else {
            Ok(Source::Oracle(Box::new(self.oracle()?)))
        }
    }
}

enum Source {
    File(ScalarField),
    Oracle(Box<OracleField>),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(checks) => {
            for c in &checks {
                println!(
                    "{} {} = {:.6e} (tolerance {:.3e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance
                );
            }
            ExitCode::from(status(cli.strict, &checks))
        }
        Err(e) => {
            eprintln!("lmc {}: {e}", cli.verb.name());
            ExitCode::from(2)
        }
    }
}

/// 1 when `strict` and a check failed, else 0.
fn status(strict: bool, checks: &[Check]) -> u8 {
    u8::from(strict && checks.iter().any(|c| !c.pass))
}

fn run(cli: &Cli) -> Result<Vec<Check>> {
    let path = cli.config.as_deref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let cfg = Config::load(path)?;
    if let Verb::Scenario = cli.verb {
        return scenario(cli, cfg);
    }
    let out = match (&cli.out, cfg.has("out")) {
        (Some(o), _) => o.clone(),
        (None, true) => PathBuf::from(cfg.str("out")?),
        (None, false) => Path::new("out").join(cli.verb.name()),
    };
    let grid_scale = match cli.grid_scale {
        Some(k) => k,
        None => cfg.parsed_or("grid_scale", 1)?,
    };
    if grid_scale == 0 {
        return Err(Error::Config("grid scale must be positive".into()));
    }
    std::fs::create_dir_all(&out)?;
    let ctx = Ctx { cfg, out, grid_scale };
    let checks = match cli.verb {
        Verb::Oracle => oracle(&ctx),
        Verb::Solve => solve(&ctx),
        Verb::Fit => fit(&ctx),
        Verb::Decay => decay(&ctx),
        Verb::Lewy => lewy(&ctx),
        Verb::Nonlocal => nonlocal(&ctx),
        Verb::Scenario => unreachable!(),
    }?;
    // a scenario config is reusable by the single-stage verbs
    for k in ctx.cfg.unused().into_iter().filter(|k| !SCENARIO_KEYS.contains(&k.as_str())) {
        eprintln!("lmc {}: ignoring key '{k}'", cli.verb.name());
    }
    Ok(checks)
}

fn scenario(cli: &Cli, cfg: Config) -> Result<Vec<Check>> {
    let mut sc = ScenarioConfig::from_config(&cfg)?;
    if let Some(k) = cli.grid_scale {
        sc.grid_scale = k;
    }
    let out = cli.out.clone().or_else(|| sc.out.clone()).unwrap_or_else(|| Path::new("out").join(&sc.name));
    let report = run_scenario(&sc)?;
    report.write(&out)?;
    for s in report.stages.iter().filter(|s| !s.ok) {
        eprintln!("stage {} failed: {}", s.stage, s.error.as_deref().unwrap_or(""));
    }
    for n in &report.notes {
        eprintln!("note: {n}");
    }
    Ok(report.checks)
}

fn oracle(ctx: &Ctx) -> Result<Vec<Check>> {
    let o = ctx.oracle()?;
    ctx.write_field("u.field", &o.u)?;
    ctx.write_field("f.field", &o.f)?;
    let consistency = o.self_consistency()?;
    ctx.write_json(
        "oracle.json",
        &json!({
            "oracle": o.function.spec(),
            "regime": o.regime,
            "truth": o.truth,
            "grid": grid_json(o.u.grid()),
            "self_consistency": consistency,
        }),
    )?;
    Ok(vec![])
}

fn solve(ctx: &Ctx) -> Result<Vec<Check>> {
    let max_iterations = ctx.cfg.parsed_or("max_iterations", 15usize)?;
    let tol = ctx.cfg.f64_or("tol_residual", 1e-10)?;
    let o = ctx.oracle()?;
    let spec = o.function.spec();
    let p = ExteriorProblem::with_boundary_from(&o.u, spec.theta, o.f.clone(), spec.beta)?;
    let (u, rep) = newton_solve(&p, &initial_guess(&p))?;
    let err = u.zip_with(&o.u, |a, b| a - b)?.sup_norm();
    ctx.write_field("solution.field", &u)?;
    ctx.write_json("newton.json", &json!({ "grid": grid_json(u.grid()), "newton": rep, "max_error": err }))?;
    Ok(vec![
        Check::new("newton_converged", rep.converged && rep.final_residual() < tol, rep.final_residual(), tol),
        Check::at_most("newton_iterations", rep.iterations as f64, max_iterations as f64),
    ])
}

fn fit(ctx: &Ctx) -> Result<Vec<Check>> {
    let cfg = &ctx.cfg;
    let (u, theta) = match ctx.source()? {
        Source::File(u) => (u, cfg.opt_f64("theta")?),
        Source::Oracle(o) => (o.u, Some(o.function.spec().theta)),
    };
    let mut report = serde_json::Map::new();
    report.insert("grid".into(), grid_json(u.grid()));
    if let Some((r1, r2)) = cfg.opt_pair("harmonic")? {
        let k_max = cfg.parsed_or("k_max", 4usize)?;
        report.insert("harmonic".into(), serde_json::to_value(harmonic_fit(&u, r1, r2, k_max)?)?);
    }
    let mut checks = Vec::new();
    if let Some(theta) = theta {
        let window = cfg.opt_pair("fit_window")?.unwrap_or_else(|| default_window(u.grid()));
        let a = fit_a(&u, window)?;
        let tol_a = cfg.f64_or("tol_a", 1e-3)?;
        checks.push(Check::at_most("a_admissible", (phase(&a) - theta).abs(), tol_a));
        report.insert("A".into(), serde_json::to_value(a)?);
        report.insert("window".into(), json!(window));
        report.insert("bcd".into(), serde_json::to_value(fit_bcd(&u, &a, window)?)?);
        let mut flux = Vec::new();
        for r in cfg.list_or("flux_radii", &[])? {
            flux.push(json!({ "r": r, "d": d_from_flux(&u, &a, r)? }));
        }
        report.insert("d_flux".into(), json!(flux));
    }
    ctx.write_json("fit.json", &report)?;
    Ok(checks)
}

fn decay(ctx: &Ctx) -> Result<Vec<Check>> {
    let cfg = &ctx.cfg;
    let (lo, hi) = cfg.pair("decay_window")?;
    let radii = log_radii(lo, hi, cfg.parsed_or("decay_count", 9usize)?);
    // a field file is taken to be the remainder itself
    let (w, claimed) = match ctx.source()? {
        Source::File(w) => (w, None),
        Source::Oracle(o) => (o.truth.remainder(&o.u), Some((o.truth.sigma, o.truth.mu))),
    };
    let fit = estimate_decay(&w, &radii)?;
    let sweep = RadiusSweep::from_values(&radii, &circle_sup(&w, &radii)?);
    std::fs::write(ctx.out.join("decay.csv"), sweep.to_csv())?;
    ctx.write_json("decay.json", &json!({ "fit": fit, "mu": fit.mu(), "claimed": claimed }))?;
    let mut checks = Vec::new();
    if let Some((sigma, mu)) = claimed {
        let tol = cfg.f64_or("tol_sigma", 0.05)?;
        checks.push(Check::at_most("sigma", (fit.slope + sigma).abs(), tol));
        checks.push(Check::new("mu", fit.mu() == mu, fit.log_power, 0.5));
    }
    Ok(checks)
}

fn lewy(ctx: &Ctx) -> Result<Vec<Check>> {
    let cfg = &ctx.cfg;
    let o = ctx.oracle()?;
    let spec = o.function.spec();
    let p = PhaseParams::new(spec.theta, cfg.f64("delta")?)?;
    let window = cfg.opt_pair("lewy_window")?.unwrap_or((o.u.grid().r_min(), o.u.grid().r_max()));
    let rep = lewy_roundtrip_check(&o.u, &o.f, &p, spec.beta, window)?;
    ctx.write_json("lewy.json", &rep)?;
    Ok(rep.checks)
}

fn test_function(cfg: &Config, key: &str, sigma_key: &str) -> Result<Box<dyn PlaneFunction>> {
    Ok(match cfg.str_or(key, "gaussian").as_str() {
        "gaussian" => {
            let (cx, cy) = cfg.opt_pair(&format!("{key}_center"))?.unwrap_or((0.0, 0.0));
            Box::new(Gaussian { center: [cx, cy], width: cfg.f64_or(&format!("{key}_width"), 1.0)?, amp: 1.0 })
        }
        "bump" => Box::new(Bump::unit_mass(cfg.f64_or(&format!("{key}_radius"), 1.0)?)),
        "power" => Box::new(PowerTail { sigma: cfg.f64(sigma_key)? }),
        other => return Err(Error::Config(format!("{key}: unknown function '{other}'"))),
    })
}

fn nonlocal(ctx: &Ctx) -> Result<Vec<Check>> {
    let cfg = &ctx.cfg;
    let p = FracParams::new(cfg.f64("s")?, cfg.f64_or("quad_r_max", 1e4)?, cfg.f64_or("quad_tol", 1e-8)?)?;
    let quantity = cfg.str("quantity")?;
    let u = test_function(cfg, "function", "sigma")?;
    let mut report = serde_json::Map::new();
    report.insert(
        "params".into(),
        json!({ "s": p.s, "c_ns": p.c_ns, "quad_r_max": p.quad_r_max, "quad_tol": p.quad_tol }),
    );
    report.insert("quantity".into(), json!(quantity));
    match quantity.as_str() {
        "frac" | "riesz" | "cross" => {
            let (lo, hi) = cfg.pair("sweep")?;
            let radii = log_radii(lo, hi, cfg.parsed_or("count", 9usize)?);
            let (dx, dy) = cfg.opt_pair("direction")?.unwrap_or((1.0, 0.0));
            let v = if quantity == "cross" { Some(test_function(cfg, "function2", "sigma2")?) } else { None };
            let sweep = RadiusSweep::run(&radii, [dx, dy], |x| match quantity.as_str() {
                "frac" => frac_laplacian(u.as_ref(), x, &p),
                "riesz" => riesz_potential(u.as_ref(), x, &p),
                _ => cross_term(u.as_ref(), v.as_deref().expect("second function"), x, &p),
            })?;
            std::fs::write(ctx.out.join("sweep.csv"), sweep.to_csv())?;
            let fit = sweep.fit()?;
            report.insert("fit".into(), json!({ "fit": fit, "mu": fit.mu() }));
        }
        "product" | "commutator" => {
            let (x, y) = cfg.pair("point")?;
            let defect = if quantity == "product" {
                let v = test_function(cfg, "function2", "sigma2")?;
                product_rule_defect(u.as_ref(), v.as_ref(), [x, y], &p)?
            } else {
                commutator_defect(u.as_ref(), cfg.parsed_or("axis", 0usize)?, [x, y], &p)?
            };
            report.insert("point".into(), json!([x, y]));
            report.insert("defect".into(), json!(defect));
        }
        other => return Err(Error::Config(format!("quantity: unknown '{other}'"))),
    }
    ctx.write_json("nonlocal.json", &report)?;
    Ok(vec![])
}

fn grid_json(g: &PolarGrid) -> serde_json::Value {
    json!({ "r_min": g.r_min(), "r_max": g.r_max(), "n_r": g.n_r(), "n_phi": g.n_phi() })
}
