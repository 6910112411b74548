use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cylstable::constants::ConstantsReport;
use cylstable::csv::{parse_real, real};
use cylstable::experiments::{
    char_function_test, default_u_grid, geometric_grid, moment_experiment, picard_convergence_experiment, stable_cf,
    tail_experiment, uniqueness_experiment, willet_wong_check, ConvergenceConfig, ExperimentReport, MomentConfig,
    Status, Table, TailConfig, TailTarget, Verdict,
};
use cylstable::hilbert::{
    check_a2, check_a3, check_norm_continuity, BasisTruncation, CoefRule, DiagonalModel, HSMatrix, Shape,
};
use cylstable::integral::{integrate, StepIntegrand};
use cylstable::picard::{glue_solve, solve, SolverConfig};
use cylstable::sampling::{
    draw_isotropic, draw_positive_stable, draw_scalar_sas, extend_dimension, generate_noise_path, uniform_grid,
    AlphaParams, NoisePath,
};
use num_complex::Complex64;

use crate::settings::{usage, Settings};
use crate::{Command, Common, ModelArgs, SolverArgs};

const MODEL_KEYS: [&str; 9] = [
    "preset",
    "model",
    "lambda_rule",
    "delta",
    "kappa_rule",
    "f_rule",
    "shape",
    "kappa",
    "phi",
];

macro_rules! keys {
    ($($group:expr),* ; $($k:literal),*) => {{
        static KEYS: std::sync::OnceLock<Vec<&'static str>> = std::sync::OnceLock::new();
        KEYS.get_or_init(|| {
            let mut v: Vec<&'static str> = vec!["out", $($k),*];
            $(v.extend_from_slice(&$group);)*
            v.sort_unstable();
            v.dedup();
            v
        })
        .as_slice()
    }};
}

fn start(command: &'static str, allowed: &'static [&'static str], common: &Common) -> Result<Settings> {
    let mut s = Settings::load(command, allowed, common.config.as_deref())?;
    if allowed.contains(&"seed") {
        s.flag("seed", common.seed);
    } else if common.seed.is_some() {
        return Err(usage(format!("`{command}` is deterministic and takes no --seed")));
    }
    s.flag("out", common.out.as_ref().map(|p| p.display().to_string()));
    Ok(s)
}

fn out_dir(s: &mut Settings) -> Result<PathBuf> {
    Ok(PathBuf::from(s.get("out", ".".to_string())?))
}

fn write_file(dir: &Path, name: &str, header: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let mut buf = header.as_bytes().to_vec();
    body(&mut buf)?;
    fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn emit(report: &ExperimentReport, dir: &Path, header: &str) -> Result<Status> {
    let (csv, summary) = report.write_files(dir, header)?;
    log::info!("{} finished in {:.2?}", report.name, report.runtime);
    for v in &report.verdicts {
        println!("{}: {} (value {}, {})", v.name, v.status, real(v.value), v.threshold);
    }
    println!("overall: {}", report.overall());
    println!("wrote {} and {}", csv.display(), summary.display());
    Ok(report.overall())
}

pub fn run(command: Command, common: &Common) -> Result<Status> {
    match command {
        Command::Constants {
            alpha,
            p,
            n,
            c_f,
            c_g,
            c,
        } => {
            let mut s = start("constants", keys!(; "alpha", "p", "n", "c_F", "c_G", "c"), common)?;
            s.flag("alpha", alpha)
                .flag("p", p)
                .flag("n", n)
                .flag("c_F", c_f)
                .flag("c_G", c_g)
                .flag("c", c);
            let report = ConstantsReport::compute(
                s.get("alpha", 1.5)?,
                s.get("p", 1.0)?,
                s.get("n", 1usize)?,
                s.get("c_F", 1.0)?,
                s.get("c_G", 1.0)?,
                s.get("c", 1.0)?,
            )?;
            let dir = out_dir(&mut s)?;
            let header = s.header();
            let kv = report.to_key_value();
            write_file(&dir, "constants.txt", &header, |w| Ok(w.write_all(kv.as_bytes())?))?;
            write_file(&dir, "constants.csv", &header, |w| {
                Ok(w.write_all(report.to_csv().as_bytes())?)
            })?;
            print!("{kv}");
            Ok(Status::Pass)
        }
        Command::Sample {
            law,
            alpha,
            beta,
            scale,
            n,
            count,
        } => {
            let mut s = start(
                "sample",
                keys!(; "seed", "law", "alpha", "beta", "scale", "n", "N"),
                common,
            )?;
            s.flag("law", law)
                .flag("alpha", alpha)
                .flag("beta", beta)
                .flag("scale", scale)
                .flag("n", n)
                .flag("N", count);
            let seed: u64 = s.required("seed")?;
            let law = s.get("law", "isotropic".to_string())?;
            let alpha = s.get("alpha", 1.5)?;
            let count = s.get("N", 1000usize)?;
            let (dim, xs) = match law.as_str() {
                "isotropic" => {
                    let n = s.get("n", 1usize)?;
                    (n, draw_isotropic(alpha, n, count, seed)?)
                }
                "scalar" => {
                    let params = AlphaParams::new(alpha, s.get("scale", 1.0)?)?;
                    (1, draw_scalar_sas(&params, count, seed))
                }
                "positive" => (1, draw_positive_stable(s.get("beta", alpha / 2.0)?, count, seed)?),
                other => return Err(usage(format!("unknown law `{other}` (isotropic, scalar, positive)"))),
            };
            let dir = out_dir(&mut s)?;
            let header = s.header();
            let path = write_file(&dir, "samples.csv", &header, |w| {
                let cols: Vec<String> = (1..=dim).map(|j| format!("x_{j}")).collect();
                writeln!(w, "{}", cols.join(","))?;
                for row in xs.chunks(dim) {
                    writeln!(w, "{}", cylstable::csv::join_reals(row))?;
                }
                Ok(())
            })?;
            println!("wrote {count} samples to {}", path.display());
            Ok(Status::Pass)
        }
        Command::Noise {
            alpha,
            m,
            horizon,
            steps,
            extend,
        } => {
            let mut s = start("noise", keys!(; "seed", "alpha", "m", "T", "M", "extend"), common)?;
            s.flag("alpha", alpha)
                .flag("m", m)
                .flag("T", horizon)
                .flag("M", steps)
                .flag("extend", extend);
            let seed: u64 = s.required("seed")?;
            let grid = uniform_grid(s.get("T", 1.0)?, s.get("M", 100usize)?);
            let mut path = generate_noise_path(s.get("alpha", 1.5)?, s.get("m", 4usize)?, &grid, seed)?;
            if let Some(m_new) = s.optional::<usize>("extend")? {
                path = extend_dimension(&path, m_new)?;
            }
            let dir = out_dir(&mut s)?;
            let out = write_file(&dir, "noise.csv", &s.header(), |w| Ok(path.write_csv(w)?))?;
            println!(
                "wrote {} steps x {} coordinates to {}",
                path.steps(),
                path.dim(),
                out.display()
            );
            Ok(Status::Pass)
        }
        Command::Integrate {
            alpha,
            gamma,
            m,
            horizon,
            steps,
            profile,
            noise,
        } => {
            let mut s = start(
                "integrate",
                keys!(; "seed", "alpha", "gamma", "m", "T", "M", "profile", "noise"),
                common,
            )?;
            s.flag("alpha", alpha)
                .flag("gamma", gamma)
                .flag("m", m)
                .flag("T", horizon)
                .flag("M", steps);
            s.flag("profile", profile)
                .flag("noise", noise.map(|p| p.display().to_string()));
            let gamma = s.reals("gamma", "1")?;
            let profile = s.get("profile", "constant".to_string())?;
            let path = match s.optional::<String>("noise")? {
                Some(file) => {
                    let f = fs::File::open(&file).with_context(|| format!("opening {file}"))?;
                    NoisePath::read_csv(BufReader::new(f))?
                }
                None => {
                    let seed: u64 = s.required("seed")?;
                    let grid = uniform_grid(s.get("T", 1.0)?, s.get("M", 100usize)?);
                    generate_noise_path(s.get("alpha", 1.5)?, s.get("m", gamma.len())?, &grid, seed)?
                }
            };
            let (n, m) = (gamma.len(), path.dim());
            let grid = path.grid().to_vec();
            let values: Vec<HSMatrix> = match profile.as_str() {
                "constant" => vec![HSMatrix::diagonal(n, m, &gamma); grid.len() - 1],
                "linear" => grid[..grid.len() - 1]
                    .iter()
                    .map(|t| HSMatrix::diagonal(n, m, &gamma).scaled(*t))
                    .collect(),
                other => return Err(usage(format!("unknown profile `{other}` (constant, linear)"))),
            };
            let integral = integrate(&StepIntegrand::new(grid, values)?, &path)?;
            let dir = out_dir(&mut s)?;
            let out = write_file(&dir, "integral.csv", &s.header(), |w| Ok(integral.write_csv(w)?))?;
            println!("sup norm {}; wrote {}", real(integral.sup_norm()), out.display());
            Ok(Status::Pass)
        }
        Command::Solve { model, solver } => {
            let mut s = start("solve", keys!(MODEL_KEYS, cylstable::picard::SOLVER_KEYS;), common)?;
            let (model, config) = model_and_solver(&mut s, &model, &solver)?;
            let path = solve(&model, &config)?;
            let dir = out_dir(&mut s)?;
            let out = write_file(&dir, "mild_path.csv", &s.header(), |w| Ok(path.write_csv(w)?))?;
            println!(
                "iterations {}; gap {}; residual {}; wrote {}",
                path.iteration_count,
                real(path.final_picard_gap),
                real(path.residual),
                out.display()
            );
            Ok(Status::Pass)
        }
        Command::Glue { model, solver } => {
            let mut s = start("glue", keys!(MODEL_KEYS, cylstable::picard::SOLVER_KEYS;), common)?;
            let (model, config) = model_and_solver(&mut s, &model, &solver)?;
            let glued = glue_solve(&model, &config)?;
            let mut report = ExperimentReport::new("glue");
            report
                .param("T", config.horizon)
                .param("pieces", glued.pieces.len())
                .param("piece_length", real(glued.piece_length))
                .param("bound", real(glued.bound));
            report.seeds.push(config.seed);
            let mut table = Table::new("pieces", &["piece", "t_start", "iterations", "gap", "residual"]);
            for (k, p) in glued.pieces.iter().enumerate() {
                table.push(vec![
                    k as f64,
                    k as f64 * glued.piece_length,
                    p.iteration_count as f64,
                    p.final_picard_gap,
                    p.residual,
                ]);
            }
            let worst = glued.pieces.iter().map(|p| p.residual).fold(0.0, f64::max);
            report.verdicts.push(Verdict::check(
                "residual",
                worst < config.tol,
                worst,
                format!("every piece residual < tol = {}", config.tol),
            ));
            let steps = config.steps;
            let junctions = (1..glued.pieces.len()).all(|k| {
                glued.pieces[k - 1].terminal() == glued.path.at(k * steps)
                    && glued.pieces[k].initial() == glued.path.at(k * steps)
            });
            report.verdicts.push(Verdict::check(
                "junctions",
                junctions,
                f64::from(u8::from(junctions)),
                "junction states bit-identical",
            ));
            report.tables.push(table);
            let dir = out_dir(&mut s)?;
            let header = s.header();
            write_file(&dir, "glued_path.csv", &header, |w| Ok(glued.path.write_csv(w)?))?;
            emit(&report, &dir, &header)
        }
        Command::Tail {
            alpha,
            n,
            gamma,
            t,
            samples,
            r_min,
            r_max,
            r_count,
            window_lo,
            window_hi,
            flat_ratio,
            level_rel,
            slope_tol,
            min_exceedances,
        } => {
            let mut s = start(
                "tail",
                keys!(; "seed", "alpha", "n", "gamma", "t", "N", "r_min", "r_max", "r_count", "window_lo",
                    "window_hi", "flat_ratio", "level_rel", "slope_tol", "min_exceedances"),
                common,
            )?;
            s.flag("alpha", alpha)
                .flag("n", n)
                .flag("gamma", gamma)
                .flag("t", t)
                .flag("N", samples);
            s.flag("r_min", r_min).flag("r_max", r_max).flag("r_count", r_count);
            s.flag("window_lo", window_lo).flag("window_hi", window_hi);
            s.flag("flat_ratio", flat_ratio)
                .flag("level_rel", level_rel)
                .flag("slope_tol", slope_tol);
            s.flag("min_exceedances", min_exceedances);
            let seed: u64 = s.required("seed")?;
            let gamma = s.reals("gamma", "1")?;
            let n = s.get("n", gamma.len())?;
            if n < gamma.len() {
                return Err(usage(format!(
                    "n = {n} is smaller than the {} entries of gamma",
                    gamma.len()
                )));
            }
            let mut cfg = TailConfig::new(
                s.get("alpha", 1.5)?,
                s.get("N", 1_000_000usize)?,
                geometric_grid(s.get("r_min", 10.0)?, s.get("r_max", 100.0)?, s.get("r_count", 9usize)?),
                seed,
            );
            cfg.t = s.get("t", 1.0)?;
            cfg.window = match (s.optional("window_lo")?, s.optional("window_hi")?) {
                (None, None) => None,
                (lo, hi) => Some((lo.unwrap_or(0.0), hi.unwrap_or(f64::INFINITY))),
            };
            cfg.flat_ratio = s.get("flat_ratio", cfg.flat_ratio)?;
            cfg.level_rel = s.get("level_rel", cfg.level_rel)?;
            cfg.slope_tol = s.get("slope_tol", cfg.slope_tol)?;
            cfg.min_exceedances = s.get("min_exceedances", cfg.min_exceedances)?;
            let psi = HSMatrix::diagonal(n, n, &gamma);
            let report = tail_experiment(&TailTarget::Operator(psi), &cfg)?;
            let dir = out_dir(&mut s)?;
            emit(&report, &dir, &s.header())
        }
        Command::Moment {
            alpha,
            gamma,
            horizon,
            steps,
            p,
            samples,
            stability_tol,
        } => {
            let mut s = start(
                "moment",
                keys!(; "seed", "alpha", "gamma", "T", "M", "p", "N", "stability_tol"),
                common,
            )?;
            s.flag("alpha", alpha)
                .flag("gamma", gamma)
                .flag("T", horizon)
                .flag("M", steps);
            s.flag("p", p).flag("N", samples).flag("stability_tol", stability_tol);
            let seed: u64 = s.required("seed")?;
            let alpha = s.get("alpha", 1.5)?;
            let gamma = s.reals("gamma", "1")?;
            let grid = uniform_grid(s.get("T", 1.0)?, s.get("M", 10usize)?);
            let n = gamma.len();
            let psi = StepIntegrand::constant(grid, HSMatrix::diagonal(n, n, &gamma))?;
            let mut cfg = MomentConfig::new(alpha, s.reals("p", "0.5,1")?, s.get("N", 10_000usize)?, seed);
            cfg.stability_tol = s.get("stability_tol", cfg.stability_tol)?;
            let report = moment_experiment(&psi, &cfg)?;
            let dir = out_dir(&mut s)?;
            emit(&report, &dir, &s.header())
        }
        Command::Picard {
            model,
            solver,
            iterations,
            p,
            replicas,
        } => {
            let mut s = start(
                "picard",
                keys!(MODEL_KEYS, cylstable::picard::SOLVER_KEYS; "iterations", "p", "replicas"),
                common,
            )?;
            s.flag("iterations", iterations).flag("p", p).flag("replicas", replicas);
            let (model, config) = model_and_solver(&mut s, &model, &solver)?;
            let d = ConvergenceConfig::default();
            let exp = ConvergenceConfig {
                iterations: s.get("iterations", d.iterations)?,
                p: s.get("p", d.p)?,
                replicas: s.get("replicas", d.replicas)?,
                ..d
            };
            let report = picard_convergence_experiment(&model, &config, &exp)?;
            let dir = out_dir(&mut s)?;
            emit(&report, &dir, &s.header())
        }
        Command::Uniqueness {
            model,
            solver,
            replicas,
        } => {
            let mut s = start(
                "uniqueness",
                keys!(MODEL_KEYS, cylstable::picard::SOLVER_KEYS; "replicas"),
                common,
            )?;
            s.flag("replicas", replicas);
            let (model, config) = model_and_solver(&mut s, &model, &solver)?;
            let report = uniqueness_experiment(&model, &config, s.get("replicas", 100usize)?)?;
            let dir = out_dir(&mut s)?;
            emit(&report, &dir, &s.header())
        }
        Command::Gronwall { input, p, steps } => {
            let mut s = start("gronwall", keys!(; "input", "p", "M"), common)?;
            s.flag("input", input.map(|p| p.display().to_string()))
                .flag("p", p)
                .flag("M", steps);
            let p = s.get("p", 0.5)?;
            let (t, u, v, w) = match s.optional::<String>("input")? {
                Some(file) => read_triple(Path::new(&file))?,
                None => {
                    let m = s.get("M", 10_000usize)?;
                    let t = uniform_grid(1.0, m);
                    let u = t.iter().map(|x| x * x / 4.0).collect();
                    (t, u, vec![0.0; m + 1], vec![1.0; m + 1])
                }
            };
            let r = willet_wong_check(&t, &u, &v, &w, p)?;
            let mut report = ExperimentReport::new("gronwall");
            report.param("p", p).param("points", t.len());
            let mut table = Table::new("gronwall", &["t", "lhs", "rhs"]);
            for ((ti, l), rh) in t.iter().zip(&r.lhs).zip(&r.rhs) {
                table.push(vec![*ti, *l, *rh]);
            }
            report.tables.push(table);
            report.verdicts.push(Verdict::check(
                "conclusion",
                r.holds,
                r.margin,
                "min(rhs - lhs) >= -1e-6",
            ));
            let dir = out_dir(&mut s)?;
            emit(&report, &dir, &s.header())
        }
        Command::CheckModel {
            model,
            n,
            m,
            deltas,
            t_min,
            t_max,
            t_count,
        } => {
            let mut s = start(
                "check-model",
                keys!(MODEL_KEYS; "n", "m", "deltas", "t_min", "t_max", "t_count"),
                common,
            )?;
            s.flag("n", n).flag("m", m).flag("deltas", deltas);
            s.flag("t_min", t_min).flag("t_max", t_max).flag("t_count", t_count);
            let (model, _, _) = resolve_model(&mut s, &model)?;
            let deltas = s.reals("deltas", "0.25,0.5,1")?;
            let t_grid = geometric_grid(s.get("t_min", 1e-6)?, s.get("t_max", 1.0)?, s.get("t_count", 50usize)?);
            let report = check_model(&model, &deltas, &t_grid)?;
            let dir = out_dir(&mut s)?;
            emit(&report, &dir, &s.header())
        }
        Command::Gof {
            alpha,
            n,
            samples,
            target,
        } => {
            let mut s = start("gof", keys!(; "seed", "alpha", "n", "N", "target"), common)?;
            s.flag("alpha", alpha)
                .flag("n", n)
                .flag("N", samples)
                .flag("target", target);
            let seed: u64 = s.required("seed")?;
            let alpha = s.get("alpha", 1.5)?;
            let n = s.get("n", 3usize)?;
            let count = s.get("N", 100_000usize)?;
            let target = s.get("target", "stable".to_string())?;
            let xs = draw_isotropic(alpha, n, count, seed)?;
            let grid = default_u_grid(n);
            let r = match target.as_str() {
                "stable" => char_function_test(&xs, n, stable_cf(alpha, 1.0), &grid)?,
                "gaussian" => char_function_test(
                    &xs,
                    n,
                    |u: &[f64]| Complex64::new((-u.iter().map(|x| x * x).sum::<f64>()).exp(), 0.0),
                    &grid,
                )?,
                other => return Err(usage(format!("unknown target `{other}` (stable, gaussian)"))),
            };
            let mut report = ExperimentReport::new("gof");
            report
                .param("alpha", alpha)
                .param("n", n)
                .param("N", count)
                .param("target", &target);
            report.seeds.push(seed);
            let mut table = Table::new("gof", &["u_norm", "deviation"]);
            for (u, d) in grid.iter().zip(&r.deviations) {
                table.push(vec![cylstable::hilbert::norm(u), *d]);
            }
            report.tables.push(table);
            report.verdicts.push(Verdict::check(
                "max_deviation",
                r.passed,
                r.max_abs_dev,
                format!("< 3/sqrt(N) + 0.01 = {}", real(r.threshold)),
            ));
            let dir = out_dir(&mut s)?;
            emit(&report, &dir, &s.header())
        }
    }
}

fn resolve_model(s: &mut Settings, a: &ModelArgs) -> Result<(DiagonalModel, usize, usize)> {
    s.flag("preset", a.preset.clone())
        .flag("model", a.model.as_ref().map(|p| p.display().to_string()))
        .flag("lambda_rule", a.lambda_rule.clone())
        .flag("delta", a.delta)
        .flag("kappa_rule", a.kappa_rule.clone())
        .flag("f_rule", a.f_rule.clone())
        .flag("shape", a.shape.clone())
        .flag("kappa", a.kappa)
        .flag("phi", a.phi);
    if let Some(file) = s.optional::<String>("model")? {
        let text = fs::read_to_string(&file).with_context(|| format!("reading model {file}"))?;
        let model = DiagonalModel::from_config_str(&text)?;
        let (n, m) = (s.get("n", model.n())?, s.get("m", model.m())?);
        if (n, m) != (model.n(), model.m()) {
            return Err(usage(format!(
                "n, m = {n}, {m} disagree with the model file ({}, {})",
                model.n(),
                model.m()
            )));
        }
        return Ok((model, n, m));
    }
    if s.is_set("kappa_rule") || s.is_set("f_rule") {
        let n = s.get("n", 8usize)?;
        let m = s.get("m", n)?;
        let model = DiagonalModel::from_rules(
            BasisTruncation::new(m, n)?,
            s.get("delta", 0.25)?,
            s.get("lambda_rule", CoefRule::Dirichlet { scale: 1.0 })?,
            s.required::<CoefRule>("kappa_rule")?,
            s.required::<CoefRule>("f_rule")?,
            s.get("shape", Shape::Tanh)?,
        )?;
        return Ok((model, n, m));
    }
    let preset = s.get("preset", "heat".to_string())?;
    if preset != "heat" {
        return Err(usage(format!("unknown preset `{preset}` (heat)")));
    }
    let n = s.get("n", 8usize)?;
    let m = s.get("m", 8usize)?;
    let model = DiagonalModel::heat_preset(n, m, s.get("kappa", 1.0)?, s.get("phi", 1.0)?)?;
    Ok((model, n, m))
}

fn model_and_solver(s: &mut Settings, model: &ModelArgs, a: &SolverArgs) -> Result<(DiagonalModel, SolverConfig)> {
    s.flag("T", a.horizon)
        .flag("M", a.steps)
        .flag("n", a.n)
        .flag("m", a.m)
        .flag("N_max", a.n_max)
        .flag("tol", a.tol)
        .flag("alpha", a.alpha)
        .flag("x0", a.x0.clone())
        .flag("c", a.c);
    let (model, n, m) = resolve_model(s, model)?;
    let d = SolverConfig::default();
    let x0 = match s.optional::<String>("x0")? {
        Some(raw) => Some(
            raw.split(',')
                .map(parse_real)
                .collect::<cylstable::Result<Vec<f64>>>()?,
        ),
        None => None,
    };
    let config = SolverConfig {
        horizon: s.get("T", d.horizon)?,
        steps: s.get("M", d.steps)?,
        n,
        m,
        n_max: s.get("N_max", d.n_max)?,
        tol: s.get("tol", d.tol)?,
        seed: s.required("seed")?,
        alpha: s.get("alpha", d.alpha)?,
        x0,
        c_convention: s.get("c", d.c_convention)?,
    };
    config.validate()?;
    Ok((model, config))
}

/// Columns `t, u, v, w`.
type Triple = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

fn read_triple(path: &Path) -> Result<Triple> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (mut t, mut u, mut v, mut w) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for line in BufReader::new(f).lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
            continue;
        }
        let fields: Vec<f64> = line.split(',').map(parse_real).collect::<cylstable::Result<_>>()?;
        if fields.len() != 4 {
            return Err(usage(format!("{}: expected t,u,v,w in `{line}`", path.display())));
        }
        t.push(fields[0]);
        u.push(fields[1]);
        v.push(fields[2]);
        w.push(fields[3]);
    }
    Ok((t, u, v, w))
}

fn trial_points(n: usize) -> Vec<Vec<f64>> {
    let k = |f: &dyn Fn(f64) -> f64| (1..=n).map(|j| f(j as f64)).collect::<Vec<f64>>();
    vec![
        vec![0.0; n],
        k(&|j| if j == 1.0 { 1.0 } else { 0.0 }),
        k(&|j| 1.0 / j),
        k(&|j| {
            if (j as usize).is_multiple_of(2) {
                1.0 / j
            } else {
                -1.0 / j
            }
        }),
        k(&|_| 2.0),
        k(&|j| (1.7 * j).sin()),
    ]
}

fn check_model(model: &DiagonalModel, deltas: &[f64], t_grid: &[f64]) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("check_model");
    report
        .param("n", model.n())
        .param("m", model.m())
        .param("delta", model.delta())
        .param("lambda_rule", model.lambda_rule())
        .param("kappa_rule", model.kappa_rule())
        .param("f_rule", model.f_rule())
        .param("shape", model.shape());
    let mut table = Table::new("norm_continuity", &["delta", "t", "operator_norm", "bound"]);
    for &d in deltas {
        let r = check_norm_continuity(model, d, t_grid)?;
        for (t, op, bound) in &r.rows {
            table.push(vec![d, *t, *op, *bound]);
        }
        report.verdicts.push(Verdict::check(
            &format!("norm_continuity_delta{d}"),
            r.worst_ratio <= 1.0 + 1e-6,
            r.worst_ratio,
            format!("worst ratio <= 1 + 1e-6 with C = {}", real(r.constant)),
        ));
    }
    report.tables.push(table);

    let points = trial_points(model.n());
    let a2 = check_a2(model, t_grid, &points)?;
    report.verdicts.push(Verdict::info(
        "a2_m0",
        a2.m0,
        "max of drift and diffusion bounds on the trial set",
    ));
    if let Some(b) = a2.tail_bound {
        report.verdicts.push(Verdict::info(
            "a2_tail_bound",
            b,
            "analytic bound on the truncated series tail",
        ));
    }
    report.verdicts.push(Verdict::check(
        "a2_summable",
        !a2.divergent && a2.violation.is_none(),
        f64::from(u8::from(a2.divergent)),
        a2.violation
            .clone()
            .unwrap_or_else(|| "series stays bounded as t -> 0".into()),
    ));
    let mut profile = Table::new("a2_profile", &["t", "drift_series", "diffusion_series"]);
    for (t, d, g) in &a2.profile {
        profile.push(vec![*t, *d, *g]);
    }
    report.tables.push(profile);

    let pairs: Vec<(Vec<f64>, Vec<f64>)> = points.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
    let a3 = check_a3(model, &pairs, t_grid)?;
    report.verdicts.push(Verdict::check(
        "a3_drift",
        a3.c_f <= a3.analytic_c_f * (1.0 + 1e-9),
        a3.c_f,
        format!("empirical Lipschitz constant <= analytic {}", real(a3.analytic_c_f)),
    ));
    report.verdicts.push(Verdict::check(
        "a3_diffusion",
        a3.c_g <= a3.analytic_c_g * (1.0 + 1e-9),
        a3.c_g,
        format!("empirical Lipschitz constant <= analytic {}", real(a3.analytic_c_g)),
    ));
    Ok(report)
}
