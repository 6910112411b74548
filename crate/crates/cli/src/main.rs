//! `cylstable` command-line front end.
//!
//! Exit codes: 0 all verdicts pass, 1 a verdict failed or the run failed,
//! 2 usage error, 3 inconclusive (under-resolved) result.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cylstable::experiments::Status;

use settings::UsageError;

#[derive(Parser)]
#[command(name = "cylstable", version, about = "Cylindrical alpha-stable noise laboratory")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
pub struct Common {
    /// Flat key=value file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed; mandatory for stochastic commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

/// Model selection: a preset, a model file, or inline rules.
#[derive(Args, Clone, Default)]
pub struct ModelArgs {
    /// `heat` is the only preset.
    #[arg(long)]
    pub preset: Option<String>,
    /// Model file with keys n, m, lambda_rule, delta, kappa_rule, f_rule, shape.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "lambda_rule")]
    pub lambda_rule: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "kappa_rule")]
    pub kappa_rule: Option<String>,
    #[arg(long = "f_rule")]
    pub f_rule: Option<String>,
    #[arg(long)]
    pub shape: Option<String>,
    /// Diffusion amplitude of the heat preset.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Drift amplitude of the heat preset.
    #[arg(long)]
    pub phi: Option<f64>,
}

#[derive(Args, Clone, Default)]
pub struct SolverArgs {
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    #[arg(long = "M")]
    pub steps: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long = "N_max")]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated initial state; default `1/k`.
    #[arg(long)]
    pub x0: Option<String>,
    /// Convention for the unknown universal constant.
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Explicit constants as key=value text and CSV.
    Constants {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "c_F")]
        c_f: Option<f64>,
        #[arg(long = "c_G")]
        c_g: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Draw samples from a stable law.
    Sample {
        /// isotropic, scalar or positive.
        #[arg(long)]
        law: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Index of the positive law; default alpha/2.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "N")]
        count: Option<usize>,
    },
    /// Truncated noise path on a uniform grid.
    Noise {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long = "T")]
        horizon: Option<f64>,
        #[arg(long = "M")]
        steps: Option<usize>,
        /// Extend the path to this many coordinates.
        #[arg(long)]
        extend: Option<usize>,
    },
    /// Stochastic integral of a diagonal step integrand.
    Integrate {
        #[arg(long)]
        alpha: Option<f64>,
        /// Diagonal of Ψ, comma-separated.
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long = "T")]
        horizon: Option<f64>,
        #[arg(long = "M")]
        steps: Option<usize>,
        /// constant or linear (Ψ(t) = t·diag(gamma)).
        #[arg(long)]
        profile: Option<String>,
        /// Noise CSV to integrate against instead of fresh noise.
        #[arg(long)]
        noise: Option<PathBuf>,
    },
    /// Mild solution by Picard iteration.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Mild solution on a long horizon by gluing short pieces.
    Glue {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Tail of the norm of ψ applied to the noise.
    Tail {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// Singular values of ψ, comma-separated.
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long = "N")]
        samples: Option<usize>,
        #[arg(long = "r_min")]
        r_min: Option<f64>,
        #[arg(long = "r_max")]
        r_max: Option<f64>,
        #[arg(long = "r_count")]
        r_count: Option<usize>,
        #[arg(long = "window_lo")]
        window_lo: Option<f64>,
        #[arg(long = "window_hi")]
        window_hi: Option<f64>,
        #[arg(long = "flat_ratio")]
        flat_ratio: Option<f64>,
        #[arg(long = "level_rel")]
        level_rel: Option<f64>,
        #[arg(long = "slope_tol")]
        slope_tol: Option<f64>,
        #[arg(long = "min_exceedances")]
        min_exceedances: Option<usize>,
    },
    /// Moments of the running supremum of a stochastic integral.
    Moment {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long = "T")]
        horizon: Option<f64>,
        #[arg(long = "M")]
        steps: Option<usize>,
        /// Moment orders, comma-separated, each below alpha.
        #[arg(long)]
        p: Option<String>,
        #[arg(long = "N")]
        samples: Option<usize>,
        #[arg(long = "stability_tol")]
        stability_tol: Option<f64>,
    },
    /// Decay of successive Picard differences.
    Picard {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// Pathwise uniqueness across Picard starting points.
    Uniqueness {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// Willett–Wong inequality on a grid function triple.
    Gronwall {
        /// CSV with columns t,u,v,w; default is the equality instance.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long = "M")]
        steps: Option<usize>,
    },
    /// Semigroup and coefficient assumptions of a model.
    CheckModel {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Comma-separated δ values.
        #[arg(long = "deltas")]
        deltas: Option<String>,
        #[arg(long = "t_min")]
        t_min: Option<f64>,
        #[arg(long = "t_max")]
        t_max: Option<f64>,
        #[arg(long = "t_count")]
        t_count: Option<usize>,
    },
    /// Characteristic-function fit of the isotropic sampler.
    Gof {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "N")]
        samples: Option<usize>,
        /// stable or gaussian (a deliberately wrong target).
        #[arg(long)]
        target: Option<String>,
    },
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("CYLSTABLE_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| settings::usage(format!("CYLSTABLE_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    use cylstable::Error as E;
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<E>() {
        Some(
            E::AlphaOutOfRange { .. }
            | E::InvalidParameter { .. }
            | E::NonMonotoneGrid { .. }
            | E::DimensionMismatch { .. }
            | E::DimensionNotExtended { .. }
            | E::MomentOrder { .. }
            | E::InsufficientSamples { .. }
            | E::Empty(_)
            | E::QuadratureDimension(_)
            | E::Parse(_),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| commands::run(cli.command, &cli.common));
    match result {
        Ok(status) => {
            let code = match status {
                Status::Info | Status::Pass => 0,
                Status::Fail => 1,
                Status::Inconclusive => 3,
            };
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
