//! Experiment runner CLI. Exit codes: 0 pass, 2 usage error, 3 assertion
//! failure, 4 numerical failure. The output directory is taken from --out,
//! the SOBOLAB_OUT environment variable, or ./sobolab_out in that order.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sobolab::experiments::{self, Outcome};

#[derive(Parser)]
#[command(
    name = "sobolab",
    about = "numerical laboratory for Sobolev traces, weak elliptic systems and co-normal derivatives",
    version
)]
struct Cli {
    /// Output directory for CSV/JSON artifacts
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML config file; command-line flags override its keys
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Trace-operator norm table against the closed-form constant
    TraceNorm {
        #[command(flatten)]
        config: ConfigArg,
        /// single Sobolev index (replaces the configured list)
        #[arg(long)]
        s: Option<f64>,
        /// bulk dimension n
        #[arg(long)]
        n: Option<usize>,
        /// samples per axis
        #[arg(long = "N")]
        points: Option<usize>,
        #[arg(long)]
        probes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Boundary-to-bulk extension: right inverse and norm ratios
    Extension {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long = "N")]
        points: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Boundary density recovery from a hyperplane layer
    RecoverDensity {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long = "N")]
        points: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Manufactured-solution convergence for the weak BVP solvers
    Bvp {
        #[command(flatten)]
        config: ConfigArg,
        /// dirichlet | neumann | mixed
        #[arg(long)]
        problem: Option<String>,
        /// interval | square
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        refine: Option<usize>,
    },
    /// Canonical co-normal derivative vs the strong flux
    Conormal {
        #[command(flatten)]
        config: ConfigArg,
        /// sin-square | interior-bump
        #[arg(long)]
        case: Option<String>,
        #[arg(long)]
        refine: Option<usize>,
    },
    /// Green identity residual report
    Green {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Bessel-multiplier commutator ratios
    Commutator {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Multiplication bound ratios across resolutions
    ProductBound {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Constant-coefficient a-priori inequality slack
    Apriori {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        probes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solution regularity probe under rough coefficients
    Regularity {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long = "N")]
        points: Option<usize>,
    },
    /// Volume-potential boundary pairing report
    Appendix {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long = "R")]
        radius: Option<f64>,
    },
    /// Run a registered suite: acceptance | quick
    Suite { name: String },
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("SOBOLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sobolab_out"))
}

fn finish(outcome: Outcome) -> ExitCode {
    for line in &outcome.lines {
        println!("{line}");
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let dir = out_dir(cli.out.clone());
    let result = match cli.command {
        Command::TraceNorm {
            config,
            s,
            n,
            points,
            probes,
            seed,
        } => experiments::load_config::<experiments::TraceNormConfig>(config.config.as_deref())
            .and_then(|mut cfg| {
                if let Some(s) = s {
                    cfg.s_values = vec![s];
                }
                if let Some(n) = n {
                    cfg.dimension = n;
                }
                if let Some(p) = points {
                    cfg.points = p;
                }
                if let Some(p) = probes {
                    cfg.probes = p;
                }
                if let Some(sd) = seed {
                    cfg.seed = sd;
                }
                experiments::run_trace_norm(&cfg, &dir)
            }),
        Command::Extension {
            config,
            s,
            points,
            seed,
        } => experiments::load_config::<experiments::ExtensionConfig>(config.config.as_deref())
            .and_then(|mut cfg| {
                if let Some(s) = s {
                    cfg.s_values = vec![s];
                }
                if let Some(p) = points {
                    cfg.points = p;
                }
                if let Some(sd) = seed {
                    cfg.seed = sd;
                }
                experiments::run_extension(&cfg, &dir)
            }),
        Command::RecoverDensity {
            config,
            t,
            points,
            seed,
        } => experiments::load_config::<experiments::RecoverDensityConfig>(
            config.config.as_deref(),
        )
        .and_then(|mut cfg| {
            if let Some(t) = t {
                cfg.t = t;
            }
            if let Some(p) = points {
                cfg.points = p;
            }
            if let Some(sd) = seed {
                cfg.seed = sd;
            }
            experiments::run_recover_density(&cfg, &dir)
        }),
        Command::Bvp {
            config,
            problem,
            domain,
            refine,
        } => experiments::load_config::<experiments::BvpConfig>(config.config.as_deref()).and_then(
            |mut cfg| {
                if let Some(p) = problem {
                    cfg.problem = p;
                }
                if let Some(d) = domain {
                    cfg.domain = d;
                }
                if let Some(r) = refine {
                    cfg.refinements = r;
                }
                experiments::run_bvp(&cfg, &dir)
            },
        ),
        Command::Conormal {
            config,
            case,
            refine,
        } => experiments::load_config::<experiments::ConormalConfig>(config.config.as_deref())
            .and_then(|mut cfg| {
                if let Some(c) = case {
                    cfg.case = c;
                }
                if let Some(r) = refine {
                    cfg.refine = r;
                }
                experiments::run_conormal(&cfg, &dir)
            }),
        Command::Green {
            config,
            cells,
            seed,
        } => experiments::load_config::<experiments::GreenConfig>(config.config.as_deref())
            .and_then(|mut cfg| {
                if let Some(c) = cells {
                    cfg.cells = c;
                }
                if let Some(sd) = seed {
                    cfg.seed = sd;
                }
                experiments::run_green(&cfg, &dir)
            }),
        Command::Commutator { config, s, t } => {
            experiments::load_config::<experiments::CommutatorConfig>(config.config.as_deref())
                .and_then(|mut cfg| {
                    if let Some(s) = s {
                        cfg.s = s;
                    }
                    if let Some(t) = t {
                        cfg.t = t;
                    }
                    experiments::run_commutator(&cfg, &dir)
                })
        }
        Command::ProductBound { config, s, mu } => {
            experiments::load_config::<experiments::ProductBoundConfig>(config.config.as_deref())
                .and_then(|mut cfg| {
                    if let Some(s) = s {
                        cfg.s = s;
                    }
                    if let Some(mu) = mu {
                        cfg.mu = mu;
                    }
                    experiments::run_product_bound(&cfg, &dir)
                })
        }
        Command::Apriori {
            config,
            probes,
            seed,
        } => experiments::load_config::<experiments::AprioriConfig>(config.config.as_deref())
            .and_then(|mut cfg| {
                if let Some(p) = probes {
                    cfg.probes = p;
                }
                if let Some(sd) = seed {
                    cfg.seed = sd;
                }
                experiments::run_apriori(&cfg, &dir)
            }),
        Command::Regularity { config, points } => {
            experiments::load_config::<experiments::RegularityConfig>(config.config.as_deref())
                .and_then(|mut cfg| {
                    if let Some(p) = points {
                        cfg.points = p;
                    }
                    experiments::run_regularity(&cfg, &dir)
                })
        }
        Command::Appendix { config, radius } => {
            experiments::load_config::<experiments::AppendixConfig>(config.config.as_deref())
                .and_then(|mut cfg| {
                    if let Some(r) = radius {
                        cfg.radius = r;
                    }
                    experiments::run_appendix(&cfg, &dir)
                })
        }
        Command::Suite { name } => experiments::run_suite(&name, &dir),
    };
    match result {
        Ok(outcome) => finish(outcome),
        Err(sobolab::Error::Domain(msg)) | Err(sobolab::Error::Format(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(4)
        }
    }
}
