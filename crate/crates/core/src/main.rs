use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use viscosplash::calibration::{calibrate, HorizonScan};
use viscosplash::compat::check_compatibility;
use viscosplash::fields::Manifest;
use viscosplash::output::{fmt_f64, to_json, write_csv, write_json, write_run};
use viscosplash::picard::{run_to_convergence, PicardConfig};
use viscosplash::scenario::{load_scenario, Scenario};
use viscosplash::sobolev::{integration_lemma_probe, product_lemma_probe};
use viscosplash::splash::{splash_experiment, PerturbationFamily};
use viscosplash::tensor::Vec2;
use viscosplash::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Conformal-Lagrangian Oldroyd-B free-boundary solver")]
struct Cli {
    /// Seed for randomized probes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Horizon {
    /// Permit horizons beyond the calibrated bound.
    #[arg(long)]
    allow_beyond_horizon: bool,
    #[arg(long)]
    c_cal: Option<f64>,
    #[arg(long)]
    mu_cal: Option<f64>,
    #[arg(long)]
    tol_picard: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Hold the polymeric stress at zero.
    #[arg(long)]
    newtonian: bool,
}

impl Horizon {
    fn config(&self) -> PicardConfig {
        let mut c = PicardConfig {
            allow_beyond_horizon: self.allow_beyond_horizon,
            newtonian: self.newtonian,
            ..Default::default()
        };
        if let Some(v) = self.c_cal {
            c.calibration.c_cal = v;
        }
        if let Some(v) = self.mu_cal {
            c.calibration.mu_cal = v;
        }
        if let Some(v) = self.tol_picard {
            c.tol_picard = v;
        }
        if let Some(v) = self.max_sweeps {
            c.max_sweeps = v;
        }
        c
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario to Picard convergence and write snapshots.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        grid_n: Option<usize>,
        #[command(flatten)]
        horizon: Horizon,
    },
    /// Perturbed family: splash times and flux gaps.
    Splash {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.04, 0.02, 0.01])]
        eps: Vec<f64>,
        /// Perturbation direction.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.0])]
        b: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        horizon: Horizon,
    },
    /// Largest contracting horizon per Weissenberg number and the fitted bound.
    Calibrate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0, 10.0])]
        we_list: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.005)]
        t_min: f64,
        #[arg(long, default_value_t = 12)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        steps: usize,
    },
    /// Product and time-integration estimate probes.
    ProbeLemmas {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compatibility report of a scenario's initial data.
    Check {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoContraction { .. } => 2,
        Error::MeshFold { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate {
            scenario,
            out,
            t_final,
            dt,
            grid_n,
            horizon,
        } => {
            let mut sc = load_scenario(scenario)?;
            if let Some(v) = t_final {
                sc.params.t_final = *v;
            }
            if let Some(v) = dt {
                sc.params.dt = *v;
            }
            if let Some(v) = grid_n {
                sc.params.grid_n = *v;
            }
            sc.validate()?;
            simulate(&sc, &horizon.config(), cli.seed, out)
        }
        Command::Splash {
            scenario,
            eps,
            b,
            out,
            horizon,
        } => {
            let sc = load_scenario(scenario)?;
            if b.len() != 2 {
                return Err(Error::Config {
                    pointer: "/b".into(),
                    msg: "direction needs two components".into(),
                });
            }
            let family = PerturbationFamily::new(sc, eps.clone(), Vec2::new(b[0], b[1]))?;
            let report = splash_experiment(&family, &horizon.config(), cli.seed)?;
            std::fs::create_dir_all(out)?;
            write_json(&out.join("splash.json"), &report)?;
            let rows: Vec<Vec<String>> = report
                .entries
                .iter()
                .map(|e| {
                    vec![
                        fmt_f64(e.eps),
                        e.t_star.map_or_else(String::new, fmt_f64),
                        fmt_f64(e.sup_gap),
                    ]
                })
                .collect();
            write_csv(&out.join("splash.csv"), "eps,t_star,sup_gap", &rows)
        }
        Command::Calibrate {
            scenario,
            we_list,
            out,
            t_min,
            count,
            steps,
        } => {
            let sc = load_scenario(scenario)?;
            let scan = HorizonScan {
                t_min: *t_min,
                count: *count,
                steps: *steps,
            };
            let report = calibrate(&sc, we_list, &scan, &PicardConfig::default())?;
            std::fs::create_dir_all(out)?;
            write_json(&out.join("calibration.json"), &report)?;
            let rows: Vec<Vec<String>> = report
                .scans
                .iter()
                .map(|s| {
                    vec![
                        fmt_f64(s.weissenberg),
                        s.t_emp.map_or_else(String::new, fmt_f64),
                    ]
                })
                .collect();
            write_csv(&out.join("calibration.csv"), "we,t_emp", &rows)
        }
        Command::ProbeLemmas { trials, out } => {
            let product = product_lemma_probe(*trials, 2.25, 2.4, &[8, 16, 32], cli.seed)?;
            let integration = integration_lemma_probe(
                *trials,
                0.25,
                0.1,
                &[1.0, 0.5, 0.25, 0.125],
                129,
                cli.seed,
            )?;
            let report = serde_json::json!({ "product": product, "integration": integration });
            if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            write_json(out, &report)
        }
        Command::Check { scenario, out } => {
            let sc = load_scenario(scenario)?;
            let s = sc.setup()?;
            let report = check_compatibility(&s.disc, &s.v0, &s.t0, None, &sc.params)?;
            match out {
                Some(p) => write_json(p, &report),
                None => {
                    print!("{}", to_json(&report));
                    Ok(())
                }
            }
        }
    }
}

fn simulate(sc: &Scenario, cfg: &PicardConfig, seed: u64, out: &Path) -> Result<()> {
    let s = sc.setup()?;
    let compat = check_compatibility(&s.disc, &s.v0, &s.t0, None, &sc.params)?;
    if !compat.pass {
        return Err(Error::Compatibility(format!(
            "div u0 = {:e}, tangential traction = {:e}",
            compat.div_u0, compat.tangential_traction
        )));
    }
    let pb = sc.problem(sc.params.t_final, cfg.beta)?;
    std::fs::create_dir_all(out)?;
    let conv = match run_to_convergence(&pb, cfg) {
        Ok(c) => c,
        Err(Error::NoContraction { sweeps, report }) => {
            write_json(&out.join("contraction.json"), &report)?;
            return Err(Error::NoContraction { sweeps, report });
        }
        Err(e) => return Err(e),
    };
    info!("converged after {} sweeps", conv.report.sweeps);
    write_json(&out.join("contraction.json"), &conv.report)?;
    let manifest = Manifest {
        params: sc.params.clone(),
        scenario_id: sc.id.clone(),
        seed,
        extra: Default::default(),
    };
    let record = conv.record(&pb, manifest)?;
    write_run(
        &record,
        pb.grid(),
        &sc.hash(),
        cfg.tol_picard,
        &out.join("run"),
    )?;
    Ok(())
}
