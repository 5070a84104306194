use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use trajopt_core::cooling::{self, SystemSpec};
use trajopt_core::lift::lift_point;
use trajopt_core::polytope::DEFAULT_MAX_ENUM_DIM;
use trajopt_core::{validate, Error, OptimalTrajectory, ProblemInstance};

use crate::files::{build_any, build_any_from, fmt_f64, to_json, InstanceFile, LiftFile, TrajectoryFile};
use crate::{verify, Cli, CliError, Command, Demo};

pub const MAX_ENUM_ENV: &str = "TRAJOPT_MAX_ENUM_DIM";

fn domain(e: Error) -> CliError {
    CliError::Domain(e.to_string())
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Reads, applies tolerance overrides and validates an instance file.
fn load_instance(cli: &Cli, path: &Path) -> Result<ProblemInstance, CliError> {
    let text = read_text(path)?;
    let file: InstanceFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let mut inst = file.to_instance();
    if let Some(e) = cli.eps_pop {
        inst.eps_pop = e;
    }
    if let Some(e) = cli.eps_grad {
        inst.eps_grad = e;
    }
    validate(inst).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn build(inst: &ProblemInstance) -> Result<OptimalTrajectory, CliError> {
    build_any(inst).map_err(domain)
}

pub fn max_enum_dim() -> Result<usize, CliError> {
    match std::env::var(MAX_ENUM_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Parse(format!("{MAX_ENUM_ENV}: not a non-negative integer: {v:?}"))),
        Err(_) => Ok(DEFAULT_MAX_ENUM_DIM),
    }
}

/// Evaluation abscissae: `n` evenly spaced points merged with all breakpoints.
fn grid_points(traj: &OptimalTrajectory, n: usize) -> Vec<f64> {
    let (lo, hi) = traj.alpha_range();
    let mut xs: Vec<f64> = match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    };
    xs.extend(traj.breakpoints.iter().map(|b| b.0));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn eval_csv(inst: &ProblemInstance, traj: &OptimalTrajectory, alphas: &[f64]) -> Result<String, CliError> {
    let initial = inst.initial_cost();
    let mut out = String::from("alpha,omega,work\n");
    for &a in alphas {
        let w = trajopt_core::omega_opt(traj, a).map_err(domain)?;
        let work = initial.map(|c| fmt_f64(w - c)).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", fmt_f64(a), fmt_f64(w), work));
    }
    Ok(out)
}

fn cool_instance(
    demo: Option<Demo>,
    system: &[f64],
    system_populations: &[f64],
    machine: &[f64],
    beta: f64,
    bath: &[f64],
    beta_bath: f64,
) -> Result<ProblemInstance, CliError> {
    let inst = match demo {
        Some(Demo::WorkingExample) => cooling::working_example(),
        Some(Demo::Incoherent) => cooling::incoherent_example(1.0, None, beta, beta_bath),
        None => {
            let mut sys = SystemSpec::new(system.to_vec());
            if !system_populations.is_empty() {
                sys = sys.with_populations(system_populations.to_vec());
            }
            let m = SystemSpec::new(machine.to_vec());
            let built = if bath.is_empty() {
                cooling::coherent_instance(&sys, &m, beta)
            } else {
                cooling::incoherent_instance(&sys, &m, &SystemSpec::new(bath.to_vec()), beta, beta_bath)
            };
            built.map_err(|e| CliError::Parse(e.to_string()))?
        }
    };
    Ok(inst.instance)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Build {
            instance,
            from_initial,
            out,
        } => {
            let inst = load_instance(cli, instance)?;
            let traj = if *from_initial {
                let start = inst.initial_populations.clone().ok_or_else(|| {
                    CliError::Parse("--from-initial needs initial_populations in the instance".into())
                })?;
                build_any_from(&inst, &start).map_err(domain)?
            } else {
                build(&inst)?
            };
            write_output(out.as_ref(), &to_json(&TrajectoryFile::from_trajectory(&traj, &inst)))
        }
        Command::Eval { instance, alpha, grid } => {
            let inst = load_instance(cli, instance)?;
            let traj = build(&inst)?;
            let alphas = match (alpha, grid) {
                (Some(a), _) => vec![*a],
                (None, Some(n)) => grid_points(&traj, *n),
                (None, None) => unreachable!("clap requires one of --alpha, --grid"),
            };
            write_output(None, &eval_csv(&inst, &traj, &alphas)?)
        }
        Command::Lift { instance, alpha, out } => {
            let inst = load_instance(cli, instance)?;
            let traj = build(&inst)?;
            let lifted = lift_point(&traj, *alpha).map_err(domain)?;
            let file = LiftFile {
                alpha: *alpha,
                unitary: lifted.unitary.to_rows(),
                doubly_stochastic: lifted.doubly_stochastic.to_rows(),
                populations: lifted.density_diagonal,
            };
            write_output(out.as_ref(), &to_json(&file))
        }
        Command::Verify {
            instance,
            trajectory,
            samples,
        } => {
            let inst = load_instance(cli, instance)?;
            let file = match trajectory {
                Some(path) => serde_json::from_str(&read_text(path)?)
                    .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?,
                None => TrajectoryFile::from_trajectory(&build(&inst)?, &inst),
            };
            let report = verify::run(&inst, &file, *samples, cli.seed, max_enum_dim()?)?;
            for line in report.human_lines() {
                eprintln!("{line}");
            }
            write_output(None, &to_json(&report))?;
            if report.passed {
                Ok(())
            } else {
                Err(CliError::Verification)
            }
        }
        Command::Cool {
            demo,
            system_energies,
            system_populations,
            machine_energies,
            beta,
            bath_energies,
            beta_bath,
            out,
        } => {
            let mut inst = cool_instance(
                *demo,
                system_energies,
                system_populations,
                machine_energies,
                *beta,
                bath_energies,
                *beta_bath,
            )?;
            if let Some(e) = cli.eps_pop {
                inst.eps_pop = e;
            }
            if let Some(e) = cli.eps_grad {
                inst.eps_grad = e;
            }
            write_output(out.as_ref(), &to_json(&InstanceFile::from_instance(&inst)))
        }
    }
}
