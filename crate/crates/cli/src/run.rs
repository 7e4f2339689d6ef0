//! Executes a validated config and maps outcomes to exit codes.

use std::fs;
use std::path::{Path, PathBuf};

use factfind::equilibrium::{deviation_grid, epsilon_equilibrium_check, interior_identity_check, Solver};
use factfind::netsim::{build_graph, cross_validate, GraphMode};
use factfind::statics::{connectivity_experiment, polarization_experiment, volunteer_experiment};
use serde::Serialize;
use thiserror::Error;

use crate::config::{load_config, Command, ConfigError, GraphSpec, RunConfig, TechnologySpec};
use crate::report::{self, Check, SimulationRecord, SolutionRecord, SweepRecord, VolunteerRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VERDICT: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

/// Deviation efforts tried per node by the equilibrium check.
const DEVIATION_POINTS: usize = 2001;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] factfind::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Model(factfind::Error::NonConvergence { .. }) => EXIT_NONCONVERGENCE,
            _ => EXIT_INPUT,
        }
    }
}

/// Command-line overrides and context for a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub quiet: bool,
    /// Directory that relative paths in the config are resolved against.
    pub base_dir: PathBuf,
}

impl RunOptions {
    fn apply(&self, config: &RunConfig) -> RunConfig {
        let mut c = config.clone();
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(grid) = self.grid {
            c.settings.grid = Some(grid);
        }
        c
    }

    fn note(&self, text: &str) {
        if !self.quiet {
            eprint!("{text}");
        }
    }
}

/// Runs `config` and returns the process exit code. Diagnostics go to
/// standard error; data goes to files under `options.out`.
pub fn run(config: &RunConfig, options: &RunOptions) -> i32 {
    match execute(config, options) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Like [`run`] but surfaces errors instead of printing them.
pub fn execute(config: &RunConfig, options: &RunOptions) -> Result<i32, RunError> {
    let config = options.apply(config);
    config.validate()?;
    fs::create_dir_all(&options.out)?;
    let out = options.out.as_path();
    match &config.command {
        Command::Solve => solve(&config, out, options),
        Command::SweepConnectivity { steps, .. } => {
            let scenario = config.scenario()?;
            let params = config.connectivity_params();
            let dists = steps.iter().map(|s| s.build()).collect::<factfind::Result<Vec<_>>>()?;
            let steps: Vec<_> = params.into_iter().zip(dists).collect();
            let rep = match connectivity_experiment(&scenario, &steps) {
                Ok(r) => r,
                Err(factfind::Error::Precondition(msg)) => {
                    return Err(ConfigError::Invalid {
                        field: "command.sweep-connectivity.steps".into(),
                        reason: msg,
                    }
                    .into())
                }
                Err(e) => return Err(e.into()),
            };
            sweep_outputs(&rep, out, options)
        }
        Command::SweepPolarization { deltas } => {
            let scenario = config.scenario()?;
            let rep = match polarization_experiment(&scenario, deltas) {
                Ok(r) => r,
                Err(factfind::Error::Precondition(msg)) => {
                    return Err(ConfigError::Invalid {
                        field: "command.sweep-polarization.deltas".into(),
                        reason: msg,
                    }
                    .into())
                }
                Err(e) => return Err(e.into()),
            };
            sweep_outputs(&rep, out, options)
        }
        Command::Simulate {
            graph,
            voters,
            replications,
            dump_graph,
        } => {
            let scenario = config.scenario()?;
            let mode = match *graph {
                GraphSpec::Planted => GraphMode::Planted,
                GraphSpec::ErdosRenyi {
                    mean_degree,
                    failure,
                    cap,
                } => GraphMode::ErdosRenyi {
                    edge_prob: if *voters > 1 {
                        mean_degree / (*voters as f64 - 1.0)
                    } else {
                        0.0
                    },
                    failure,
                    cap,
                },
            };
            let cv = cross_validate(&scenario, mode, *voters, *replications, config.seed)?;
            let g = build_graph(&scenario, mode, *voters, config.seed)?;
            if *dump_graph {
                g.write_edge_list(std::io::BufWriter::new(fs::File::create(out.join("graph.edges"))?))?;
            }
            report::write_json(
                &out.join("simulation.json"),
                &SimulationRecord::new(&cv, *voters, g.edge_count()),
            )?;
            report::write_csv(
                &out.join("replications.csv"),
                &["replication", "informed"],
                cv.simulated
                    .fractions
                    .iter()
                    .enumerate()
                    .map(|(i, f)| vec![i.to_string(), report::num(*f)]),
            )?;
            report::write_csv(
                &out.join("connections.csv"),
                &["n", "p"],
                cv.simulated
                    .connections
                    .masses()
                    .iter()
                    .enumerate()
                    .map(|(i, p)| vec![i.to_string(), report::num(*p)]),
            )?;
            options.note(&format!(
                "simulate: pi_hat = {:.6} (se {:.2e}), analytic pi = {:.6}: {}\n",
                cv.simulated.mean,
                cv.simulated.std_error,
                cv.analytic_pi,
                if cv.passed { "ok" } else { "FAIL" }
            ));
            if cv.truncation_flag {
                options.note(&format!(
                    "simulate: truncated component mass {:.3e} exceeds 1e-3\n",
                    cv.simulated.truncated_mass
                ));
            }
            Ok(if cv.passed { EXIT_OK } else { EXIT_VERDICT })
        }
        Command::Volunteer {
            technology,
            cost,
            value,
            players,
        } => {
            let TechnologySpec::Smoothstep { b, eps } = *technology else {
                unreachable!("validated as smoothstep")
            };
            let settings = config.settings.build()?;
            let rep = volunteer_experiment(b, eps, cost.build()?, *value, players[0]..=players[1], settings)?;
            report::write_json(&out.join("volunteer.json"), &VolunteerRecord::new(&rep))?;
            report::write_volunteer_csv(&out.join("volunteer.csv"), &rep)?;
            let summary = report::verdict_summary("volunteer", &rep.verdicts);
            fs::write(out.join("summary.txt"), &summary)?;
            options.note(&summary);
            Ok(if rep.all_hold() { EXIT_OK } else { EXIT_VERDICT })
        }
        Command::VerifyAll { runs } => verify_all(runs, out, options),
    }
}

fn solve(config: &RunConfig, out: &Path, options: &RunOptions) -> Result<i32, RunError> {
    let scenario = config.scenario()?;
    let solver = Solver::new(&scenario)?;
    let sol = solver.solve()?;
    let grid = deviation_grid(solver.responder().x_max(), DEVIATION_POINTS);
    let checks = vec![
        Check::below(
            "interior identity",
            interior_identity_check(&sol, &scenario.tech, &scenario.cost),
            1e-6,
        ),
        Check::below("aggregate identity", (sol.pi - sol.pi_closed_form).abs(), 1e-8),
        Check::below("policy decrease", sol.max_policy_decrease(), f64::MIN_POSITIVE),
        Check::below(
            "deviation gain",
            epsilon_equilibrium_check(&sol, &scenario, &grid),
            1e-6,
        ),
    ];
    let ok = checks.iter().all(|c| c.holds);
    report::write_json(&out.join("solution.json"), &SolutionRecord::new(&sol, checks.clone()))?;
    report::write_solution_csv(&out.join("solution.csv"), &sol)?;
    let mut summary = format!(
        "solve: Q = {:.10}, I = {:.10}, pi = {:.10} ({} iterations, residual {:.2e})\n",
        sol.q, sol.integrated_success, sol.pi, sol.fixed_point.iterations, sol.fixed_point.residual
    );
    for c in &checks {
        summary.push_str(&format!(
            "  [{}] {} = {:.3e} (limit {:.0e})\n",
            if c.holds { "ok" } else { "FAIL" },
            c.name,
            c.value,
            c.limit
        ));
    }
    fs::write(out.join("summary.txt"), &summary)?;
    options.note(&summary);
    if !sol.fixed_point.converged {
        options.note("solve: fixed point did not converge\n");
        return Ok(EXIT_NONCONVERGENCE);
    }
    Ok(if ok { EXIT_OK } else { EXIT_VERDICT })
}

fn sweep_outputs(rep: &factfind::statics::SweepReport<f64>, out: &Path, options: &RunOptions) -> Result<i32, RunError> {
    report::write_json(&out.join("sweep.json"), &SweepRecord::new(rep))?;
    report::write_sweep_csv(&out.join("sweep.csv"), rep)?;
    let summary = report::verdict_summary(
        &format!("{} sweep (h {})", rep.name, rep.h_class.label()),
        &rep.verdicts,
    );
    fs::write(out.join("summary.txt"), &summary)?;
    options.note(&summary);
    if !rep.all_converged() {
        options.note("sweep: some steps did not converge\n");
        return Ok(EXIT_NONCONVERGENCE);
    }
    Ok(if rep.all_hold() { EXIT_OK } else { EXIT_VERDICT })
}

#[derive(Debug, Serialize)]
struct VerifyEntry {
    run: String,
    command: String,
    exit_code: i32,
}

/// Input errors outrank non-convergence, which outranks failed verdicts.
fn severity(code: i32) -> u8 {
    match code {
        EXIT_OK => 0,
        EXIT_VERDICT => 1,
        EXIT_NONCONVERGENCE => 2,
        _ => 3,
    }
}

fn verify_all(runs: &[PathBuf], out: &Path, options: &RunOptions) -> Result<i32, RunError> {
    let mut entries = Vec::new();
    let mut worst = EXIT_OK;
    for rel in runs {
        let path = options.base_dir.join(rel);
        let name = rel
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        let (command, code) = match load_config(&path) {
            Ok(sub) => {
                let sub_options = RunOptions {
                    out: out.join(&name),
                    base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
                    ..options.clone()
                };
                options.note(&format!("== {name}\n"));
                (sub.command.name().to_string(), run(&sub, &sub_options))
            }
            Err(e) => {
                eprintln!("error: {e}");
                ("?".to_string(), EXIT_INPUT)
            }
        };
        if severity(code) > severity(worst) {
            worst = code;
        }
        entries.push(VerifyEntry {
            run: name,
            command,
            exit_code: code,
        });
    }
    report::write_json(&out.join("verify.json"), &entries)?;
    let mut summary = String::from("verify-all\n");
    for e in &entries {
        summary.push_str(&format!("  {:<28} {:<20} exit {}\n", e.run, e.command, e.exit_code));
    }
    fs::write(out.join("summary.txt"), &summary)?;
    options.note(&summary);
    Ok(worst)
}
