use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use thiserror::Error;
use unambig::discrimination::feasibility_with;
use unambig::document::{
    matrix_from_rows, to_json_string, CascadeDocument, ComplexPair, NetworkDocument, ReportDocument, SolutionDocument,
    UnitaryDocument,
};
use unambig::linalg::{max_abs_diff, pad, unitarity_defect};
use unambig::photonics::{sample_distribution, InputSelection};
use unambig::prelude::*;
use unambig::reck::render_diagram;

use crate::{Config, ModeArg, SolverArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Input,
    Solve,
    Synthesize,
    Simulate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Input => "input",
            Stage::Solve => "solve",
            Stage::Synthesize => "synthesize",
            Stage::Simulate => "simulate",
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input: {0}")]
    Usage(String),
    #[error("input: cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("input: {path} is not a valid document: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{stage}: {source}")]
    Library { stage: Stage, source: unambig::Error },
    #[error("{stage}: {message}")]
    Check { stage: Stage, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        let stage = match self {
            Self::Usage(_) | Self::Read { .. } | Self::Json { .. } => Stage::Input,
            Self::Write { .. } => return 1,
            Self::Library { stage, .. } | Self::Check { stage, .. } => *stage,
        };
        match stage {
            Stage::Input => 2,
            Stage::Solve | Stage::Synthesize => 3,
            Stage::Simulate => 4,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

trait InStage<T> {
    fn stage(self, stage: Stage) -> CliResult<T>;
}

impl<T> InStage<T> for unambig::Result<T> {
    fn stage(self, stage: Stage) -> CliResult<T> {
        self.map_err(|source| CliError::Library { stage, source })
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read(path)?).map_err(|source| CliError::Json { path: path.into(), source })
}

fn write(config: &Config, name: &str, contents: &str) -> CliResult<()> {
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.clone(), source })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Write { path: path.clone(), source })?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_ensemble(config: &Config) -> CliResult<StateEnsemble> {
    let path = config
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("--input (or UNAMBIG_INPUT) is required".into()))?;
    parse_ensemble(&read(path)?).stage(Stage::Input)
}

fn pairs_to_vectors(rows: &[Vec<ComplexPair>]) -> Vec<CVector> {
    rows.iter()
        .map(|r| CVector::from_iterator(r.len(), r.iter().map(|&[re, im]| Complex64::new(re, im))))
        .collect()
}

fn method_name(m: SolverMethod) -> String {
    serde_json::to_value(m).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn check_solution(config: &Config, ensemble: &StateEnsemble, solution: &DiscriminationSolution) -> CliResult<()> {
    let f = feasibility_with(&ensemble.gram(), &solution.assignment, config.tol_psd).stage(Stage::Input)?;
    if !f.psd {
        return Err(CliError::Check {
            stage: Stage::Solve,
            message: format!(
                "C(q) has eigenvalue {:e}, below -{:e}",
                f.min_eigenvalue, config.tol_psd
            ),
        });
    }
    Ok(())
}

fn obtain_solution(config: &Config, ensemble: &StateEnsemble) -> CliResult<DiscriminationSolution> {
    let solution = match &config.solution {
        Some(path) => {
            let doc: SolutionDocument = read_json(path)?;
            let solution = DiscriminationSolution::try_from(doc).stage(Stage::Input)?;
            if solution.q().len() != ensemble.dimension() {
                return Err(CliError::Check {
                    stage: Stage::Input,
                    message: format!(
                        "solution has {} failure probabilities for {} states",
                        solution.q().len(),
                        ensemble.dimension()
                    ),
                });
            }
            solution
        }
        None => {
            let selector = match config.solver {
                SolverArg::Auto => SolverSelector::Auto,
                SolverArg::Analytic => SolverSelector::Analytic,
                SolverArg::Numeric => SolverSelector::Numeric,
            };
            unambig::discrimination::solve(&ensemble.gram(), ensemble.priors(), selector).stage(Stage::Solve)?
        }
    };
    check_solution(config, ensemble, &solution)?;
    Ok(solution)
}

struct Network {
    unitary: ExtendedUnitary,
    plan: NetworkPlan,
}

fn build_network(config: &Config, ensemble: &StateEnsemble, solution: &DiscriminationSolution) -> CliResult<Network> {
    let unitary = unambig::embedding::synthesize(ensemble, solution).stage(Stage::Synthesize)?;
    let mode = match config.mode {
        ModeArg::FullSweep => FactorizeMode::FullSweep,
        ModeArg::TransposeShortcut => FactorizeMode::TransposeShortcut { states: ensemble.dimension() },
    };
    let plan = factorize(unitary.matrix(), mode).stage(Stage::Synthesize)?;
    let realized = reconstruct(&plan);
    let unitary = match config.mode {
        ModeArg::FullSweep => {
            let deviation = max_abs_diff(&realized, unitary.matrix());
            if deviation > config.tol_unitary {
                return Err(CliError::Check {
                    stage: Stage::Synthesize,
                    message: format!("network reproduces the unitary only to {deviation:e}"),
                });
            }
            unitary
        }
        // The shortcut fixes the ancilla block, so record the matrix it realizes.
        ModeArg::TransposeShortcut => ExtendedUnitary::from_parts_with(
            realized,
            unitary.inputs().to_vec(),
            unitary.outputs().to_vec(),
            config.tol_unitary,
        )
        .stage(Stage::Synthesize)?,
    };
    Ok(Network { unitary, plan })
}

fn write_network(config: &Config, network: &Network) -> CliResult<()> {
    write(config, "unitary.json", &to_json_string(&UnitaryDocument::from(&network.unitary)))?;
    write(config, "network.json", &to_json_string(&NetworkDocument::from(&network.plan)))?;
    write(config, "network.txt", &render_diagram(&network.plan))
}

fn report(config: &Config, ensemble: &StateEnsemble, device: &CMatrix) -> CliResult<ReportDocument> {
    let exact = outcome_distribution(device, ensemble).stage(Stage::Simulate)?;
    let sampled = match config.shots {
        0 => None,
        shots => Some(sample_distribution(&exact, shots, config.seed, InputSelection::Priors).stage(Stage::Simulate)?),
    };
    let cascade = match &config.cascade {
        None => None,
        Some(path) => {
            let doc: CascadeDocument = read_json(path)?;
            let stage2 = matrix_from_rows(&doc.matrix, "matrix").stage(Stage::Input)?;
            let deviation = unitarity_defect(&stage2);
            if deviation > config.tol_unitary {
                return Err(CliError::Library {
                    stage: Stage::Simulate,
                    source: unambig::Error::NotUnitary { deviation },
                });
            }
            let plan = CascadePlan::new(device.clone(), ensemble.dimension(), doc.failure_ports, stage2, doc.labels)
                .stage(Stage::Simulate)?;
            Some(cascade_distribution(&plan, ensemble).stage(Stage::Simulate)?)
        }
    };
    Ok(ReportDocument::new(&exact, sampled.as_ref(), cascade.as_ref()))
}

fn print_solution(s: &DiscriminationSolution) {
    println!(
        "Q = {:.12}  P = {:.12}  m = {}  method = {}",
        s.failure,
        s.success,
        s.rank,
        method_name(s.method)
    );
}

fn print_report(r: &ReportDocument) {
    println!("exact: P = {:.12}  Q = {:.12}", r.exact.success, r.exact.failure);
    if let Some(s) = &r.sampled {
        let n = s.counts.len();
        let failed: u64 = s.counts.iter().map(|row| row[n..].iter().sum::<u64>()).sum();
        println!("sampled: {} shots, seed {}, Q = {:.6}", s.shots, s.seed, failed as f64 / s.shots as f64);
    }
}

pub fn solve(config: &Config) -> CliResult<()> {
    let ensemble = load_ensemble(config)?;
    let solution = obtain_solution(config, &ensemble)?;
    print_solution(&solution);
    write(config, "solution.json", &to_json_string(&SolutionDocument::from(&solution)))
}

pub fn synthesize(config: &Config) -> CliResult<()> {
    let ensemble = load_ensemble(config)?;
    let solution = obtain_solution(config, &ensemble)?;
    let network = build_network(config, &ensemble, &solution)?;
    println!(
        "{}-port network: {} couplers, {} phases",
        network.plan.ports(),
        network.plan.couplers().count(),
        network.plan.phases().count()
    );
    write_network(config, &network)
}

/// The matrix to simulate: `--network`, then `--unitary`, then
/// `network.json` in the output directory.
fn load_device(config: &Config) -> CliResult<CMatrix> {
    let network = config.network.clone().or_else(|| {
        let default = config.out_dir.join("network.json");
        (config.unitary.is_none() && default.exists()).then_some(default)
    });
    if let Some(path) = network {
        let doc: NetworkDocument = read_json(&path)?;
        return Ok(reconstruct(&NetworkPlan::try_from(doc).stage(Stage::Input)?));
    }
    if let Some(path) = &config.unitary {
        let doc: UnitaryDocument = read_json(path)?;
        let m = doc.matrix().stage(Stage::Input)?;
        let deviation = unitarity_defect(&m);
        if deviation > config.tol_unitary {
            return Err(CliError::Library {
                stage: Stage::Input,
                source: unambig::Error::NotUnitary { deviation },
            });
        }
        return Ok(m);
    }
    Err(CliError::Usage("simulate needs --network or --unitary".into()))
}

pub fn simulate(config: &Config) -> CliResult<()> {
    let ensemble = load_ensemble(config)?;
    let device = load_device(config)?;
    let r = report(config, &ensemble, &device)?;
    print_report(&r);
    write(config, "report.json", &to_json_string(&r))
}

pub fn pipeline(config: &Config) -> CliResult<()> {
    let ensemble = load_ensemble(config)?;
    let solution = obtain_solution(config, &ensemble)?;
    print_solution(&solution);
    let network = build_network(config, &ensemble, &solution)?;
    let r = report(config, &ensemble, &reconstruct(&network.plan))?;
    print_report(&r);
    write(config, "solution.json", &to_json_string(&SolutionDocument::from(&solution)))?;
    write_network(config, &network)?;
    write(config, "report.json", &to_json_string(&r))
}

pub fn validate(config: &Config) -> CliResult<()> {
    let ensemble = load_ensemble(config)?;
    let rank = check_independence(ensemble.states());
    println!(
        "ensemble: {} states, smallest singular value {:.3e}",
        ensemble.dimension(),
        rank.min_singular_value
    );
    if config.solution.is_some() {
        let solution = obtain_solution(config, &ensemble)?;
        println!("solution: feasible, Q = {:.12}", solution.failure);
    }
    if let Some(path) = &config.unitary {
        let doc: UnitaryDocument = read_json(path)?;
        let matrix = doc.matrix().stage(Stage::Input)?;
        let inputs: Vec<CVector> = ensemble.states().iter().map(|s| pad(s, doc.ports)).collect();
        let outputs = pairs_to_vectors(&doc.outputs);
        if outputs.len() != inputs.len() || doc.ports < inputs.len() {
            return Err(CliError::Check {
                stage: Stage::Input,
                message: format!("unitary maps {} states, ensemble has {}", outputs.len(), inputs.len()),
            });
        }
        let u = ExtendedUnitary::from_parts_with(matrix, inputs, outputs, config.tol_unitary).stage(Stage::Input)?;
        println!("unitary: {} ports, defect {:.3e}", u.ports(), unitarity_defect(u.matrix()));
    }
    if let Some(path) = &config.network {
        let doc: NetworkDocument = read_json(path)?;
        let plan = NetworkPlan::try_from(doc).stage(Stage::Input)?;
        let d = outcome_distribution(&reconstruct(&plan), &ensemble).stage(Stage::Simulate)?;
        let error = d.error_probability();
        if error > config.tol_unitary {
            return Err(CliError::Check {
                stage: Stage::Simulate,
                message: format!("network misidentifies states with probability {error:e}"),
            });
        }
        println!("network: {} ports, error-free, P = {:.12}", plan.ports(), d.success());
    }
    Ok(())
}
