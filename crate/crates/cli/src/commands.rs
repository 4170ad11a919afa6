use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use mrmp_core::benchmark::{benchmark_specs, generate_specs, mix_seed, write_suite};
use mrmp_core::diffusion::{bootstrap_dataset, sample, train, BootstrapConfig, SampleOutput, SamplerConfig, ScoreModel};
use mrmp_core::evaluation::{aggregate, evaluate_case, EvalMode};
use mrmp_core::projection::{project_alm, ProjectionConfig, ProjectionOutcome};
use mrmp_core::{MapFamily, ProblemInstance, Trajectory, TrajectoryFile};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::io::{load_instances, noisy_line, trajectory_path, write_csv, Dataset, RUN_RECORD};
use crate::{Cli, Command, SelectArgs};

#[derive(Serialize)]
struct RunRecord<'a> {
    program: &'static str,
    version: &'static str,
    command: &'static str,
    args: Vec<String>,
    seed: u64,
    threads: usize,
    config: &'a RunConfig,
}

fn write_run_record(cli: &Cli, config: &RunConfig) -> Result<()> {
    let out = &cli.global.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let record = RunRecord {
        program: "mrmp",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        args: std::env::args().skip(1).collect(),
        seed: config.seed,
        threads: rayon::current_num_threads(),
        config,
    };
    fs::write(out.join(RUN_RECORD), serde_json::to_string_pretty(&record)?)?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

/// Applies the command's flags on top of the loaded config.
fn apply_flags(command: &Command, config: &mut RunConfig) -> Result<()> {
    match command {
        Command::Generate { .. } | Command::SweepZeta { .. } => {}
        Command::BootstrapData { per_instance, amplitude, .. } => {
            if let Some(n) = per_instance {
                config.bootstrap.per_instance = *n;
            }
            if let Some(a) = amplitude {
                config.bootstrap.amplitude = *a;
            }
        }
        Command::Train { epochs, lr, batch_size, hidden, .. } => {
            if let Some(e) = epochs {
                config.train.epochs = *e;
            }
            if let Some(lr) = lr {
                config.train.lr = *lr;
            }
            if let Some(b) = batch_size {
                config.train.batch_size = *b;
            }
            if let Some(h) = hidden {
                config.model.hidden = h.clone();
            }
        }
        Command::Sample { no_projection, inner_iters, gamma0, .. } => {
            if *no_projection {
                config.sampler.projection_enabled = false;
            }
            if let Some(m) = inner_iters {
                config.sampler.inner_iters = *m;
            }
            if let Some(g) = gamma0 {
                config.sampler.gamma0 = *g;
            }
        }
        Command::Project { zeta, .. } => {
            if let Some(z) = zeta {
                config.projection.zeta = *z;
            }
        }
        Command::Evaluate { mode, discrete, .. } => {
            if *discrete {
                config.evaluation.mode = EvalMode::Discrete;
            } else if let Some(m) = mode {
                config.evaluation.mode = m.parse()?;
            }
        }
    }
    Ok(())
}

pub fn dispatch(cli: &Cli, mut config: RunConfig) -> Result<()> {
    apply_flags(&cli.command, &mut config)?;
    config.finalize(cli.global.seed);
    write_run_record(cli, &config)?;
    let out = cli.global.out.as_path();
    match &cli.command {
        Command::Generate { family, maps, robots, cases } => {
            let mut specs = benchmark_specs(config.seed);
            if let Some(f) = family {
                specs.retain(|s| s.family == *f);
            }
            for spec in &mut specs {
                if let Some(m) = maps {
                    spec.num_maps = *m;
                }
                if let Some(c) = cases {
                    spec.cases_per_config = *c;
                }
                if let Some(r) = robots {
                    if family.is_some() || spec.family != MapFamily::Corridor {
                        spec.robots_counts = r.clone();
                    }
                }
            }
            let (instances, manifest) = generate_specs(&specs, &config.layout)?;
            write_suite(out, &instances, &manifest)?;
            log::info!("wrote {} instances to {}", instances.len(), out.display());
        }
        Command::BootstrapData { select, .. } => bootstrap_command(select, &config.bootstrap, out)?,
        Command::Train { data, .. } => train_command(data, &config, out)?,
        Command::Sample { model, select, .. } => sample_command(model, select, &config.sampler, out)?,
        Command::Project { instance, trajectory, noise, trace, .. } => {
            project_command(instance, trajectory.as_deref(), *noise, *trace, &config, out)?
        }
        Command::Evaluate { select, trajectories, .. } => {
            evaluate_command(select, trajectories, config.evaluation.mode, out)?
        }
        Command::SweepZeta { select, zetas, noise } => sweep_command(select, zetas, *noise, &config, out)?,
    }
    Ok(())
}

fn common_shape(instances: &[ProblemInstance]) -> Result<(usize, usize, f64)> {
    let first = &instances[0];
    let shape = (first.num_robots(), first.horizon, first.workspace_side);
    if let Some(other) = instances.iter().find(|i| (i.num_robots(), i.horizon, i.workspace_side) != shape) {
        bail!(
            "{} has {} robots over {} steps but {} has {} over {}; select one robot count with --robots",
            first.instance_id,
            shape.0,
            shape.1,
            other.instance_id,
            other.num_robots(),
            other.horizon
        );
    }
    Ok(shape)
}

fn bootstrap_command(select: &SelectArgs, config: &BootstrapConfig, out: &Path) -> Result<()> {
    let set = load_instances(&select.instances, &select.filter())?;
    let (num_robots, horizon, workspace_side) = common_shape(&set.instances)?;
    let start = Instant::now();
    let parts = set
        .instances
        .par_iter()
        .enumerate()
        .map(|(idx, inst)| {
            let cfg = BootstrapConfig { seed: mix_seed(config.seed, idx as u64), ..config.clone() };
            bootstrap_dataset(std::slice::from_ref(inst), &cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut trajectories = Vec::new();
    let mut stats = Vec::new();
    for (inst, part) in set.instances.iter().zip(parts) {
        trajectories.extend(part.items.iter().map(|(_, t)| t.to_file(&inst.instance_id)));
        stats.extend(part.stats);
    }
    let requested = config.per_instance * set.instances.len();
    log::info!(
        "kept {} of {} requested trajectories from {} instances in {:.1?}",
        trajectories.len(),
        requested,
        set.instances.len(),
        start.elapsed()
    );
    if trajectories.is_empty() {
        bail!("bootstrap produced no feasible trajectories");
    }
    Dataset { workspace_side, num_robots, horizon, trajectories }.save(&out.join("dataset.json"))?;
    write_json(&out.join("bootstrap_stats.json"), &stats)
}

fn train_command(data: &[std::path::PathBuf], config: &RunConfig, out: &Path) -> Result<()> {
    let dataset = Dataset::merge(data.iter().map(|p| Dataset::load(p)).collect::<Result<_>>()?)?;
    let trajectories = dataset.trajectories()?;
    let mut model = ScoreModel::new(
        dataset.num_robots,
        dataset.horizon,
        dataset.workspace_side,
        config.model.clone(),
        config.schedule.build()?,
        config.seed,
    )?;
    log::info!("training on {} trajectories, {} parameters", trajectories.len(), model.params().len());
    let start = Instant::now();
    let report = train(&mut model, &trajectories, &config.train)?;
    log::info!(
        "final loss {:.5} after {} epochs in {:.1?}",
        report.loss_curve.last().copied().unwrap_or(f64::NAN),
        report.loss_curve.len(),
        start.elapsed()
    );
    model.save(out.join("model.json"))?;
    write_csv(
        &out.join("loss.csv"),
        "epoch,loss",
        report.loss_curve.iter().enumerate().map(|(e, l)| format!("{},{l}", e + 1)),
    )
}

#[derive(Serialize)]
struct SampleSummary<'a> {
    instance_id: &'a str,
    converged: bool,
}

fn sample_command(model_path: &Path, select: &SelectArgs, config: &SamplerConfig, out: &Path) -> Result<()> {
    let model = ScoreModel::load(model_path).with_context(|| format!("loading {}", model_path.display()))?;
    let mut filter = select.filter();
    filter.robots = filter.robots.or(Some(model.num_robots()));
    let set = load_instances(&select.instances, &filter)?;
    let (n, h, side) = common_shape(&set.instances)?;
    if (n, h, side) != (model.num_robots(), model.horizon(), model.workspace_side()) {
        bail!(
            "model expects {} robots over {} steps on side {}, instances have {n} over {h} on side {side}",
            model.num_robots(),
            model.horizon(),
            model.workspace_side()
        );
    }
    let traj_dir = out.join("trajectories");
    fs::create_dir_all(&traj_dir)?;
    let start = Instant::now();
    let outputs: Vec<SampleOutput> = set
        .instances
        .par_iter()
        .enumerate()
        .map(|(idx, inst)| {
            let cfg = SamplerConfig { seed: mix_seed(config.seed, idx as u64), ..config.clone() };
            sample(inst, &model, model.schedule(), &cfg)
        })
        .collect::<Result<_, _>>()?;
    let mut diag_rows = Vec::new();
    let mut summary = Vec::new();
    for (inst, o) in set.instances.iter().zip(&outputs) {
        o.trajectory.to_file(&inst.instance_id).save(trajectory_path(&traj_dir, &inst.instance_id))?;
        diag_rows.extend(
            o.diagnostics
                .iter()
                .map(|d| format!("{},{},{},{},{},{}", inst.instance_id, d.t, d.i, d.h_a_inf, d.h_o_inf, d.converged)),
        );
        summary.push(SampleSummary { instance_id: &inst.instance_id, converged: o.converged });
    }
    let converged = outputs.iter().filter(|o| o.converged).count();
    log::info!("sampled {} instances in {:.1?}, {converged} converged", outputs.len(), start.elapsed());
    write_csv(&out.join("diagnostics.csv"), "instance_id,t,i,h_a_inf,h_o_inf,converged", diag_rows)?;
    write_json(&out.join("samples.json"), &summary)
}

#[derive(Serialize)]
struct OutcomeSummary<'a> {
    instance_id: &'a str,
    zeta: f64,
    converged: bool,
    outer_iterations: usize,
    residual_a: f64,
    residual_o: f64,
    objective: f64,
}

impl<'a> OutcomeSummary<'a> {
    fn new(instance_id: &'a str, zeta: f64, o: &ProjectionOutcome) -> Self {
        Self {
            instance_id,
            zeta,
            converged: o.converged,
            outer_iterations: o.outer_iterations,
            residual_a: o.residual_a,
            residual_o: o.residual_o,
            objective: o.objective,
        }
    }
}

fn project_command(
    instance: &Path,
    trajectory: Option<&Path>,
    noise: f64,
    trace: bool,
    config: &RunConfig,
    out: &Path,
) -> Result<()> {
    let inst = ProblemInstance::load(instance).with_context(|| format!("loading {}", instance.display()))?;
    let input = match trajectory {
        Some(p) => TrajectoryFile::load(p).with_context(|| format!("loading {}", p.display()))?.trajectory()?,
        None => noisy_line(&inst, noise, config.seed)?,
    };
    let outcome = project_alm(&input, &inst, &config.projection)?;
    log::info!(
        "converged={} after {} outer iterations, residuals {:.2e}/{:.2e}",
        outcome.converged,
        outcome.outer_iterations,
        outcome.residual_a,
        outcome.residual_o
    );
    outcome.trajectory.to_file(&inst.instance_id).save(out.join("projected.json"))?;
    write_json(&out.join("outcome.json"), &OutcomeSummary::new(&inst.instance_id, config.projection.zeta, &outcome))?;
    if trace {
        write_csv(
            &out.join("trace.csv"),
            "k,h_a_inf,h_o_inf,rho,objective",
            outcome.trace.iter().map(|r| format!("{},{},{},{},{}", r.k, r.h_a_inf, r.h_o_inf, r.rho, r.objective)),
        )?;
    }
    Ok(())
}

fn evaluate_command(select: &SelectArgs, trajectories: &Path, mode: EvalMode, out: &Path) -> Result<()> {
    let set = load_instances(&select.instances, &select.filter())?;
    let missing: Vec<&str> = set
        .instances
        .iter()
        .filter(|i| !trajectory_path(trajectories, &i.instance_id).is_file())
        .map(|i| i.instance_id.as_str())
        .collect();
    if !missing.is_empty() {
        bail!("no trajectory for {} instance(s): {}", missing.len(), missing.join(", "));
    }
    let records = set
        .instances
        .par_iter()
        .map(|inst| -> Result<_> {
            let path = trajectory_path(trajectories, &inst.instance_id);
            let traj: Trajectory =
                TrajectoryFile::load(&path).with_context(|| format!("loading {}", path.display()))?.trajectory()?;
            Ok(evaluate_case(&traj, inst, mode)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = aggregate(records, None)?;
    for row in &report.aggregate {
        log::info!(
            "{} x{}: S={:.3} C={:.3} ({} cases, {} collision events)",
            row.family,
            row.num_robots,
            row.success_rate,
            row.collision_ratio,
            row.cases,
            row.collision_events
        );
    }
    report.write(out, "report")?;
    Ok(())
}

fn sweep_command(select: &SelectArgs, zetas: &[f64], noise: f64, config: &RunConfig, out: &Path) -> Result<()> {
    if zetas.is_empty() {
        bail!("no zeta values given");
    }
    let set = load_instances(&select.instances, &select.filter())?;
    let jobs: Vec<(usize, f64)> = (0..set.instances.len()).flat_map(|i| zetas.iter().map(move |&z| (i, z))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(idx, zeta)| -> Result<_> {
            let inst = &set.instances[idx];
            let input = noisy_line(inst, noise, mix_seed(config.seed, idx as u64))?;
            let cfg = ProjectionConfig { zeta, ..config.projection.clone() };
            Ok(project_alm(&input, inst, &cfg)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut trace_rows = Vec::new();
    let mut summary = Vec::new();
    for (&(idx, zeta), o) in jobs.iter().zip(&outcomes) {
        let id = &set.instances[idx].instance_id;
        trace_rows.extend(
            o.trace
                .iter()
                .map(|r| format!("{id},{zeta},{},{},{},{},{}", r.k, r.h_a_inf, r.h_o_inf, r.rho, r.objective)),
        );
        summary.push(OutcomeSummary::new(id, zeta, o));
    }
    write_csv(&out.join("zeta_trace.csv"), "instance_id,zeta,k,h_a_inf,h_o_inf,rho,objective", trace_rows)?;
    write_csv(
        &out.join("zeta_summary.csv"),
        "instance_id,zeta,converged,outer_iterations,objective",
        summary.iter().map(|s| format!("{},{},{},{},{}", s.instance_id, s.zeta, s.converged, s.outer_iterations, s.objective)),
    )?;
    write_json(&out.join("zeta_summary.json"), &summary)
}
