use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use schwarz_coupler::assembly::{assemble_system, AssembledSystem};
use schwarz_coupler::schwarz::{
    run_monolithic, run_multidomain_nonlocal, run_schwarz, DiscreteField, IterationHistory,
    MonolithicSolution,
};

use crate::config::{Problem, RunConfig};
use crate::error::CliError;
use crate::output::{emit_history_csv, emit_solution_csv};
use crate::plot::{convergence_svg, solution_svg};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Monolithic direct solve.
    Solve,
    /// Two-component Schwarz iteration.
    Schwarz,
    /// Block iteration over the subdomains of a purely nonlocal problem.
    Multidomain,
    /// Parse and check the config only.
    Validate,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Schwarz => "schwarz",
            Command::Multidomain => "multidomain",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub command: Command,
    pub config: PathBuf,
    /// Overrides `outputs.directory`.
    pub out_dir: Option<PathBuf>,
}

/// What a successful run produced.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    /// False if some iteration hit `max_iter`; the process then exits with 3.
    pub converged: bool,
    pub files: Vec<PathBuf>,
    /// Human-readable lines for standard output.
    pub report: Vec<String>,
}

/// Outcome of one iterative run, in a form shared by both iterations.
struct IterRun {
    name: &'static str,
    history: IterationHistory,
    converged: bool,
    fields: Vec<DiscreteField>,
    iterates: Vec<Vec<DiscreteField>>,
}

fn source_fn(problem: &Problem) -> impl Fn(f64) -> f64 + Sync + '_ {
    move |x| problem.source.eval(x)
}

fn assemble(problem: &Problem) -> Result<AssembledSystem, CliError> {
    let f = source_fn(problem);
    Ok(assemble_system(
        &problem.partition,
        &problem.kernel,
        &problem.mesh,
        &problem.options,
        &f,
    )?)
}

/// Config echoed into `meta.json`, without the output directory so that
/// reruns elsewhere produce identical files.
fn config_echo(config: &RunConfig) -> Value {
    let mut v = serde_json::to_value(config).unwrap_or(Value::Null);
    if let Some(out) = v.get_mut("outputs").and_then(Value::as_object_mut) {
        out.remove("directory");
    }
    v
}

fn problem_meta(problem: &Problem, system: Option<&AssembledSystem>) -> Value {
    let k = &problem.kernel_report;
    json!({
        "mesh": {
            "h": problem.mesh.h(),
            "nodes": problem.mesh.nodes().len(),
            "elements": problem.mesh.num_elements(),
        },
        "dofs": system.map(|s| json!({
            "local": s.num_local(),
            "nonlocal": s.num_nonlocal(),
        })),
        "kernel": {
            "support_radius": problem.kernel.support_radius(),
            "mass": k.mass,
            "visibility_delta": k.delta,
            "visibility_lower_bound": k.lower_bound,
        },
        "partition_checks": {
            "passed": problem.partition_report.all_pass(),
            "failures": problem.partition_report.failures(),
        },
    })
}

fn monolithic_meta(system: &AssembledSystem, m: &MonolithicSolution) -> Value {
    let (u, v) = (m.u.free_values(), m.v.free_values());
    json!({
        "energy": system.energy(&u, &v),
        "h_norm": system.h_norm(&u, &v),
        "residual_norm": m.report.residual_norm,
    })
}

fn run_meta(r: &IterRun) -> Value {
    let last = r.history.records.last();
    json!({
        "variant": r.name,
        "converged": r.converged,
        "iterations": r.history.records.len(),
        "final_step_diff_H": last.map(|l| l.step_diff_h),
        "final_err_H": last.and_then(|l| l.err_h),
        "final_energy": last.map(|l| l.energy),
        "rate_estimate": r.history.rate_estimate,
    })
}

struct Writer<'a> {
    dir: PathBuf,
    config: &'a RunConfig,
    summary: RunSummary,
}

impl Writer<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.summary.files.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let p = self.path(name);
        std::fs::write(&p, content).map_err(|e| CliError::io(p, e))
    }

    fn solution(
        &mut self,
        fields: &[&DiscreteField],
        iterates: &[Vec<DiscreteField>],
        markers: &[f64],
    ) -> Result<(), CliError> {
        let o = &self.config.outputs;
        if o.solution_csv {
            let p = self.path("solution.csv");
            emit_solution_csv(&p, fields)?;
        }
        if o.solution_svg {
            self.text("solution.svg", &solution_svg(fields, iterates, markers))?;
        }
        Ok(())
    }

    fn histories(&mut self, runs: &[IterRun]) -> Result<(), CliError> {
        if self.config.outputs.history_csv {
            for r in runs {
                let name = if runs.len() == 1 {
                    "history.csv".to_string()
                } else {
                    format!("history_{}.csv", r.name)
                };
                let p = self.path(&name);
                emit_history_csv(&p, &r.history)?;
            }
        }
        if self.config.outputs.convergence_svg {
            let hs: Vec<(&str, &IterationHistory)> =
                runs.iter().map(|r| (r.name, &r.history)).collect();
            self.text("convergence.svg", &convergence_svg(&hs))?;
        }
        Ok(())
    }

    fn meta(&mut self, meta: Value) -> Result<(), CliError> {
        if self.config.outputs.meta_json {
            let mut text = serde_json::to_string_pretty(&meta).unwrap_or_default();
            text.push('\n');
            self.text("meta.json", &text)?;
        }
        Ok(())
    }
}

/// Interfaces between adjacent subdomains of any kind.
fn subdomain_interfaces(config: &RunConfig) -> Vec<f64> {
    let all: Vec<[f64; 2]> = config
        .partition
        .local
        .iter()
        .chain(&config.partition.nonlocal)
        .copied()
        .collect();
    let mut pts: Vec<f64> = all
        .iter()
        .filter(|a| all.iter().any(|b| b[0] == a[1]))
        .map(|a| a[1])
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn to_fields(system: &AssembledSystem, u: &[f64], v: &[f64]) -> Vec<DiscreteField> {
    vec![
        DiscreteField::from_free(system.local_space.clone(), u),
        DiscreteField::from_free(system.nonlocal_space.clone(), v),
    ]
}

/// Validates the config, assembles, solves and writes the configured files.
pub fn run_from_config(opts: &RunOptions) -> Result<RunSummary, CliError> {
    let config = RunConfig::from_path(&opts.config)?;
    let base = opts.config.parent().unwrap_or(Path::new("."));
    let problem = config.build(base)?;
    match opts.command {
        Command::Schwarz => {
            if config.partition.local.is_empty() || config.partition.nonlocal.is_empty() {
                return Err(CliError::validation(
                    "partition",
                    "the schwarz command needs both local and nonlocal subdomains",
                ));
            }
        }
        Command::Multidomain => {
            if !config.partition.local.is_empty() {
                return Err(CliError::validation(
                    "partition.local",
                    "the multidomain command needs a purely nonlocal partition",
                ));
            }
        }
        Command::Solve | Command::Validate => {}
    }

    if opts.command == Command::Validate {
        let k = &problem.kernel_report;
        let mut report = vec![
            format!("config {} is valid", opts.config.display()),
            format!(
                "mesh: {} nodes, h = {:.6e}",
                problem.mesh.nodes().len(),
                problem.mesh.h()
            ),
            format!(
                "kernel: support radius {}, visibility delta {}, lower bound {:.6e}",
                problem.kernel.support_radius(),
                k.delta,
                k.lower_bound
            ),
        ];
        report.extend(
            problem
                .partition_report
                .failures()
                .into_iter()
                .map(|f| format!("warning: {f}")),
        );
        return Ok(RunSummary {
            converged: true,
            report,
            ..Default::default()
        });
    }

    let dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| config.outputs.directory.clone());
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut w = Writer {
        dir,
        config: &config,
        summary: RunSummary {
            converged: true,
            ..Default::default()
        },
    };

    let system = assemble(&problem)?;
    let markers = subdomain_interfaces(&config);
    let mut meta = json!({
        "tool": {"name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION")},
        "command": opts.command.as_str(),
        "config": config_echo(&config),
        "problem": problem_meta(&problem, Some(&system)),
    });

    let want_iterates = config.outputs.solution_svg && config.outputs.plot_iterates > 0;
    let keep = config.outputs.plot_iterates;
    let runs: Vec<IterRun> = match opts.command {
        Command::Solve => {
            let m = run_monolithic(&system)?;
            meta["monolithic"] = monolithic_meta(&system, &m);
            w.solution(&[&m.u, &m.v], &[], &markers)?;
            w.summary
                .report
                .push(format!("monolithic solve: residual {:.3e}", m.report.residual_norm));
            Vec::new()
        }
        Command::Schwarz => {
            let mut runs = Vec::new();
            for variant in config.solver.variant.variants() {
                let r = run_schwarz(&system, &config.schwarz_config(variant, want_iterates))?;
                if let Some(m) = &r.reference {
                    meta["monolithic"] = monolithic_meta(&system, m);
                }
                // the stored list starts with the initial guess
                let iterates = r
                    .iterates
                    .iter()
                    .skip(1)
                    .take(keep)
                    .map(|(u, v)| to_fields(&system, u, v))
                    .collect();
                runs.push(IterRun {
                    name: variant.as_str(),
                    history: r.history,
                    converged: r.converged,
                    fields: vec![r.u, r.v],
                    iterates,
                });
            }
            runs
        }
        Command::Multidomain => {
            let mut runs = Vec::new();
            for variant in config.solver.variant.variants() {
                let r =
                    run_multidomain_nonlocal(&system, &config.schwarz_config(variant, want_iterates))?;
                let iterates = r
                    .iterates
                    .iter()
                    .skip(1)
                    .take(keep)
                    .map(|v| vec![DiscreteField::from_free(system.nonlocal_space.clone(), v)])
                    .collect();
                runs.push(IterRun {
                    name: variant.as_str(),
                    history: r.history,
                    converged: r.converged,
                    fields: vec![r.v],
                    iterates,
                });
            }
            runs
        }
        Command::Validate => unreachable!("handled above"),
    };

    if let Some(first) = runs.first() {
        let fields: Vec<&DiscreteField> = first.fields.iter().collect();
        w.solution(&fields, &first.iterates, &markers)?;
        w.histories(&runs)?;
        meta["runs"] = Value::Array(runs.iter().map(run_meta).collect());
        for r in &runs {
            w.summary.converged &= r.converged;
            w.summary.report.push(format!(
                "{} {}: {} after {} iterations, rate estimate {}",
                opts.command.as_str(),
                r.name,
                if r.converged { "converged" } else { "NOT converged" },
                r.history.records.len(),
                r.history
                    .rate_estimate
                    .map_or("n/a".to_string(), |x| format!("{x:.4}"))
            ));
        }
    }
    w.meta(meta)?;
    Ok(w.summary)
}

/// Applies `SCHWARZ_COUPLER_THREADS` to the global thread pool.
pub fn configure_threads(value: Option<&str>) -> Result<(), CliError> {
    let Some(value) = value else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| {
            CliError::validation(
                "SCHWARZ_COUPLER_THREADS",
                format!("must be a positive integer, got {value:?}"),
            )
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::validation("SCHWARZ_COUPLER_THREADS", e.to_string()))
}
