//! JSON run configuration.
//!
//! Unknown keys are rejected. Every error names the key path it refers to,
//! e.g. `solver.tol` or `partition.nonlocal[2]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use schwarz_coupler::assembly::{AssemblyOptions, Degree, Source};
use schwarz_coupler::geometry::{
    build_uniform_mesh, validate_partition, Interval, Mesh1D, Partition1D, PartitionReport,
};
use schwarz_coupler::kernel::{validate_kernel, KernelFamily, KernelReport, KernelSpec};
use schwarz_coupler::schwarz::{InitialGuess, Reference, SchwarzConfig, Variant};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub partition: PartitionConfig,
    pub kernel: KernelConfig,
    pub source: SourceConfig,
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

/// Subdomains as `[lo, hi]` pairs. The position of an interval in its list
/// is its subdomain index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    #[serde(default)]
    pub local: Vec<[f64; 2]>,
    #[serde(default)]
    pub nonlocal: Vec<[f64; 2]>,
    /// Width of the exterior layer; defaults to the kernel support radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_pad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelConfig {
    Hat {
        support_radius: f64,
        #[serde(default = "one")]
        normalization: f64,
    },
    Box {
        support_radius: f64,
        #[serde(default = "one")]
        normalization: f64,
    },
    /// Two-column `z,J` CSV; a relative path is resolved against the
    /// directory of the config file.
    Table {
        path: PathBuf,
        #[serde(default = "one")]
        normalization: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceConfig {
    /// Coefficients in ascending powers of `x`.
    Polynomial { coefficients: Vec<f64> },
    Constant { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeConfig {
    P1,
    P0,
}

/// Exactly one of `target_h` and `nodes` must be given. `nodes` is the node
/// count of a uniform mesh of the whole domain, i.e.
/// `target_h = |domain| / (nodes - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default = "p1")]
    pub nonlocal_degree: DegreeConfig,
    #[serde(default)]
    pub lumped: bool,
    #[serde(default = "four")]
    pub quadrature_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantConfig {
    Alternating,
    Parallel,
    Both,
}

impl VariantConfig {
    pub fn variants(self) -> Vec<Variant> {
        match self {
            VariantConfig::Alternating => vec![Variant::Alternating],
            VariantConfig::Parallel => vec![Variant::Parallel],
            VariantConfig::Both => vec![Variant::Alternating, Variant::Parallel],
        }
    }
}

/// `"zero"` or `{"constant": c}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuessConfig {
    Zero,
    Constant(f64),
}

impl From<GuessConfig> for InitialGuess {
    fn from(g: GuessConfig) -> Self {
        match g {
            GuessConfig::Zero => InitialGuess::Zero,
            GuessConfig::Constant(c) => InitialGuess::Constant(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceConfig {
    Monolithic,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "alternating")]
    pub variant: VariantConfig,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "zero")]
    pub initial_u: GuessConfig,
    #[serde(default = "zero")]
    pub initial_v: GuessConfig,
    /// The monolithic solution gives the `err_H` column and error plots.
    #[serde(default = "monolithic")]
    pub reference: ReferenceConfig,
    /// Turn partition check failures into errors instead of warnings.
    #[serde(default)]
    pub strict_validation: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            variant: alternating(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            initial_u: zero(),
            initial_v: zero(),
            reference: monolithic(),
            strict_validation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "yes")]
    pub solution_csv: bool,
    #[serde(default = "yes")]
    pub history_csv: bool,
    #[serde(default = "yes")]
    pub meta_json: bool,
    #[serde(default = "yes")]
    pub solution_svg: bool,
    #[serde(default = "yes")]
    pub convergence_svg: bool,
    /// Leading iterates overlaid on the solution plot.
    #[serde(default = "three")]
    pub plot_iterates: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            solution_csv: true,
            history_csv: true,
            meta_json: true,
            solution_svg: true,
            convergence_svg: true,
            plot_iterates: three(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn four() -> usize {
    4
}
fn three() -> usize {
    3
}
fn yes() -> bool {
    true
}
fn p1() -> DegreeConfig {
    DegreeConfig::P1
}
fn alternating() -> VariantConfig {
    VariantConfig::Alternating
}
fn zero() -> GuessConfig {
    GuessConfig::Zero
}
fn monolithic() -> ReferenceConfig {
    ReferenceConfig::Monolithic
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    500
}
fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

/// Everything a run needs, built from a validated config.
#[derive(Debug, Clone)]
pub struct Problem {
    pub partition: Partition1D,
    pub kernel: KernelSpec,
    pub mesh: Mesh1D,
    pub options: AssemblyOptions,
    pub source: Source,
    pub partition_report: PartitionReport,
    pub kernel_report: KernelReport,
}

fn positive(key: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::validation(key, format!("must be positive and finite, got {x}")))
    }
}

fn finite(key: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(CliError::validation(key, format!("must be finite, got {x}")))
    }
}

fn intervals(key: &str, list: &[[f64; 2]]) -> Result<Vec<Interval>, CliError> {
    list.iter()
        .enumerate()
        .map(|(i, &[lo, hi])| {
            Interval::new(lo, hi)
                .map_err(|e| CliError::validation(format!("{key}[{i}]"), e.to_string()))
        })
        .collect()
}

impl RunConfig {
    /// Parses JSON, reporting the key path of the first offending value.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let key = if key == "." { "<root>".to_string() } else { key };
            CliError::validation(key, e.into_inner().to_string())
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Value constraints that the schema alone cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        intervals("partition.local", &self.partition.local)?;
        intervals("partition.nonlocal", &self.partition.nonlocal)?;
        if self.partition.local.is_empty() && self.partition.nonlocal.is_empty() {
            return Err(CliError::validation("partition", "no subdomains given"));
        }
        if let Some(pad) = self.partition.horizon_pad {
            if !(pad >= 0.0 && pad.is_finite()) {
                return Err(CliError::validation(
                    "partition.horizon_pad",
                    format!("must be finite and >= 0, got {pad}"),
                ));
            }
        }
        match &self.kernel {
            KernelConfig::Hat {
                support_radius,
                normalization,
            }
            | KernelConfig::Box {
                support_radius,
                normalization,
            } => {
                positive("kernel.support_radius", *support_radius)?;
                positive("kernel.normalization", *normalization)?;
            }
            KernelConfig::Table { normalization, .. } => {
                positive("kernel.normalization", *normalization)?;
            }
        }
        match &self.source {
            SourceConfig::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err(CliError::validation(
                        "source.coefficients",
                        "needs at least one coefficient",
                    ));
                }
                for (i, &c) in coefficients.iter().enumerate() {
                    finite(&format!("source.coefficients[{i}]"), c)?;
                }
            }
            SourceConfig::Constant { value } => finite("source.value", *value)?,
        }
        let d = &self.discretization;
        match (d.target_h, d.nodes) {
            (Some(h), None) => positive("discretization.target_h", h)?,
            (None, Some(n)) if n < 2 => {
                return Err(CliError::validation(
                    "discretization.nodes",
                    format!("must be at least 2, got {n}"),
                ))
            }
            (None, Some(_)) => {}
            _ => {
                return Err(CliError::validation(
                    "discretization",
                    "give exactly one of `target_h` and `nodes`",
                ))
            }
        }
        if !(1..=16).contains(&d.quadrature_order) {
            return Err(CliError::validation(
                "discretization.quadrature_order",
                format!("must be in 1..=16, got {}", d.quadrature_order),
            ));
        }
        let s = &self.solver;
        positive("solver.tol", s.tol)?;
        if s.max_iter < 1 {
            return Err(CliError::validation("solver.max_iter", "must be at least 1"));
        }
        for (key, g) in [("solver.initial_u", s.initial_u), ("solver.initial_v", s.initial_v)] {
            if let GuessConfig::Constant(c) = g {
                finite(&format!("{key}.constant"), c)?;
            }
        }
        Ok(())
    }

    /// Kernel, partition, mesh and assembly options. Relative table paths
    /// are resolved against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<Problem, CliError> {
        self.validate()?;
        let kernel = match &self.kernel {
            KernelConfig::Hat {
                support_radius,
                normalization,
            } => KernelSpec::new(
                KernelFamily::Hat {
                    support_radius: *support_radius,
                },
                *normalization,
            ),
            KernelConfig::Box {
                support_radius,
                normalization,
            } => KernelSpec::new(
                KernelFamily::Box {
                    support_radius: *support_radius,
                },
                *normalization,
            ),
            KernelConfig::Table {
                path,
                normalization,
            } => KernelSpec::table_from_csv(base_dir.join(path), *normalization),
        }
        .map_err(|e| CliError::validation("kernel", e.to_string()))?;
        let kernel_report = validate_kernel(&kernel, 1000)
            .map_err(|e| CliError::validation("kernel", e.to_string()))?;

        let pad = self
            .partition
            .horizon_pad
            .unwrap_or_else(|| kernel.support_radius());
        let partition = Partition1D::new(
            intervals("partition.local", &self.partition.local)?,
            intervals("partition.nonlocal", &self.partition.nonlocal)?,
            pad,
        )
        .map_err(|e| CliError::validation("partition", e.to_string()))?;
        let partition_report = validate_partition(&partition, &kernel);
        if !partition_report.all_pass() {
            if self.solver.strict_validation {
                return Err(CliError::validation(
                    "partition",
                    partition_report.failures().join("; "),
                ));
            }
            for f in partition_report.failures() {
                log::warn!("partition check failed: {f}");
            }
        }

        let d = &self.discretization;
        let target_h = match (d.target_h, d.nodes) {
            (Some(h), _) => h,
            (None, Some(n)) => partition.domain_measure() / (n - 1) as f64,
            (None, None) => unreachable!("checked by validate"),
        };
        let mesh = build_uniform_mesh(&partition, target_h)
            .map_err(|e| CliError::validation("discretization", e.to_string()))?;
        let options = AssemblyOptions {
            nonlocal_degree: match d.nonlocal_degree {
                DegreeConfig::P1 => Degree::P1,
                DegreeConfig::P0 => Degree::P0,
            },
            lumped: d.lumped,
            quadrature_order: d.quadrature_order,
        };
        let source = match &self.source {
            SourceConfig::Polynomial { coefficients } => Source::Polynomial(coefficients.clone()),
            SourceConfig::Constant { value } => Source::Constant(*value),
        };
        Ok(Problem {
            partition,
            kernel,
            mesh,
            options,
            source,
            partition_report,
            kernel_report,
        })
    }

    /// Solver settings for one variant.
    pub fn schwarz_config(&self, variant: Variant, store_iterates: bool) -> SchwarzConfig {
        SchwarzConfig {
            variant,
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            initial_u: self.solver.initial_u.into(),
            initial_v: self.solver.initial_v.into(),
            reference: match self.solver.reference {
                ReferenceConfig::Monolithic => Reference::Monolithic,
                ReferenceConfig::None => Reference::None,
            },
            store_iterates,
        }
    }
}
