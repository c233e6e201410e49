//! Schwarz iterations for the coupled problem.
//!
//! The local step solves `A_ll u = b_l + C v` and the nonlocal step
//! `A_nn v = b_n + Cᵀ u`, each against a factorization computed once. The
//! alternating method chains them, the parallel method runs both on the
//! previous generation. Their common fixed point is the monolithic Galerkin
//! solution, which [`run_monolithic`] computes directly.

mod diagnostics;
mod multidomain;

use std::sync::Arc;
use std::time::Instant;

use crate::assembly::{AssembledSystem, FeSpace};
use crate::error::{Error, Result};
use crate::linsolve::{residual_norm, CholeskyFactor, SolveReport};

pub use diagnostics::{
    check_monotone, estimate_rate, estimate_rate_from_errors, eval_energy, eval_h_norm,
    verify_discrete_subsolution, MonotoneDirection, MonotoneReport, RateEstimate,
    SubsolutionReport, Violation,
};
pub use multidomain::{run_multidomain_nonlocal, MultidomainResult};

/// Coefficients of a finite-element function over all dofs of its space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl DiscreteField {
    /// Checks length and that constrained dofs hold zero.
    pub fn new(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.num_dofs() {
            return Err(Error::DimensionMismatch {
                expected: space.num_dofs(),
                found: coeffs.len(),
            });
        }
        if let Some(d) = space.essential_dofs().into_iter().find(|&d| coeffs[d] != 0.0) {
            return Err(Error::Config(format!(
                "constrained dof {d} must hold 0, got {}",
                coeffs[d]
            )));
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: Arc<FeSpace>) -> Self {
        let n = space.num_dofs();
        Self {
            space,
            coeffs: vec![0.0; n],
        }
    }

    /// `c` on every free dof.
    pub fn constant(space: Arc<FeSpace>, c: f64) -> Self {
        let free = vec![c; space.num_free()];
        Self::from_free(space, &free)
    }

    /// Expands free-dof values.
    pub fn from_free(space: Arc<FeSpace>, free: &[f64]) -> Self {
        let coeffs = space.extend(free);
        Self { space, coeffs }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn free_values(&self) -> Vec<f64> {
        self.space.restrict(&self.coeffs)
    }

    /// Value at `x` within `subdomain`, if `x` lies there.
    pub fn eval(&self, subdomain: usize, x: f64) -> Option<f64> {
        self.space.evaluate(&self.coeffs, subdomain, x)
    }
}

/// Which two-subdomain iteration to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `v_{n+1} = N(u_n)`, `u_{n+1} = L(v_{n+1})`.
    Alternating,
    /// `v_{n+1} = N(u_n)`, `u_{n+1} = L(v_n)`.
    Parallel,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Alternating => "alternating",
            Variant::Parallel => "parallel",
        }
    }
}

/// Starting value for one component.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    Zero,
    /// The same value on every free dof.
    Constant(f64),
    /// Explicit free-dof values.
    Field(Vec<f64>),
}

impl InitialGuess {
    fn free_values(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            InitialGuess::Zero => Ok(vec![0.0; n]),
            InitialGuess::Constant(c) => Ok(vec![*c; n]),
            InitialGuess::Field(v) if v.len() == n => Ok(v.clone()),
            InitialGuess::Field(v) => Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            }),
        }
    }
}

/// Whether to compute the monolithic solution for error tracking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    None,
    Monolithic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchwarzConfig {
    pub variant: Variant,
    pub tol: f64,
    pub max_iter: usize,
    pub initial_u: InitialGuess,
    /// Only read by the parallel variant.
    pub initial_v: InitialGuess,
    pub reference: Reference,
    /// Keep every iterate (needed for monotonicity checks and plots).
    pub store_iterates: bool,
}

impl Default for SchwarzConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Alternating,
            tol: 1e-10,
            max_iter: 500,
            initial_u: InitialGuess::Zero,
            initial_v: InitialGuess::Zero,
            reference: Reference::None,
            store_iterates: false,
        }
    }
}

impl SchwarzConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One iteration of a Schwarz run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub n: usize,
    /// H-norm of the difference to the previous iterate.
    pub step_diff_h: f64,
    /// H-norm error against the reference, when requested.
    pub err_h: Option<f64>,
    pub err_l2_local: Option<f64>,
    pub err_l2_nonlocal: Option<f64>,
    pub energy: f64,
    /// Seconds since the start of the iteration loop.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationHistory {
    pub records: Vec<IterationRecord>,
    /// H-norm error of the starting pair, when a reference is available.
    pub initial_err_h: Option<f64>,
    pub rate_estimate: Option<f64>,
}

/// Monolithic solution and solver diagnostics.
#[derive(Debug, Clone)]
pub struct MonolithicSolution {
    pub u: DiscreteField,
    pub v: DiscreteField,
    pub report: SolveReport,
}

/// Output of [`run_schwarz`].
#[derive(Debug, Clone)]
pub struct SchwarzResult {
    pub u: DiscreteField,
    pub v: DiscreteField,
    pub history: IterationHistory,
    pub converged: bool,
    /// Free-dof values `(u_n, v_n)` for `n = 0, 1, ...` if stored.
    pub iterates: Vec<(Vec<f64>, Vec<f64>)>,
    pub reference: Option<MonolithicSolution>,
}

/// Cached factorizations of both step matrices.
#[derive(Debug, Clone)]
pub struct StepOperators<'a> {
    system: &'a AssembledSystem,
    local: CholeskyFactor,
    nonlocal: CholeskyFactor,
}

impl<'a> StepOperators<'a> {
    pub fn new(system: &'a AssembledSystem) -> Result<Self> {
        Ok(Self {
            system,
            local: CholeskyFactor::new(&system.a_ll)?,
            nonlocal: CholeskyFactor::new(&system.a_nn)?,
        })
    }

    pub fn system(&self) -> &AssembledSystem {
        self.system
    }

    /// Free-dof local step: solves `A_ll u = b_l + C v`.
    pub fn local_free(&self, v: &[f64]) -> Result<Vec<f64>> {
        let s = self.system;
        if v.len() != s.num_nonlocal() {
            return Err(Error::DimensionMismatch {
                expected: s.num_nonlocal(),
                found: v.len(),
            });
        }
        let cv = s.coupling.matvec(v);
        let rhs: Vec<f64> = s.b_l.iter().zip(&cv).map(|(b, c)| b + c).collect();
        self.local.solve(&rhs)
    }

    /// Free-dof nonlocal step: solves `A_nn v = b_n + Cᵀ u`.
    pub fn nonlocal_free(&self, u: &[f64]) -> Result<Vec<f64>> {
        let s = self.system;
        if u.len() != s.num_local() {
            return Err(Error::DimensionMismatch {
                expected: s.num_local(),
                found: u.len(),
            });
        }
        let ctu = s.coupling.matvec_transpose(u);
        let rhs: Vec<f64> = s.b_n.iter().zip(&ctu).map(|(b, c)| b + c).collect();
        self.nonlocal.solve(&rhs)
    }

    pub fn local_step(&self, v: &DiscreteField) -> Result<DiscreteField> {
        check_space(v, &self.system.nonlocal_space)?;
        let u = self.local_free(&v.free_values())?;
        Ok(DiscreteField::from_free(self.system.local_space.clone(), &u))
    }

    pub fn nonlocal_step(&self, u: &DiscreteField) -> Result<DiscreteField> {
        check_space(u, &self.system.local_space)?;
        let v = self.nonlocal_free(&u.free_values())?;
        Ok(DiscreteField::from_free(self.system.nonlocal_space.clone(), &v))
    }
}

fn check_space(field: &DiscreteField, space: &Arc<FeSpace>) -> Result<()> {
    if field.space.as_ref() != space.as_ref() {
        return Err(Error::DimensionMismatch {
            expected: space.num_dofs(),
            found: field.coeffs.len(),
        });
    }
    Ok(())
}

/// Discrete local step `L(v)`; factors `A_ll` on every call, so prefer
/// [`StepOperators`] inside loops.
pub fn local_step(system: &AssembledSystem, v: &DiscreteField) -> Result<DiscreteField> {
    StepOperators::new(system)?.local_step(v)
}

/// Discrete nonlocal step `N(u)`.
pub fn nonlocal_step(system: &AssembledSystem, u: &DiscreteField) -> Result<DiscreteField> {
    StepOperators::new(system)?.nonlocal_step(u)
}

/// Solves the full block system in one shot.
///
/// Unknowns are ordered by coordinate before factoring, which keeps the band
/// of the coupled matrix as narrow as that of its blocks.
pub fn run_monolithic(system: &AssembledSystem) -> Result<MonolithicSolution> {
    let a = system.block_matrix();
    let b = system.block_rhs();
    let coords = system.block_coordinates();
    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_by(|&i, &j| coords[i].total_cmp(&coords[j]).then(i.cmp(&j)));
    let mut perm_inv = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        perm_inv[old] = new;
    }
    let ap = a.permuted(&perm_inv);
    let bp: Vec<f64> = order.iter().map(|&old| b[old]).collect();
    let factor = CholeskyFactor::new(&ap)?;
    let xp = factor.solve(&bp)?;
    let mut x = vec![0.0; xp.len()];
    for (new, &old) in order.iter().enumerate() {
        x[old] = xp[new];
    }
    let report = SolveReport {
        residual_norm: residual_norm(&a, &x, &b),
        factorization_pivots_min: factor.min_pivot(),
        dimension: x.len(),
    };
    let (u, v) = x.split_at(system.num_local());
    Ok(MonolithicSolution {
        u: DiscreteField::from_free(system.local_space.clone(), u),
        v: DiscreteField::from_free(system.nonlocal_space.clone(), v),
        report,
    })
}

/// Runs the alternating or parallel Schwarz method.
///
/// Stops once the H-norm of the step difference is at most `tol` times the
/// H-norm of the new iterate. Hitting `max_iter` is not an error: the result
/// carries `converged = false` and a warning is logged.
pub fn run_schwarz(system: &AssembledSystem, config: &SchwarzConfig) -> Result<SchwarzResult> {
    config.validate()?;
    let ops = StepOperators::new(system)?;
    let reference = match config.reference {
        Reference::Monolithic => Some(run_monolithic(system)?),
        Reference::None => None,
    };
    let refs = reference
        .as_ref()
        .map(|r| (r.u.free_values(), r.v.free_values()));

    let mut u = config.initial_u.free_values(system.num_local())?;
    let mut v = config.initial_v.free_values(system.num_nonlocal())?;
    let mut history = IterationHistory::default();
    if let Some((ur, vr)) = &refs {
        history.initial_err_h = Some(h_distance(system, &u, &v, ur, vr));
    }
    let mut iterates = Vec::new();
    if config.store_iterates {
        iterates.push((u.clone(), v.clone()));
    }

    let start = Instant::now();
    let mut converged = false;
    let mut last_energy = f64::INFINITY;
    for n in 1..=config.max_iter {
        let (u_new, v_new) = match config.variant {
            Variant::Alternating => {
                let v_new = ops.nonlocal_free(&u)?;
                let u_new = ops.local_free(&v_new)?;
                (u_new, v_new)
            }
            Variant::Parallel => {
                let (v_new, u_new) =
                    rayon::join(|| ops.nonlocal_free(&u), || ops.local_free(&v));
                (u_new?, v_new?)
            }
        };
        let step = h_distance(system, &u_new, &v_new, &u, &v);
        let size = system.h_norm(&u_new, &v_new);
        let energy = system.energy(&u_new, &v_new);
        if n > 1 && energy > last_energy + 1e-14 * last_energy.abs().max(1.0) {
            log::debug!("energy increased at iteration {n}: {last_energy:e} -> {energy:e}");
        }
        last_energy = energy;
        let (err_h, err_l2_local, err_l2_nonlocal) = match &refs {
            Some((ur, vr)) => {
                let du: Vec<f64> = u_new.iter().zip(ur).map(|(a, b)| a - b).collect();
                let dv: Vec<f64> = v_new.iter().zip(vr).map(|(a, b)| a - b).collect();
                (
                    Some(system.h_norm(&du, &dv)),
                    Some(system.l2_local(&du)),
                    Some(system.l2_nonlocal(&dv)),
                )
            }
            None => (None, None, None),
        };
        history.records.push(IterationRecord {
            n,
            step_diff_h: step,
            err_h,
            err_l2_local,
            err_l2_nonlocal,
            energy,
            wall_time: start.elapsed().as_secs_f64(),
        });
        u = u_new;
        v = v_new;
        if config.store_iterates {
            iterates.push((u.clone(), v.clone()));
        }
        if step <= config.tol * size {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "{} Schwarz iteration did not converge within {} iterations",
            config.variant.as_str(),
            config.max_iter
        );
    }
    history.rate_estimate = estimate_rate(&history).rate;
    Ok(SchwarzResult {
        u: DiscreteField::from_free(system.local_space.clone(), &u),
        v: DiscreteField::from_free(system.nonlocal_space.clone(), &v),
        history,
        converged,
        iterates,
        reference,
    })
}

fn h_distance(system: &AssembledSystem, u: &[f64], v: &[f64], u2: &[f64], v2: &[f64]) -> f64 {
    let du: Vec<f64> = u.iter().zip(u2).map(|(a, b)| a - b).collect();
    let dv: Vec<f64> = v.iter().zip(v2).map(|(a, b)| a - b).collect();
    system.h_norm(&du, &dv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_system, AssemblyOptions};
    use crate::geometry::{build_uniform_mesh, Interval, Partition1D};
    use crate::kernel::KernelSpec;

    fn system(f: &(dyn Fn(f64) -> f64 + Sync), h: f64) -> AssembledSystem {
        let p = Partition1D::new(
            vec![Interval::new(0.0, 1.0).unwrap()],
            vec![Interval::new(-1.0, 0.0).unwrap()],
            0.5,
        )
        .unwrap();
        let k = KernelSpec::hat(0.5).unwrap();
        let m = build_uniform_mesh(&p, h).unwrap();
        assemble_system(&p, &k, &m, &AssemblyOptions::default(), f).unwrap()
    }

    #[test]
    fn zero_source_converges_immediately() {
        let s = system(&|_| 0.0, 0.1);
        let r = run_schwarz(&s, &SchwarzConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.history.records.len(), 1);
        assert!(r.u.coeffs().iter().chain(r.v.coeffs()).all(|&c| c == 0.0));
        let m = run_monolithic(&s).unwrap();
        assert!(m.u.coeffs().iter().chain(m.v.coeffs()).all(|&c| c == 0.0));
    }

    #[test]
    fn steps_of_zero_are_zero() {
        let s = system(&|_| 0.0, 0.1);
        let ops = StepOperators::new(&s).unwrap();
        let u = ops.local_step(&DiscreteField::zeros(s.nonlocal_space.clone())).unwrap();
        assert!(u.coeffs().iter().all(|&c| c == 0.0));
        let v = ops.nonlocal_step(&DiscreteField::zeros(s.local_space.clone())).unwrap();
        assert!(v.coeffs().iter().all(|&c| c == 0.0));
        // wrong space
        assert!(ops.local_step(&u).is_err());
    }

    #[test]
    fn monolithic_is_fixed_point_of_both_steps() {
        let s = system(&|x| (1.0 - x).powi(4), 0.05);
        let m = run_monolithic(&s).unwrap();
        let ops = StepOperators::new(&s).unwrap();
        let u = ops.local_step(&m.v).unwrap();
        let v = ops.nonlocal_step(&m.u).unwrap();
        for (a, b) in u.coeffs().iter().zip(m.u.coeffs()) {
            assert!((a - b).abs() <= 1e-10);
        }
        for (a, b) in v.coeffs().iter().zip(m.v.coeffs()) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn monolithic_is_linear_in_source() {
        let s1 = system(&|x| (1.0 - x).powi(4), 0.1);
        let s2 = system(&|x| 2.0 * (1.0 - x).powi(4), 0.1);
        let (m1, m2) = (run_monolithic(&s1).unwrap(), run_monolithic(&s2).unwrap());
        for (a, b) in m1.u.coeffs().iter().zip(m2.u.coeffs()) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn parallel_even_steps_match_alternating() {
        let s = system(&|x| (1.0 - x).powi(4), 0.05);
        let cfg = SchwarzConfig {
            tol: 1e-12,
            store_iterates: true,
            ..Default::default()
        };
        let alt = run_schwarz(&s, &cfg).unwrap();
        let par = run_schwarz(
            &s,
            &SchwarzConfig {
                variant: Variant::Parallel,
                ..cfg.clone()
            },
        )
        .unwrap();
        let k_max = (alt.iterates.len() - 1).min((par.iterates.len() - 1) / 2);
        assert!(k_max >= 3);
        for k in 0..=k_max {
            assert_eq!(alt.iterates[k].0, par.iterates[2 * k].0, "k = {k}");
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let s = system(&|_| 1.0, 0.25);
        let cfg = SchwarzConfig {
            tol: 0.0,
            ..Default::default()
        };
        assert!(run_schwarz(&s, &cfg).is_err());
        let cfg = SchwarzConfig {
            max_iter: 0,
            ..Default::default()
        };
        assert!(run_schwarz(&s, &cfg).is_err());
    }

    #[test]
    fn non_convergence_is_flagged_not_an_error() {
        let s = system(&|x| (1.0 - x).powi(4), 0.1);
        let cfg = SchwarzConfig {
            tol: 1e-14,
            max_iter: 2,
            ..Default::default()
        };
        let r = run_schwarz(&s, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.history.records.len(), 2);
    }

    #[test]
    fn field_constructor_checks() {
        let s = system(&|_| 1.0, 0.25);
        let sp = s.local_space.clone();
        assert!(DiscreteField::new(sp.clone(), vec![0.0; 2]).is_err());
        let mut c = vec![0.0; sp.num_dofs()];
        c[sp.essential_dofs()[0]] = 1.0;
        assert!(DiscreteField::new(sp.clone(), c).is_err());
        let f = DiscreteField::constant(sp.clone(), 2.0);
        assert_eq!(f.eval(0, 0.0), Some(2.0));
        assert_eq!(f.eval(0, 1.0), Some(0.0));
    }
}
