use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;

use super::{
    estimate_rate, run_monolithic, DiscreteField, IterationHistory, IterationRecord, Reference,
    SchwarzConfig, Variant,
};
use crate::assembly::AssembledSystem;
use crate::error::{Error, Result};
use crate::linsolve::CholeskyFactor;

/// Output of [`run_multidomain_nonlocal`].
#[derive(Debug, Clone)]
pub struct MultidomainResult {
    pub v: DiscreteField,
    /// Free-dof range of each subdomain.
    pub blocks: Vec<Range<usize>>,
    pub history: IterationHistory,
    pub converged: bool,
    /// Free-dof values of every iterate if stored.
    pub iterates: Vec<Vec<f64>>,
    pub reference: Option<DiscreteField>,
}

impl MultidomainResult {
    /// Free-dof values of subdomain `k`.
    pub fn subdomain_values(&self, k: usize) -> Vec<f64> {
        self.v.free_values()[self.blocks[k].clone()].to_vec()
    }
}

/// Block iteration on the purely nonlocal system split into its subdomains.
///
/// Every subdomain solves its diagonal block of `A_nn`, with contributions
/// from the other blocks frozen: block Gauss–Seidel for
/// [`Variant::Alternating`], block Jacobi (solved concurrently) for
/// [`Variant::Parallel`]. `initial_u` seeds the nonlocal field.
pub fn run_multidomain_nonlocal(
    system: &AssembledSystem,
    config: &SchwarzConfig,
) -> Result<MultidomainResult> {
    config.validate()?;
    if system.num_local() != 0 {
        return Err(Error::Config(
            "multidomain iteration needs a purely nonlocal partition".into(),
        ));
    }
    let space = system.nonlocal_space.clone();
    let blocks = space.subdomain_free_ranges();
    if blocks.len() == 1 {
        log::warn!("a single nonlocal subdomain makes the block iteration a direct solve");
    }
    let a = &system.a_nn;
    let factors = blocks
        .iter()
        .map(|r| {
            let idx: Vec<usize> = r.clone().collect();
            CholeskyFactor::new(&a.submatrix(&idx, &idx))
        })
        .collect::<Result<Vec<_>>>()?;

    let reference = match config.reference {
        Reference::Monolithic => Some(run_monolithic(system)?.v),
        Reference::None => None,
    };
    let vref = reference.as_ref().map(|r| r.free_values());
    let norm = |v: &[f64]| a.bilinear(v, v).max(0.0).sqrt() / std::f64::consts::SQRT_2;
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<f64>>();

    let mut v = config.initial_u.free_values(system.num_nonlocal())?;
    let mut history = IterationHistory {
        initial_err_h: vref.as_ref().map(|r| norm(&diff(&v, r))),
        ..Default::default()
    };
    let mut iterates = Vec::new();
    if config.store_iterates {
        iterates.push(v.clone());
    }

    // b_k - Σ_{j ∉ block} A_kj v_j
    let block_rhs = |k: usize, v: &[f64]| -> Vec<f64> {
        let r = &blocks[k];
        r.clone()
            .map(|i| {
                let off: f64 = a
                    .row(i)
                    .filter(|(j, _)| !r.contains(j))
                    .map(|(j, val)| val * v[j])
                    .sum();
                system.b_n[i] - off
            })
            .collect()
    };

    let start = Instant::now();
    let mut converged = false;
    for n in 1..=config.max_iter {
        let mut v_new = v.clone();
        match config.variant {
            Variant::Alternating => {
                for k in 0..blocks.len() {
                    let x = factors[k].solve(&block_rhs(k, &v_new))?;
                    v_new[blocks[k].clone()].copy_from_slice(&x);
                }
            }
            Variant::Parallel => {
                let solved = (0..blocks.len())
                    .into_par_iter()
                    .map(|k| factors[k].solve(&block_rhs(k, &v)))
                    .collect::<Result<Vec<_>>>()?;
                for (k, x) in solved.into_iter().enumerate() {
                    v_new[blocks[k].clone()].copy_from_slice(&x);
                }
            }
        }
        let step = norm(&diff(&v_new, &v));
        let size = norm(&v_new);
        let (err_h, err_l2) = match &vref {
            Some(r) => {
                let d = diff(&v_new, r);
                (Some(norm(&d)), Some(system.l2_nonlocal(&d)))
            }
            None => (None, None),
        };
        history.records.push(IterationRecord {
            n,
            step_diff_h: step,
            err_h,
            err_l2_local: None,
            err_l2_nonlocal: err_l2,
            energy: system.energy(&[], &v_new),
            wall_time: start.elapsed().as_secs_f64(),
        });
        v = v_new;
        if config.store_iterates {
            iterates.push(v.clone());
        }
        if step <= config.tol * size {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "multidomain {} iteration did not converge within {} iterations",
            config.variant.as_str(),
            config.max_iter
        );
    }
    history.rate_estimate = estimate_rate(&history).rate;
    Ok(MultidomainResult {
        v: DiscreteField::from_free(space, &v),
        blocks,
        history,
        converged,
        iterates,
        reference,
    })
}
