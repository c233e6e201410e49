use super::{DiscreteField, IterationHistory};
use crate::assembly::AssembledSystem;
use crate::geometry::Component;

/// `‖(u, v)‖_H` from the assembled quadratic forms.
pub fn eval_h_norm(system: &AssembledSystem, u: &DiscreteField, v: &DiscreteField) -> f64 {
    system.h_norm(&u.free_values(), &v.free_values())
}

/// `E(u, v) = ‖(u, v)‖²_H - ∫ f u - ∫ f v`.
pub fn eval_energy(system: &AssembledSystem, u: &DiscreteField, v: &DiscreteField) -> f64 {
    system.energy(&u.free_values(), &v.free_values())
}

/// Geometric rate fitted to an error sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateEstimate {
    /// `exp` of the least-squares slope of `ln e_n`; absent with too few points.
    pub rate: Option<f64>,
    /// `e_{n+1} / e_n` over the fitted window.
    pub ratios: Vec<f64>,
    /// `max |ratio - rate| / rate`.
    pub spread: f64,
    pub warning: Option<String>,
}

/// Fits `e_n ≈ C ρⁿ` to the positive entries of `errors[skip..]`.
///
/// Needs at least four usable points. An exactly stagnating sequence gives
/// `ρ = 1` with a warning.
pub fn estimate_rate_from_errors(errors: &[f64], skip: usize) -> RateEstimate {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .skip(skip)
        .take_while(|(_, &e)| e > 0.0 && e.is_finite())
        .map(|(n, &e)| (n as f64, e.ln()))
        .collect();
    if pts.len() < 4 {
        return RateEstimate {
            warning: Some(format!(
                "rate needs at least 4 positive errors, got {}",
                pts.len()
            )),
            ..Default::default()
        };
    }
    let m = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar).powi(2)).sum();
    let rate = (sxy / sxx).exp();
    let ratios: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1).exp()).collect();
    let spread = ratios
        .iter()
        .map(|r| (r - rate).abs() / rate)
        .fold(0.0, f64::max);
    let warning = if rate >= 1.0 {
        Some(format!("errors are not decreasing (fitted rate {rate})"))
    } else {
        None
    };
    RateEstimate {
        rate: Some(rate),
        ratios,
        spread,
        warning,
    }
}

/// Rate of a run: fitted to the reference errors when present, else to the
/// step differences. The first two records are skipped.
pub fn estimate_rate(history: &IterationHistory) -> RateEstimate {
    let errs: Vec<f64> = if history.records.iter().all(|r| r.err_h.is_some()) {
        history.records.iter().map(|r| r.err_h.unwrap()).collect()
    } else {
        history.records.iter().map(|r| r.step_diff_h).collect()
    };
    let est = estimate_rate_from_errors(&errs, 2.min(errs.len()));
    if let Some(w) = &est.warning {
        log::warn!("{w}");
    }
    est
}

/// Residual signs of a candidate pair in the monolithic equations.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsolutionReport {
    /// Componentwise minimum/maximum of `b_l - A_ll u + C v`.
    pub local_min: f64,
    pub local_max: f64,
    /// Same for `b_n - A_nn v + Cᵀ u`.
    pub nonlocal_min: f64,
    pub nonlocal_max: f64,
    pub is_subsolution: bool,
    pub is_supersolution: bool,
}

const SIGN_SLACK: f64 = 1e-12;

/// Checks whether `(u, v)` (free values) is a discrete sub- or
/// supersolution. Meaningful for lumped systems, whose blocks are M-matrices.
pub fn verify_discrete_subsolution(
    system: &AssembledSystem,
    u: &[f64],
    v: &[f64],
) -> SubsolutionReport {
    if !system.options.lumped {
        log::warn!("sub/supersolution checks assume a lumped assembly");
    }
    let cv = system.coupling.matvec(v);
    let ctu = system.coupling.matvec_transpose(u);
    let au = system.a_ll.matvec(u);
    let av = system.a_nn.matvec(v);
    let rl: Vec<f64> = (0..u.len()).map(|i| system.b_l[i] - au[i] + cv[i]).collect();
    let rn: Vec<f64> = (0..v.len()).map(|i| system.b_n[i] - av[i] + ctu[i]).collect();
    let min = |r: &[f64]| r.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |r: &[f64]| r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (local_min, local_max) = (min(&rl), max(&rl));
    let (nonlocal_min, nonlocal_max) = (min(&rn), max(&rn));
    SubsolutionReport {
        local_min,
        local_max,
        nonlocal_min,
        nonlocal_max,
        is_subsolution: local_min.min(nonlocal_min) >= -SIGN_SLACK,
        is_supersolution: local_max.max(nonlocal_max) <= SIGN_SLACK,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneDirection {
    Increasing,
    Decreasing,
}

/// First offending coefficient of a monotonicity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// Iterate index (`n` compares `n - 1` with `n`, or `n` with the bound).
    pub step: usize,
    pub component: Component,
    /// Free-dof index.
    pub index: usize,
    /// How far past the slack the value went.
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    pub direction: MonotoneDirection,
    /// Number of coefficients violating ordering between iterates.
    pub violations: usize,
    /// Number of coefficients on the wrong side of the bound.
    pub bound_violations: usize,
    pub first_violation: Option<Violation>,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.bound_violations == 0
    }
}

/// Checks that stored iterates move monotonically towards `bound` (usually
/// the monolithic solution), coefficientwise up to `1e-12`.
pub fn check_monotone(
    iterates: &[(Vec<f64>, Vec<f64>)],
    bound: Option<(&[f64], &[f64])>,
    direction: MonotoneDirection,
) -> MonotoneReport {
    let sign = match direction {
        MonotoneDirection::Increasing => 1.0,
        MonotoneDirection::Decreasing => -1.0,
    };
    let mut report = MonotoneReport {
        direction,
        violations: 0,
        bound_violations: 0,
        first_violation: None,
    };
    // `lo` must not exceed `hi` once oriented
    let mut compare = |lo: &[f64], hi: &[f64], step: usize, component, is_bound: bool| {
        for (index, (a, b)) in lo.iter().zip(hi).enumerate() {
            let amount = sign * (a - b);
            if amount > SIGN_SLACK {
                if is_bound {
                    report.bound_violations += 1;
                } else {
                    report.violations += 1;
                }
                report.first_violation.get_or_insert(Violation {
                    step,
                    component,
                    index,
                    amount,
                });
            }
        }
    };
    for (n, (u, v)) in iterates.iter().enumerate() {
        if n > 0 {
            let (up, vp) = &iterates[n - 1];
            compare(up, u, n, Component::Local, false);
            compare(vp, v, n, Component::Nonlocal, false);
        }
        if let Some((ub, vb)) = bound {
            compare(u, ub, n, Component::Local, true);
            compare(v, vb, n, Component::Nonlocal, true);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_geometric_sequence() {
        let errs: Vec<f64> = (0..20).map(|n| 3.0 * 0.5f64.powi(n)).collect();
        let est = estimate_rate_from_errors(&errs, 0);
        assert_relative_eq!(est.rate.unwrap(), 0.5, epsilon = 1e-12);
        assert!(est.spread < 1e-12);
        assert!(est.warning.is_none());
    }

    #[test]
    fn stagnation_reports_one() {
        let est = estimate_rate_from_errors(&[1e-3; 8], 0);
        assert_eq!(est.rate, Some(1.0));
        assert!(est.warning.is_some());
    }

    #[test]
    fn too_few_points() {
        let est = estimate_rate_from_errors(&[1.0, 0.5, 0.25], 0);
        assert!(est.rate.is_none());
        // zeros end the usable window
        let est = estimate_rate_from_errors(&[1.0, 0.5, 0.0, 0.1, 0.05], 0);
        assert!(est.rate.is_none());
    }

    #[test]
    fn monotone_checks() {
        let its = vec![
            (vec![0.0, 0.0], vec![0.0]),
            (vec![0.5, 0.2], vec![0.1]),
            (vec![0.7, 0.2], vec![0.3]),
        ];
        let up = check_monotone(&its, Some((&[1.0, 1.0], &[1.0])), MonotoneDirection::Increasing);
        assert!(up.passed());
        let down = check_monotone(&its, None, MonotoneDirection::Decreasing);
        assert_eq!(down.violations, 5);
        let first = down.first_violation.unwrap();
        assert_eq!((first.step, first.component, first.index), (1, Component::Local, 0));
        let tight = check_monotone(&its, Some((&[0.6, 1.0], &[1.0])), MonotoneDirection::Increasing);
        assert_eq!(tight.bound_violations, 1);
        assert!(!tight.passed());
    }

    #[test]
    fn constant_sequence_is_monotone_both_ways() {
        let its = vec![(vec![0.3], vec![0.1]); 4];
        let b = (&[0.3][..], &[0.1][..]);
        assert!(check_monotone(&its, Some(b), MonotoneDirection::Increasing).passed());
        assert!(check_monotone(&its, Some(b), MonotoneDirection::Decreasing).passed());
    }
}
