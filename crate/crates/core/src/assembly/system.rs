use std::sync::Arc;

use super::forms::{
    assemble_coupling, assemble_load, assemble_local_stiffness, assemble_nonlocal_form,
    assemble_weighted_mass,
};
use super::space::{Degree, FeSpace};
use crate::error::Result;
use crate::geometry::{Component, Interval, Mesh1D, Partition1D};
use crate::kernel::{complement_moment, moment_breakpoints, region_moment, KernelSpec};
use crate::quadrature::GaussRule;
use crate::sparse::{CsrMatrix, MatrixBuilder};

/// Discretization choices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    pub nonlocal_degree: Degree,
    /// Row-sum lump the zeroth-order terms.
    pub lumped: bool,
    /// Gauss points per direction on each quadrature cell.
    pub quadrature_order: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            nonlocal_degree: Degree::P1,
            lumped: false,
            quadrature_order: 4,
        }
    }
}

/// All blocks of the coupled problem on the free dofs.
///
/// The monolithic equations are `A_ll u - C v = b_l` and
/// `A_nn v - Cᵀ u = b_n`.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub partition: Partition1D,
    pub kernel: KernelSpec,
    pub options: AssemblyOptions,
    pub local_space: Arc<FeSpace>,
    pub nonlocal_space: Arc<FeSpace>,
    pub stiffness: CsrMatrix,
    /// Absorption on the local side, weight `m_nℓ(y)` (lumped if requested).
    pub local_absorption: CsrMatrix,
    /// Absorption on the nonlocal side, weight `mass - m_nℓ(x)` (lumped if
    /// requested).
    pub nonlocal_absorption: CsrMatrix,
    /// Pure double-integral form.
    pub nonlocal_form: CsrMatrix,
    pub coupling: CsrMatrix,
    pub a_ll: CsrMatrix,
    pub a_nn: CsrMatrix,
    pub b_l: Vec<f64>,
    pub b_n: Vec<f64>,
    /// Unweighted consistent masses, for L² norms.
    pub local_mass: CsrMatrix,
    pub nonlocal_mass: CsrMatrix,
}

/// Builds both spaces and every block of the system.
pub fn assemble_system(
    partition: &Partition1D,
    kernel: &KernelSpec,
    mesh: &Mesh1D,
    options: &AssemblyOptions,
    f: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<AssembledSystem> {
    let local_space = Arc::new(FeSpace::new(mesh, partition, Component::Local, Degree::P1)?);
    let nonlocal_space = Arc::new(FeSpace::new(
        mesh,
        partition,
        Component::Nonlocal,
        options.nonlocal_degree,
    )?);
    assemble_with_spaces(partition, kernel, local_space, nonlocal_space, options, f)
}

/// Same as [`assemble_system`] on prebuilt spaces.
pub fn assemble_with_spaces(
    partition: &Partition1D,
    kernel: &KernelSpec,
    local_space: Arc<FeSpace>,
    nonlocal_space: Arc<FeSpace>,
    options: &AssemblyOptions,
    f: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<AssembledSystem> {
    let rule = GaussRule::new(options.quadrature_order);
    let nl: Vec<Interval> = partition.nonlocal_intervals().to_vec();
    let breaks = moment_breakpoints(kernel, &nl);
    let m_nl = |x: f64| region_moment(kernel, x, &nl);
    let h_nl = |x: f64| complement_moment(kernel, x, &nl);

    let stiffness = assemble_local_stiffness(&local_space)?;
    let local_absorption =
        assemble_weighted_mass(&local_space, &m_nl, &breaks, options.lumped, &rule)?;
    let nonlocal_absorption =
        assemble_weighted_mass(&nonlocal_space, &h_nl, &breaks, options.lumped, &rule)?;
    let nonlocal_form = assemble_nonlocal_form(&nonlocal_space, kernel, &rule);
    let coupling = assemble_coupling(&local_space, &nonlocal_space, kernel, &rule);

    let a_ll = stiffness.add_scaled(1.0, &local_absorption, 1.0);
    let mut a_nn = nonlocal_form.add_scaled(1.0, &nonlocal_absorption, 1.0);
    if options.lumped {
        // K = 2 M_m - 2 G with G_ij = ∬ J ψ_i(x) ψ_j(y); lumping the M_m
        // part as well leaves only -2G off the diagonal (an M-matrix)
        let consistent = assemble_weighted_mass(&nonlocal_space, &m_nl, &breaks, false, &rule)?;
        let shift = consistent.lumped().add_scaled(2.0, &consistent, -2.0);
        a_nn = a_nn.add_scaled(1.0, &shift, 1.0);
    }

    let b_l = assemble_load(&local_space, f, &rule);
    let b_n = assemble_load(&nonlocal_space, f, &rule);
    let local_mass = assemble_weighted_mass(&local_space, &|_| 1.0, &[], false, &rule)?;
    let nonlocal_mass = assemble_weighted_mass(&nonlocal_space, &|_| 1.0, &[], false, &rule)?;

    Ok(AssembledSystem {
        partition: partition.clone(),
        kernel: kernel.clone(),
        options: *options,
        local_space,
        nonlocal_space,
        stiffness,
        local_absorption,
        nonlocal_absorption,
        nonlocal_form,
        coupling,
        a_ll,
        a_nn,
        b_l,
        b_n,
        local_mass,
        nonlocal_mass,
    })
}

impl AssembledSystem {
    pub fn num_local(&self) -> usize {
        self.a_ll.nrows()
    }

    pub fn num_nonlocal(&self) -> usize {
        self.a_nn.nrows()
    }

    /// `[[A_ll, -C], [-Cᵀ, A_nn]]` with local dofs first.
    pub fn block_matrix(&self) -> CsrMatrix {
        let nl = self.num_local();
        let n = nl + self.num_nonlocal();
        let mut b = MatrixBuilder::new();
        for (i, j, v) in self.a_ll.triplets() {
            b.add(i, j, v);
        }
        for (i, j, v) in self.a_nn.triplets() {
            b.add(nl + i, nl + j, v);
        }
        for (i, j, v) in self.coupling.triplets() {
            b.add(i, nl + j, -v);
            b.add(nl + j, i, -v);
        }
        b.build(n, n)
    }

    /// `[b_l, b_n]`.
    pub fn block_rhs(&self) -> Vec<f64> {
        self.b_l.iter().chain(&self.b_n).copied().collect()
    }

    /// Coordinates of the block unknowns, local first.
    pub fn block_coordinates(&self) -> Vec<f64> {
        let coords = |s: &FeSpace| -> Vec<f64> {
            s.free_dofs().iter().map(|&d| s.dofs()[d].x).collect()
        };
        let mut c = coords(&self.local_space);
        c.extend(coords(&self.nonlocal_space));
        c
    }

    /// `½ (uᵀ A_ll u - 2 uᵀ C v + vᵀ A_nn v)`, the squared energy norm.
    pub fn h_norm_squared(&self, u: &[f64], v: &[f64]) -> f64 {
        0.5 * (self.a_ll.bilinear(u, u) - 2.0 * self.coupling.bilinear(u, v)
            + self.a_nn.bilinear(v, v))
    }

    pub fn h_norm(&self, u: &[f64], v: &[f64]) -> f64 {
        self.h_norm_squared(u, v).max(0.0).sqrt()
    }

    /// Discrete energy `‖(u, v)‖²_H - b_l·u - b_n·v`.
    pub fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        let load: f64 = self.b_l.iter().zip(u).map(|(b, x)| b * x).sum::<f64>()
            + self.b_n.iter().zip(v).map(|(b, x)| b * x).sum::<f64>();
        self.h_norm_squared(u, v) - load
    }

    pub fn l2_local(&self, u: &[f64]) -> f64 {
        self.local_mass.bilinear(u, u).max(0.0).sqrt()
    }

    pub fn l2_nonlocal(&self, v: &[f64]) -> f64 {
        self.nonlocal_mass.bilinear(v, v).max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_uniform_mesh;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn two_domain(h: f64, lumped: bool) -> AssembledSystem {
        let p = Partition1D::new(
            vec![Interval::new(0.0, 1.0).unwrap()],
            vec![Interval::new(-1.0, 0.0).unwrap()],
            0.5,
        )
        .unwrap();
        let k = KernelSpec::hat(0.5).unwrap();
        let m = build_uniform_mesh(&p, h).unwrap();
        let opts = AssemblyOptions {
            lumped,
            ..Default::default()
        };
        assemble_system(&p, &k, &m, &opts, &|x| (1.0 - x).powi(4)).unwrap()
    }

    #[test]
    fn zero_source_gives_zero_load() {
        let p = Partition1D::new(
            vec![Interval::new(0.0, 1.0).unwrap()],
            vec![Interval::new(-1.0, 0.0).unwrap()],
            0.5,
        )
        .unwrap();
        let k = KernelSpec::hat(0.5).unwrap();
        let m = build_uniform_mesh(&p, 0.1).unwrap();
        let s = assemble_system(&p, &k, &m, &AssemblyOptions::default(), &|_| 0.0).unwrap();
        assert!(s.block_rhs().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn loads_are_positive_for_quartic_source() {
        let s = two_domain(0.05, false);
        assert!(s.block_rhs().iter().all(|&b| b > 0.0));
    }

    #[test]
    fn block_matrix_is_spd() {
        for lumped in [false, true] {
            let s = two_domain(0.02, lumped);
            let a = s.block_matrix();
            assert_eq!(a.asymmetry(), 0.0);
            let n = a.nrows();
            let dense = DMatrix::from_row_slice(n, n, &a.to_dense());
            let min = dense.symmetric_eigen().eigenvalues.min();
            assert!(min > 0.0, "lumped={lumped}: min eigenvalue {min}");
        }
    }

    #[test]
    fn coupling_rows_match_local_absorption() {
        // Σ_j ψ_j = 1 on the nonlocal region, so row sums of C equal those of
        // the consistent local absorption mass
        let s = two_domain(0.05, false);
        let rs = s.coupling.row_sums();
        let ms = s.local_absorption.row_sums();
        for (a, b) in rs.iter().zip(&ms) {
            assert_relative_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn lumped_nonlocal_block_is_m_matrix() {
        let s = two_domain(0.05, true);
        for (i, j, v) in s.a_nn.triplets() {
            if i != j {
                assert!(v <= 0.0);
            }
        }
        assert!(s.a_ll.triplets().all(|(i, j, v)| i == j || v <= 0.0));
    }

    #[test]
    fn energy_of_solution_is_minus_half_load() {
        let s = two_domain(0.1, false);
        let a = s.block_matrix();
        let b = s.block_rhs();
        let n = a.nrows();
        let x = DMatrix::from_row_slice(n, n, &a.to_dense())
            .lu()
            .solve(&nalgebra::DVector::from_vec(b.clone()))
            .unwrap();
        let (u, v) = x.as_slice().split_at(s.num_local());
        let e = s.energy(u, v);
        let bx: f64 = b.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
        assert_relative_eq!(e, -0.5 * bx, max_relative = 1e-12);
    }

    #[test]
    fn pad_does_not_change_blocks() {
        let k = KernelSpec::hat(0.5).unwrap();
        let build = |pad: f64| {
            let p = Partition1D::new(
                vec![Interval::new(0.0, 1.0).unwrap()],
                vec![Interval::new(-1.0, 0.0).unwrap()],
                pad,
            )
            .unwrap();
            let m = build_uniform_mesh(&p, 0.05).unwrap();
            assemble_system(&p, &k, &m, &AssemblyOptions::default(), &|_| 1.0).unwrap()
        };
        let (a, b) = (build(0.5), build(1.0));
        let (ma, mb) = (a.block_matrix(), b.block_matrix());
        assert_eq!(ma.nrows(), mb.nrows());
        let diff = ma.add_scaled(1.0, &mb, -1.0).max_abs();
        assert!(diff <= 1e-13 * ma.max_abs());
    }

    #[test]
    fn higher_quadrature_order_agrees() {
        let k = KernelSpec::hat(0.5).unwrap();
        let p = Partition1D::new(
            vec![Interval::new(0.0, 1.0).unwrap()],
            vec![Interval::new(-1.0, 0.0).unwrap()],
            0.5,
        )
        .unwrap();
        let m = build_uniform_mesh(&p, 0.1).unwrap();
        let run = |q: usize| {
            let opts = AssemblyOptions {
                quadrature_order: q,
                ..Default::default()
            };
            assemble_system(&p, &k, &m, &opts, &|x| (1.0 - x).powi(4)).unwrap()
        };
        let (a, b) = (run(4), run(6));
        let diff = a.block_matrix().add_scaled(1.0, &b.block_matrix(), -1.0).max_abs();
        assert!(diff <= 1e-11 * a.block_matrix().max_abs());
    }

    #[test]
    fn load_is_linear_in_source() {
        let k = KernelSpec::hat(0.5).unwrap();
        let p = Partition1D::new(
            vec![Interval::new(0.0, 1.0).unwrap()],
            vec![Interval::new(-1.0, 0.0).unwrap()],
            0.5,
        )
        .unwrap();
        let m = build_uniform_mesh(&p, 0.1).unwrap();
        let o = AssemblyOptions::default();
        let s1 = assemble_system(&p, &k, &m, &o, &|x| x * x).unwrap();
        let s2 = assemble_system(&p, &k, &m, &o, &|x| 1.0 - x).unwrap();
        let s3 = assemble_system(&p, &k, &m, &o, &|x| 2.0 * x * x + 3.0 * (1.0 - x)).unwrap();
        for ((a, b), c) in s1.block_rhs().iter().zip(s2.block_rhs()).zip(s3.block_rhs()) {
            assert_relative_eq!(2.0 * a + 3.0 * b, c, epsilon = 1e-14);
        }
    }
}
