//! Interaction kernels and their region moments.
//!
//! Every kernel is even, nonnegative, bounded and supported in
//! `[-support_radius, support_radius]`. Kernels are piecewise linear, so their
//! antiderivatives are piecewise quadratic and region moments
//! `m_S(x) = ∫_S J(x - y) dy` are evaluated in closed form.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Interval;

/// Shape of the kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// `(1 - |z|/d)/d` on `[-d, d]`.
    Hat { support_radius: f64 },
    /// `1/(2d)` on `[-d, d]`.
    Box { support_radius: f64 },
    /// Piecewise-linear interpolant of samples, symmetrized.
    Table(SampledTable),
}

/// Sampled kernel profile. Linear interpolation between samples, zero outside
/// the sampled range, symmetrized as `(T(z) + T(-z)) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTable {
    abscissae: Vec<f64>,
    values: Vec<f64>,
    // Symmetrized profile on [0, R]: knots, linear pieces between them and the
    // cumulative integral at each knot.
    knots: Vec<f64>,
    pieces: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
}

impl SampledTable {
    pub fn new(abscissae: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if abscissae.len() != values.len() || abscissae.len() < 2 {
            return Err(Error::Config(
                "kernel table needs at least two (z, J) samples".into(),
            ));
        }
        if abscissae.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Config("kernel table contains non-finite values".into()));
        }
        if abscissae.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(
                "kernel table abscissae must be strictly increasing".into(),
            ));
        }
        if let Some(i) = values.iter().position(|&v| v < 0.0) {
            return Err(Error::Config(format!(
                "kernel table is negative at z = {}",
                abscissae[i]
            )));
        }
        let radius = abscissae[0].abs().max(abscissae[abscissae.len() - 1].abs());
        if !(radius > 0.0) {
            return Err(Error::Config("kernel table has zero support".into()));
        }

        let mut knots: Vec<f64> = abscissae.iter().map(|z| z.abs()).collect();
        knots.push(0.0);
        knots.push(radius);
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let mut table = Self {
            abscissae,
            values,
            knots,
            pieces: Vec::new(),
            cumulative: Vec::new(),
        };
        let mut pieces = Vec::with_capacity(table.knots.len() - 1);
        let mut cumulative = vec![0.0];
        for w in table.knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            // two interior samples pin down the linear piece without touching
            // the (possibly discontinuous) knots themselves
            let q1 = a + 0.25 * (b - a);
            let q3 = a + 0.75 * (b - a);
            let (j1, j3) = (table.symmetric(q1), table.symmetric(q3));
            let slope = (j3 - j1) / (q3 - q1);
            let left = j1 - slope * (q1 - a);
            let right = j3 + slope * (b - q3);
            pieces.push((left, right));
            let last = *cumulative.last().unwrap();
            cumulative.push(last + 0.5 * (left + right) * (b - a));
        }
        table.pieces = pieces;
        table.cumulative = cumulative;
        Ok(table)
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn radius(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    fn raw(&self, z: f64) -> f64 {
        let xs = &self.abscissae;
        if z < xs[0] || z > xs[xs.len() - 1] {
            return 0.0;
        }
        let i = xs.partition_point(|&x| x <= z);
        if i == xs.len() {
            return self.values[xs.len() - 1];
        }
        let (x0, x1) = (xs[i - 1], xs[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (z - x0) / (x1 - x0)
    }

    fn symmetric(&self, a: f64) -> f64 {
        0.5 * (self.raw(a) + self.raw(-a))
    }

    /// Integral of the symmetrized profile over `[0, a]`, `a >= 0`.
    fn half_integral(&self, a: f64) -> f64 {
        if a >= self.radius() {
            return *self.cumulative.last().unwrap();
        }
        let j = self.knots.partition_point(|&k| k <= a).saturating_sub(1);
        let (left, right) = self.pieces[j];
        let (k0, k1) = (self.knots[j], self.knots[j + 1]);
        let t = a - k0;
        let at = left + (right - left) * t / (k1 - k0);
        self.cumulative[j] + 0.5 * (left + at) * t
    }

    /// Largest rho with the profile strictly positive on `[0, rho)`.
    fn positivity_radius(&self) -> f64 {
        for (j, &(left, right)) in self.pieces.iter().enumerate() {
            if left <= 0.0 {
                return self.knots[j];
            }
            if right <= 0.0 {
                return self.knots[j + 1];
            }
        }
        self.radius()
    }

    /// Largest deviation `|T(z) - T(-z)|` over the sample abscissae.
    fn asymmetry(&self) -> f64 {
        self.abscissae
            .iter()
            .map(|&z| (self.raw(z) - self.raw(-z)).abs())
            .fold(0.0, f64::max)
    }
}

/// An interaction kernel `J` with a positive normalization multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    normalization: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, normalization: f64) -> Result<Self> {
        if !(normalization > 0.0) || !normalization.is_finite() {
            return Err(Error::Config(format!(
                "kernel normalization must be positive, got {normalization}"
            )));
        }
        match &family {
            KernelFamily::Hat { support_radius } | KernelFamily::Box { support_radius } => {
                if !(*support_radius > 0.0) || !support_radius.is_finite() {
                    return Err(Error::Config(format!(
                        "kernel support_radius must be positive, got {support_radius}"
                    )));
                }
            }
            KernelFamily::Table(_) => {}
        }
        Ok(Self {
            family,
            normalization,
        })
    }

    pub fn hat(support_radius: f64) -> Result<Self> {
        Self::new(KernelFamily::Hat { support_radius }, 1.0)
    }

    pub fn boxed(support_radius: f64) -> Result<Self> {
        Self::new(KernelFamily::Box { support_radius }, 1.0)
    }

    pub fn table(abscissae: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(KernelFamily::Table(SampledTable::new(abscissae, values)?), 1.0)
    }

    /// Reads a two-column `z,J` CSV file with a header row.
    pub fn table_from_csv(path: impl AsRef<Path>, normalization: f64) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let (mut zs, mut js) = (Vec::new(), Vec::new());
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if record.len() != 2 {
                return Err(Error::Config(format!(
                    "{}: row {} must have exactly two columns",
                    path.display(),
                    line + 2
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| {
                    Error::Config(format!("{}: row {}: {e}", path.display(), line + 2))
                })
            };
            zs.push(parse(&record[0])?);
            js.push(parse(&record[1])?);
        }
        Self::new(KernelFamily::Table(SampledTable::new(zs, js)?), normalization)
    }

    pub fn with_normalization(&self, normalization: f64) -> Result<Self> {
        Self::new(self.family.clone(), normalization)
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn support_radius(&self) -> f64 {
        match &self.family {
            KernelFamily::Hat { support_radius } | KernelFamily::Box { support_radius } => {
                *support_radius
            }
            KernelFamily::Table(t) => t.radius(),
        }
    }

    /// `J(z)`; evaluated at `|z|` so symmetry is exact.
    pub fn eval(&self, z: f64) -> f64 {
        let a = z.abs();
        let base = match &self.family {
            KernelFamily::Hat { support_radius: d } => {
                if a <= *d {
                    (1.0 - a / d) / d
                } else {
                    0.0
                }
            }
            KernelFamily::Box { support_radius: d } => {
                if a <= *d {
                    0.5 / d
                } else {
                    0.0
                }
            }
            KernelFamily::Table(t) => t.symmetric(a),
        };
        self.normalization * base
    }

    /// Odd antiderivative `F(t) = ∫_0^t J`, defined for all extended reals.
    pub fn antiderivative(&self, t: f64) -> f64 {
        let a = t.abs();
        let half = match &self.family {
            KernelFamily::Hat { support_radius: d } => {
                let s = a.min(*d);
                s / d - 0.5 * s * s / (d * d)
            }
            KernelFamily::Box { support_radius: d } => 0.5 * a.min(*d) / d,
            KernelFamily::Table(tab) => tab.half_integral(a),
        };
        self.normalization * half.copysign(t)
    }

    /// Points where `J` is not smooth (including the support ends), sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.family {
            KernelFamily::Hat { support_radius: d } => vec![-d, 0.0, *d],
            KernelFamily::Box { support_radius: d } => vec![-d, *d],
            KernelFamily::Table(t) => {
                let mut b: Vec<f64> = t.knots.iter().flat_map(|&k| [-k, k]).collect();
                b.sort_by(f64::total_cmp);
                b.dedup();
                b
            }
        }
    }

    /// `∫_R J`.
    pub fn mass(&self) -> f64 {
        2.0 * self.antiderivative(f64::INFINITY)
    }

    /// Radius of the largest centered ball on which `J` stays positive.
    pub fn visibility_radius(&self) -> f64 {
        match &self.family {
            KernelFamily::Hat { support_radius } | KernelFamily::Box { support_radius } => {
                *support_radius
            }
            KernelFamily::Table(t) => t.positivity_radius(),
        }
    }

    /// The visibility parameter `delta`: `J` is bounded below on `|z| <= 2 delta`.
    pub fn visibility_delta(&self) -> f64 {
        0.5 * self.visibility_radius()
    }
}

/// Total mass of the kernel.
pub fn kernel_mass(kernel: &KernelSpec) -> f64 {
    kernel.mass()
}

/// `J(z)`.
pub fn eval_kernel(kernel: &KernelSpec, z: f64) -> f64 {
    kernel.eval(z)
}

/// `∫_S J(x - y) dy` over a union of disjoint intervals.
pub fn region_moment(kernel: &KernelSpec, x: f64, region: &[Interval]) -> f64 {
    region
        .iter()
        .map(|iv| kernel.antiderivative(x - iv.lo) - kernel.antiderivative(x - iv.hi))
        .sum::<f64>()
        .max(0.0)
}

/// `∫ J(x - y) dy` over the complement of the given region.
pub fn complement_moment(kernel: &KernelSpec, x: f64, region: &[Interval]) -> f64 {
    (kernel.mass() - region_moment(kernel, x, region)).max(0.0)
}

/// Points `x` at which `x ↦ region_moment(x, region)` is not smooth.
pub fn moment_breakpoints(kernel: &KernelSpec, region: &[Interval]) -> Vec<f64> {
    let kinks = kernel.breakpoints();
    let mut pts: Vec<f64> = region
        .iter()
        .flat_map(|iv| [iv.lo, iv.hi])
        .filter(|e| e.is_finite())
        .flat_map(|e| kinks.iter().map(move |k| e + k))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Sampled checks on a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub visibility_radius: f64,
    /// `delta = visibility_radius / 2`.
    pub delta: f64,
    /// Lower bound of `J` on `|z| <= 2 delta (1 - 1e-9)`.
    pub lower_bound: f64,
    pub mass: f64,
    /// Bounded, compactly supported kernels always give Hilbert–Schmidt
    /// convolution operators, so compactness holds for every family here.
    pub compact: bool,
}

/// Checks nonnegativity and symmetry on a sample grid and computes the
/// visibility parameters.
pub fn validate_kernel(kernel: &KernelSpec, samples: usize) -> Result<KernelReport> {
    if samples < 100 {
        return Err(Error::Config(format!(
            "kernel validation needs at least 100 samples, got {samples}"
        )));
    }
    let r = kernel.support_radius();
    if let KernelFamily::Table(t) = kernel.family() {
        let scale = t.values.iter().copied().fold(0.0, f64::max);
        if t.asymmetry() > 1e-9 * scale {
            return Err(Error::Config(format!(
                "kernel table is not symmetric (deviation {:e})",
                t.asymmetry()
            )));
        }
    }
    for k in 0..samples {
        let z = -r + 2.0 * r * (k as f64) / ((samples - 1) as f64);
        let (jp, jm) = (kernel.eval(z), kernel.eval(-z));
        if jp < 0.0 {
            return Err(Error::Config(format!("kernel is negative at z = {z}")));
        }
        if jp != jm {
            return Err(Error::Config(format!("kernel is not symmetric at z = {z}")));
        }
    }
    let visibility_radius = kernel.visibility_radius();
    if !(visibility_radius > 0.0) {
        return Err(Error::Config("kernel vanishes at the origin".into()));
    }
    let delta = 0.5 * visibility_radius;
    let reach = 2.0 * delta * (1.0 - 1e-9);
    let mut probes: Vec<f64> = (0..samples)
        .map(|k| reach * (k as f64) / ((samples - 1) as f64))
        .collect();
    probes.extend(kernel.breakpoints().into_iter().filter(|&b| b >= 0.0 && b <= reach));
    let lower_bound = probes
        .into_iter()
        .map(|z| kernel.eval(z))
        .fold(f64::INFINITY, f64::min);
    Ok(KernelReport {
        visibility_radius,
        delta,
        lower_bound,
        mass: kernel.mass(),
        compact: true,
    })
}
