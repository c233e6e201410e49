//! Gauss–Legendre rules and kink-aware quadrature over element pairs.

use crate::kernel::KernelSpec;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `order`-point rule, exact for polynomials of degree `2 order - 1`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss rule needs at least one point");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Newton iteration from the Chebyshev-like initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    /// `∫_a^b f` with this rule.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Splits `[a, b]` at the given points (those strictly inside are used).
pub fn split_interval(a: f64, b: f64, cuts: &[f64]) -> Vec<(f64, f64)> {
    let mut pts: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = Vec::with_capacity(pts.len() + 1);
    let mut lo = a;
    for p in pts {
        out.push((lo, p));
        lo = p;
    }
    out.push((lo, b));
    out
}

/// One quadrature point of a pair integral: `x` in the first element, `y` in
/// the second, and the weight already multiplied by `J(x - y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPoint {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

/// Quadrature points for `∫_{xs} ∫_{ys} J(x - y) g(x, y) dy dx`.
///
/// The rectangle is cut along the lines `x - y = c` for every kernel
/// breakpoint `c`. Outer cells in `x` end where such a line crosses a corner
/// of the `y` range; inside a cell the `y` sub-ranges have endpoints that move
/// linearly with `x`, so a tensor Gauss rule on each piece integrates
/// piecewise-polynomial integrands exactly once `order` is high enough.
/// Pieces on which the kernel vanishes are skipped.
pub fn pair_points(
    kernel: &KernelSpec,
    xs: (f64, f64),
    ys: (f64, f64),
    rule: &GaussRule,
) -> Vec<PairPoint> {
    let radius = kernel.support_radius();
    let (a, b) = xs;
    let (c, e) = ys;
    let mut out = Vec::new();
    // pairs separated by the radius up to round-off in the node coordinates
    // contribute nothing measurable
    if (c - b).max(a - e) >= radius * (1.0 - 1e-12) {
        return out;
    }
    let kinks = kernel.breakpoints();
    let outer_cuts: Vec<f64> = kinks.iter().flat_map(|k| [c + k, e + k]).collect();
    for (p, q) in split_interval(a, b, &outer_cuts) {
        let xm = 0.5 * (p + q);
        // kinks x - k that cross the y range for x in (p, q)
        let mut inner: Vec<f64> = kinks
            .iter()
            .copied()
            .filter(|k| {
                let y = xm - k;
                y > c && y < e
            })
            .collect();
        // y = xm - k decreases with k
        inner.sort_by(|u, v| v.total_cmp(u));
        let mut bounds: Vec<Option<f64>> = Vec::with_capacity(inner.len() + 2);
        bounds.push(None);
        bounds.extend(inner.iter().map(|&k| Some(k)));
        bounds.push(None);
        let lo_of = |slot: usize, x: f64| match bounds[slot] {
            Some(k) => x - k,
            None => {
                if slot == 0 {
                    c
                } else {
                    e
                }
            }
        };
        for s in 0..bounds.len() - 1 {
            let ylo_m = lo_of(s, xm);
            let yhi_m = lo_of(s + 1, xm);
            let zm = xm - 0.5 * (ylo_m + yhi_m);
            if zm.abs() >= radius {
                continue;
            }
            for (x, wx) in rule.mapped(p, q) {
                let ylo = lo_of(s, x);
                let yhi = lo_of(s + 1, x);
                if yhi <= ylo {
                    continue;
                }
                for (y, wy) in rule.mapped(ylo, yhi) {
                    let j = kernel.eval(x - y);
                    if j != 0.0 {
                        out.push(PairPoint { x, y, w: wx * wy * j });
                    }
                }
            }
        }
    }
    out
}
