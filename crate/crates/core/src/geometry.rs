//! Partitioned 1D domains and admissible meshes.
//!
//! A [`Partition1D`] holds the local intervals (where the Laplacian acts) and
//! the nonlocal intervals (where the integral operator acts). The physical
//! domain is the interior of the closure of their union; everything outside is
//! exterior and carries a homogeneous Dirichlet condition. Meshes cover the
//! horizon-enlarged domain so that every region boundary is a node.

use std::fmt;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Open interval `(lo, hi)`. Endpoints may be infinite when the interval is
/// only used as an integration region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(Error::Config(format!(
                "interval ({lo}, {hi}) must satisfy lo < hi"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Distance between two intervals (zero when they touch or overlap).
    pub fn distance(&self, other: &Interval) -> f64 {
        (other.lo - self.hi).max(self.lo - other.hi).max(0.0)
    }

    /// Splits the interval into `k` consecutive pieces of equal length.
    pub fn split_uniform(&self, k: usize) -> Result<Vec<Interval>> {
        if k == 0 {
            return Err(Error::Config("cannot split an interval into 0 pieces".into()));
        }
        let mut cuts = Vec::with_capacity(k + 1);
        cuts.push(self.lo);
        for i in 1..k {
            cuts.push(self.lo + self.len() * (i as f64) / (k as f64));
        }
        cuts.push(self.hi);
        cuts.windows(2).map(|w| Interval::new(w[0], w[1])).collect()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// Which operator governs a part of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Local,
    Nonlocal,
}

impl Component {
    pub fn as_str(&self) -> &'static str {
        match self {
            Component::Local => "local",
            Component::Nonlocal => "nonlocal",
        }
    }
}

/// Local and nonlocal subdomains of a 1D domain, plus the exterior padding
/// used to build the enlarged mesh.
///
/// Both interval lists are kept sorted left to right; the position of an
/// interval in its list is its subdomain index.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition1D {
    local: Vec<Interval>,
    nonlocal: Vec<Interval>,
    horizon_pad: f64,
}

impl Partition1D {
    pub fn new(
        mut local: Vec<Interval>,
        mut nonlocal: Vec<Interval>,
        horizon_pad: f64,
    ) -> Result<Self> {
        if local.is_empty() && nonlocal.is_empty() {
            return Err(Error::Config("partition has no intervals".into()));
        }
        if !(horizon_pad >= 0.0) || !horizon_pad.is_finite() {
            return Err(Error::Config(format!(
                "horizon_pad must be finite and >= 0, got {horizon_pad}"
            )));
        }
        let by_lo = |a: &Interval, b: &Interval| a.lo.total_cmp(&b.lo);
        local.sort_by(by_lo);
        nonlocal.sort_by(by_lo);

        let mut all: Vec<(Interval, Component)> = local
            .iter()
            .map(|&i| (i, Component::Local))
            .chain(nonlocal.iter().map(|&i| (i, Component::Nonlocal)))
            .collect();
        for (iv, _) in &all {
            if !iv.lo.is_finite() || !iv.hi.is_finite() {
                return Err(Error::Config(format!("interval {iv} is not bounded")));
            }
        }
        all.sort_by(|a, b| by_lo(&a.0, &b.0));
        for w in all.windows(2) {
            if w[1].0.lo < w[0].0.hi {
                return Err(Error::Config(format!(
                    "intervals {} ({}) and {} ({}) overlap",
                    w[0].0,
                    w[0].1.as_str(),
                    w[1].0,
                    w[1].1.as_str()
                )));
            }
        }
        Ok(Self {
            local,
            nonlocal,
            horizon_pad,
        })
    }

    pub fn local_intervals(&self) -> &[Interval] {
        &self.local
    }

    pub fn nonlocal_intervals(&self) -> &[Interval] {
        &self.nonlocal
    }

    pub fn intervals(&self, component: Component) -> &[Interval] {
        match component {
            Component::Local => &self.local,
            Component::Nonlocal => &self.nonlocal,
        }
    }

    pub fn horizon_pad(&self) -> f64 {
        self.horizon_pad
    }

    /// Same subdomains with a different exterior padding.
    pub fn with_horizon_pad(&self, horizon_pad: f64) -> Result<Self> {
        Self::new(self.local.clone(), self.nonlocal.clone(), horizon_pad)
    }

    fn all_sorted(&self) -> Vec<Interval> {
        let mut all: Vec<Interval> = self.local.iter().chain(&self.nonlocal).copied().collect();
        all.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        all
    }

    /// Connected components of the domain, i.e. the interior of the closure of
    /// the union of all subdomains.
    pub fn domain_components(&self) -> Vec<Interval> {
        merge_touching(self.all_sorted(), 0.0)
    }

    /// Total length of the domain.
    pub fn domain_measure(&self) -> f64 {
        self.domain_components().iter().map(Interval::len).sum()
    }

    /// Points where a local and a nonlocal subdomain touch.
    pub fn interface_points(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        for l in &self.local {
            for n in &self.nonlocal {
                if l.hi == n.lo {
                    pts.push(l.hi);
                }
                if n.hi == l.lo {
                    pts.push(l.lo);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Whether `x` (an endpoint of some subdomain) lies on the outer boundary
    /// of the domain, i.e. no other subdomain continues past it.
    pub fn is_outer_boundary(&self, x: f64) -> bool {
        let touches_left = self.all_sorted().iter().any(|iv| iv.hi == x);
        let touches_right = self.all_sorted().iter().any(|iv| iv.lo == x);
        !(touches_left && touches_right)
    }

    /// Connected components of the enlarged domain
    /// `{x : dist(x, domain) < horizon_pad}`.
    pub fn enlarged_components(&self) -> Vec<Interval> {
        let pad = self.horizon_pad;
        let padded = self
            .domain_components()
            .into_iter()
            .map(|c| Interval {
                lo: c.lo - pad,
                hi: c.hi + pad,
            })
            .collect();
        merge_touching(padded, 0.0)
    }
}

fn merge_touching(sorted: Vec<Interval>, gap: f64) -> Vec<Interval> {
    let mut out: Vec<Interval> = Vec::with_capacity(sorted.len());
    for iv in sorted {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi + gap => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

/// Region an element belongs to; the index is the subdomain index within the
/// corresponding interval list of the partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementTag {
    Local(usize),
    Nonlocal(usize),
    Exterior,
}

/// Admissible 1D mesh of the enlarged domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    elements: Vec<[usize; 2]>,
    tags: Vec<ElementTag>,
    h: f64,
}

impl Mesh1D {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 2]] {
        &self.elements
    }

    pub fn tags(&self) -> &[ElementTag] {
        &self.tags
    }

    /// Maximum element length.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        let [a, b] = self.elements[e];
        (self.nodes[a], self.nodes[b])
    }

    /// Indices of the elements carrying `tag`, left to right.
    pub fn elements_tagged(&self, tag: ElementTag) -> Vec<usize> {
        (0..self.elements.len()).filter(|&e| self.tags[e] == tag).collect()
    }

    pub fn has_node(&self, x: f64) -> bool {
        self.nodes.binary_search_by(|n| n.total_cmp(&x)).is_ok()
    }
}

/// Builds a mesh of the enlarged domain with every element no longer than
/// `target_h`.
///
/// All subdomain endpoints and the ends of the enlarged domain are inserted
/// exactly as nodes; each region between consecutive breakpoints is split
/// uniformly.
pub fn build_uniform_mesh(partition: &Partition1D, target_h: f64) -> Result<Mesh1D> {
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(Error::Config(format!(
            "target_h must be positive, got {target_h}"
        )));
    }
    let mut breaks: Vec<f64> = partition
        .local
        .iter()
        .chain(&partition.nonlocal)
        .flat_map(|iv| [iv.lo, iv.hi])
        .collect();
    let segments = partition.enlarged_components();
    breaks.extend(segments.iter().flat_map(|s| [s.lo, s.hi]));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let tag_of = |x: f64| -> ElementTag {
        if let Some(k) = partition.local.iter().position(|iv| iv.contains(x)) {
            ElementTag::Local(k)
        } else if let Some(k) = partition.nonlocal.iter().position(|iv| iv.contains(x)) {
            ElementTag::Nonlocal(k)
        } else {
            ElementTag::Exterior
        }
    };

    let mut nodes = Vec::new();
    let mut elements = Vec::new();
    let mut tags = Vec::new();
    let mut h: f64 = 0.0;
    for seg in &segments {
        let pts: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|&b| b >= seg.lo && b <= seg.hi)
            .collect();
        nodes.push(pts[0]);
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let tag = tag_of(0.5 * (a + b));
            let n = element_count(b - a, target_h);
            for i in 1..=n {
                let x = if i == n {
                    b
                } else {
                    a + (b - a) * (i as f64) / (n as f64)
                };
                let prev = *nodes.last().unwrap();
                h = h.max(x - prev);
                nodes.push(x);
                elements.push([nodes.len() - 2, nodes.len() - 1]);
                tags.push(tag);
            }
        }
    }
    Ok(Mesh1D {
        nodes,
        elements,
        tags,
        h,
    })
}

/// Number of uniform elements needed to cover `len` with spacing at most
/// `target_h`, ignoring round-off in the ratio.
fn element_count(len: f64, target_h: f64) -> usize {
    let ratio = len / target_h;
    let n = (ratio * (1.0 - 1e-12)).ceil();
    (n as usize).max(1)
}

/// Outcome of one structural check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Pass,
    Fail,
    NotApplicable,
}

impl Check {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Check::Pass
        } else {
            Check::Fail
        }
    }

    pub fn failed(&self) -> bool {
        matches!(self, Check::Fail)
    }
}

/// Structural checks on a partition for a given kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionReport {
    /// Visibility parameter used for the checks.
    pub delta: f64,
    /// Largest gap between consecutive nonlocal intervals.
    pub max_nonlocal_gap: f64,
    /// Nonlocal region is delta-connected.
    pub nonlocal_connected: Check,
    /// Distance between the local and nonlocal regions, if both exist.
    pub local_nonlocal_distance: Option<f64>,
    /// Local and nonlocal regions are closer than delta.
    pub proximity: Check,
    /// Local region is a single interval.
    pub local_connected: Check,
    /// The exterior padding covers the kernel support.
    pub pad_covers_support: Check,
}

impl PartitionReport {
    pub fn all_pass(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.nonlocal_connected.failed() {
            out.push(format!(
                "nonlocal region is not delta-connected (gap {} >= delta {})",
                self.max_nonlocal_gap, self.delta
            ));
        }
        if self.proximity.failed() {
            out.push(format!(
                "local/nonlocal distance {} >= delta {}",
                self.local_nonlocal_distance.unwrap_or(f64::NAN),
                self.delta
            ));
        }
        if self.local_connected.failed() {
            out.push("local region is not connected".into());
        }
        if self.pad_covers_support.failed() {
            out.push("horizon_pad is smaller than the kernel support radius".into());
        }
        out
    }

    /// Converts failed checks into a configuration error.
    pub fn into_strict(self) -> Result<Self> {
        let failures = self.failures();
        if failures.is_empty() {
            Ok(self)
        } else {
            Err(Error::Config(failures.join("; ")))
        }
    }
}

/// Checks delta-connectedness of the nonlocal region, proximity of the local
/// and nonlocal regions and connectedness of the local region.
///
/// Failures are reported, not raised; use [`PartitionReport::into_strict`] to
/// turn them into errors.
pub fn validate_partition(partition: &Partition1D, kernel: &KernelSpec) -> PartitionReport {
    let delta = kernel.visibility_delta();
    let nl = &partition.nonlocal;
    let max_nonlocal_gap = nl
        .windows(2)
        .map(|w| w[0].distance(&w[1]))
        .fold(0.0, f64::max);
    let nonlocal_connected = if nl.is_empty() {
        Check::NotApplicable
    } else {
        Check::from_bool(max_nonlocal_gap < delta)
    };

    let local_nonlocal_distance = partition
        .local
        .iter()
        .flat_map(|l| nl.iter().map(move |n| l.distance(n)))
        .reduce(f64::min);
    let proximity = match local_nonlocal_distance {
        Some(d) => Check::from_bool(d < delta),
        None => Check::NotApplicable,
    };

    let local_connected = if partition.local.is_empty() {
        Check::NotApplicable
    } else {
        // open intervals that merely touch are still disconnected
        Check::from_bool(partition.local.len() == 1)
    };

    let pad_covers_support = if nl.is_empty() && partition.local.is_empty() {
        Check::NotApplicable
    } else {
        Check::from_bool(partition.horizon_pad >= kernel.support_radius())
    };

    PartitionReport {
        delta,
        max_nonlocal_gap,
        nonlocal_connected,
        local_nonlocal_distance,
        proximity,
        local_connected,
        pad_covers_support,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn rejects_empty_and_overlapping_partitions() {
        assert!(Partition1D::new(vec![], vec![], 0.0).is_err());
        assert!(Partition1D::new(vec![iv(0.0, 1.0)], vec![iv(0.5, 2.0)], 0.0).is_err());
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Partition1D::new(vec![iv(0.0, 1.0)], vec![], -1.0).is_err());
    }

    #[test]
    fn mesh_of_reference_geometry() {
        let p = Partition1D::new(vec![iv(0.0, 1.0)], vec![iv(-1.0, 0.0)], 0.5).unwrap();
        let m = build_uniform_mesh(&p, 0.02).unwrap();
        assert_eq!(m.num_elements(), 150);
        assert_eq!(m.nodes()[0], -1.5);
        assert_eq!(*m.nodes().last().unwrap(), 1.5);
        let at_zero = m.nodes().iter().position(|&x| x == 0.0).unwrap();
        let left = m.elements().iter().position(|e| e[1] == at_zero).unwrap();
        let right = m.elements().iter().position(|e| e[0] == at_zero).unwrap();
        assert_eq!(m.tags()[left], ElementTag::Nonlocal(0));
        assert_eq!(m.tags()[right], ElementTag::Local(0));
        assert!(m.h() <= 0.02 + 1e-15);
        assert_eq!(m.elements_tagged(ElementTag::Exterior).len(), 50);
    }

    #[test]
    fn local_only_without_pad() {
        let p = Partition1D::new(vec![iv(0.0, 1.0)], vec![], 0.0).unwrap();
        let m = build_uniform_mesh(&p, 0.1).unwrap();
        assert_eq!(m.nodes()[0], 0.0);
        assert_eq!(*m.nodes().last().unwrap(), 1.0);
        assert!(m.tags().iter().all(|t| *t == ElementTag::Local(0)));
        assert_eq!(m.num_elements(), 10);
    }

    #[test]
    fn endpoints_are_nodes() {
        let p = Partition1D::new(vec![], vec![iv(-1.0, 0.0), iv(0.2, 1.2)], 0.6).unwrap();
        let m = build_uniform_mesh(&p, 0.07).unwrap();
        for x in [-1.0, 0.0, 0.2, 1.2, -1.0 - 0.6, 1.2 + 0.6] {
            assert!(m.has_node(x), "missing node {x}");
        }
        // the gap (0, 0.2) is exterior
        let gap = m
            .elements()
            .iter()
            .enumerate()
            .filter(|(e, _)| {
                let (a, b) = m.element_bounds(*e);
                a >= 0.0 && b <= 0.2
            })
            .all(|(e, _)| m.tags()[e] == ElementTag::Exterior);
        assert!(gap);
    }

    #[test]
    fn disjoint_enlarged_components() {
        let p = Partition1D::new(vec![iv(0.0, 1.0)], vec![iv(5.0, 6.0)], 0.5).unwrap();
        let m = build_uniform_mesh(&p, 0.1).unwrap();
        let total: f64 = (0..m.num_elements())
            .map(|e| {
                let (a, b) = m.element_bounds(e);
                b - a
            })
            .sum();
        assert!((total - 4.0).abs() < 1e-12 * 4.0);
        assert!(!m.has_node(3.0));
    }

    #[test]
    fn invalid_target_h() {
        let p = Partition1D::new(vec![iv(0.0, 1.0)], vec![], 0.0).unwrap();
        assert!(build_uniform_mesh(&p, 0.0).is_err());
        assert!(build_uniform_mesh(&p, f64::NAN).is_err());
    }

    #[test]
    fn interface_and_outer_boundary() {
        let p = Partition1D::new(vec![iv(0.0, 1.0)], vec![iv(-1.0, 0.0)], 0.5).unwrap();
        assert_eq!(p.interface_points(), vec![0.0]);
        assert!(p.is_outer_boundary(1.0));
        assert!(p.is_outer_boundary(-1.0));
        assert!(!p.is_outer_boundary(0.0));
        assert_eq!(p.domain_components(), vec![iv(-1.0, 1.0)]);
    }

    #[test]
    fn validation_reference_geometry_passes() {
        let k = KernelSpec::hat(0.5).unwrap();
        let p = Partition1D::new(vec![iv(0.0, 1.0)], vec![iv(-1.0, 0.0)], 0.5).unwrap();
        let r = validate_partition(&p, &k);
        assert_eq!(r.delta, 0.25);
        assert_eq!(r.local_nonlocal_distance, Some(0.0));
        assert!(r.all_pass(), "{:?}", r.failures());
    }

    #[test]
    fn validation_detects_disconnected_nonlocal() {
        let k = KernelSpec::hat(0.5).unwrap();
        let p = Partition1D::new(vec![iv(0.0, 1.0)], vec![iv(-1.0, 0.0), iv(1.0, 2.0)], 0.5)
            .unwrap();
        let r = validate_partition(&p, &k);
        assert_eq!(r.max_nonlocal_gap, 1.0);
        assert_eq!(r.nonlocal_connected, Check::Fail);
        assert!(r.clone().into_strict().is_err());
    }

    #[test]
    fn validation_detects_far_regions() {
        let k = KernelSpec::hat(0.5).unwrap();
        let p = Partition1D::new(vec![iv(0.0, 1.0)], vec![iv(-2.0, -1.0)], 0.5).unwrap();
        let r = validate_partition(&p, &k);
        assert_eq!(r.local_nonlocal_distance, Some(1.0));
        assert_eq!(r.proximity, Check::Fail);
        assert_eq!(r.nonlocal_connected, Check::Pass);
    }

    #[test]
    fn split_uniform_pieces_touch() {
        let parts = iv(-1.0, 0.0).split_uniform(3).unwrap();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0].hi, parts[1].lo);
        assert_eq!(parts[2].hi, 0.0);
    }
}
