use crate::error::{Error, Result};
use crate::geometry::{Component, ElementTag, Mesh1D, Partition1D};

/// Polynomial degree of a space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degree {
    /// Continuous piecewise linear within each subdomain.
    P1,
    /// Piecewise constant.
    P0,
}

/// One degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dof {
    /// Node for P1, element midpoint for P0.
    pub x: f64,
    pub subdomain: usize,
    /// Carries a homogeneous Dirichlet condition.
    pub constrained: bool,
}

/// Element of a space: bounds, subdomain and its (one or two) dofs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceElement {
    pub a: f64,
    pub b: f64,
    pub subdomain: usize,
    dofs: [usize; 2],
}

/// Values of the element shape functions at a point.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    len: usize,
    items: [(usize, f64); 2],
}

impl Shape {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.items[..self.len].iter().copied()
    }
}

/// A single global basis function, usable away from its space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisFunction {
    /// P1 hat peaking at `node`; a missing side means the function is cut
    /// off at the node (subdomain boundary).
    Hat {
        left: Option<f64>,
        node: f64,
        right: Option<f64>,
    },
    /// Indicator of `(a, b)`.
    Indicator { a: f64, b: f64 },
}

impl BasisFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            BasisFunction::Hat { left, node, right } => {
                if x == node {
                    return 1.0;
                }
                if x < node {
                    match left {
                        Some(l) if x > l => (x - l) / (node - l),
                        _ => 0.0,
                    }
                } else {
                    match right {
                        Some(r) if x < r => (r - x) / (r - node),
                        _ => 0.0,
                    }
                }
            }
            BasisFunction::Indicator { a, b } => {
                if x > a && x < b {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Finite-element space on the local or nonlocal region.
///
/// Spaces are broken across subdomain boundaries: a node shared by two
/// subdomains (including the local/nonlocal interface) carries one dof per
/// side. Matrices are assembled on the free (unconstrained) dofs only.
#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace {
    component: Component,
    degree: Degree,
    elements: Vec<SpaceElement>,
    dofs: Vec<Dof>,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
    num_subdomains: usize,
}

impl FeSpace {
    /// Builds the space on all elements tagged with `component`.
    ///
    /// Local P1 spaces vanish at subdomain endpoints on the outer boundary of
    /// the domain; interface nodes stay free. Nonlocal spaces have no
    /// constrained dofs.
    pub fn new(
        mesh: &Mesh1D,
        partition: &Partition1D,
        component: Component,
        degree: Degree,
    ) -> Result<Self> {
        let intervals = partition.intervals(component);
        let mut elements = Vec::new();
        let mut dofs: Vec<Dof> = Vec::new();
        for (k, _) in intervals.iter().enumerate() {
            let tag = match component {
                Component::Local => ElementTag::Local(k),
                Component::Nonlocal => ElementTag::Nonlocal(k),
            };
            let elems = mesh.elements_tagged(tag);
            if elems.is_empty() {
                return Err(Error::Config(format!(
                    "mesh has no elements for {} subdomain {k}",
                    component.as_str()
                )));
            }
            match degree {
                Degree::P1 => {
                    let (first_a, _) = mesh.element_bounds(elems[0]);
                    let constrain = |x: f64| {
                        component == Component::Local && partition.is_outer_boundary(x)
                    };
                    dofs.push(Dof {
                        x: first_a,
                        subdomain: k,
                        constrained: constrain(first_a),
                    });
                    for &e in &elems {
                        let (a, b) = mesh.element_bounds(e);
                        let left = dofs.len() - 1;
                        dofs.push(Dof {
                            x: b,
                            subdomain: k,
                            constrained: false,
                        });
                        elements.push(SpaceElement {
                            a,
                            b,
                            subdomain: k,
                            dofs: [left, left + 1],
                        });
                    }
                    let last = dofs.len() - 1;
                    dofs[last].constrained = constrain(dofs[last].x);
                }
                Degree::P0 => {
                    for &e in &elems {
                        let (a, b) = mesh.element_bounds(e);
                        dofs.push(Dof {
                            x: 0.5 * (a + b),
                            subdomain: k,
                            constrained: false,
                        });
                        let d = dofs.len() - 1;
                        elements.push(SpaceElement {
                            a,
                            b,
                            subdomain: k,
                            dofs: [d, d],
                        });
                    }
                }
            }
        }
        let mut free_index = Vec::with_capacity(dofs.len());
        let mut free_dofs = Vec::new();
        for (i, d) in dofs.iter().enumerate() {
            if d.constrained {
                free_index.push(None);
            } else {
                free_index.push(Some(free_dofs.len()));
                free_dofs.push(i);
            }
        }
        Ok(Self {
            component,
            degree,
            elements,
            dofs,
            free_index,
            free_dofs,
            num_subdomains: intervals.len(),
        })
    }

    pub fn component(&self) -> Component {
        self.component
    }

    pub fn degree(&self) -> Degree {
        self.degree
    }

    pub fn elements(&self) -> &[SpaceElement] {
        &self.elements
    }

    pub fn dofs(&self) -> &[Dof] {
        &self.dofs
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn num_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn num_subdomains(&self) -> usize {
        self.num_subdomains
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_index[dof]
    }

    /// Dof numbers of the free dofs, in free order.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Constrained dof numbers.
    pub fn essential_dofs(&self) -> Vec<usize> {
        (0..self.dofs.len()).filter(|&i| self.dofs[i].constrained).collect()
    }

    /// Dofs of element `e` (one for P0, two for P1).
    pub fn element_dofs(&self, e: usize) -> &[usize] {
        match self.degree {
            Degree::P1 => &self.elements[e].dofs,
            Degree::P0 => &self.elements[e].dofs[..1],
        }
    }

    /// Shape functions of element `e` at `x`.
    pub fn shape(&self, e: usize, x: f64) -> Shape {
        let el = &self.elements[e];
        match self.degree {
            Degree::P1 => {
                let t = (x - el.a) / (el.b - el.a);
                Shape {
                    len: 2,
                    items: [(el.dofs[0], 1.0 - t), (el.dofs[1], t)],
                }
            }
            Degree::P0 => Shape {
                len: 1,
                items: [(el.dofs[0], 1.0), (el.dofs[0], 0.0)],
            },
        }
    }

    /// The global basis function attached to `dof`.
    pub fn basis_function(&self, dof: usize) -> BasisFunction {
        match self.degree {
            Degree::P0 => {
                let el = self.elements.iter().find(|el| el.dofs[0] == dof).unwrap();
                BasisFunction::Indicator { a: el.a, b: el.b }
            }
            Degree::P1 => {
                let left = self.elements.iter().find(|el| el.dofs[1] == dof).map(|el| el.a);
                let right = self.elements.iter().find(|el| el.dofs[0] == dof).map(|el| el.b);
                BasisFunction::Hat {
                    left,
                    node: self.dofs[dof].x,
                    right,
                }
            }
        }
    }

    /// Elements whose closure contains `x`, restricted to one subdomain.
    fn element_at(&self, subdomain: usize, x: f64) -> Option<usize> {
        self.elements
            .iter()
            .position(|el| el.subdomain == subdomain && el.a <= x && x <= el.b)
    }

    /// Evaluates a field given by full dof coefficients at `x`, within
    /// `subdomain`. Returns `None` outside that subdomain.
    pub fn evaluate(&self, coeffs: &[f64], subdomain: usize, x: f64) -> Option<f64> {
        let e = self.element_at(subdomain, x)?;
        let el = &self.elements[e];
        Some(match self.degree {
            Degree::P1 => {
                let t = (x - el.a) / (el.b - el.a);
                coeffs[el.dofs[0]] * (1.0 - t) + coeffs[el.dofs[1]] * t
            }
            Degree::P0 => coeffs[el.dofs[0]],
        })
    }

    /// Restricts full coefficients to the free dofs.
    pub fn restrict(&self, coeffs: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&d| coeffs[d]).collect()
    }

    /// Expands free coefficients, writing zeros on constrained dofs.
    pub fn extend(&self, free: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.dofs.len()];
        for (k, &d) in self.free_dofs.iter().enumerate() {
            full[d] = free[k];
        }
        full
    }

    /// Free-dof ranges owned by each subdomain, in order.
    pub fn subdomain_free_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut ranges = Vec::with_capacity(self.num_subdomains);
        for k in 0..self.num_subdomains {
            let members: Vec<usize> = (0..self.free_dofs.len())
                .filter(|&f| self.dofs[self.free_dofs[f]].subdomain == k)
                .collect();
            let start = members.first().copied().unwrap_or(0);
            ranges.push(start..start + members.len());
        }
        ranges
    }
}
