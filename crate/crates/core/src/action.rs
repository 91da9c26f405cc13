//! Free group actions, quotient data, and the `Instance` handle that the
//! zeta machinery operates on.
//!
//! Three kinds of action are supported: the trivial action on a finite
//! graph, a free finite permutation group acting by automorphisms on a
//! finite graph, and the ℤ^d translation action implicit in a
//! [`PeriodicGraph`]. In each case the quotient B = X/Γ is finite, a
//! fundamental domain picks one vertex per orbit (the smallest index by
//! convention — traced quantities must not depend on the choice), and the
//! von Neumann trace Tr_Γ of an equivariant kernel sums its diagonal over
//! the fundamental domain.

use crate::error::{Error, Result};
use crate::graph::{PeriodicGraph, SimpleGraph, ValidationReport, Window};
use crate::kernel::{KernelSpace, PeriodicKernel};
use crate::scalar::RingScalar;
use num_bigint::BigInt;
use num_rational::BigRational;
use std::collections::HashSet;

const MAX_GROUP_ORDER: usize = 100_000;

/// A finite permutation group on `0..n`, closed under composition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationGroup {
    n: usize,
    generators: Vec<Vec<usize>>,
    elements: Vec<Vec<usize>>,
}

impl PermutationGroup {
    /// Closes the generators under composition (cap 10^5 elements).
    pub fn from_generators(n: usize, generators: Vec<Vec<usize>>) -> Result<Self> {
        for g in &generators {
            if g.len() != n {
                return Err(Error::BadPermutation);
            }
            let mut seen = vec![false; n];
            for &x in g {
                if x >= n || seen[x] {
                    return Err(Error::BadPermutation);
                }
                seen[x] = true;
            }
        }
        let identity: Vec<usize> = (0..n).collect();
        let mut elements = vec![identity.clone()];
        let mut known: HashSet<Vec<usize>> = elements.iter().cloned().collect();
        let mut frontier = vec![identity];
        while let Some(e) = frontier.pop() {
            for g in &generators {
                let composed: Vec<usize> = (0..n).map(|v| g[e[v]]).collect();
                if known.insert(composed.clone()) {
                    if known.len() > MAX_GROUP_ORDER {
                        return Err(Error::GroupTooLarge(MAX_GROUP_ORDER));
                    }
                    elements.push(composed.clone());
                    frontier.push(composed);
                }
            }
        }
        elements.sort();
        Ok(Self { n, generators, elements })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[Vec<usize>] {
        &self.generators
    }

    /// All group elements, identity included, in sorted order.
    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    fn is_identity(p: &[usize]) -> bool {
        p.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// Every non-identity element must act without fixed vertices.
    pub fn check_free(&self) -> Result<()> {
        for e in &self.elements {
            if Self::is_identity(e) {
                continue;
            }
            if let Some(v) = (0..self.n).find(|&v| e[v] == v) {
                return Err(Error::NotFree { vertex: v });
            }
        }
        Ok(())
    }

    /// Every generator (hence every element) must preserve adjacency.
    pub fn check_automorphisms(&self, graph: &SimpleGraph) -> Result<()> {
        for g in &self.generators {
            for &(u, v) in graph.edges() {
                if !graph.has_edge(g[u], g[v]) {
                    return Err(Error::NotAutomorphism(u, v));
                }
            }
        }
        Ok(())
    }

    /// Vertex orbits, each sorted, ordered by smallest element.
    pub fn vertex_orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut orbits = Vec::new();
        for v in 0..self.n {
            if seen[v] {
                continue;
            }
            let mut orbit: Vec<usize> = self.elements.iter().map(|e| e[v]).collect();
            orbit.sort_unstable();
            orbit.dedup();
            for &x in &orbit {
                seen[x] = true;
            }
            orbits.push(orbit);
        }
        orbits
    }

    fn edge_orbit_count(&self, graph: &SimpleGraph) -> usize {
        let mut reps = HashSet::new();
        for &(u, v) in graph.edges() {
            let rep = self
                .elements
                .iter()
                .map(|e| {
                    let (a, b) = (e[u], e[v]);
                    (a.min(b), a.max(b))
                })
                .min()
                .expect("group is nonempty");
            reps.insert(rep);
        }
        reps.len()
    }
}

/// The group acting on the graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupAction {
    Trivial,
    FinitePermutation(PermutationGroup),
    /// ℤ^d translations of a periodic graph.
    Translation { rank: usize },
}

/// Fundamental domain and Euler characteristics of the quotient B = X/Γ.
#[derive(Clone, Debug, PartialEq)]
pub struct QuotientData {
    /// Smallest-index representative per vertex orbit. For periodic
    /// instances these are cell class indices.
    pub fundamental_domain: Vec<usize>,
    pub vb: usize,
    pub eb: usize,
    /// χ(B) = |VB| − |EB|.
    pub chi_b: i64,
    /// χ⁽²⁾ = −½ Tr_Γ(Q − I); equals χ(B).
    pub chi_l2: BigRational,
}

fn chi_l2_from_degrees(degrees: impl Iterator<Item = usize>) -> BigRational {
    let sum: i64 = degrees.map(|d| d as i64 - 2).sum();
    -BigRational::new(BigInt::from(sum), BigInt::from(2))
}

/// A graph together with its group action: the object everything else
/// (oracle, kernels, determinants) consumes.
#[derive(Clone, Debug)]
pub enum Instance {
    Finite { graph: SimpleGraph, action: GroupAction },
    Periodic { graph: PeriodicGraph },
}

impl Instance {
    /// A finite graph with the trivial action.
    pub fn finite(graph: SimpleGraph) -> Self {
        Instance::Finite { graph, action: GroupAction::Trivial }
    }

    /// A finite graph acted on freely by a permutation group; the action
    /// is validated here.
    pub fn with_action(graph: SimpleGraph, group: PermutationGroup) -> Result<Self> {
        if group.degree() != graph.vertex_count() {
            return Err(Error::BadPermutation);
        }
        group.check_automorphisms(&graph)?;
        group.check_free()?;
        Ok(Instance::Finite { graph, action: GroupAction::FinitePermutation(group) })
    }

    pub fn periodic(graph: PeriodicGraph) -> Self {
        Instance::Periodic { graph }
    }

    pub fn action(&self) -> GroupAction {
        match self {
            Instance::Finite { action, .. } => action.clone(),
            Instance::Periodic { graph } => GroupAction::Translation { rank: graph.rank() },
        }
    }

    pub fn validate(&self) -> ValidationReport {
        match self {
            Instance::Finite { graph, .. } => graph.validate(),
            Instance::Periodic { graph } => graph.validate(),
        }
    }

    pub fn max_degree(&self) -> usize {
        match self {
            Instance::Finite { graph, .. } => graph.max_degree(),
            Instance::Periodic { graph } => graph.max_degree(),
        }
    }

    /// `Some(q)` when the graph is (q+1)-regular.
    pub fn regular_q(&self) -> Option<usize> {
        let d = match self {
            Instance::Finite { graph, .. } => graph.regular_degree()?,
            Instance::Periodic { graph } => graph.regular_degree()?,
        };
        (d >= 1).then(|| d - 1)
    }

    /// Growth constant α = (d + √(d² + 4d))/2 for the proper-path
    /// operators; the determinant formula's series converge for |u| < 1/α.
    pub fn alpha(&self) -> f64 {
        let d = self.max_degree() as f64;
        (d + (d * d + 4.0 * d).sqrt()) / 2.0
    }

    /// Fundamental domain (smallest index per orbit) and quotient counts.
    pub fn quotient(&self) -> Result<QuotientData> {
        match self {
            Instance::Finite { graph, action: GroupAction::Trivial } => {
                let vb = graph.vertex_count();
                let eb = graph.edge_count();
                Ok(QuotientData {
                    fundamental_domain: (0..vb).collect(),
                    vb,
                    eb,
                    chi_b: vb as i64 - eb as i64,
                    chi_l2: chi_l2_from_degrees((0..vb).map(|v| graph.degree(v))),
                })
            }
            Instance::Finite { graph, action: GroupAction::FinitePermutation(group) } => {
                group.check_free()?;
                let orbits = group.vertex_orbits();
                let domain: Vec<usize> = orbits.iter().map(|o| o[0]).collect();
                let vb = domain.len();
                let eb = group.edge_orbit_count(graph);
                Ok(QuotientData {
                    fundamental_domain: domain.clone(),
                    vb,
                    eb,
                    chi_b: vb as i64 - eb as i64,
                    chi_l2: chi_l2_from_degrees(domain.iter().map(|&v| graph.degree(v))),
                })
            }
            Instance::Finite { action: GroupAction::Translation { .. }, .. } => {
                Err(Error::ActionMismatch)
            }
            Instance::Periodic { graph } => {
                let vb = graph.cell_size();
                let eb = graph.edges().len();
                Ok(QuotientData {
                    fundamental_domain: (0..vb).collect(),
                    vb,
                    eb,
                    chi_b: vb as i64 - eb as i64,
                    chi_l2: chi_l2_from_degrees((0..vb).map(|i| graph.degree(i))),
                })
            }
        }
    }

    /// The kernel space (matrix size or offset algebra) this instance's
    /// operators live in.
    pub fn kernel_space(&self) -> KernelSpace {
        match self {
            Instance::Finite { graph, .. } => KernelSpace::Finite { n: graph.vertex_count() },
            Instance::Periodic { graph } => {
                KernelSpace::Periodic { rank: graph.rank(), cell: graph.cell_size() }
            }
        }
    }

    /// Adjacency operator A as an integer kernel.
    pub fn adjacency_kernel(&self) -> PeriodicKernel<BigInt> {
        match self {
            Instance::Finite { graph, .. } => {
                let n = graph.vertex_count();
                PeriodicKernel::finite_from_fn(n, |i, j| {
                    if graph.has_edge(i, j) { BigInt::from(1) } else { BigInt::from(0) }
                })
            }
            Instance::Periodic { graph } => {
                let mut k = PeriodicKernel::zero(&self.kernel_space());
                for e in graph.edges() {
                    let minus: Vec<i64> = e.offset.iter().map(|x| -x).collect();
                    k.add_entry(e.i, e.j, &e.offset, BigInt::from(1));
                    k.add_entry(e.j, e.i, &minus, BigInt::from(1));
                }
                k
            }
        }
    }

    /// Degree-deficiency operator Q = diag(deg − 1).
    pub fn q_kernel(&self) -> PeriodicKernel<BigInt> {
        match self {
            Instance::Finite { graph, .. } => {
                let n = graph.vertex_count();
                PeriodicKernel::finite_from_fn(n, |i, j| {
                    if i == j { BigInt::from(graph.degree(i) as i64 - 1) } else { BigInt::from(0) }
                })
            }
            Instance::Periodic { graph } => {
                let mut k = PeriodicKernel::zero(&self.kernel_space());
                let zero = vec![0i64; graph.rank()];
                for i in 0..graph.cell_size() {
                    k.add_entry(i, i, &zero, BigInt::from(graph.degree(i) as i64 - 1));
                }
                k
            }
        }
    }

    /// Tr_Γ of an equivariant kernel: sum of the diagonal over the
    /// fundamental domain (the zero-offset cell diagonal for translations).
    pub fn tr_gamma<T: RingScalar>(&self, k: &PeriodicKernel<T>) -> Result<T> {
        match self {
            Instance::Finite { .. } => {
                let q = self.quotient()?;
                k.trace_over(&q.fundamental_domain)
            }
            Instance::Periodic { .. } => k.trace_cell(),
        }
    }

    /// Tr over an explicitly chosen fundamental domain; used to confirm
    /// domain independence.
    pub fn tr_gamma_over<T: RingScalar>(
        &self,
        k: &PeriodicKernel<T>,
        domain: &[usize],
    ) -> Result<T> {
        k.trace_over(domain)
    }

    /// A finite window suitable for exhaustive path enumeration up to
    /// length `max_len`, with basepoints and the symmetry data used to
    /// classify cycles up to Γ.
    pub fn oracle_window(&self, max_len: usize) -> Result<OracleWindow> {
        match self {
            Instance::Finite { graph, action } => {
                let elements = match action {
                    GroupAction::Trivial => vec![(0..graph.vertex_count()).collect()],
                    GroupAction::FinitePermutation(g) => g.elements().to_vec(),
                    GroupAction::Translation { .. } => return Err(Error::ActionMismatch),
                };
                let basepoints = self.quotient()?.fundamental_domain;
                Ok(OracleWindow {
                    graph: graph.clone(),
                    basepoints,
                    symmetry: WindowSymmetry::FiniteGroup { elements },
                    certified_len: usize::MAX,
                })
            }
            Instance::Periodic { graph } => {
                let Window { graph, labels, central, certified_len } = graph.unroll(max_len)?;
                Ok(OracleWindow {
                    graph,
                    basepoints: central,
                    symmetry: WindowSymmetry::Translations { labels },
                    certified_len,
                })
            }
        }
    }
}

/// Finite arena for the cycle oracle: a graph, the basepoints forming a
/// fundamental domain, and how Γ acts on enumerated paths.
#[derive(Clone, Debug)]
pub struct OracleWindow {
    pub graph: SimpleGraph,
    pub basepoints: Vec<usize>,
    pub symmetry: WindowSymmetry,
    /// Counts of paths up to this length rooted at the basepoints are
    /// exact; longer requests must re-window.
    pub certified_len: usize,
}

#[derive(Clone, Debug)]
pub enum WindowSymmetry {
    /// All group elements as vertex permutations (identity included).
    FiniteGroup { elements: Vec<Vec<usize>> },
    /// Translation action, acting on the window coordinates.
    Translations { labels: Vec<(usize, Vec<i64>)> },
}

/// C6 with the free ℤ3 rotation v ↦ v + 2 (mod 6); the standard
/// finite-quotient example with nontrivial stabilizers.
pub fn c6_mod_z3() -> Instance {
    let g = SimpleGraph::cycle(6);
    let rot: Vec<usize> = (0..6).map(|v| (v + 2) % 6).collect();
    let group = PermutationGroup::from_generators(6, vec![rot]).expect("Z3 closes");
    Instance::with_action(g, group).expect("rotation acts freely")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    #[test]
    fn k4_trivial_quotient() {
        let inst = Instance::finite(SimpleGraph::complete(4));
        let q = inst.quotient().unwrap();
        assert_eq!(q.vb, 4);
        assert_eq!(q.eb, 6);
        assert_eq!(q.chi_b, -2);
        assert_eq!(q.chi_l2, BigRational::from_i64(-2).unwrap());
    }

    #[test]
    fn square_lattice_quotient() {
        let inst = Instance::periodic(PeriodicGraph::hypercubic(2));
        let q = inst.quotient().unwrap();
        assert_eq!(q.vb, 1);
        assert_eq!(q.eb, 2);
        assert_eq!(q.chi_b, -1);
        assert_eq!(q.chi_l2, BigRational::from_i64(-1).unwrap());
    }

    #[test]
    fn c6_mod_z3_quotient() {
        let inst = c6_mod_z3();
        let q = inst.quotient().unwrap();
        assert_eq!(q.fundamental_domain, vec![0, 1]);
        assert_eq!(q.vb, 2);
        assert_eq!(q.eb, 2);
        assert_eq!(q.chi_b, 0);
        assert_eq!(q.chi_l2, BigRational::from_i64(0).unwrap());
    }

    #[test]
    fn chi_l2_equals_chi_b_on_samples() {
        let honeycomb = Instance::periodic(PeriodicGraph::honeycomb());
        for inst in [
            Instance::finite(SimpleGraph::petersen()),
            Instance::finite(SimpleGraph::cycle(5)),
            c6_mod_z3(),
            honeycomb,
        ] {
            let q = inst.quotient().unwrap();
            assert_eq!(q.chi_l2, BigRational::from_i64(q.chi_b).unwrap());
        }
    }

    #[test]
    fn reflection_is_not_free() {
        // reflection of C6 through vertices 0 and 3 fixes both
        let g = SimpleGraph::cycle(6);
        let refl: Vec<usize> = (0..6).map(|v| (6 - v) % 6).collect();
        let group = PermutationGroup::from_generators(6, vec![refl]).unwrap();
        let err = Instance::with_action(g, group).unwrap_err();
        assert!(matches!(err, Error::NotFree { .. }));
    }

    #[test]
    fn non_automorphism_rejected() {
        let g = SimpleGraph::path(4);
        let swap: Vec<usize> = vec![1, 0, 3, 2];
        let group = PermutationGroup::from_generators(4, vec![swap]).unwrap();
        assert!(matches!(
            Instance::with_action(g, group),
            Err(Error::NotAutomorphism(..))
        ));
    }

    #[test]
    fn closure_of_rotation_has_order_three() {
        let rot: Vec<usize> = (0..6).map(|v| (v + 2) % 6).collect();
        let g = PermutationGroup::from_generators(6, vec![rot]).unwrap();
        assert_eq!(g.order(), 3);
        assert_eq!(g.vertex_orbits(), vec![vec![0, 2, 4], vec![1, 3, 5]]);
    }

    #[test]
    fn bad_permutation_rejected() {
        assert!(matches!(
            PermutationGroup::from_generators(3, vec![vec![0, 0, 1]]),
            Err(Error::BadPermutation)
        ));
    }

    #[test]
    fn alpha_values() {
        let k4 = Instance::finite(SimpleGraph::complete(4));
        assert!((k4.alpha() - (3.0 + 21f64.sqrt()) / 2.0).abs() < 1e-15);
        let z1 = Instance::periodic(PeriodicGraph::hypercubic(1));
        assert!((z1.alpha() - (1.0 + 3f64.sqrt())).abs() < 1e-15);
    }
}
