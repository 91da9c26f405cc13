//! Exhaustive ground truth: enumeration and classification of proper
//! closed paths, tails, reduced cycles, Γ-classes, stabilizers and ν(C).
//!
//! A closed path (v_0, …, v_m = v_0) is *proper* if it never backtracks
//! (v_{i−1} ≠ v_{i+1} for interior i) and *reduced* if it is proper and
//! has no tail (a tail means v_1 = v_{m−1}, so the path enters and leaves
//! its basepoint along the same edge). Cycles are rotation classes of
//! closed paths — orientation-reversed traversals stay distinct. Two
//! reduced cycles are Γ-equivalent when a group element maps one onto a
//! rotation of the other; the stabilizer Γ_C embeds into ℤ_m, so |Γ_C|
//! divides m, and ν(C) = |C|/|Γ_C| counts the closed paths based in the
//! fundamental domain that represent the class.
//!
//! Everything here is brute force by depth-first search. It is the
//! independent oracle the operator recursions are checked against.

use crate::action::{OracleWindow, WindowSymmetry};
use crate::error::{Error, Result};
use crate::graph::SimpleGraph;
use num_complex::Complex64;
use std::collections::{BTreeMap, HashMap};

/// Closed-path census at one basepoint and one length.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PathCounts {
    pub proper: u64,
    pub tailed: u64,
    pub reduced: u64,
}

/// Depth-first enumeration of proper closed paths at `base`, calling
/// `emit` with (v_0, …, v_m = v_0) for every such path with
/// 1 ≤ m ≤ max_len.
fn visit_proper_closed(
    g: &SimpleGraph,
    base: usize,
    max_len: usize,
    emit: &mut impl FnMut(&[usize]),
) {
    if max_len == 0 {
        return;
    }
    let mut path = Vec::with_capacity(max_len + 1);
    path.push(base);
    dfs(g, base, max_len, &mut path, emit);
}

fn dfs(
    g: &SimpleGraph,
    base: usize,
    max_len: usize,
    path: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    let cur = *path.last().expect("path is nonempty");
    let prev = if path.len() >= 2 { Some(path[path.len() - 2]) } else { None };
    for &w in g.neighbors(cur) {
        if Some(w) == prev {
            continue; // backtracking
        }
        path.push(w);
        if w == base {
            emit(path);
        }
        if path.len() - 1 < max_len {
            dfs(g, base, max_len, path, emit);
        }
        path.pop();
    }
}

fn has_tail(closed: &[usize]) -> bool {
    let m = closed.len() - 1;
    m >= 4 && closed[1] == closed[m - 1]
}

/// Census of proper closed paths at `base` for every length ≤ max_len;
/// entry `[m]` is the count at length exactly m.
pub fn path_counts_up_to(g: &SimpleGraph, base: usize, max_len: usize) -> Vec<PathCounts> {
    let mut table = vec![PathCounts::default(); max_len + 1];
    visit_proper_closed(g, base, max_len, &mut |closed| {
        let m = closed.len() - 1;
        table[m].proper += 1;
        if has_tail(closed) {
            table[m].tailed += 1;
        } else {
            table[m].reduced += 1;
        }
    });
    table
}

/// Proper/tailed/reduced counts at one basepoint and exact length m.
pub fn classify_paths(g: &SimpleGraph, base: usize, m: usize) -> PathCounts {
    path_counts_up_to(g, base, m)[m]
}

/// N_m by brute force: reduced closed paths of length m based in the
/// fundamental domain.
pub fn n_m_oracle(window: &OracleWindow, m: usize) -> Result<u64> {
    if m > window.certified_len {
        return Err(Error::RadiusTooSmall { radius: window.certified_len, needed: m });
    }
    let mut total = 0;
    for &b in &window.basepoints {
        total += classify_paths(&window.graph, b, m).reduced;
    }
    Ok(total)
}

/// Tail counts t_m summed over the fundamental domain, for m ≤ max_len.
pub fn t_m_oracle(window: &OracleWindow, max_len: usize) -> Result<Vec<u64>> {
    if max_len > window.certified_len {
        return Err(Error::RadiusTooSmall { radius: window.certified_len, needed: max_len });
    }
    let mut t = vec![0u64; max_len + 1];
    for &b in &window.basepoints {
        for (m, c) in path_counts_up_to(&window.graph, b, max_len).iter().enumerate() {
            t[m] += c.tailed;
        }
    }
    Ok(t)
}

/// A Γ-equivalence class of reduced cycles.
#[derive(Clone, Debug)]
pub struct CycleClass {
    /// Lexicographically least member path (one full period, no closing
    /// repeat), in graph/window vertex ids.
    pub representative: Vec<usize>,
    pub length: usize,
    pub is_prime: bool,
    pub stabilizer_order: u64,
    /// ν(C) = |D|/|Γ_D| for the primitive root D of C.
    pub nu: u64,
    /// Closed paths based in the fundamental domain representing the
    /// class; equal to ν(C).
    pub paths_from_domain: u64,
}

fn rotate(seq: &[usize], r: usize) -> Vec<usize> {
    let m = seq.len();
    (0..m).map(|i| seq[(i + r) % m]).collect()
}

fn min_rotation(seq: &[usize]) -> Vec<usize> {
    (0..seq.len()).map(|r| rotate(seq, r)).min().expect("nonempty")
}

/// Smallest p dividing m with seq invariant under rotation by p.
fn minimal_period(seq: &[usize]) -> usize {
    let m = seq.len();
    for p in 1..=m {
        if m % p != 0 {
            continue;
        }
        if (0..m).all(|i| seq[i] == seq[(i + p) % m]) {
            return p;
        }
    }
    m
}

/// Canonical key of the Γ-class of the cycle of `seq`.
fn gamma_key(seq: &[usize], symmetry: &WindowSymmetry) -> Vec<i64> {
    match symmetry {
        WindowSymmetry::FiniteGroup { elements } => elements
            .iter()
            .map(|e| {
                let mapped: Vec<usize> = seq.iter().map(|&v| e[v]).collect();
                min_rotation(&mapped)
            })
            .min()
            .expect("group has the identity")
            .into_iter()
            .map(|v| v as i64)
            .collect(),
        WindowSymmetry::Translations { labels } => {
            let m = seq.len();
            let rank = labels[seq[0]].1.len();
            let mut best: Option<Vec<i64>> = None;
            for r in 0..m {
                let origin = &labels[seq[r]].1;
                let mut key = Vec::with_capacity(m * (rank + 1));
                for i in 0..m {
                    let (class, coord) = &labels[seq[(r + i) % m]];
                    key.push(*class as i64);
                    for (c, o) in coord.iter().zip(origin) {
                        key.push(c - o);
                    }
                }
                if best.as_ref().is_none_or(|b| key < *b) {
                    best = Some(key);
                }
            }
            best.expect("cycle is nonempty")
        }
    }
}

fn stabilizer_order(seq: &[usize], symmetry: &WindowSymmetry) -> u64 {
    match symmetry {
        WindowSymmetry::FiniteGroup { elements } => {
            let canon = min_rotation(seq);
            elements
                .iter()
                .filter(|e| {
                    let mapped: Vec<usize> = seq.iter().map(|&v| e[v]).collect();
                    min_rotation(&mapped) == canon
                })
                .count() as u64
        }
        // translations have infinite order, so no nontrivial element
        // stabilizes a finite cycle
        WindowSymmetry::Translations { .. } => 1,
    }
}

/// All Γ-classes of reduced cycles of length ≤ max_len, classified by
/// exhaustive enumeration from the fundamental domain.
pub fn gamma_classes(window: &OracleWindow, max_len: usize) -> Result<Vec<CycleClass>> {
    if max_len > window.certified_len {
        return Err(Error::WindowTooSmall { max: window.certified_len, requested: max_len });
    }
    struct Acc {
        best: Vec<usize>,
        count: u64,
    }
    let mut classes: HashMap<Vec<i64>, Acc> = HashMap::new();
    for &b in &window.basepoints {
        visit_proper_closed(&window.graph, b, max_len, &mut |closed| {
            if has_tail(closed) {
                return;
            }
            let seq = &closed[..closed.len() - 1];
            let key = gamma_key(seq, &window.symmetry);
            let canon = min_rotation(seq);
            classes
                .entry(key)
                .and_modify(|acc| {
                    acc.count += 1;
                    if canon < acc.best {
                        acc.best = canon.clone();
                    }
                })
                .or_insert(Acc { best: canon, count: 1 });
        });
    }
    let mut out: Vec<CycleClass> = classes
        .into_values()
        .map(|acc| {
            let seq = acc.best;
            let length = seq.len();
            let period = minimal_period(&seq);
            let stab = stabilizer_order(&seq, &window.symmetry);
            debug_assert_eq!(period as u64 % stab, 0, "|Γ_C| divides |C|");
            let nu = period as u64 / stab;
            debug_assert_eq!(nu, acc.count, "class multiplicity equals ν(C)");
            CycleClass {
                representative: seq,
                length,
                is_prime: period == length,
                stabilizer_order: stab,
                nu,
                paths_from_domain: acc.count,
            }
        })
        .collect();
    out.sort_by(|a, b| (a.length, &a.representative).cmp(&(b.length, &b.representative)));
    Ok(out)
}

/// π_n: number of prime classes of each length.
pub fn prime_counts(classes: &[CycleClass]) -> BTreeMap<usize, u64> {
    let mut out = BTreeMap::new();
    for c in classes.iter().filter(|c| c.is_prime) {
        *out.entry(c.length).or_insert(0) += 1;
    }
    out
}

/// Truncated Euler product Π (1 − u^{|C|})^{−1/|Γ_C|} over prime classes
/// of length ≤ max_len. Requires |u| < 1/(d − 1); the rational power is
/// the principal branch, safe because |u^{|C|}| < 1 keeps 1 − u^{|C|} in
/// the right half-plane.
pub fn euler_product(
    classes: &[CycleClass],
    u: Complex64,
    max_len: usize,
    max_degree: usize,
) -> Result<Complex64> {
    let bound = if max_degree >= 2 { 1.0 / (max_degree as f64 - 1.0) } else { f64::INFINITY };
    if u.norm() >= bound {
        return Err(Error::DomainError { modulus: u.norm(), bound, bound_name: "1/(d-1)" });
    }
    let mut log_sum = Complex64::new(0.0, 0.0);
    for c in classes.iter().filter(|c| c.is_prime && c.length <= max_len) {
        let factor = Complex64::new(1.0, 0.0) - u.powu(c.length as u32);
        log_sum -= factor.ln() / c.stabilizer_order as f64;
    }
    Ok(log_sum.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{c6_mod_z3, Instance};
    use crate::graph::PeriodicGraph;

    fn window(inst: &Instance, len: usize) -> OracleWindow {
        inst.oracle_window(len).unwrap()
    }

    #[test]
    fn triangle_length_three() {
        let g = SimpleGraph::cycle(3);
        let c = classify_paths(&g, 0, 3);
        assert_eq!(c, PathCounts { proper: 2, tailed: 0, reduced: 2 });
    }

    #[test]
    fn short_paths_have_no_tails() {
        for g in [SimpleGraph::complete(4), SimpleGraph::petersen(), SimpleGraph::cycle(5)] {
            for v in 0..g.vertex_count() {
                for m in 1..=2 {
                    let c = classify_paths(&g, v, m);
                    assert_eq!(c.tailed, 0);
                    assert_eq!(c.proper, 0); // no length-1/2 proper closed paths
                }
                assert_eq!(classify_paths(&g, v, 3).tailed, 0);
            }
        }
    }

    #[test]
    fn k4_length_three_census() {
        let g = SimpleGraph::complete(4);
        let c = classify_paths(&g, 0, 3);
        assert_eq!(c.proper, 6);
        assert_eq!(c.tailed, 0);
        assert_eq!(c.reduced, 6);
    }

    #[test]
    fn partition_proper_equals_tailed_plus_reduced() {
        for g in [SimpleGraph::complete(5), SimpleGraph::petersen()] {
            for v in 0..g.vertex_count() {
                for (m, c) in path_counts_up_to(&g, v, 8).iter().enumerate() {
                    assert_eq!(c.proper, c.tailed + c.reduced, "m={m}");
                }
            }
        }
    }

    #[test]
    fn k4_oracle_n3() {
        let inst = Instance::finite(SimpleGraph::complete(4));
        assert_eq!(n_m_oracle(&window(&inst, 3), 3).unwrap(), 24);
    }

    #[test]
    fn square_lattice_oracle_n4() {
        let inst = Instance::periodic(PeriodicGraph::hypercubic(2));
        let w = window(&inst, 4);
        assert_eq!(n_m_oracle(&w, 4).unwrap(), 8);
        assert!(matches!(
            n_m_oracle(&w, 5),
            Err(Error::RadiusTooSmall { .. })
        ));
    }

    #[test]
    fn line_lattice_has_no_cycles() {
        let inst = Instance::periodic(PeriodicGraph::hypercubic(1));
        let w = window(&inst, 8);
        for m in 1..=8 {
            assert_eq!(n_m_oracle(&w, m).unwrap(), 0);
        }
        assert!(gamma_classes(&w, 8).unwrap().is_empty());
    }

    #[test]
    fn c6_mod_z3_classes() {
        let inst = c6_mod_z3();
        let classes = gamma_classes(&window(&inst, 6), 6).unwrap();
        assert_eq!(classes.len(), 2);
        for c in &classes {
            assert_eq!(c.length, 6);
            assert!(c.is_prime);
            assert_eq!(c.stabilizer_order, 3);
            assert_eq!(c.nu, 2);
            assert_eq!(c.paths_from_domain, 2);
        }
    }

    #[test]
    fn c6_mod_z3_longer_classes_are_powers() {
        let inst = c6_mod_z3();
        let classes = gamma_classes(&window(&inst, 12), 12).unwrap();
        assert_eq!(classes.len(), 4);
        let primes = prime_counts(&classes);
        assert_eq!(primes.get(&6), Some(&2));
        assert_eq!(primes.get(&12), None);
        for c in classes.iter().filter(|c| c.length == 12) {
            assert!(!c.is_prime);
            assert_eq!(c.nu, 2);
            assert_eq!(c.paths_from_domain, 2);
        }
    }

    #[test]
    fn k4_prime_triangles() {
        let inst = Instance::finite(SimpleGraph::complete(4));
        let classes = gamma_classes(&window(&inst, 3), 3).unwrap();
        assert_eq!(classes.len(), 8);
        for c in &classes {
            assert!(c.is_prime);
            assert_eq!(c.stabilizer_order, 1);
            assert_eq!(c.nu, 3);
        }
    }

    #[test]
    fn square_lattice_plaquette_classes() {
        let inst = Instance::periodic(PeriodicGraph::hypercubic(2));
        let classes = gamma_classes(&window(&inst, 4), 4).unwrap();
        assert_eq!(classes.len(), 2);
        let mut total_nu = 0;
        for c in &classes {
            assert_eq!(c.length, 4);
            assert!(c.is_prime);
            assert_eq!(c.stabilizer_order, 1);
            assert_eq!(c.nu, 4);
            total_nu += c.nu;
        }
        assert_eq!(total_nu, 8);
    }

    #[test]
    fn stabilizer_divides_length() {
        let inst = c6_mod_z3();
        for c in gamma_classes(&window(&inst, 12), 12).unwrap() {
            assert_eq!(c.length as u64 % c.stabilizer_order, 0);
        }
    }

    #[test]
    fn empty_product_is_one() {
        let u = Complex64::new(0.4, 0.1);
        let v = euler_product(&[], u, 10, 2).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn euler_domain_checked() {
        let inst = Instance::finite(SimpleGraph::complete(4));
        let classes = gamma_classes(&window(&inst, 3), 3).unwrap();
        let err = euler_product(&classes, Complex64::new(0.6, 0.0), 3, 3).unwrap_err();
        assert!(matches!(err, Error::DomainError { .. }));
    }

    #[test]
    fn c6_mod_z3_euler_is_binomial_power() {
        // two hexagon classes with |Γ_C| = 3: (1 - u^6)^{-2/3}
        let inst = c6_mod_z3();
        let classes = gamma_classes(&window(&inst, 6), 6).unwrap();
        let u = Complex64::new(0.3, 0.0);
        let prod = euler_product(&classes, u, 6, 2).unwrap();
        let expect = (Complex64::new(1.0, 0.0) - u.powu(6)).powf(-2.0 / 3.0);
        assert!((prod - expect).norm() < 1e-12);
    }
}
