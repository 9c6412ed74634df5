use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::levels::{analyze_level, interval_regimes, AtomType, FomenkoAtom, Link};
use super::regimes::RegimeDescriptor;
use super::TopologyError;
use crate::book::{same_param, BilliardBook};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FomenkoEdge {
    pub from: usize,
    pub to: usize,
    /// The regimes the edge runs through, one per regular interval.
    pub regimes: Vec<RegimeDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FomenkoGraph {
    /// Sorted by `(λ, type, description)`.
    pub atoms: Vec<FomenkoAtom>,
    pub edges: Vec<FomenkoEdge>,
}

impl FomenkoGraph {
    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|e| usize::from(e.from == v) + usize::from(e.to == v))
            .sum()
    }

    pub fn census(&self) -> BTreeMap<AtomType, usize> {
        let mut c = BTreeMap::new();
        for a in &self.atoms {
            *c.entry(a.atom_type).or_insert(0) += 1;
        }
        c
    }

    /// E.g. `A:4 C2:1`.
    pub fn census_string(&self) -> String {
        self.census()
            .iter()
            .map(|(t, n)| format!("{t}:{n}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn has_unknown(&self) -> bool {
        self.atoms.iter().any(|a| a.atom_type == AtomType::Unknown)
    }

    /// Vertices whose degree differs from the capacity of their atom type.
    pub fn capacity_violations(&self) -> Vec<usize> {
        (0..self.atoms.len())
            .filter(|&v| {
                self.atoms[v]
                    .atom_type
                    .capacity()
                    .is_some_and(|c| c != self.degree(v))
            })
            .collect()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph fomenko {\n");
        for (i, a) in self.atoms.iter().enumerate() {
            let _ = writeln!(
                out,
                "  v{i} [label=\"{}@{:?}\", tooltip=\"{}\"];",
                a.atom_type,
                a.lambda,
                a.description.replace('"', "'")
            );
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  v{} -- v{} [label=\"({:?}, {:?})\"];",
                e.from, e.to, self.atoms[e.from].lambda, self.atoms[e.to].lambda
            );
        }
        out.push_str("}\n");
        out
    }
}

/// Enumerates the regimes of every regular interval, classifies every
/// critical level and links regimes into edges between atoms.
pub fn build_fomenko_graph(book: &BilliardBook) -> Result<FomenkoGraph, TopologyError> {
    let (levels, regimes) = interval_regimes(book)?;
    let mut atoms: Vec<FomenkoAtom> = Vec::new();
    // lower[i][r] / upper[i][r]: links of regime r of interval i
    let mut lower: Vec<Vec<Link>> = Vec::new();
    let mut upper: Vec<Vec<Link>> = Vec::new();
    let empty = Vec::new();
    for (k, &level) in levels.iter().enumerate() {
        let left = if k > 0 { &regimes[k - 1] } else { &empty };
        let right = regimes.get(k).unwrap_or(&empty);
        let analysis = analyze_level(book, level, left, right);
        let offset = atoms.len();
        let shift = |l: Link| match l {
            Link::Atom(i) => Link::Atom(i + offset),
            p => p,
        };
        atoms.extend(analysis.atoms);
        if k > 0 {
            upper.push(analysis.left.into_iter().map(shift).collect());
        }
        if k < regimes.len() {
            lower.push(analysis.right.into_iter().map(shift).collect());
        }
    }

    let mut edges = Vec::new();
    for (i, links) in lower.iter().enumerate() {
        for (r, link) in links.iter().enumerate() {
            let Link::Atom(from) = *link else { continue };
            let (mut j, mut q) = (i, r);
            let mut chain = vec![regimes[j][q].clone()];
            let to = loop {
                match upper[j][q] {
                    Link::Atom(to) => break to,
                    Link::Passage(next) => {
                        j += 1;
                        q = next;
                        chain.push(regimes[j][q].clone());
                    }
                }
            };
            edges.push(FomenkoEdge {
                from,
                to,
                regimes: chain,
            });
        }
    }

    // deterministic vertex order
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&x, &y| {
        let (a, b) = (&atoms[x], &atoms[y]);
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.atom_type.cmp(&b.atom_type))
            .then(a.description.cmp(&b.description))
    });
    let mut rank = vec![0; atoms.len()];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let atoms: Vec<FomenkoAtom> = order.iter().map(|&i| atoms[i].clone()).collect();
    for e in &mut edges {
        e.from = rank[e.from];
        e.to = rank[e.to];
    }
    edges.sort_by(|a, b| (a.from, a.to).cmp(&(b.from, b.to)).then(a.regimes[0].states.cmp(&b.regimes[0].states)));
    Ok(FomenkoGraph { atoms, edges })
}

fn level_ranks(g: &FomenkoGraph) -> Vec<usize> {
    let mut distinct: Vec<f64> = g.atoms.iter().map(|a| a.lambda).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|x, y| same_param(*x, *y));
    g.atoms
        .iter()
        .map(|a| distinct.iter().position(|&d| same_param(d, a.lambda)).unwrap_or(0))
        .collect()
}

fn edge_multiset(g: &FomenkoGraph, map: &[usize]) -> Vec<(usize, usize)> {
    let mut m: Vec<(usize, usize)> = g
        .edges
        .iter()
        .map(|e| {
            let (u, v) = (map[e.from], map[e.to]);
            (u.min(v), u.max(v))
        })
        .collect();
    m.sort_unstable();
    m
}

/// Exact search for a vertex bijection preserving atom types, the order of
/// the critical levels and edge incidence with multiplicities.
pub fn graphs_isomorphic(g1: &FomenkoGraph, g2: &FomenkoGraph) -> bool {
    let n = g1.atoms.len();
    if n != g2.atoms.len() || g1.edges.len() != g2.edges.len() {
        return false;
    }
    let (r1, r2) = (level_ranks(g1), level_ranks(g2));
    let sig = |g: &FomenkoGraph, r: &[usize], v: usize| (g.atoms[v].atom_type, r[v], g.degree(v));
    let s1: Vec<_> = (0..n).map(|v| sig(g1, &r1, v)).collect();
    let s2: Vec<_> = (0..n).map(|v| sig(g2, &r2, v)).collect();
    let mut a = s1.clone();
    let mut b = s2.clone();
    a.sort();
    b.sort();
    if a != b {
        return false;
    }
    let target = edge_multiset(g2, &(0..n).collect::<Vec<_>>());
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    search(0, g1, &s1, &s2, &target, &mut map, &mut used)
}

fn search(
    v: usize,
    g1: &FomenkoGraph,
    s1: &[(AtomType, usize, usize)],
    s2: &[(AtomType, usize, usize)],
    target: &[(usize, usize)],
    map: &mut Vec<usize>,
    used: &mut Vec<bool>,
) -> bool {
    if v == map.len() {
        return edge_multiset(g1, map) == target;
    }
    for w in 0..map.len() {
        if used[w] || s1[v] != s2[w] {
            continue;
        }
        map[v] = w;
        used[w] = true;
        if search(v + 1, g1, s1, s2, target, map, used) {
            return true;
        }
        used[w] = false;
    }
    map[v] = usize::MAX;
    false
}
