use std::fmt;

use serde::{Deserialize, Serialize};

use super::regimes::{RegimeDescriptor, SegmentClass};
use super::{critical_levels, enumerate_regimes, nearest_critical, TopologyError};
use crate::book::{boundary_side, same_param, BilliardBook, LeafId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AtomType {
    A,
    B,
    C2,
    Unknown,
}

impl AtomType {
    /// Number of edges an atom of this type carries.
    pub fn capacity(self) -> Option<usize> {
        match self {
            AtomType::A => Some(1),
            AtomType::B => Some(3),
            AtomType::C2 => Some(4),
            AtomType::Unknown => None,
        }
    }
}

impl fmt::Display for AtomType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AtomType::A => "A",
            AtomType::B => "B",
            AtomType::C2 => "C2",
            AtomType::Unknown => "Unknown",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FomenkoAtom {
    pub lambda: f64,
    pub atom_type: AtomType,
    pub critical_circles: usize,
    pub separatrix_count: usize,
    /// Reflection points of each critical periodic orbit along an axis, in
    /// orbit order (`A_j`/`A_j'` on the x-axis, `B_j`/`B_j'` on the y-axis).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orbits: Vec<Vec<String>>,
    pub description: String,
}

/// How a regime adjacent to a critical level continues through it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Link {
    Atom(usize),
    /// Regular passage to the regime with this index on the other side.
    Passage(usize),
}

pub(crate) struct LevelAnalysis {
    pub atoms: Vec<FomenkoAtom>,
    /// For each regime below the level.
    pub left: Vec<Link>,
    /// For each regime above the level.
    pub right: Vec<Link>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx != ry {
            self.0[rx.max(ry)] = rx.min(ry);
        }
    }
}

fn containing(regimes: &[RegimeDescriptor], class: &SegmentClass) -> Option<usize> {
    regimes.iter().position(|r| r.contains(class))
}

/// A critical circle along a symmetry axis.
struct AxisOrbit {
    classes: Vec<SegmentClass>,
    reflections: Vec<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Axis {
    Major,
    Minor,
}

/// Periodic orbits of the billiard restricted to a symmetry axis, found
/// combinatorially from the leaf segments on that axis.
fn axis_orbits(book: &BilliardBook, axis: Axis) -> Vec<AxisOrbit> {
    let family = &book.family;
    let radius = |beta: f64| match axis {
        Axis::Major => (family.a() - beta).sqrt(),
        Axis::Minor => (family.b() - beta).sqrt(),
    };
    // (leaf, lo, hi) for every piece of the axis inside a leaf
    let mut segs: Vec<(LeafId, f64, f64)> = Vec::new();
    for leaf in &book.leaves {
        let ro = radius(leaf.outer());
        match leaf.inner() {
            None => segs.push((leaf.id, -ro, ro)),
            Some(inner) => {
                let ri = radius(inner);
                segs.push((leaf.id, -ro, -ri));
                segs.push((leaf.id, ri, ro));
            }
        }
    }
    let tol = 1e-9 * family.a().sqrt();
    let seg_at = |leaf: LeafId, x: f64| {
        segs.iter()
            .position(|&(l, lo, hi)| l == leaf && ((lo - x).abs() < tol || (hi - x).abs() < tol))
    };
    let ellipse_at = |leaf: LeafId, x: f64| {
        let l = book.leaf(leaf).expect("leaf of a segment");
        l.boundaries()
            .into_iter()
            .find(|&beta| (radius(beta) - x.abs()).abs() < tol)
            .expect("segment ends on a boundary")
    };
    let states: Vec<(usize, i8)> = (0..segs.len()).flat_map(|s| [(s, 1), (s, -1)]).collect();
    // transition of (segment, direction); also the class it belongs to and
    // the reflection label if the end of the segment is a reflection
    let transition = |(s, dir): (usize, i8)| {
        let (leaf, lo, hi) = segs[s];
        let x = if dir > 0 { hi } else { lo };
        let beta = ellipse_at(leaf, x);
        let next_leaf = book
            .gluing(beta)
            .map_or(leaf, |g| g.image(leaf).unwrap_or(leaf));
        let l = book.leaf(leaf).expect("leaf");
        let l2 = book.leaf(next_leaf).expect("leaf");
        let crosses = boundary_side(l, beta).ok() != boundary_side(l2, beta).ok();
        let next = (
            seg_at(next_leaf, x).expect("adjacent segment"),
            if crosses { dir } else { -dir },
        );
        let class = SegmentClass {
            leaf,
            target: beta,
            marker: dir,
        };
        let label = (!crosses).then(|| {
            let letter = if axis == Axis::Major { 'A' } else { 'B' };
            let j = book.ellipse_index(beta).unwrap_or(0);
            let prime = if x > 0.0 { "" } else { "'" };
            format!("{letter}{j}{prime}")
        });
        (next, class, label)
    };
    let mut seen = vec![false; states.len()];
    let index = |st: (usize, i8)| 2 * st.0 + usize::from(st.1 < 0);
    let mut orbits = Vec::new();
    for &start in &states {
        if seen[index(start)] {
            continue;
        }
        let mut classes = Vec::new();
        let mut reflections = Vec::new();
        let mut st = start;
        while !seen[index(st)] {
            seen[index(st)] = true;
            let (next, class, label) = transition(st);
            classes.push(class);
            reflections.extend(label);
            st = next;
        }
        orbits.push(AxisOrbit {
            classes,
            reflections: canonical_rotation(reflections),
        });
    }
    orbits
}

fn canonical_rotation(v: Vec<String>) -> Vec<String> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut r = v.clone();
            r.rotate_left(i);
            r
        })
        .min()
        .unwrap_or(v)
}

fn atom_for(circles: usize, degree: usize) -> (AtomType, usize) {
    match (circles, degree) {
        (1, 1) => (AtomType::A, 0),
        (1, 3) => (AtomType::B, 2),
        (2, 4) => (AtomType::C2, 4),
        (k, _) => (AtomType::Unknown, 2 * k),
    }
}

fn sign_label(m: i8) -> &'static str {
    if m > 0 {
        "+"
    } else {
        "-"
    }
}

/// Joins the regimes on both sides of the critical level `level`.
pub(crate) fn analyze_level(
    book: &BilliardBook,
    level: f64,
    left: &[RegimeDescriptor],
    right: &[RegimeDescriptor],
) -> LevelAnalysis {
    let family = &book.family;
    let (nl, nr) = (left.len(), right.len());
    let axis = if same_param(level, family.b()) {
        Some(Axis::Major)
    } else if same_param(level, family.a()) {
        Some(Axis::Minor)
    } else {
        None
    };
    let orbits = axis.map(|a| axis_orbits(book, a)).unwrap_or_default();
    let mut uf = UnionFind::new(nl + nr + orbits.len());

    match axis {
        None => {
            // an annulus around C_β splits its segments heading to the outer
            // boundary into those still heading out and those now hitting C_β
            for (i, r) in left.iter().enumerate() {
                for c in &r.segments {
                    let leaf = book.leaf(c.leaf).expect("regime leaf");
                    let mut images = vec![*c];
                    if leaf.inner().is_some_and(|x| same_param(x, level)) && same_param(c.target, leaf.outer()) {
                        images.push(SegmentClass {
                            target: level,
                            ..*c
                        });
                    }
                    for img in images {
                        if let Some(j) = containing(right, &img) {
                            uf.union(i, nl + j);
                        }
                    }
                }
            }
        }
        Some(_) => {
            for (k, orbit) in orbits.iter().enumerate() {
                for c in &orbit.classes {
                    let markers: &[i8] = if axis == Some(Axis::Major) {
                        &[1, -1]
                    } else {
                        &[c.marker]
                    };
                    for &m in markers {
                        let key = SegmentClass { marker: m, ..*c };
                        if let Some(i) = containing(left, &key) {
                            uf.union(nl + nr + k, i);
                        }
                        if let Some(j) = containing(right, &key) {
                            uf.union(nl + nr + k, nl + j);
                        }
                    }
                }
            }
        }
    }

    let mut roots: Vec<usize> = (0..nl + nr + orbits.len()).map(|x| uf.find(x)).collect();
    roots.sort_unstable();
    roots.dedup();
    let mut atoms = Vec::new();
    let mut left_links = vec![Link::Atom(usize::MAX); nl];
    let mut right_links = vec![Link::Atom(usize::MAX); nr];
    for root in roots {
        let ls: Vec<usize> = (0..nl).filter(|&i| uf.find(i) == root).collect();
        let rs: Vec<usize> = (0..nr).filter(|&j| uf.find(nl + j) == root).collect();
        let cs: Vec<usize> = (0..orbits.len()).filter(|&k| uf.find(nl + nr + k) == root).collect();
        let degree = ls.len() + rs.len();
        if axis.is_none() && ls.len() == 1 && rs.len() == 1 {
            left_links[ls[0]] = Link::Passage(rs[0]);
            right_links[rs[0]] = Link::Passage(ls[0]);
            continue;
        }
        let (atom_type, circles, separatrices, orbit_labels, description) = match axis {
            None => {
                let (t, seps) = match degree {
                    1 => (AtomType::A, 0),
                    3 => (AtomType::B, 2),
                    _ => (AtomType::Unknown, 0),
                };
                let circles = usize::from(t != AtomType::Unknown);
                let marker = ls
                    .iter()
                    .map(|&i| &left[i])
                    .chain(rs.iter().map(|&j| &right[j]))
                    .find_map(|r| r.segments.first().map(|c| c.marker))
                    .unwrap_or(1);
                let j = book.ellipse_index(level).unwrap_or(0);
                (t, circles, seps, Vec::new(), format!("grazing E{j} ({})", sign_label(marker)))
            }
            Some(_) => {
                let (t, seps) = atom_for(cs.len(), degree);
                let labels: Vec<Vec<String>> = cs.iter().map(|&k| orbits[k].reflections.clone()).collect();
                let text = labels
                    .iter()
                    .map(|o| format!("({})", o.join(" ")))
                    .collect::<Vec<_>>()
                    .join(" ");
                (t, cs.len(), seps, labels, text)
            }
        };
        let id = atoms.len();
        atoms.push(FomenkoAtom {
            lambda: level,
            atom_type,
            critical_circles: circles,
            separatrix_count: separatrices,
            orbits: orbit_labels,
            description,
        });
        for &i in &ls {
            left_links[i] = Link::Atom(id);
        }
        for &j in &rs {
            right_links[j] = Link::Atom(id);
        }
    }
    LevelAnalysis {
        atoms,
        left: left_links,
        right: right_links,
    }
}

/// Midpoint regimes of the regular intervals around each critical level.
pub(crate) fn interval_regimes(book: &BilliardBook) -> Result<(Vec<f64>, Vec<Vec<RegimeDescriptor>>), TopologyError> {
    let levels = critical_levels(book);
    let regimes = levels
        .windows(2)
        .map(|w| enumerate_regimes(book, 0.5 * (w[0] + w[1])))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((levels, regimes))
}

/// Fomenko atoms on the singular level set `λ`.
pub fn classify_singular_level(book: &BilliardBook, lambda: f64) -> Result<Vec<FomenkoAtom>, TopologyError> {
    let Some(level) = nearest_critical(book, lambda) else {
        return Err(TopologyError::NotCritical(lambda));
    };
    let levels = critical_levels(book);
    let k = levels
        .iter()
        .position(|&c| c == level)
        .expect("level is critical");
    let left = if k > 0 {
        enumerate_regimes(book, 0.5 * (levels[k - 1] + level))?
    } else {
        Vec::new()
    };
    let right = if k + 1 < levels.len() {
        enumerate_regimes(book, 0.5 * (level + levels[k + 1]))?
    } else {
        Vec::new()
    };
    Ok(analyze_level(book, level, &left, &right).atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn types(atoms: &[FomenkoAtom]) -> Vec<AtomType> {
        atoms.iter().map(|a| a.atom_type).collect()
    }

    #[test]
    fn focal_level_of_three_leaf_book_is_c2() {
        let atoms = classify_singular_level(&fixtures::annulus_two_disks(), 4.0).unwrap();
        assert_eq!(types(&atoms), vec![AtomType::C2]);
        let a = &atoms[0];
        assert_eq!((a.critical_circles, a.separatrix_count), (2, 4));
        let mut orbits = a.orbits.clone();
        orbits.sort();
        assert_eq!(orbits, vec![vec!["A1", "A2'"], vec!["A1'", "A2"]]);
    }

    #[test]
    fn consistent_boundary_level_is_regular() {
        let atoms = classify_singular_level(&fixtures::annulus_two_disks(), 2.0).unwrap();
        assert!(atoms.is_empty());
        let atoms = classify_singular_level(&fixtures::two_annuli_two_disks(), 2.0).unwrap();
        assert_eq!(types(&atoms), vec![AtomType::B, AtomType::B]);
    }

    #[test]
    fn minor_axis_orbits_of_four_leaf_book() {
        let atoms = classify_singular_level(&fixtures::two_annuli_two_disks(), 9.0).unwrap();
        assert_eq!(types(&atoms), vec![AtomType::A; 4]);
        let mut orbits: Vec<Vec<String>> = atoms.iter().flat_map(|a| a.orbits.clone()).collect();
        orbits.sort();
        assert_eq!(
            orbits,
            vec![
                vec!["B1", "B2"],
                vec!["B1", "B2'"],
                vec!["B1'", "B2"],
                vec!["B1'", "B2'"],
            ]
        );
    }

    #[test]
    fn nested_book_focal_orbit_has_six_reflections() {
        let atoms = classify_singular_level(&fixtures::nested_three_cycles(), 4.0).unwrap();
        assert_eq!(types(&atoms), vec![AtomType::B]);
        assert_eq!(atoms[0].orbits.len(), 1);
        assert_eq!(atoms[0].orbits[0].len(), 6);
    }

    #[test]
    fn non_critical_value_is_rejected() {
        assert_eq!(
            classify_singular_level(&fixtures::annulus_two_disks(), 3.0),
            Err(TopologyError::NotCritical(3.0))
        );
    }
}
