//! Billiard books: elliptic disks and annuli glued along shared confocal
//! ellipses by per-ellipse permutations of the leaves.

mod json;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConfocalFamily, Point};

pub use json::{book_from_json, book_to_json, SchemaError};

/// Ellipse parameters closer than this are the same ellipse.
pub const PARAM_TOL: f64 = 1e-12;

pub fn same_param(x: f64, y: f64) -> bool {
    (x - y).abs() <= PARAM_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LeafId(pub u32);

impl fmt::Display for LeafId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeafKind {
    /// Elliptic disk bounded by `C_λ`.
    Disk(f64),
    /// Annulus between `C_outer` and `C_inner`, `outer < inner`.
    Annulus { outer: f64, inner: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leaf {
    pub id: LeafId,
    pub kind: LeafKind,
}

/// On which side of a boundary ellipse the leaf lies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundarySide {
    Within,
    Outside,
}

impl Leaf {
    pub fn disk(id: u32, lambda: f64) -> Self {
        Self {
            id: LeafId(id),
            kind: LeafKind::Disk(lambda),
        }
    }

    pub fn annulus(id: u32, outer: f64, inner: f64) -> Self {
        Self {
            id: LeafId(id),
            kind: LeafKind::Annulus { outer, inner },
        }
    }

    /// Boundary parameters, outermost first.
    pub fn boundaries(&self) -> Vec<f64> {
        match self.kind {
            LeafKind::Disk(l) => vec![l],
            LeafKind::Annulus { outer, inner } => vec![outer, inner],
        }
    }

    pub fn outer(&self) -> f64 {
        match self.kind {
            LeafKind::Disk(l) => l,
            LeafKind::Annulus { outer, .. } => outer,
        }
    }

    pub fn inner(&self) -> Option<f64> {
        match self.kind {
            LeafKind::Disk(_) => None,
            LeafKind::Annulus { inner, .. } => Some(inner),
        }
    }

    pub fn has_boundary(&self, lambda: f64) -> bool {
        self.boundaries().into_iter().any(|l| same_param(l, lambda))
    }

    /// Closed-region membership with slack `tol` on the conic residuals.
    pub fn contains(&self, family: &ConfocalFamily, p: Point, tol: f64) -> bool {
        if family.residual(self.outer(), p) > tol {
            return false;
        }
        match self.inner() {
            Some(inner) => family.residual(inner, p) >= -tol,
            None => true,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BookError {
    #[error("λ = {lambda} is not a boundary of leaf {leaf}")]
    NotABoundary { leaf: LeafId, lambda: f64 },
    #[error("unknown leaf {0}")]
    UnknownLeaf(LeafId),
    #[error("invalid book: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub fn boundary_side(leaf: &Leaf, ellipse_param: f64) -> Result<BoundarySide, BookError> {
    match leaf.kind {
        LeafKind::Disk(l) if same_param(l, ellipse_param) => Ok(BoundarySide::Within),
        LeafKind::Annulus { outer, .. } if same_param(outer, ellipse_param) => {
            Ok(BoundarySide::Within)
        }
        LeafKind::Annulus { inner, .. } if same_param(inner, ellipse_param) => {
            Ok(BoundarySide::Outside)
        }
        _ => Err(BookError::NotABoundary {
            leaf: leaf.id,
            lambda: ellipse_param,
        }),
    }
}

/// A permutation of the leaves glued along one ellipse, kept in cycle form.
///
/// Cycles are stored canonically: each rotated to start at its smallest id,
/// sorted by that id. Fixed points are 1-cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct GluingPermutation {
    pub ellipse: f64,
    cycles: Vec<Vec<LeafId>>,
}

impl GluingPermutation {
    pub fn from_cycles(ellipse: f64, cycles: Vec<Vec<LeafId>>) -> Self {
        let mut cycles: Vec<Vec<LeafId>> = cycles
            .into_iter()
            .filter(|c| !c.is_empty())
            .map(|mut c| {
                let pos = (0..c.len()).min_by_key(|&i| c[i]).unwrap_or(0);
                c.rotate_left(pos);
                c
            })
            .collect();
        cycles.sort();
        Self { ellipse, cycles }
    }

    /// Convenience constructor from plain integer cycles.
    pub fn new(ellipse: f64, cycles: &[&[u32]]) -> Self {
        Self::from_cycles(
            ellipse,
            cycles
                .iter()
                .map(|c| c.iter().map(|&i| LeafId(i)).collect())
                .collect(),
        )
    }

    pub fn cycles(&self) -> &[Vec<LeafId>] {
        &self.cycles
    }

    pub fn domain(&self) -> Vec<LeafId> {
        self.cycles.iter().flatten().copied().collect()
    }

    pub fn image(&self, leaf: LeafId) -> Option<LeafId> {
        self.cycles.iter().find_map(|c| {
            c.iter()
                .position(|&x| x == leaf)
                .map(|i| c[(i + 1) % c.len()])
        })
    }

    pub fn inverse(&self) -> Self {
        Self::from_cycles(
            self.ellipse,
            self.cycles
                .iter()
                .map(|c| c.iter().rev().copied().collect())
                .collect(),
        )
    }

    /// Adds 1-cycles for the given leaves not yet in the domain.
    pub(crate) fn with_fixed_points(mut self, leaves: impl IntoIterator<Item = LeafId>) -> Self {
        let present: BTreeSet<LeafId> = self.domain().into_iter().collect();
        for id in leaves {
            if !present.contains(&id) {
                self.cycles.push(vec![id]);
            }
        }
        Self::from_cycles(self.ellipse, self.cycles)
    }

    pub fn is_involution(&self) -> bool {
        self.cycles.iter().all(|c| c.len() <= 2)
    }
}

impl fmt::Display for GluingPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "σ[{}] = ", self.ellipse)?;
        let nontrivial: Vec<_> = self.cycles.iter().filter(|c| c.len() > 1).collect();
        if nontrivial.is_empty() {
            return write!(f, "id");
        }
        for c in nontrivial {
            let ids: Vec<String> = c.iter().map(|l| l.0.to_string()).collect();
            write!(f, "({})", ids.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    BadDomain,
    NotBijective,
    BadLeafOrder,
    DuplicateId,
    DuplicateGluing,
    OutOfFamily,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.code, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BilliardBook {
    pub family: ConfocalFamily,
    pub leaves: Vec<Leaf>,
    pub gluings: Vec<GluingPermutation>,
}

impl BilliardBook {
    pub fn new(family: ConfocalFamily, leaves: Vec<Leaf>, gluings: Vec<GluingPermutation>) -> Self {
        Self {
            family,
            leaves,
            gluings,
        }
    }

    /// Builds the book and rejects it unless `validate_book` is clean.
    pub fn validated(
        family: ConfocalFamily,
        leaves: Vec<Leaf>,
        gluings: Vec<GluingPermutation>,
    ) -> Result<Self, BookError> {
        let book = Self::new(family, leaves, gluings);
        let v = validate_book(&book);
        if v.is_empty() {
            Ok(book)
        } else {
            Err(BookError::Invalid(v))
        }
    }

    pub fn leaf(&self, id: LeafId) -> Result<&Leaf, BookError> {
        self.leaves
            .iter()
            .find(|l| l.id == id)
            .ok_or(BookError::UnknownLeaf(id))
    }

    pub fn gluing(&self, ellipse: f64) -> Option<&GluingPermutation> {
        self.gluings.iter().find(|g| same_param(g.ellipse, ellipse))
    }

    /// Distinct boundary parameters of all leaves, ascending (outermost first).
    pub fn boundary_params(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.leaves.iter().flat_map(|l| l.boundaries()).collect();
        all.sort_by(f64::total_cmp);
        all.dedup_by(|x, y| same_param(*x, *y));
        all
    }

    /// 1-based position of `ellipse` among `boundary_params`.
    pub fn ellipse_index(&self, ellipse: f64) -> Option<usize> {
        self.boundary_params()
            .iter()
            .position(|&l| same_param(l, ellipse))
            .map(|i| i + 1)
    }

    pub fn leaves_with_boundary(&self, ellipse: f64) -> impl Iterator<Item = &Leaf> {
        self.leaves.iter().filter(move |l| l.has_boundary(ellipse))
    }

    /// The same leaves with every gluing permutation inverted.
    pub fn inverted(&self) -> Self {
        Self {
            family: self.family,
            leaves: self.leaves.clone(),
            gluings: self.gluings.iter().map(GluingPermutation::inverse).collect(),
        }
    }
}

pub fn validate_book(book: &BilliardBook) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, message: String| out.push(Violation { code, message });
    let b = book.family.b();

    let mut ids = BTreeSet::new();
    for leaf in &book.leaves {
        if !ids.insert(leaf.id) {
            push(ViolationCode::DuplicateId, format!("leaf id {} repeated", leaf.id));
        }
        for l in leaf.boundaries() {
            if !(l.is_finite() && l < b) {
                push(
                    ViolationCode::OutOfFamily,
                    format!("leaf {}: λ = {l} is not an ellipse (need λ < b = {b})", leaf.id),
                );
            }
        }
        if let LeafKind::Annulus { outer, inner } = leaf.kind {
            if outer >= inner - PARAM_TOL {
                push(
                    ViolationCode::BadLeafOrder,
                    format!("leaf {}: annulus needs outer λ < inner λ, got ({outer}, {inner})", leaf.id),
                );
            }
        }
    }

    for (i, g) in book.gluings.iter().enumerate() {
        if book.gluings[..i].iter().any(|h| same_param(h.ellipse, g.ellipse)) {
            push(
                ViolationCode::DuplicateGluing,
                format!("two gluings along λ = {}", g.ellipse),
            );
        }
        let domain = g.domain();
        let unique: BTreeSet<LeafId> = domain.iter().copied().collect();
        if unique.len() != domain.len() {
            push(
                ViolationCode::NotBijective,
                format!("gluing along λ = {}: a leaf occurs twice in the cycles", g.ellipse),
            );
        }
        let expected: BTreeSet<LeafId> = book.leaves_with_boundary(g.ellipse).map(|l| l.id).collect();
        if unique != expected {
            let missing: Vec<String> = expected.difference(&unique).map(|l| l.to_string()).collect();
            let extra: Vec<String> = unique.difference(&expected).map(|l| l.to_string()).collect();
            push(
                ViolationCode::BadDomain,
                format!(
                    "gluing along λ = {}: missing [{}], not bounded by it [{}]",
                    g.ellipse,
                    missing.join(", "),
                    extra.join(", ")
                ),
            );
        }
    }
    out
}
