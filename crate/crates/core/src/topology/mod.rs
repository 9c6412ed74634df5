//! Liouville foliation of the billiard flow on a book.
//!
//! For a fixed caustic `λ` the phase space splits into finitely many
//! segment classes `(leaf, target ellipse, marker)`. The flow permutes the
//! classes; every cycle is one Liouville torus (a regime). Tori are joined
//! across the critical caustic values by Fomenko atoms.

mod graph;
mod levels;
mod regimes;

use std::f64::consts::PI;

use thiserror::Error;

use crate::book::{boundary_side, same_param, BilliardBook, BookError, BoundarySide, LeafId};
use crate::dynamics::{step, PhaseState};
use crate::geometry::{Point, UnitVector};

pub use graph::{build_fomenko_graph, graphs_isomorphic, FomenkoEdge, FomenkoGraph};
pub use levels::{classify_singular_level, AtomType, FomenkoAtom};
pub use regimes::{enumerate_regimes, regime_witnesses, Orientation, RegimeDescriptor, RegimeState, SegmentClass};

/// Caustic values closer than `CRITICAL_TOL * a` to a critical level are
/// treated as critical.
pub const CRITICAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("nothing is glued inside C_{ellipse} along leaf {leaf}")]
    NoInnerLeaf { ellipse: f64, leaf: LeafId },
    #[error("leaf {leaf} does not lie outside C_{ellipse}")]
    NotOutside { ellipse: f64, leaf: LeafId },
    #[error("λ = {lambda} is within tolerance of the critical level {level}")]
    CriticalLambda { lambda: f64, level: f64 },
    #[error("λ = {0} is not a critical level")]
    NotCritical(f64),
    #[error("λ = {0} lies outside the range of caustics")]
    OutOfRange(f64),
    #[error("regime enumeration failed: {0}")]
    Dynamics(String),
    #[error(transparent)]
    Book(#[from] BookError),
}

/// Leaf boundary parameters together with `b` and `a`, ascending.
pub fn critical_levels(book: &BilliardBook) -> Vec<f64> {
    let mut levels = book.boundary_params();
    levels.push(book.family.b());
    levels.push(book.family.a());
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|x, y| same_param(*x, *y));
    levels
}

pub(crate) fn nearest_critical(book: &BilliardBook, lambda: f64) -> Option<f64> {
    let tol = CRITICAL_TOL * book.family.a();
    critical_levels(book)
        .into_iter()
        .find(|c| (c - lambda).abs() <= tol)
}

/// Where a particle grazing `C_β` from `outer_leaf` comes back out.
///
/// A trajectory whose caustic sits just inside `C_β` dips across the
/// ellipse for a short chord: it enters the inner leaf `σ(L)`, keeps being
/// sent along `σ` while on leaves within `C_β`, and re-emerges on the first
/// leaf outside. The grazing limit is continuous iff that leaf is
/// `outer_leaf` again.
pub fn pass_through_return(
    book: &BilliardBook,
    ellipse: f64,
    outer_leaf: LeafId,
) -> Result<(LeafId, bool), TopologyError> {
    let leaf = book.leaf(outer_leaf)?;
    if boundary_side(leaf, ellipse)? != BoundarySide::Outside {
        return Err(TopologyError::NotOutside {
            ellipse,
            leaf: outer_leaf,
        });
    }
    let no_inner = TopologyError::NoInnerLeaf {
        ellipse,
        leaf: outer_leaf,
    };
    let Some(sigma) = book.gluing(ellipse) else {
        return Err(no_inner);
    };
    let image = |id: LeafId| sigma.image(id).unwrap_or(id);
    let mut current = image(outer_leaf);
    if current == outer_leaf {
        return Err(no_inner);
    }
    // the orbit of outer_leaf under σ is finite and contains outer_leaf
    while boundary_side(book.leaf(current)?, ellipse)? == BoundarySide::Within {
        current = image(current);
    }
    Ok((current, current == outer_leaf))
}

/// Inward offset of the probe lines from the tangent line.
const PROBE_OFFSET: f64 = 1e-4;

/// Numerical cross-check of [`pass_through_return`]: launches lines tangent
/// to `C_β` at `samples` points, shifted slightly inwards, from
/// `outer_leaf` and reports the leaf on which each one re-emerges outside
/// `C_β` (`None` when a probe does not behave like a short chord).
pub fn grazing_probe(
    book: &BilliardBook,
    ellipse: f64,
    outer_leaf: LeafId,
    samples: usize,
) -> Result<Vec<Option<LeafId>>, TopologyError> {
    let leaf = book.leaf(outer_leaf)?;
    if boundary_side(leaf, ellipse)? != BoundarySide::Outside {
        return Err(TopologyError::NotOutside {
            ellipse,
            leaf: outer_leaf,
        });
    }
    let family = &book.family;
    let (sa, sb) = family.semi_axes(ellipse);
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let theta = 2.0 * PI * (k as f64 + 0.5) / samples as f64;
        let touch = Point::new(sa * theta.cos(), sb * theta.sin());
        let v = UnitVector::new(-sa * theta.sin(), sb * theta.cos()).expect("tangent of an ellipse");
        let (gx, gy) = family.gradient(ellipse, touch);
        let g = gx.hypot(gy);
        let shifted = touch - Point::new(gx / g, gy / g) * PROBE_OFFSET;
        out.push(probe_line(book, ellipse, outer_leaf, shifted, v));
    }
    Ok(out)
}

fn probe_line(book: &BilliardBook, ellipse: f64, outer_leaf: LeafId, through: Point, v: UnitVector) -> Option<LeafId> {
    let family = &book.family;
    let leaf = book.leaf(outer_leaf).ok()?;
    // back off along the line until the start is inside the outer leaf
    let mut back = 0.5;
    let start = loop {
        let p = through.advance(v, -back);
        if leaf.contains(family, p, 0.0) && family.residual(ellipse, p) > 0.0 {
            break p;
        }
        back *= 0.5;
        if back < 1e-3 {
            return None;
        }
    };
    let mut state = PhaseState::new(start, v, outer_leaf);
    for _ in 0..64 {
        let (next, event) = step(book, &state).ok()?;
        if !same_param(event.ellipse, ellipse) {
            return None;
        }
        state = next;
        if boundary_side(book.leaf(state.leaf).ok()?, ellipse).ok()? == BoundarySide::Outside {
            return Some(state.leaf);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::{GluingPermutation, Leaf};
    use crate::fixtures;

    #[test]
    fn critical_level_lists() {
        assert_eq!(critical_levels(&fixtures::annulus_two_disks()), vec![0.0, 2.0, 4.0, 9.0]);
        assert_eq!(
            critical_levels(&fixtures::nested_with_outer_annulus()),
            vec![0.0, 2.0, 3.5, 4.0, 9.0]
        );
        assert_eq!(critical_levels(&fixtures::single_disk()), vec![2.0, 4.0, 9.0]);
    }

    #[test]
    fn return_leaf_examples() {
        assert_eq!(
            pass_through_return(&fixtures::annulus_two_disks(), 2.0, LeafId(1)),
            Ok((LeafId(1), true))
        );
        assert_eq!(
            pass_through_return(&fixtures::two_annuli_two_disks(), 2.0, LeafId(1)),
            Ok((LeafId(4), false))
        );
        let book = BilliardBook::validated(
            fixtures::family(),
            vec![Leaf::annulus(1, 0.0, 2.0), Leaf::disk(2, 2.0), Leaf::disk(3, 2.0)],
            vec![GluingPermutation::new(2.0, &[&[1], &[2, 3]])],
        )
        .unwrap();
        assert!(matches!(
            pass_through_return(&book, 2.0, LeafId(1)),
            Err(TopologyError::NoInnerLeaf { .. })
        ));
        assert!(matches!(
            pass_through_return(&fixtures::annulus_two_disks(), 2.0, LeafId(2)),
            Err(TopologyError::NotOutside { .. })
        ));
    }

    #[test]
    fn probe_agrees_with_combinatorics() {
        for (book, expect) in [
            (fixtures::annulus_two_disks(), LeafId(1)),
            (fixtures::two_annuli_two_disks(), LeafId(4)),
        ] {
            let probes = grazing_probe(&book, 2.0, LeafId(1), 16).unwrap();
            assert!(probes.iter().all(|p| *p == Some(expect)), "{probes:?}");
        }
    }
}
