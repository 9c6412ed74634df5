use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{critical_levels, nearest_critical, TopologyError};
use crate::book::{BilliardBook, LeafId};
use crate::dynamics::{step, PhaseState, Side, TrajectoryEvent};
use crate::geometry::{ConfocalFamily, Point, RayQuadratic, UnitVector};

/// Tangent lines sampled per ellipse, or per hyperbola branch.
const LINE_SAMPLES: usize = 64;
/// Extent of the hyperbola parametrisation `(±A cosh u, B sinh u)`.
const BRANCH_EXTENT: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    fn of(sign: f64) -> Self {
        if sign >= 0.0 {
            Orientation::Positive
        } else {
            Orientation::Negative
        }
    }
}

/// A family of segments of one leaf heading to the same boundary ellipse.
///
/// The marker is the sign of `p × v` for an elliptic caustic (conserved
/// turning direction) and the sign of `v_y` for a hyperbolic one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentClass {
    pub leaf: LeafId,
    pub target: f64,
    pub marker: i8,
}

impl Eq for SegmentClass {}

impl Ord for SegmentClass {
    fn cmp(&self, other: &Self) -> Ordering {
        self.leaf
            .cmp(&other.leaf)
            .then(self.target.total_cmp(&other.target))
            .then(self.marker.cmp(&other.marker))
    }
}

impl PartialOrd for SegmentClass {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One event of a regime cycle: the leaf it happens on, the ellipse, and
/// how the ellipse is met.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeState {
    pub leaf: LeafId,
    pub ellipse: f64,
    pub side: Side,
}

impl Eq for RegimeState {}

impl Ord for RegimeState {
    fn cmp(&self, other: &Self) -> Ordering {
        self.leaf
            .cmp(&other.leaf)
            .then(self.ellipse.total_cmp(&other.ellipse))
            .then(self.side.cmp(&other.side))
    }
}

impl PartialOrd for RegimeState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<&TrajectoryEvent> for RegimeState {
    fn from(e: &TrajectoryEvent) -> Self {
        Self {
            leaf: e.leaf_before,
            ellipse: e.ellipse,
            side: e.side,
        }
    }
}

/// A Liouville torus: the event cycle of a cycle of segment classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeDescriptor {
    pub caustic_interval: (f64, f64),
    /// Rotated to start at the lexicographically smallest state.
    pub states: Vec<RegimeState>,
    pub orientation: Orientation,
    /// Segment classes in cycle order; `segments[i]` ends with `states[i]`.
    pub segments: Vec<SegmentClass>,
}

impl RegimeDescriptor {
    pub fn contains(&self, class: &SegmentClass) -> bool {
        self.segments.contains(class)
    }
}

struct ClassInfo {
    rep: PhaseState,
    event: TrajectoryEvent,
    next: PhaseState,
}

fn marker(family: &ConfocalFamily, lambda: f64, s: &PhaseState) -> i8 {
    let value = if lambda < family.b() {
        s.position.x * s.velocity.y() - s.position.y * s.velocity.x()
    } else {
        s.velocity.y()
    };
    if value >= 0.0 {
        1
    } else {
        -1
    }
}

fn classify(
    book: &BilliardBook,
    lambda: f64,
    s: PhaseState,
) -> Result<(SegmentClass, ClassInfo), TopologyError> {
    let (next, event) = step(book, &s).map_err(|e| TopologyError::Dynamics(e.to_string()))?;
    let class = SegmentClass {
        leaf: s.leaf,
        target: event.ellipse,
        marker: marker(&book.family, lambda, &s),
    };
    Ok((class, ClassInfo { rep: s, event, next }))
}

/// Oriented lines tangent to `C_λ`, as (tangency point, direction).
fn tangent_lines(family: &ConfocalFamily, lambda: f64) -> Vec<(Point, UnitVector)> {
    let mut lines = Vec::new();
    let big_a = (family.a() - lambda).sqrt();
    let big_b = (family.b() - lambda).abs().sqrt();
    if lambda < family.b() {
        for k in 0..LINE_SAMPLES {
            let th = 2.0 * PI * (k as f64 + 0.37) / LINE_SAMPLES as f64;
            let p = Point::new(big_a * th.cos(), big_b * th.sin());
            let v = UnitVector::new(-big_a * th.sin(), big_b * th.cos()).expect("ellipse tangent");
            lines.push((p, v));
            lines.push((p, -v));
        }
    } else {
        for branch in [1.0, -1.0] {
            for k in 0..LINE_SAMPLES {
                let u = BRANCH_EXTENT * (2.0 * (k as f64 + 0.37) / LINE_SAMPLES as f64 - 1.0);
                let p = Point::new(branch * big_a * u.cosh(), big_b * u.sinh());
                let v = UnitVector::new(branch * big_a * u.sinh(), big_b * u.cosh()).expect("hyperbola tangent");
                lines.push((p, v));
                lines.push((p, -v));
            }
        }
    }
    lines
}

/// Midpoints of the pieces of the line `q + t v` lying in each leaf.
fn line_pieces(book: &BilliardBook, q: Point, v: UnitVector) -> Vec<PhaseState> {
    let family = &book.family;
    let mut out = Vec::new();
    for leaf in &book.leaves {
        let Some((t1, t2)) = RayQuadratic::new(family, leaf.outer(), q, v).roots() else {
            continue;
        };
        let mut pieces = vec![(t1, t2)];
        if let Some(inner) = leaf.inner() {
            if let Some((s1, s2)) = RayQuadratic::new(family, inner, q, v).roots() {
                pieces = vec![(t1, s1), (s2, t2)];
            }
        }
        for (lo, hi) in pieces {
            if hi - lo > 1e-9 {
                out.push(PhaseState::new(q.advance(v, 0.5 * (lo + hi)), v, leaf.id));
            }
        }
    }
    out
}

fn regular_interval(book: &BilliardBook, lambda: f64) -> Result<Option<(f64, f64)>, TopologyError> {
    if !lambda.is_finite() || lambda > book.family.a() {
        return Err(TopologyError::OutOfRange(lambda));
    }
    if let Some(level) = nearest_critical(book, lambda) {
        return Err(TopologyError::CriticalLambda { lambda, level });
    }
    let levels = critical_levels(book);
    let lo = levels.iter().copied().rfind(|&c| c < lambda);
    let hi = levels.iter().copied().find(|&c| c > lambda);
    Ok(lo.zip(hi))
}

/// Regimes at the regular caustic value `λ`, each with a phase state that
/// starts its cycle.
pub fn regime_witnesses(
    book: &BilliardBook,
    lambda: f64,
) -> Result<Vec<(RegimeDescriptor, PhaseState)>, TopologyError> {
    let Some(interval) = regular_interval(book, lambda)? else {
        return Ok(Vec::new());
    };
    let mut classes: BTreeMap<SegmentClass, ClassInfo> = BTreeMap::new();
    for (q, v) in tangent_lines(&book.family, lambda) {
        for s in line_pieces(book, q, v) {
            let (class, info) = classify(book, lambda, s)?;
            classes.entry(class).or_insert(info);
        }
    }
    // close under the transfer map
    let mut succ: BTreeMap<SegmentClass, SegmentClass> = BTreeMap::new();
    loop {
        let pending: Vec<SegmentClass> = classes.keys().filter(|c| !succ.contains_key(c)).copied().collect();
        if pending.is_empty() {
            break;
        }
        for c in pending {
            let (next, info) = classify(book, lambda, classes[&c].next)?;
            classes.entry(next).or_insert(info);
            succ.insert(c, next);
        }
    }

    let mut regimes = Vec::new();
    let mut seen: BTreeMap<SegmentClass, bool> = BTreeMap::new();
    for &start in classes.keys() {
        if seen.contains_key(&start) {
            continue;
        }
        let mut path = vec![start];
        seen.insert(start, true);
        let mut c = succ[&start];
        while !seen.contains_key(&c) {
            seen.insert(c, true);
            path.push(c);
            c = succ[&c];
        }
        // only a class closing the walk onto itself starts a new cycle
        let Some(pos) = path.iter().position(|x| *x == c) else {
            continue;
        };
        let cycle = &path[pos..];
        regimes.push(describe(&book.family, lambda, interval, cycle, &classes));
    }
    regimes.sort_by(|a, b| (a.0.orientation, &a.0.states).cmp(&(b.0.orientation, &b.0.states)));
    Ok(regimes)
}

fn describe(
    family: &ConfocalFamily,
    lambda: f64,
    interval: (f64, f64),
    cycle: &[SegmentClass],
    classes: &BTreeMap<SegmentClass, ClassInfo>,
) -> (RegimeDescriptor, PhaseState) {
    let states: Vec<RegimeState> = cycle.iter().map(|c| RegimeState::from(&classes[c].event)).collect();
    let n = states.len();
    let shift = (0..n)
        .min_by(|&i, &j| {
            let a = states[i..].iter().chain(&states[..i]);
            let b = states[j..].iter().chain(&states[..j]);
            a.cmp(b)
        })
        .unwrap_or(0);
    let mut segments = cycle.to_vec();
    segments.rotate_left(shift);
    let mut states = states;
    states.rotate_left(shift);
    let orientation = if lambda < family.b() {
        Orientation::of(segments[0].marker as f64)
    } else {
        let outermost = states
            .iter()
            .filter(|s| s.side != Side::PassThrough)
            .map(|s| s.ellipse)
            .fold(f64::INFINITY, f64::min);
        let y = segments
            .iter()
            .map(|c| &classes[c].event)
            .find(|e| e.side != Side::PassThrough && e.ellipse == outermost)
            .map_or(0.0, |e| e.hit_point.y);
        Orientation::of(y)
    };
    let witness = classes[&segments[0]].rep;
    (
        RegimeDescriptor {
            caustic_interval: interval,
            states,
            orientation,
            segments,
        },
        witness,
    )
}

/// Liouville tori at the regular caustic value `λ`.
pub fn enumerate_regimes(book: &BilliardBook, lambda: f64) -> Result<Vec<RegimeDescriptor>, TopologyError> {
    Ok(regime_witnesses(book, lambda)?.into_iter().map(|(r, _)| r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn count(book: &BilliardBook, lambda: f64) -> usize {
        enumerate_regimes(book, lambda).unwrap().len()
    }

    #[test]
    fn torus_counts() {
        let b = fixtures::annulus_two_disks();
        assert_eq!([count(&b, 1.0), count(&b, 3.0), count(&b, 6.0)], [2, 2, 2]);
        let b = fixtures::two_annuli_two_disks();
        assert_eq!([count(&b, 1.0), count(&b, 3.0), count(&b, 6.0)], [2, 4, 4]);
        assert_eq!(count(&b, -1.0), 0);
    }

    #[test]
    fn critical_values_are_rejected() {
        let b = fixtures::annulus_two_disks();
        assert!(matches!(
            enumerate_regimes(&b, 2.0),
            Err(TopologyError::CriticalLambda { level, .. }) if level == 2.0
        ));
        assert!(matches!(enumerate_regimes(&b, 10.0), Err(TopologyError::OutOfRange(_))));
    }

    #[test]
    fn plain_ellipse_regimes() {
        let b = fixtures::single_disk();
        let inner = enumerate_regimes(&b, 3.0).unwrap();
        assert_eq!(inner.len(), 2);
        assert_ne!(inner[0].orientation, inner[1].orientation);
        let hyper = enumerate_regimes(&b, 6.0).unwrap();
        assert_eq!(hyper.len(), 1);
        assert_eq!(hyper[0].states.len(), 2);
    }
}
