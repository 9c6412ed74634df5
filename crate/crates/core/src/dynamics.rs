//! Event-driven billiard flow on a book.
//!
//! The particle moves on straight segments inside its current leaf. At a
//! boundary ellipse `E` of leaf `L`:
//!
//! * `E` not glued: ordinary reflection, stay on `L` (R1);
//! * `L' = σ_E(L)` on the same side of `E` as `L`: reflect, move to `L'` (R2);
//! * `L'` on the other side: keep going straight, now on `L'` (R3).

use std::io::{self, Write};

use log::warn;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::book::{boundary_side, BilliardBook, BookError, BoundarySide, Leaf, LeafId};
use crate::geometry::{
    caustic_parameter, reflect, ConfocalFamily, GeometryError, Point, RayQuadratic, UnitVector,
    ON_CONIC_TOL, TANGENCY_TOL, T_MIN,
};
use crate::topology::{pass_through_return, TopologyError};

pub const DEFAULT_MAX_EVENTS: usize = 10_000;

/// Two candidate hits closer than this (in ray parameter) are a tie.
const TIE_TOL: f64 = 1e-12;

/// Below this `|n̂·v|` a velocity counts as tangent to the ellipse it sits on.
const TANGENT_DIR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub position: Point,
    pub velocity: UnitVector,
    pub leaf: LeafId,
}

impl PhaseState {
    pub fn new(position: Point, velocity: UnitVector, leaf: LeafId) -> Self {
        Self {
            position,
            velocity,
            leaf,
        }
    }

    pub fn caustic(&self, family: &ConfocalFamily) -> f64 {
        caustic_parameter(family, self.position, self.velocity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    R1,
    R2,
    R3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    FromInside,
    FromOutside,
    PassThrough,
}

impl Side {
    fn reflection(leaf_side: BoundarySide) -> Self {
        match leaf_side {
            BoundarySide::Within => Side::FromInside,
            BoundarySide::Outside => Side::FromOutside,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEvent {
    pub hit_point: Point,
    pub ellipse: f64,
    pub side: Side,
    pub rule: Rule,
    pub leaf_before: LeafId,
    pub leaf_after: LeafId,
    /// Velocity on the segment that starts at this event.
    pub velocity_after: UnitVector,
    /// Straight continuation through a tangency with a glued inner ellipse.
    #[serde(default)]
    pub grazing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrajectoryStatus {
    Completed,
    /// Tangent to a glued ellipse whose grazing limit is discontinuous.
    SingularLevelHit { ellipse: f64 },
    Escaped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: PhaseState,
    pub events: Vec<TrajectoryEvent>,
    #[serde(rename = "final")]
    pub final_state: PhaseState,
    pub caustic: f64,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    /// Largest deviation of the segment caustics from the initial one.
    pub fn caustic_drift(&self, family: &ConfocalFamily) -> f64 {
        self.events
            .iter()
            .map(|e| (caustic_parameter(family, e.hit_point, e.velocity_after) - self.caustic).abs())
            .fold(0.0, f64::max)
    }

    pub fn hit_points(&self) -> Vec<Point> {
        self.events.iter().map(|e| e.hit_point).collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("ray from leaf {leaf} is tangent to C_{ellipse} at {point}")]
    TangentialHit {
        leaf: LeafId,
        ellipse: f64,
        point: Point,
    },
    #[error("particle left leaf {leaf} at {position}")]
    EscapedLeaf { leaf: LeafId, position: Point },
    #[error("no admissible start found in leaf {leaf} for caustic {caustic}")]
    NoStart { leaf: LeafId, caustic: f64 },
    #[error(transparent)]
    Book(#[from] BookError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

enum Candidate {
    Transversal,
    Tangential,
}

/// Does `v`, based on the ellipse `C_β` at `p`, point out of `leaf`?
fn leaves_across(family: &ConfocalFamily, beta: f64, p: Point, v: UnitVector, side: BoundarySide) -> Option<bool> {
    let (gx, gy) = family.gradient(beta, p);
    let gv = v.dot(gx, gy) / gx.hypot(gy);
    if gv.abs() < TANGENT_DIR_TOL {
        return None;
    }
    Some(match side {
        BoundarySide::Within => gv > 0.0,
        BoundarySide::Outside => gv < 0.0,
    })
}

/// Earliest boundary event of the ray from `state` inside `leaf`.
fn next_hit(
    family: &ConfocalFamily,
    leaf: &Leaf,
    state: &PhaseState,
) -> Result<Option<(f64, f64, Candidate)>, DynamicsError> {
    let (p, v) = (state.position, state.velocity);
    let mut best: Option<(f64, f64, Candidate)> = None;
    for beta in leaf.boundaries() {
        let side = boundary_side(leaf, beta)?;
        let q = RayQuadratic::new(family, beta, p, v);
        let candidate = if family.residual(beta, p).abs() <= ON_CONIC_TOL {
            match leaves_across(family, beta, p, v, side) {
                // tangent at p: the line meets C_β nowhere else
                None => None,
                Some(true) => Some((0.0, Candidate::Transversal)),
                Some(false) => {
                    let t = q.far_root();
                    (t > T_MIN).then_some((t, Candidate::Transversal))
                }
            }
        } else if side == BoundarySide::Outside
            && q.discriminant().abs() < TANGENCY_TOL * family.a()
            && q.vertex() > T_MIN
        {
            Some((q.vertex(), Candidate::Tangential))
        } else {
            q.roots().and_then(|(t1, t2)| {
                [t1, t2]
                    .into_iter()
                    .find(|&t| t > T_MIN)
                    .map(|t| (t, Candidate::Transversal))
            })
        };
        let Some((t, kind)) = candidate else { continue };
        best = match best {
            None => Some((t, beta, kind)),
            Some((bt, bb, bk)) => {
                if (t - bt).abs() <= TIE_TOL {
                    warn!("simultaneous hits on C_{bb} and C_{beta} at t = {t}");
                    if beta < bb {
                        Some((t, beta, kind))
                    } else {
                        Some((bt, bb, bk))
                    }
                } else if t < bt {
                    Some((t, beta, kind))
                } else {
                    Some((bt, bb, bk))
                }
            }
        };
    }
    Ok(best)
}

/// Moves the particle to the next boundary event and applies R1, R2 or R3.
pub fn step(book: &BilliardBook, state: &PhaseState) -> Result<(PhaseState, TrajectoryEvent), DynamicsError> {
    let family = &book.family;
    let leaf = book.leaf(state.leaf)?;
    let Some((t, beta, kind)) = next_hit(family, leaf, state)? else {
        return Err(DynamicsError::EscapedLeaf {
            leaf: state.leaf,
            position: state.position,
        });
    };
    let raw = state.position.advance(state.velocity, t);
    if let Candidate::Tangential = kind {
        return Err(DynamicsError::TangentialHit {
            leaf: state.leaf,
            ellipse: beta,
            point: raw,
        });
    }
    let hit = family.project(beta, raw);
    let side_before = boundary_side(leaf, beta)?;
    let target = book
        .gluing(beta)
        .map(|g| g.image(leaf.id).unwrap_or(leaf.id));
    let (rule, leaf_after, side, velocity) = match target {
        None => (
            Rule::R1,
            leaf.id,
            Side::reflection(side_before),
            reflect(family, beta, hit, state.velocity)?,
        ),
        Some(next) => {
            let side_after = boundary_side(book.leaf(next)?, beta)?;
            if side_after == side_before {
                (
                    Rule::R2,
                    next,
                    Side::reflection(side_before),
                    reflect(family, beta, hit, state.velocity)?,
                )
            } else {
                (Rule::R3, next, Side::PassThrough, state.velocity)
            }
        }
    };
    let after = PhaseState::new(hit, velocity, leaf_after);
    if !book.leaf(leaf_after)?.contains(family, hit, ON_CONIC_TOL) {
        return Err(DynamicsError::EscapedLeaf {
            leaf: leaf_after,
            position: hit,
        });
    }
    let event = TrajectoryEvent {
        hit_point: hit,
        ellipse: beta,
        side,
        rule,
        leaf_before: leaf.id,
        leaf_after,
        velocity_after: velocity,
        grazing: false,
    };
    Ok((after, event))
}

/// Runs up to `max_events` events. Tangencies with glued inner ellipses are
/// continued straight when the grazing limit is consistent and end the run
/// with `SingularLevelHit` otherwise.
pub fn simulate(book: &BilliardBook, initial: PhaseState, max_events: usize) -> Trajectory {
    let caustic = initial.caustic(&book.family);
    let mut state = initial;
    let mut events = Vec::new();
    let mut status = TrajectoryStatus::Completed;
    while events.len() < max_events {
        match step(book, &state) {
            Ok((next, event)) => {
                state = next;
                events.push(event);
            }
            Err(DynamicsError::TangentialHit { leaf, ellipse, point }) => {
                let continues = match pass_through_return(book, ellipse, leaf) {
                    Ok((_, consistent)) => consistent,
                    Err(TopologyError::NoInnerLeaf { .. }) => true,
                    Err(_) => false,
                };
                if !continues {
                    status = TrajectoryStatus::SingularLevelHit { ellipse };
                    break;
                }
                let point = book.family.project(ellipse, point);
                state = PhaseState::new(point, state.velocity, leaf);
                events.push(TrajectoryEvent {
                    hit_point: point,
                    ellipse,
                    side: Side::PassThrough,
                    rule: Rule::R3,
                    leaf_before: leaf,
                    leaf_after: leaf,
                    velocity_after: state.velocity,
                    grazing: true,
                });
            }
            Err(_) => {
                status = TrajectoryStatus::Escaped;
                break;
            }
        }
    }
    Trajectory {
        initial,
        events,
        final_state: state,
        caustic,
        status,
    }
}

/// Runs the time reversal of `trajectory` on `book` as given: from the last
/// hit point with negated velocity, for as many events as the original.
pub fn reverse_on(book: &BilliardBook, trajectory: &Trajectory) -> Trajectory {
    let f = trajectory.final_state;
    let start = PhaseState::new(f.position, -f.velocity, f.leaf);
    simulate(book, start, trajectory.events.len())
}

/// Time reversal on the book with inverted gluings, which retraces the
/// original hit points backwards.
pub fn reverse(book: &BilliardBook, trajectory: &Trajectory) -> Trajectory {
    reverse_on(&book.inverted(), trajectory)
}

/// True when `reversed` visits the hit points of `forward` backwards, each
/// within `tol`.
pub fn retraces(forward: &Trajectory, reversed: &Trajectory, tol: f64) -> bool {
    forward.events.len() == reversed.events.len()
        && forward
            .events
            .iter()
            .rev()
            .zip(&reversed.events)
            .all(|(a, b)| a.hit_point.dist(b.hit_point) <= tol)
}

/// Reflections of the trajectory with their side; crossings are dropped.
pub fn trace_to_game(trajectory: &Trajectory) -> Vec<(f64, Side)> {
    trajectory
        .events
        .iter()
        .filter(|e| e.side != Side::PassThrough)
        .map(|e| (e.ellipse, e.side))
        .collect()
}

pub const CSV_HEADER: &str = "event_index,leaf_before,leaf_after,ellipse,rule,side,x,y,vx,vy";

pub fn write_csv<W: Write>(trajectory: &Trajectory, mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for (i, e) in trajectory.events.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{:?},{:?},{},{},{},{}",
            i,
            e.leaf_before.0,
            e.leaf_after.0,
            e.ellipse,
            e.rule,
            e.side,
            e.hit_point.x,
            e.hit_point.y,
            e.velocity_after.x(),
            e.velocity_after.y()
        )?;
    }
    Ok(())
}

/// Unit directions at `p` whose line is tangent to `C_λ`.
///
/// With `v = (cos φ, sin φ)` the condition is a quadratic form in `v`,
/// which reduces to `R cos(2φ − δ) = −(α + β)/2`.
pub fn tangent_directions(family: &ConfocalFamily, p: Point, lambda: f64) -> Vec<UnitVector> {
    let alpha = family.a() - lambda - p.x * p.x;
    let beta = family.b() - lambda - p.y * p.y;
    let gamma = p.x * p.y;
    let (u, w) = (0.5 * (beta - alpha), gamma);
    let r = u.hypot(w);
    let rhs = -0.5 * (alpha + beta);
    if r == 0.0 || rhs.abs() > r {
        return Vec::new();
    }
    let delta = w.atan2(u);
    let spread = (rhs / r).clamp(-1.0, 1.0).acos();
    let mut dirs = Vec::with_capacity(4);
    for two_phi in [delta + spread, delta - spread] {
        let v = UnitVector::from_angle(0.5 * two_phi);
        dirs.push(v);
        dirs.push(-v);
    }
    if spread == 0.0 {
        dirs.truncate(2);
    }
    dirs
}

/// Margin keeping sampled starts away from the leaf boundary.
const START_MARGIN: f64 = 1e-6;
const START_ATTEMPTS: usize = 100_000;

/// Random point of `leaf` (uniform by rejection on its bounding box) with a
/// random direction tangent to `C_caustic` that satisfies `accept`.
pub fn sample_start_with<R: Rng>(
    book: &BilliardBook,
    leaf: LeafId,
    caustic: f64,
    rng: &mut R,
    mut accept: impl FnMut(&PhaseState) -> bool,
) -> Result<PhaseState, DynamicsError> {
    let family = &book.family;
    let l = book.leaf(leaf)?;
    let (sx, sy) = family.semi_axes(l.outer());
    for _ in 0..START_ATTEMPTS {
        let p = Point::new(rng.gen_range(-sx..=sx), rng.gen_range(-sy..=sy));
        if family.residual(l.outer(), p) > -START_MARGIN {
            continue;
        }
        if l.inner().is_some_and(|i| family.residual(i, p) < START_MARGIN) {
            continue;
        }
        let states: Vec<PhaseState> = tangent_directions(family, p, caustic)
            .into_iter()
            .map(|v| PhaseState::new(p, v, leaf))
            .filter(|s| accept(s))
            .collect();
        if !states.is_empty() {
            return Ok(states[rng.gen_range(0..states.len())]);
        }
    }
    Err(DynamicsError::NoStart { leaf, caustic })
}

pub fn sample_start<R: Rng>(
    book: &BilliardBook,
    leaf: LeafId,
    caustic: f64,
    rng: &mut R,
) -> Result<PhaseState, DynamicsError> {
    sample_start_with(book, leaf, caustic, rng, |_| true)
}

/// [`sample_start`] driven by a ChaCha8 stream seeded from `seed`.
pub fn sample_start_seeded(book: &BilliardBook, leaf: LeafId, caustic: f64, seed: u64) -> Result<PhaseState, DynamicsError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    sample_start(book, leaf, caustic, &mut rng)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::fixtures;

    fn uv(x: f64, y: f64) -> UnitVector {
        UnitVector::new(x, y).unwrap()
    }

    #[test]
    fn rules_on_the_three_leaf_book() {
        let book = fixtures::annulus_two_disks();
        let (_, e) = step(&book, &PhaseState::new(Point::new(0.0, 0.0), uv(1.0, 0.0), LeafId(2))).unwrap();
        assert_eq!((e.rule, e.side, e.leaf_after), (Rule::R2, Side::FromInside, LeafId(3)));
        let (_, e) = step(&book, &PhaseState::new(Point::new(0.0, 0.0), uv(1.0, 0.0), LeafId(3))).unwrap();
        assert_eq!((e.rule, e.side, e.leaf_after), (Rule::R3, Side::PassThrough, LeafId(1)));
        let (s, e) = step(&book, &PhaseState::new(Point::new(0.0, 1.8), uv(0.0, 1.0), LeafId(1))).unwrap();
        assert_eq!((e.rule, e.side, e.leaf_after), (Rule::R1, Side::FromInside, LeafId(1)));
        assert!((e.hit_point.y - 2.0).abs() < 1e-12);
        assert!((s.velocity.y() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_keeps_velocity_and_reaches_far_side() {
        let book = fixtures::annulus_two_disks();
        let start = PhaseState::new(Point::new(-2.9, 0.0), uv(1.0, 0.0), LeafId(1));
        let tr = simulate(&book, start, 2);
        let e = tr.events[0];
        assert_eq!((e.rule, e.leaf_after), (Rule::R3, LeafId(2)));
        assert!((e.hit_point.x + 7f64.sqrt()).abs() < 1e-12);
        assert_eq!(e.velocity_after, start.velocity);
        let e = tr.events[1];
        assert_eq!((e.rule, e.leaf_after), (Rule::R2, LeafId(3)));
        assert!((e.hit_point.x - 7f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn tangent_directions_have_requested_caustic() {
        let f = fixtures::family();
        for (p, lambda) in [
            (Point::new(2.5, -1.3), 1.0),
            (Point::new(2.5, -1.3), 3.0),
            (Point::new(0.7, -1.1), 6.0),
        ] {
            let dirs = tangent_directions(&f, p, lambda);
            assert_eq!(dirs.len(), 4, "λ = {lambda}");
            for v in dirs {
                assert!((caustic_parameter(&f, p, v) - lambda).abs() < 1e-12);
            }
        }
        // inside the caustic ellipse no tangent line exists
        assert!(tangent_directions(&f, Point::new(0.0, 0.0), 1.0).is_empty());
    }

    #[test]
    fn inner_caustic_stays_on_outer_ellipse() {
        let book = fixtures::annulus_two_disks();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let start = sample_start(&book, LeafId(1), 1.0, &mut rng).unwrap();
        let tr = simulate(&book, start, 200);
        assert_eq!(tr.status, TrajectoryStatus::Completed);
        assert!(tr.events.iter().all(|e| e.rule == Rule::R1 && e.ellipse == 0.0));
        assert!(tr.caustic_drift(&book.family) < 1e-9);
    }

    #[test]
    fn grazing_a_consistent_ellipse_continues() {
        let book = fixtures::annulus_two_disks();
        let start = PhaseState::new(Point::new(-2.0, 2f64.sqrt()), uv(1.0, 0.0), LeafId(1));
        let tr = simulate(&book, start, 3);
        assert_eq!(tr.status, TrajectoryStatus::Completed);
        let g = tr.events[0];
        assert!(g.grazing && g.leaf_after == LeafId(1) && g.rule == Rule::R3);
        assert!(g.hit_point.dist(Point::new(0.0, 2f64.sqrt())) < 1e-9);
        assert_eq!(tr.events[1].ellipse, 0.0);
    }

    #[test]
    fn grazing_an_inconsistent_ellipse_is_singular() {
        let book = fixtures::two_annuli_two_disks();
        let start = PhaseState::new(Point::new(-2.0, 2f64.sqrt()), uv(1.0, 0.0), LeafId(1));
        let tr = simulate(&book, start, 3);
        assert_eq!(tr.status, TrajectoryStatus::SingularLevelHit { ellipse: 2.0 });
        assert!(tr.events.is_empty());
    }

    #[test]
    fn csv_layout() {
        let book = fixtures::annulus_two_disks();
        let start = PhaseState::new(Point::new(0.0, 0.0), uv(1.0, 0.0), LeafId(2));
        let mut buf = Vec::new();
        write_csv(&simulate(&book, start, 0), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
        let mut buf = Vec::new();
        write_csv(&simulate(&book, start, 1), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "0,2,3,2,R2,FromInside,2.6457513110645907,0,-1,0");
    }
}
