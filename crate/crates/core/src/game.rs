//! Billiard ordered games and the books realising them.
//!
//! A game is a cyclic sequence of confocal ellipses `E_1 … E_n`
//! (parameters `β_k`) with a signature `i_k = ±1`: the k-th reflection is off
//! `E_k`, from inside when `i_k = 1` and from outside when `i_k = −1`.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::book::{boundary_side, same_param, BilliardBook, BoundarySide, GluingPermutation, Leaf, LeafId, SchemaError};
use crate::dynamics::{sample_start_with, step, DynamicsError, PhaseState, Side};
use crate::geometry::ConfocalFamily;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderedGame {
    pub family: ConfocalFamily,
    pub betas: Vec<f64>,
    pub signature: Vec<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameViolationCode {
    Empty,
    LengthMismatch,
    BetaOutOfRange,
    BadSignature,
    ConsecutiveOutside,
    OutsideNotNested,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameViolation {
    pub code: GameViolationCode,
    pub position: Option<usize>,
    pub message: String,
}

impl fmt::Display for GameViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.code, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("consecutive positions {0} and {1} repeat an ellipse; use the general construction")]
    ConsecutiveRepeat(usize, usize),
    #[error("repeated ellipse run at position {0} contains an outside reflection")]
    RepeatWithOutside(usize),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("caustic {caustic} does not realise the game (need ({lo}, b) or (b, a))")]
    InadmissibleCaustic { caustic: f64, lo: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

impl OrderedGame {
    pub fn new(family: ConfocalFamily, betas: Vec<f64>, signature: Vec<i32>) -> Self {
        Self {
            family,
            betas,
            signature,
        }
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// Cyclic shift starting the game at position `k` (0-based).
    pub fn rotated(&self, k: usize) -> Self {
        let mut g = self.clone();
        g.betas.rotate_left(k);
        g.signature.rotate_left(k);
        g
    }

    /// The same ellipses visited backwards, `(E_1, E_n, …, E_2)`.
    pub fn inverse(&self) -> Self {
        let mut g = self.clone();
        g.betas[1..].reverse();
        g.signature[1..].reverse();
        g
    }

    /// The reflection sequence of one period.
    pub fn expected_trace(&self) -> Vec<(f64, Side)> {
        self.betas
            .iter()
            .zip(&self.signature)
            .map(|(&b, &i)| (b, if i > 0 { Side::FromInside } else { Side::FromOutside }))
            .collect()
    }

    fn prev(&self, k: usize) -> usize {
        (k + self.len() - 1) % self.len()
    }

    fn next(&self, k: usize) -> usize {
        (k + 1) % self.len()
    }

    fn has_repeats(&self) -> Option<(usize, usize)> {
        let n = self.len();
        (0..n)
            .find(|&k| n > 1 && same_param(self.betas[k], self.betas[self.next(k)]))
            .map(|k| (k, self.next(k)))
    }
}

/// Outcome of [`validate_game`]: the violations, and the rotation making
/// `E_1` outermost with `β_1 ≠ β_n` when one exists.
#[derive(Debug, Clone, PartialEq)]
pub struct GameCheck {
    pub violations: Vec<GameViolation>,
    pub normalized: Option<OrderedGame>,
    /// Original position (0-based) of the normalised game's first entry.
    pub shift: usize,
}

impl GameCheck {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_game(game: &OrderedGame) -> GameCheck {
    let mut v = Vec::new();
    fn push(v: &mut Vec<GameViolation>, code: GameViolationCode, position: Option<usize>, message: String) {
        v.push(GameViolation {
            code,
            position,
            message,
        })
    }
    let n = game.len();
    if n == 0 {
        push(&mut v, GameViolationCode::Empty, None, "the game has no reflections".into());
    }
    if game.signature.len() != n {
        push(
            &mut v,
            GameViolationCode::LengthMismatch,
            None,
            format!("{} ellipses but {} signs", n, game.signature.len()),
        );
    }
    let b = game.family.b();
    for (k, &beta) in game.betas.iter().enumerate() {
        if !(beta.is_finite() && beta < b) {
            push(
                &mut v,
                GameViolationCode::BetaOutOfRange,
                Some(k + 1),
                format!("β_{} = {beta} is not an ellipse (need β < b = {b})", k + 1),
            );
        }
    }
    for (k, &i) in game.signature.iter().enumerate() {
        if i != 1 && i != -1 {
            push(
                &mut v,
                GameViolationCode::BadSignature,
                Some(k + 1),
                format!("i_{} = {i} is not ±1", k + 1),
            );
        }
    }
    if !v.is_empty() {
        return GameCheck {
            violations: v,
            normalized: None,
            shift: 0,
        };
    }
    for k in 0..n {
        if game.signature[k] != -1 {
            continue;
        }
        let (p, q) = (game.prev(k), game.next(k));
        // with n = 2 the pair (1, 2) is adjacent twice; report it once
        if q != k && game.signature[q] == -1 && (n > 2 || k == 0) {
            push(
                &mut v,
                GameViolationCode::ConsecutiveOutside,
                Some(k + 1),
                format!("reflections {} and {} are both from outside", k + 1, q + 1),
            );
        }
        let beta = game.betas[k];
        if !(beta > game.betas[p] && beta > game.betas[q]) {
            push(
                &mut v,
                GameViolationCode::OutsideNotNested,
                Some(k + 1),
                format!("E_{} is hit from outside but is not within both neighbours", k + 1),
            );
        }
    }
    let min = game.betas.iter().copied().fold(f64::INFINITY, f64::min);
    // smallest rotation among the admissible starts, so that cyclic shifts
    // of one game normalise identically
    let key = |k: usize| {
        let g = game.rotated(k);
        (g.betas, g.signature)
    };
    let shift = (0..n)
        .filter(|&k| same_param(game.betas[k], min) && !same_param(game.betas[game.prev(k)], min))
        .min_by(|&x, &y| {
            let (kx, ky) = (key(x), key(y));
            kx.0.iter()
                .zip(&ky.0)
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(kx.1.cmp(&ky.1))
        });
    GameCheck {
        normalized: if v.is_empty() { shift.map(|k| game.rotated(k)) } else { None },
        violations: v,
        shift: shift.unwrap_or(0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileReport {
    pub book: BilliardBook,
    /// The game as realised: rotated so that `E_1` is outermost.
    pub game: OrderedGame,
    pub shift: usize,
    /// `k → A_k`, the annulus between `E_k` and `E_{k+1}` (`E_0 = E_n`).
    pub annulus_ids: BTreeMap<usize, LeafId>,
    /// `k → [D_k …]` for the run of `E_k` starting at position `k` (1-based).
    pub disk_ids: BTreeMap<usize, Vec<LeafId>>,
    pub leaf_count: usize,
    /// Number of positions whose ellipse lies within both neighbours.
    pub s_count: usize,
}

impl CompileReport {
    /// `A_0`, the leaf admissible trajectories start on.
    pub fn start_leaf(&self) -> LeafId {
        self.annulus_ids[&0]
    }
}

fn s_count(game: &OrderedGame) -> usize {
    (0..game.len())
        .filter(|&k| game.betas[k] > game.betas[game.prev(k)] && game.betas[k] > game.betas[game.next(k)])
        .count()
}

fn checked(game: &OrderedGame) -> Result<(OrderedGame, usize), GameError> {
    let check = validate_game(game);
    if !check.is_valid() {
        let msgs: Vec<String> = check.violations.iter().map(|v| v.to_string()).collect();
        return Err(GameError::InvalidGame(msgs.join("; ")));
    }
    match check.normalized {
        Some(g) => Ok((g, check.shift)),
        None => Err(GameError::InvalidGame(
            "every reflection is off the same ellipse; no annulus to start from".into(),
        )),
    }
}

/// Book realising a game without consecutive repeated ellipses: annuli
/// `A_k` between consecutive game ellipses plus one or two disks at each
/// inside reflection off an ellipse that is not outermost among its
/// neighbours.
pub fn compile_simple(game: &OrderedGame) -> Result<CompileReport, GameError> {
    let (g, _) = checked(game)?;
    if let Some((k, q)) = g.has_repeats() {
        return Err(GameError::ConsecutiveRepeat(k + 1, q + 1));
    }
    compile_general(game)
}

/// Book realising an arbitrary valid game; a run of `s` equal ellipses
/// becomes a chain of identical disks (`s`, `s + 1` or `s − 1` copies
/// depending on how the run sits between its neighbours).
pub fn compile_general(game: &OrderedGame) -> Result<CompileReport, GameError> {
    // checked first: validation would only report the outside reflection
    // as not strictly nested
    if let Some(k) = outside_in_repeat(game) {
        return Err(GameError::RepeatWithOutside(k + 1));
    }
    let (g, shift) = checked(game)?;
    let n = g.len();
    let beta = |k: usize| g.betas[k % n];
    // E_k for k = 0..=n with E_0 = E_n; positions are 1-based below
    let e = |k: usize| if k == 0 { beta(n - 1) } else { beta(k - 1) };

    let mut leaves = Vec::new();
    let mut annulus_ids = BTreeMap::new();
    let mut next_id = 1u32;
    for k in 0..n {
        let (x, y) = (e(k), e(k + 1));
        if !same_param(x, y) {
            leaves.push(Leaf::annulus(next_id, x.min(y), x.max(y)));
            annulus_ids.insert(k, LeafId(next_id));
            next_id += 1;
        }
    }

    let mut disk_ids = BTreeMap::new();
    let mut cycles: BTreeMap<usize, Vec<Vec<u32>>> = BTreeMap::new();
    let mut k = 1;
    // β_1 ≠ β_n, so every run starts at or after position 1 and ends by n
    while k <= n {
        let mut s = 1;
        while k + s <= n && same_param(e(k + s), e(k)) {
            s += 1;
        }
        let (before, after) = (e(k - 1), e((k + s - 1) % n + 1));
        let here = e(k);
        let inside_before = before > here;
        let inside_after = after > here;
        let copies = if g.signature[k - 1] == -1 {
            0
        } else {
            match (inside_before, inside_after) {
                (true, false) | (false, true) => s,
                (false, false) => s + 1,
                (true, true) => s - 1,
            }
        };
        let mut disks = Vec::new();
        for _ in 0..copies {
            leaves.push(Leaf::disk(next_id, here));
            disks.push(LeafId(next_id));
            next_id += 1;
        }
        let a_before = annulus_ids[&(k - 1)];
        let a_after = annulus_ids[&((k + s - 1) % n)];
        let mut cycle = vec![a_before.0];
        cycle.extend(disks.iter().map(|d| d.0));
        cycle.push(a_after.0);
        if copies > 0 {
            disk_ids.insert(k, disks);
        }
        let key = g
            .betas
            .iter()
            .position(|&b| same_param(b, here))
            .expect("ellipse of the game");
        cycles.entry(key).or_default().push(cycle);
        k += s;
    }

    let gluings = cycles
        .into_iter()
        .map(|(key, cs)| {
            let cycles = cs
                .into_iter()
                .map(|c| c.into_iter().map(LeafId).collect())
                .collect();
            GluingPermutation::from_cycles(g.betas[key], cycles)
        })
        .collect();
    let book = BilliardBook::validated(g.family, leaves, gluings)
        .map_err(|e| GameError::InvalidGame(e.to_string()))?;
    Ok(CompileReport {
        leaf_count: book.leaves.len(),
        s_count: s_count(&g),
        book,
        game: g,
        shift,
        annulus_ids,
        disk_ids,
    })
}

fn outside_in_repeat(game: &OrderedGame) -> Option<usize> {
    let n = game.len();
    if n < 2 || game.signature.len() != n {
        return None;
    }
    (0..n).find(|&k| {
        game.signature[k] == -1
            && (same_param(game.betas[k], game.betas[game.prev(k)])
                || same_param(game.betas[k], game.betas[game.next(k)]))
    })
}

/// `(2n − 2s, 2n, s)` for a game without consecutive repeats.
pub fn leaf_count_bounds(game: &OrderedGame) -> Result<(usize, usize, usize), GameError> {
    let (g, _) = checked(game)?;
    if let Some((k, q)) = g.has_repeats() {
        return Err(GameError::ConsecutiveRepeat(k + 1, q + 1));
    }
    let (n, s) = (g.len(), s_count(&g));
    Ok((2 * n - 2 * s, 2 * n, s))
}

/// Same leaves, every gluing permutation inverted.
pub fn invert_book(book: &BilliardBook) -> BilliardBook {
    book.inverted()
}

/// Is `caustic` an ellipse inside every game ellipse, or a hyperbola?
pub fn caustic_admissible(game: &OrderedGame, caustic: f64) -> bool {
    let (a, b) = (game.family.a(), game.family.b());
    let lo = game.betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (caustic > lo && caustic < b) || (caustic > b && caustic < a)
}

/// Deterministic start on `start_leaf` heading towards `E_1` with the
/// given caustic; `game` must be normalised.
pub fn admissible_start_on(
    book: &BilliardBook,
    game: &OrderedGame,
    start_leaf: LeafId,
    caustic: f64,
    seed: u64,
) -> Result<PhaseState, GameError> {
    if !caustic_admissible(game, caustic) {
        let lo = game.betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Err(GameError::InadmissibleCaustic { caustic, lo });
    }
    let e1 = game.betas[0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = sample_start_with(book, start_leaf, caustic, &mut rng, |s| {
        step(book, s).is_ok_and(|(_, e)| same_param(e.ellipse, e1))
    })?;
    Ok(state)
}

pub fn admissible_start(report: &CompileReport, caustic: f64, seed: u64) -> Result<PhaseState, GameError> {
    admissible_start_on(&report.book, &report.game, report.start_leaf(), caustic, seed)
}


/// Reflections met by a particle on `leaf` heading for its boundary
/// `target`, when every segment line meets every boundary ellipse (true
/// for admissible caustics). Stops after `reflections` reflections or
/// `4 * reflections + 8` boundary events.
pub fn symbolic_trace(book: &BilliardBook, leaf: LeafId, target: f64, reflections: usize) -> Vec<(f64, Side)> {
    let mut out = Vec::new();
    let (mut leaf, mut target) = (leaf, target);
    for _ in 0..4 * reflections + 8 {
        if out.len() >= reflections {
            break;
        }
        let Ok(l) = book.leaf(leaf) else { break };
        let Ok(side) = boundary_side(l, target) else { break };
        let next = book
            .gluing(target)
            .and_then(|g| g.image(leaf))
            .unwrap_or(leaf);
        let Ok(nl) = book.leaf(next) else { break };
        let Ok(next_side) = boundary_side(nl, target) else { break };
        if next == leaf || next_side == side {
            out.push((
                target,
                match side {
                    BoundarySide::Within => Side::FromInside,
                    BoundarySide::Outside => Side::FromOutside,
                },
            ));
        }
        let ellipse = target;
        target = match next_side {
            // moving inwards: the inner boundary, or across a disk
            BoundarySide::Within => nl.inner().unwrap_or(ellipse),
            BoundarySide::Outside => nl.outer(),
        };
        leaf = next;
    }
    out
}

/// Annulus between `E_n` and `E_1` from which a particle heading for `E_1`
/// follows the normalised `game`; falls back to the lowest-id such annulus.
pub fn find_start_leaf(book: &BilliardBook, game: &OrderedGame) -> Option<LeafId> {
    let (e1, en) = (game.betas[0], game.betas[game.len() - 1]);
    let mut candidates: Vec<LeafId> = book
        .leaves
        .iter()
        .filter(|l| l.inner().is_some() && l.has_boundary(e1) && l.has_boundary(en))
        .map(|l| l.id)
        .collect();
    candidates.sort();
    let n = game.len();
    candidates
        .iter()
        .copied()
        .find(|&id| {
            let trace = symbolic_trace(book, id, e1, 2 * n);
            trace.len() == 2 * n && match_trace(game, &trace).is_ok()
        })
        .or(candidates.first().copied())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub sample: usize,
    pub caustic: f64,
    pub seed: u64,
    /// First divergent reflection, when the trace got that far.
    pub index: Option<usize>,
    pub reason: String,
}

/// Simulates `samples` admissible starts (alternating elliptic and
/// hyperbolic caustics) and compares every reflection trace with the game.
pub fn verify_game(
    book: &BilliardBook,
    game: &OrderedGame,
    samples: usize,
    seed: u64,
) -> Result<Vec<Mismatch>, GameError> {
    use crate::dynamics::{simulate, trace_to_game, TrajectoryStatus};
    use rand::Rng;

    let (g, _) = checked(game)?;
    let start_leaf = find_start_leaf(book, &g).ok_or_else(|| {
        GameError::InvalidGame(format!(
            "book has no annulus between C_{} and C_{}",
            g.betas[g.len() - 1],
            g.betas[0]
        ))
    })?;
    let (a, b) = (g.family.a(), g.family.b());
    let lo = g.betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = g.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for sample in 0..samples {
        let (l, h) = if sample % 2 == 0 { (lo, b) } else { (b, a) };
        let caustic = l + (h - l) * rng.gen_range(0.05..0.95);
        let start_seed: u64 = rng.gen();
        let mut fail = |index, reason: String| {
            out.push(Mismatch {
                sample,
                caustic,
                seed: start_seed,
                index,
                reason,
            })
        };
        let start = match admissible_start_on(book, &g, start_leaf, caustic, start_seed) {
            Ok(s) => s,
            Err(e) => {
                fail(None, e.to_string());
                continue;
            }
        };
        let t = simulate(book, start, 8 * n + 16);
        let trace = trace_to_game(&t);
        if let Err(j) = match_trace(&g, &trace) {
            let (beta, side) = trace[j];
            let (eb, es) = g.expected_trace()[j % n];
            fail(Some(j), format!("reflection {j}: got ({beta}, {side:?}), expected ({eb}, {es:?})"));
        } else if t.status != TrajectoryStatus::Completed {
            fail(Some(trace.len()), format!("trajectory stopped: {:?}", t.status));
        } else if trace.len() < 2 * n {
            fail(Some(trace.len()), format!("only {} reflections", trace.len()));
        }
    }
    Ok(out)
}

/// Compares a reflection trace with the game repeated; returns the index
/// of the first divergent reflection.
pub fn match_trace(game: &OrderedGame, trace: &[(f64, Side)]) -> Result<(), usize> {
    let expected = game.expected_trace();
    for (j, &(beta, side)) in trace.iter().enumerate() {
        let (eb, es) = expected[j % expected.len()];
        if !same_param(beta, eb) || side != es {
            return Err(j);
        }
    }
    Ok(())
}

pub fn game_from_json(text: &str) -> Result<OrderedGame, SchemaError> {
    Ok(serde_json::from_str(text)?)
}

pub fn game_to_json(game: &OrderedGame) -> String {
    serde_json::to_string_pretty(game).expect("game serialises")
}
