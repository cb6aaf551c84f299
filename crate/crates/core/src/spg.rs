//! Shortest-path graph growth with stub labels, its coupling to a branching
//! process, and bidirectional hopcount search with lazily paired stubs.
//!
//! Label 1: stub of a node not yet reached. Label 2: free stub of a reached
//! node. Label 3: stub that is part of an edge.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::DegreeSequence;

/// Source of uniform stub indices.
pub trait StubDraw {
    /// Uniform index in `0..total`.
    fn draw_stub(&mut self, total: u64) -> u64;
}

impl<R: Rng + ?Sized> StubDraw for R {
    fn draw_stub(&mut self, total: u64) -> u64 {
        self.random_range(0..total)
    }
}

/// Replays a fixed list of stub indices, then falls back to a seeded generator.
#[derive(Debug, Clone)]
pub struct ScriptedDraws {
    script: VecDeque<u64>,
    fallback: ChaCha8Rng,
    used: usize,
}

impl ScriptedDraws {
    pub fn new(script: impl IntoIterator<Item = u64>, fallback_seed: u64) -> Self {
        ScriptedDraws {
            script: script.into_iter().collect(),
            fallback: ChaCha8Rng::seed_from_u64(fallback_seed),
            used: 0,
        }
    }

    /// Number of scripted values consumed so far.
    pub fn used(&self) -> usize {
        self.used
    }

    pub fn exhausted(&self) -> bool {
        self.script.is_empty()
    }
}

impl StubDraw for ScriptedDraws {
    fn draw_stub(&mut self, total: u64) -> u64 {
        match self.script.pop_front() {
            Some(s) => {
                assert!(s < total, "scripted stub {s} out of range 0..{total}");
                self.used += 1;
                s
            }
            None => self.fallback.random_range(0..total),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminatedReason {
    Exhausted,
    MaxGen,
    Cap,
}

/// Generation sizes of a shortest-path graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpgTrace {
    /// `z[k-1]` is `Z_k`, the number of free stubs at distance `k-1`.
    pub z: Vec<u64>,
    /// Number of nodes at each distance from the root, starting at distance 0.
    pub nodes_at_distance: Vec<u64>,
    pub terminated_reason: TerminatedReason,
}

/// Generation sizes of the shortest-path graph and its coupled branching process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledTrace {
    pub z: Vec<u64>,
    pub z_bp: Vec<u64>,
    /// Generation whose size is first affected by a label-2 or label-3 draw.
    pub miscoupling_generation: Option<usize>,
    pub label2_draws: u64,
    pub label3_draws: u64,
    pub terminated_reason: TerminatedReason,
}

/// Default bound on the number of stub draws of one growth, `10 sqrt(L) ln L`.
pub fn default_draw_cap(total_stubs: u64) -> u64 {
    let l = total_stubs.max(3) as f64;
    (10.0 * l.sqrt() * l.ln()).ceil() as u64
}

/// What happened to one present stub.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairEvent {
    /// Paired with a stub of a new node.
    NewNode { present: u64, chosen: u64 },
    /// Paired with another free stub, closing a cycle or a self-loop.
    Cycle { present: u64, chosen: u64 },
}

/// Label process of the shortest-path graph, advanced one present stub at a time.
#[derive(Debug, Clone)]
pub struct SpgGrower<'a> {
    seq: &'a DegreeSequence,
    labels: HashMap<u64, u8>,
    label_counts: [u64; 4],
    present: Vec<u64>,
    cursor: usize,
    next: Vec<u64>,
    z: Vec<u64>,
    nodes_at_distance: Vec<u64>,
    draws: u64,
    redraws: u64,
}

impl<'a> SpgGrower<'a> {
    /// Starts from `root`: its stubs are free and form generation 1.
    pub fn new(seq: &'a DegreeSequence, root: usize) -> Self {
        let mut grower = SpgGrower {
            seq,
            labels: HashMap::new(),
            label_counts: [0, seq.total_stubs(), 0, 0],
            present: Vec::new(),
            cursor: 0,
            next: Vec::new(),
            z: Vec::new(),
            nodes_at_distance: vec![1],
            draws: 0,
            redraws: 0,
        };
        let first = seq.first_stub(root);
        for s in first..first + seq.degree(root) {
            grower.set_label(s, 2);
            grower.present.push(s);
        }
        grower.z.push(grower.present.len() as u64);
        grower
    }

    pub fn label(&self, stub: u64) -> u8 {
        self.labels.get(&stub).copied().unwrap_or(1)
    }

    fn set_label(&mut self, stub: u64, label: u8) {
        let old = self.label(stub);
        self.label_counts[old as usize] -= 1;
        self.label_counts[label as usize] += 1;
        self.labels.insert(stub, label);
    }

    /// Number of stubs carrying labels 1, 2 and 3.
    pub fn label_counts(&self) -> [u64; 3] {
        [self.label_counts[1], self.label_counts[2], self.label_counts[3]]
    }

    /// `Z_1, Z_2, ...` for the generations completed so far.
    pub fn z(&self) -> &[u64] {
        &self.z
    }

    pub fn nodes_at_distance(&self) -> &[u64] {
        &self.nodes_at_distance
    }

    /// Total stub draws, including rejected ones.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Draws rejected because they hit a paired stub or the present stub.
    pub fn redraws(&self) -> u64 {
        self.redraws
    }

    /// Next present stub of the current generation that is still free.
    pub fn next_present(&mut self) -> Option<u64> {
        while self.cursor < self.present.len() {
            let s = self.present[self.cursor];
            if self.label(s) == 2 {
                return Some(s);
            }
            self.cursor += 1;
        }
        None
    }

    /// Whether every stub of the current generation has been paired.
    pub fn generation_done(&mut self) -> bool {
        self.next_present().is_none()
    }

    /// Pairs `present` with `chosen`, which must carry label 1 or 2.
    pub fn apply(&mut self, present: u64, chosen: u64) -> PairEvent {
        debug_assert_eq!(self.label(present), 2);
        debug_assert_ne!(present, chosen);
        let event = match self.label(chosen) {
            1 => {
                let w = self.seq.owner(chosen);
                let first = self.seq.first_stub(w);
                for s in first..first + self.seq.degree(w) {
                    if s != chosen {
                        self.set_label(s, 2);
                        self.next.push(s);
                    }
                }
                let depth = self.z.len();
                if self.nodes_at_distance.len() <= depth {
                    self.nodes_at_distance.push(0);
                }
                self.nodes_at_distance[depth] += 1;
                PairEvent::NewNode { present, chosen }
            }
            2 => PairEvent::Cycle { present, chosen },
            l => panic!("stub {chosen} has label {l} and cannot be paired"),
        };
        self.set_label(present, 3);
        self.set_label(chosen, 3);
        self.cursor += 1;
        event
    }

    /// Draws a stub for `present` as given; `None` if it must be redrawn.
    pub fn classify(&self, present: u64, drawn: u64) -> Option<u8> {
        if drawn == present {
            return None;
        }
        match self.label(drawn) {
            3 => None,
            l => Some(l),
        }
    }

    /// Pairs the next present stub, redrawing until the draw is admissible.
    pub fn step<D: StubDraw + ?Sized>(&mut self, draws: &mut D) -> Option<PairEvent> {
        let present = self.next_present()?;
        let chosen = self.draw_admissible(present, draws);
        Some(self.apply(present, chosen))
    }

    fn draw_admissible<D: StubDraw + ?Sized>(&mut self, present: u64, draws: &mut D) -> u64 {
        let total = self.seq.total_stubs();
        loop {
            let s = draws.draw_stub(total);
            self.draws += 1;
            if self.classify(present, s).is_some() {
                return s;
            }
            self.redraws += 1;
        }
    }

    /// Closes the current generation and returns the size of the next one.
    pub fn end_generation(&mut self) -> u64 {
        let mut next = std::mem::take(&mut self.next);
        next.retain(|&s| self.label(s) == 2);
        next.sort_unstable();
        let z = next.len() as u64;
        self.present = next;
        self.cursor = 0;
        self.z.push(z);
        if self.nodes_at_distance.len() < self.z.len() {
            self.nodes_at_distance.push(0);
        }
        z
    }
}

/// Grows the shortest-path graph from `root` until generation `max_gen`, the
/// component is exhausted, or the default draw cap is reached.
pub fn grow_spg<D: StubDraw + ?Sized>(seq: &DegreeSequence, root: usize, max_gen: usize, draws: &mut D) -> SpgTrace {
    grow_spg_with_cap(seq, root, max_gen, default_draw_cap(seq.total_stubs()), draws)
}

pub fn grow_spg_with_cap<D: StubDraw + ?Sized>(
    seq: &DegreeSequence,
    root: usize,
    max_gen: usize,
    cap: u64,
    draws: &mut D,
) -> SpgTrace {
    let mut grower = SpgGrower::new(seq, root);
    let reason = loop {
        if *grower.z.last().expect("Z_1 is set") == 0 {
            break TerminatedReason::Exhausted;
        }
        if grower.z.len() >= max_gen {
            break TerminatedReason::MaxGen;
        }
        let mut capped = false;
        while grower.step(draws).is_some() {
            if grower.draws >= cap {
                capped = true;
                break;
            }
        }
        if capped {
            break TerminatedReason::Cap;
        }
        grower.end_generation();
    };
    SpgTrace {
        z: grower.z,
        nodes_at_distance: grower.nodes_at_distance,
        terminated_reason: reason,
    }
}

/// Grows the shortest-path graph together with a branching process whose
/// offspring are `deg - 1` of the owner of a uniformly drawn stub.
///
/// Every joint draw feeds both processes. A draw of a free stub (label 2)
/// closes a cycle in the graph while the branching process still gains
/// offspring; a draw of a paired stub (label 3) or of the present stub makes
/// the graph redraw on its own. When the graph runs out of present stubs
/// first, the branching process finishes the generation with its own draws;
/// when the branching process runs out first, the graph finishes with
/// redraws.
pub fn grow_coupled<D: StubDraw + ?Sized>(
    seq: &DegreeSequence,
    root: usize,
    max_gen: usize,
    draws: &mut D,
) -> CoupledTrace {
    grow_coupled_with_cap(seq, root, max_gen, default_draw_cap(seq.total_stubs()), draws)
}

pub fn grow_coupled_with_cap<D: StubDraw + ?Sized>(
    seq: &DegreeSequence,
    root: usize,
    max_gen: usize,
    cap: u64,
    draws: &mut D,
) -> CoupledTrace {
    let total = seq.total_stubs();
    let mut grower = SpgGrower::new(seq, root);
    let mut z_bp = vec![seq.degree(root)];
    let mut miscoupling = None;
    let mut label2 = 0u64;
    let mut label3 = 0u64;
    let mut bp_draws = 0u64;

    let reason = 'outer: loop {
        let gen = grower.z.len();
        let spg_size = grower.z[gen - 1];
        let bp_size = z_bp[gen - 1];
        if spg_size == 0 && bp_size == 0 {
            break TerminatedReason::Exhausted;
        }
        if gen >= max_gen {
            break TerminatedReason::MaxGen;
        }
        let mut bp_left = bp_size;
        let mut bp_next = 0u64;
        loop {
            if grower.draws + bp_draws >= cap {
                break 'outer TerminatedReason::Cap;
            }
            let present = grower.next_present();
            match (present, bp_left > 0) {
                (Some(p), true) => {
                    let s = draws.draw_stub(total);
                    bp_draws += 1;
                    bp_left -= 1;
                    bp_next += seq.degree(seq.owner(s)) - 1;
                    match grower.classify(p, s) {
                        Some(1) => {
                            grower.apply(p, s);
                        }
                        Some(_) => {
                            label2 += 1;
                            miscoupling.get_or_insert(gen + 1);
                            grower.apply(p, s);
                        }
                        None => {
                            label3 += 1;
                            miscoupling.get_or_insert(gen + 1);
                            grower.redraws += 1;
                            let chosen = grower.draw_admissible(p, draws);
                            grower.apply(p, chosen);
                        }
                    }
                }
                (Some(_), false) => {
                    miscoupling.get_or_insert(gen + 1);
                    grower.step(draws);
                }
                (None, true) => {
                    let s = draws.draw_stub(total);
                    bp_draws += 1;
                    bp_left -= 1;
                    bp_next += seq.degree(seq.owner(s)) - 1;
                }
                (None, false) => break,
            }
        }
        grower.end_generation();
        z_bp.push(bp_next);
        if grower.z[gen] != bp_next {
            miscoupling.get_or_insert(gen + 1);
        }
    };
    CoupledTrace {
        z: grower.z,
        z_bp,
        miscoupling_generation: miscoupling,
        label2_draws: label2,
        label3_draws: label3,
        terminated_reason: reason,
    }
}

/// Fraction of traces whose first miscoupling affects generation `m` or earlier.
pub fn coupling_error_rate(traces: &[CoupledTrace], m: usize) -> f64 {
    if traces.is_empty() {
        return 0.0;
    }
    let bad = traces
        .iter()
        .filter(|t| t.miscoupling_generation.is_some_and(|g| g <= m))
        .count();
    bad as f64 / traces.len() as f64
}

/// Outcome of a bidirectional search with a bound on the number of pairings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchOutcome {
    Finite(u64),
    Infinite,
    Capped,
}

/// Stubs paired so far in a lazily revealed uniform matching.
struct LazyPairing {
    total: u64,
    partner: HashMap<u64, u64>,
    dense: Option<DenseFree>,
}

/// Unpaired stubs kept explicitly once most stubs are paired.
struct DenseFree {
    free: Vec<u64>,
    pos: Vec<usize>,
}

impl LazyPairing {
    fn new(total: u64) -> Self {
        LazyPairing {
            total,
            partner: HashMap::new(),
            dense: None,
        }
    }

    fn paired(&self) -> u64 {
        self.partner.len() as u64
    }

    /// Partner of `s`, pairing it with a uniform unpaired stub if needed.
    fn partner_of<R: Rng + ?Sized>(&mut self, s: u64, rng: &mut R) -> u64 {
        if let Some(&t) = self.partner.get(&s) {
            return t;
        }
        if self.dense.is_none() && 2 * self.paired() > self.total {
            self.densify();
        }
        let t = match &self.dense {
            None => loop {
                let t = rng.random_range(0..self.total);
                if t != s && !self.partner.contains_key(&t) {
                    break t;
                }
            },
            Some(d) => {
                debug_assert!(d.free.len() >= 2);
                loop {
                    let t = d.free[rng.random_range(0..d.free.len())];
                    if t != s {
                        break t;
                    }
                }
            }
        };
        self.partner.insert(s, t);
        self.partner.insert(t, s);
        if let Some(d) = &mut self.dense {
            d.remove(s);
            d.remove(t);
        }
        t
    }

    fn densify(&mut self) {
        let mut free = Vec::with_capacity((self.total - self.paired()) as usize);
        let mut pos = vec![usize::MAX; self.total as usize];
        for s in 0..self.total {
            if !self.partner.contains_key(&s) {
                pos[s as usize] = free.len();
                free.push(s);
            }
        }
        self.dense = Some(DenseFree { free, pos });
    }
}

impl DenseFree {
    fn remove(&mut self, s: u64) {
        let i = self.pos[s as usize];
        let last = *self.free.last().expect("free stub present");
        self.free.swap_remove(i);
        if last != s {
            self.pos[last as usize] = i;
        }
        self.pos[s as usize] = usize::MAX;
    }
}

/// Exact hopcount between `u` and `v` on a uniformly paired graph with degrees
/// `seq`, revealing only the pairings the search needs.
///
/// The two sides expand one full level at a time, `u` on odd steps and `v` on
/// even steps; the first step that links them equals the distance.
pub fn bilateral_hopcount<R: Rng + ?Sized>(seq: &DegreeSequence, u: usize, v: usize, rng: &mut R) -> Option<u64> {
    match bilateral_hopcount_capped(seq, u, v, u64::MAX, rng) {
        SearchOutcome::Finite(h) => Some(h),
        SearchOutcome::Infinite => None,
        SearchOutcome::Capped => unreachable!("no cap"),
    }
}

/// [`bilateral_hopcount`] giving up after `cap` revealed pairings.
pub fn bilateral_hopcount_capped<R: Rng + ?Sized>(
    seq: &DegreeSequence,
    u: usize,
    v: usize,
    cap: u64,
    rng: &mut R,
) -> SearchOutcome {
    if u == v {
        return SearchOutcome::Finite(0);
    }
    let mut pairing = LazyPairing::new(seq.total_stubs());
    let mut side: HashMap<usize, u8> = HashMap::from([(u, 0), (v, 1)]);
    let mut frontiers = [vec![u], vec![v]];
    let mut step: u64 = 0;
    loop {
        step += 1;
        let x_side = ((step + 1) % 2) as usize;
        let frontier = std::mem::take(&mut frontiers[x_side]);
        let mut next = Vec::new();
        for &x in &frontier {
            let first = seq.first_stub(x);
            for s in first..first + seq.degree(x) {
                if pairing.paired() / 2 >= cap {
                    return SearchOutcome::Capped;
                }
                let t = pairing.partner_of(s, rng);
                let y = seq.owner(t);
                match side.get(&y) {
                    Some(&sd) if sd as usize == x_side => {}
                    Some(_) => return SearchOutcome::Finite(step),
                    None => {
                        side.insert(y, x_side as u8);
                        next.push(y);
                    }
                }
            }
        }
        if next.is_empty() {
            return SearchOutcome::Infinite;
        }
        frontiers[x_side] = next;
    }
}
