//! Updating a rank-maximal matching after one vertex arrives.
//!
//! The update replays the phases of the base solve without recomputing
//! them. It grows a component `C` around the new vertex `a0`, keeps the
//! activated vertices (alive after the arrival but not before) and the
//! activated edges that join `C` to the rest of the old reduced graph.
//! Each phase is either augmenting or not, decided by the old label of the
//! outer end of the activated edges. The matching itself changes once, at
//! the end, along a single alternating path from `a0`.
//!
//! The traced graph of a phase is `C`'s edges, the old reduced graph minus
//! `C`, and the activated edges. It contains every edge of every
//! rank-maximal matching of the new prefix graph, so the final path is found
//! by an exact best-gain search confined to it.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::instance::{is_post, ArrivalEvent, EdgeId, InstanceError, Matching, VertexId, Vid};
use crate::matching::{Adjacency, EgLabels, GraphView, Label, Work};
use crate::rmm_static::{RmmState, NEVER};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UpdateError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("phase {phase} has not been processed ({done} done)")]
    PhaseNotProcessed { phase: u32, done: u32 },
    #[error("phase {0} is augmenting")]
    AugmentingPhase(u32),
    #[error("phase {0} is not augmenting")]
    NonAugmentingPhase(u32),
    #[error("phase {0} must be prepared first")]
    NotPrepared(u32),
    #[error("trace was built for a different base state")]
    StateMismatch,
    #[error("vertex {0} is not Even")]
    NotEven(Vid),
    #[error("edge {0} - {1} is already in the graph")]
    EdgePresent(Vid, Vid),
}

/// Where in a phase the traced graph is read: right after the activated
/// edges of the phase are added, or once the phase is complete.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Start(u32),
    End(u32),
}

impl Stage {
    pub fn phase(self) -> u32 {
        match self {
            Stage::Start(i) | Stage::End(i) => i,
        }
    }

    /// Visibility of something that appeared in phase `phase`, before the
    /// scan (`late == false`) or after it.
    fn sees(self, phase: u32, late: bool) -> bool {
        match self {
            Stage::Start(i) => phase < i || (phase == i && !late),
            Stage::End(i) => phase <= i,
        }
    }

    fn still_has(self, removed: u32) -> bool {
        match self {
            Stage::Start(i) => removed >= i,
            Stage::End(i) => removed > i,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ActivatedEdge {
    edge: EdgeId,
    inner: Vid,
    outer: Vid,
    added: u32,
    late: bool,
    removed: u32,
}

impl ActivatedEdge {
    fn visible(&self, stage: Stage) -> bool {
        stage.sees(self.added, self.late) && stage.still_has(self.removed)
    }

    fn other(&self, v: Vid) -> Vid {
        if v == self.inner {
            self.outer
        } else {
            self.inner
        }
    }
}

/// How the chosen path changes the matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathKind {
    Augmenting,
    EvenToActivated,
    EvenToAlive,
    Empty,
}

/// An alternating path from the new vertex; edges alternate unmatched,
/// matched with respect to the old matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdatePath {
    pub vertices: Vec<Vid>,
    pub kind: PathKind,
}

impl UpdatePath {
    pub fn edge_count(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.edge_count() == 0
    }

    /// Space-separated vertex names, e.g. `a3 p1 a0`.
    pub fn display(&self) -> String {
        self.vertices.iter().map(|&v| VertexId::from_flat(v).to_string()).collect::<Vec<_>>().join(" ")
    }
}

/// Phase trace of one arrival.
#[derive(Debug, Clone)]
pub struct UpdateState {
    event: ArrivalEvent,
    root: Vid,
    base_edges: usize,
    base_universe: usize,
    /// `(partner, rank, edge id in the new instance)`, sorted by rank then partner.
    arrival: Vec<(Vid, u32, EdgeId)>,
    phases: u32,
    done: u32,
    prepared: Option<(u32, bool)>,
    augmenting: Vec<bool>,
    c_join: HashMap<Vid, u32>,
    c_adj: HashMap<Vid, Vec<(Vid, EdgeId, u32)>>,
    c_edges: HashSet<EdgeId>,
    ae: Vec<ActivatedEdge>,
    ae_live: HashMap<EdgeId, usize>,
    ae_adj: HashMap<Vid, Vec<usize>>,
    av: BTreeSet<Vid>,
    av_log: Vec<Vec<Vid>>,
    work: Cell<u64>,
}

impl UpdateState {
    /// Fresh trace for `event` on top of `state`: `C = AV = {a0}`, no activated edges.
    pub fn new(state: &RmmState, event: &ArrivalEvent) -> Result<Self, UpdateError> {
        let inst = state.instance();
        inst.validate_arrival(event)?;
        let root = event.vertex.flat();
        let base_edges = inst.edge_count();
        let mut arrival: Vec<(Vid, u32, EdgeId)> = event
            .edges
            .iter()
            .enumerate()
            .map(|(k, &(partner, rank))| {
                let v = VertexId { side: event.vertex.side.other(), index: partner };
                (v.flat(), rank, base_edges + k)
            })
            .collect();
        arrival.sort_unstable_by_key(|&(v, rank, _)| (rank, v));
        let phases = state.phases().max(event.max_rank());
        Ok(UpdateState {
            event: event.clone(),
            root,
            base_edges,
            base_universe: inst.universe(),
            arrival,
            phases,
            done: 0,
            prepared: None,
            augmenting: vec![false; phases as usize + 1],
            c_join: HashMap::from([(root, 0)]),
            c_adj: HashMap::new(),
            c_edges: HashSet::new(),
            ae: Vec::new(),
            ae_live: HashMap::new(),
            ae_adj: HashMap::new(),
            av: BTreeSet::from([root]),
            av_log: vec![vec![root]],
            work: Cell::new(0),
        })
    }

    pub fn root(&self) -> Vid {
        self.root
    }

    pub fn event(&self) -> &ArrivalEvent {
        &self.event
    }

    /// Whether the trace was built on a state of this shape.
    pub(crate) fn fits(&self, edges: usize, universe: usize) -> bool {
        self.base_edges == edges && self.base_universe == universe
    }

    /// Number of phases the update runs: the larger of the old max rank and the arrival's.
    pub fn phases(&self) -> u32 {
        self.phases
    }

    pub fn phases_done(&self) -> u32 {
        self.done
    }

    pub fn work(&self) -> Work {
        Work { edges: self.work.get() }
    }

    pub fn is_augmenting(&self, phase: u32) -> bool {
        self.augmenting.get(phase as usize).copied().unwrap_or(false)
    }

    /// Augmenting phases up to and including `phase`.
    pub fn augmenting_count(&self, phase: u32) -> u32 {
        (1..=phase.min(self.done)).filter(|&j| self.is_augmenting(j)).count() as u32
    }

    /// Activated vertices at the end of `phase` (phase 0 is the start).
    pub fn activated_vertices(&self, phase: u32) -> &[Vid] {
        self.av_log.get(phase as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn in_component(&self, v: Vid, stage: Stage) -> bool {
        self.c_join.get(&v).is_some_and(|&j| j == 0 || stage.sees(j, true))
    }

    /// Vertices of `C` at `stage`, sorted.
    pub fn component(&self, stage: Stage) -> Vec<Vid> {
        let mut out: Vec<Vid> = self.c_join.keys().copied().filter(|&v| self.in_component(v, stage)).collect();
        out.sort_unstable();
        out
    }

    /// Activated edges at `stage` as `(inner, outer)` pairs, inner in `C`.
    pub fn activated_edges(&self, stage: Stage) -> Vec<(Vid, Vid)> {
        let mut out: Vec<(Vid, Vid)> =
            self.ae.iter().filter(|rec| rec.visible(stage)).map(|rec| (rec.inner, rec.outer)).collect();
        out.sort_unstable();
        out
    }

    fn check_base(&self, state: &RmmState) -> Result<(), UpdateError> {
        let inst = state.instance();
        if inst.edge_count() != self.base_edges || inst.universe() != self.base_universe {
            return Err(UpdateError::StateMismatch);
        }
        Ok(())
    }

    fn touch(&self, n: usize) {
        self.work.set(self.work.get() + n as u64);
    }

    fn old_label(&self, state: &RmmState, v: Vid, phase: u32) -> Label {
        if v == self.root {
            Label::Even
        } else {
            state.label(v, phase)
        }
    }

    fn old_alive(&self, state: &RmmState, v: Vid, phase: u32) -> bool {
        v != self.root && state.is_alive(v, phase)
    }

    pub(crate) fn edge_rank(&self, state: &RmmState, e: EdgeId) -> u32 {
        if e < self.base_edges {
            state.instance().edge(e).rank
        } else {
            self.arrival.iter().find(|a| a.2 == e).map_or(0, |a| a.1)
        }
    }

    /// Mate of `v` in `M_i`: the old matching restricted to ranks up to `phase`.
    pub(crate) fn old_mate(&self, state: &RmmState, v: Vid, phase: u32) -> Option<(Vid, EdgeId)> {
        if v == self.root {
            return None;
        }
        let w = state.matching().mate(v)?;
        let e = state.instance().edge_between(v, w)?;
        (state.instance().edge(e).rank <= phase).then_some((w, e))
    }

    /// Edges of `v` in the new instance with rank exactly `rank`.
    fn edges_of_rank(&self, state: &RmmState, v: Vid, rank: u32) -> Vec<(Vid, EdgeId)> {
        if v == self.root {
            return self.arrival.iter().filter(|a| a.1 == rank).map(|a| (a.0, a.2)).collect();
        }
        let inst = state.instance();
        let list = inst.incident(v);
        let from = list.partition_point(|&e| inst.edge(e).rank < rank);
        let mut out: Vec<(Vid, EdgeId)> = list[from..]
            .iter()
            .take_while(|&&e| inst.edge(e).rank == rank)
            .map(|&e| (inst.edge(e).other(v), e))
            .collect();
        out.extend(self.arrival.iter().filter(|a| a.0 == v && a.1 == rank).map(|a| (self.root, a.2)));
        out
    }

    /// Old reduced-graph neighbours of `v` in `phase`.
    fn old_neighbors(&self, state: &RmmState, v: Vid, phase: u32, out: &mut Vec<(Vid, EdgeId)>) {
        if v == self.root {
            return;
        }
        let inst = state.instance();
        let mut seen = 0;
        for &e in inst.incident(v) {
            let edge = inst.edge(e);
            if edge.rank > phase {
                break;
            }
            seen += 1;
            if state.edge_in_phase(e, phase) {
                out.push((edge.other(v), e));
            }
        }
        self.touch(seen);
    }

    /// Neighbours of `v` in the traced graph at `stage`.
    pub fn neighbors(&self, state: &RmmState, v: Vid, stage: Stage) -> Vec<(Vid, EdgeId)> {
        let mut out = Vec::new();
        if self.in_component(v, stage) {
            if let Some(list) = self.c_adj.get(&v) {
                out.extend(list.iter().filter(|x| stage.sees(x.2, true)).map(|x| (x.0, x.1)));
            }
        } else {
            self.old_neighbors(state, v, stage.phase(), &mut out);
            out.retain(|&(w, _)| !self.in_component(w, stage));
        }
        if let Some(list) = self.ae_adj.get(&v) {
            for &k in list {
                let rec = &self.ae[k];
                if rec.visible(stage) {
                    out.push((rec.other(v), rec.edge));
                }
            }
        }
        self.touch(out.len());
        out
    }

    /// The traced graph at `stage` as a view over the new universe.
    pub fn traced_view(&self, state: &RmmState, stage: Stage) -> GraphView {
        let universe = self.base_universe.max(self.root + 2);
        let mut edges = Vec::new();
        for v in (0..universe).filter(|&v| v == self.root || state.instance().vertex_exists(v)) {
            for (w, _) in self.neighbors(state, v, stage) {
                if v < w {
                    edges.push((v, w));
                }
            }
        }
        GraphView::from_edges(universe, edges)
    }

    fn add_activated(&mut self, inner: Vid, outer: Vid, edge: EdgeId, phase: u32, late: bool) {
        if self.ae_live.contains_key(&edge) {
            return;
        }
        let k = self.ae.len();
        self.ae.push(ActivatedEdge { edge, inner, outer, added: phase, late, removed: NEVER });
        self.ae_live.insert(edge, k);
        self.ae_adj.entry(inner).or_default().push(k);
        self.ae_adj.entry(outer).or_default().push(k);
    }

    fn remove_activated(&mut self, edge: EdgeId, phase: u32) {
        if let Some(k) = self.ae_live.remove(&edge) {
            self.ae[k].removed = phase;
        }
    }

    fn live_activated(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = self.ae_live.values().copied().collect();
        ks.sort_unstable();
        ks
    }

    /// Adds the activated edges of `phase` (edges of that rank from activated
    /// vertices to old-alive vertices) and reports whether the phase augments.
    pub fn prepare_phase(&mut self, state: &RmmState, phase: u32) -> Result<bool, UpdateError> {
        self.check_base(state)?;
        if phase != self.done + 1 || phase > self.phases {
            return Err(UpdateError::PhaseNotProcessed { phase: phase.saturating_sub(1), done: self.done });
        }
        let av: Vec<Vid> = self.av.iter().copied().collect();
        for a in av {
            let edges = self.edges_of_rank(state, a, phase);
            self.touch(edges.len());
            for (p, e) in edges {
                if self.old_alive(state, p, phase) && !self.in_component(p, Stage::Start(phase)) {
                    self.add_activated(a, p, e, phase, false);
                }
            }
        }
        let live = self.live_activated();
        self.touch(live.len());
        let augmenting = live.iter().any(|&k| self.old_label(state, self.ae[k].outer, phase) == Label::Even);
        self.prepared = Some((phase, augmenting));
        Ok(augmenting)
    }

    fn take_prepared(&mut self, phase: u32, augmenting: bool) -> Result<(), UpdateError> {
        match self.prepared {
            Some((p, a)) if p == phase => {
                if a != augmenting {
                    return Err(if a {
                        UpdateError::AugmentingPhase(phase)
                    } else {
                        UpdateError::NonAugmentingPhase(phase)
                    });
                }
                self.prepared = None;
                Ok(())
            }
            _ => Err(UpdateError::NotPrepared(phase)),
        }
    }

    /// Non-augmenting phase: absorb into `C` the old-Unreachable vertices on
    /// best-gain alternating paths from `a0`, make the Unreachable endpoints
    /// of such paths the activated vertices, then refresh the activated edges.
    ///
    /// A path is best-gain when its per-rank gain equals the gain implied by
    /// the augmenting flags so far. Testing only the parity of the rank-`i`
    /// edges admits paths whose lower-rank gain is already negative, and
    /// keeping only paths that end at Unreachable vertices misses the ones
    /// that cross an Unreachable vertex on their way to an alive one.
    pub fn scan_nonaug_phase(&mut self, state: &RmmState, phase: u32) -> Result<(), UpdateError> {
        self.take_prepared(phase, false)?;
        let stage = Stage::Start(phase);
        let search = self.best_gain_search(state, stage, |_, _| true);
        let target = self.expected_gain(phase);
        let mut ends: Vec<Vid> = search.even.iter().filter(|(_, r)| r.gain == target).map(|(&z, _)| z).collect();
        ends.sort_unstable();

        // Steps on best-gain paths are tight: the gain at the far end equals
        // the gain at the near end plus the two edges.
        let mut into: HashMap<Vid, Vec<usize>> = HashMap::new();
        for (k, &(x, _, e1, e2, z)) in search.steps.iter().enumerate() {
            let mut g = search.even[&x].gain.clone();
            g[self.edge_rank(state, e1) as usize] += 1;
            g[self.edge_rank(state, e2) as usize] -= 1;
            if g == search.even[&z].gain {
                into.entry(z).or_default().push(k);
            }
        }
        let mut marked: HashSet<Vid> = ends.iter().copied().collect();
        let mut queue: VecDeque<Vid> = ends.iter().copied().collect();
        let mut used = Vec::new();
        while let Some(z) = queue.pop_front() {
            for &k in into.get(&z).map(Vec::as_slice).unwrap_or(&[]) {
                used.push(k);
                let x = search.steps[k].0;
                if marked.insert(x) {
                    queue.push_back(x);
                }
            }
        }
        used.sort_unstable();

        let mut joined = Vec::new();
        for &k in &used {
            let (x, y, _, _, z) = search.steps[k];
            for v in [x, y, z] {
                if !self.c_join.contains_key(&v) && self.old_label(state, v, phase) == Label::Unreachable {
                    self.c_join.insert(v, phase);
                    joined.push(v);
                }
            }
        }
        let end_stage = Stage::End(phase);
        for &k in &used {
            let (x, y, e1, e2, z) = search.steps[k];
            for (u, w, e) in [(x, y, e1), (y, z, e2)] {
                if self.in_component(u, end_stage) && self.in_component(w, end_stage) && self.c_edges.insert(e) {
                    self.c_adj.entry(u).or_default().push((w, e, phase));
                    self.c_adj.entry(w).or_default().push((u, e, phase));
                }
            }
        }
        self.av = ends
            .into_iter()
            .filter(|&z| z == self.root || self.old_label(state, z, phase) == Label::Unreachable)
            .collect();

        for k in self.live_activated() {
            let rec = &self.ae[k];
            if self.old_label(state, rec.outer, phase) == Label::Unreachable {
                let e = rec.edge;
                self.remove_activated(e, phase);
            }
        }
        // Only vertices turning Unreachable in this very phase still have
        // edges to Odd vertices in the old reduced graph. Vertices on the
        // far side of `a0` sit at odd distance and are Odd in the new graph,
        // so their edges to Odd vertices are deleted there.
        joined.sort_unstable();
        for c in joined {
            if is_post(c) != is_post(self.root) {
                continue;
            }
            let onset = state.types(c).entries().iter().find(|x| x.1 == Label::Unreachable).map(|x| x.0);
            if onset != Some(phase) {
                continue;
            }
            let mut out = Vec::new();
            self.old_neighbors(state, c, phase, &mut out);
            for (p, e) in out {
                if self.old_label(state, p, phase) == Label::Odd && !self.in_component(p, Stage::End(phase)) {
                    self.add_activated(c, p, e, phase, true);
                }
            }
        }
        self.finish_phase(phase, false);
        Ok(())
    }

    /// Augmenting phase: keep only activated edges whose outer end is old-Even
    /// and clear the activated vertices.
    pub fn scan_aug_phase(&mut self, state: &RmmState, phase: u32) -> Result<(), UpdateError> {
        self.take_prepared(phase, true)?;
        for k in self.live_activated() {
            let rec = &self.ae[k];
            if self.old_label(state, rec.outer, phase) != Label::Even {
                let e = rec.edge;
                self.remove_activated(e, phase);
            }
        }
        self.av.clear();
        self.finish_phase(phase, true);
        Ok(())
    }

    fn finish_phase(&mut self, phase: u32, augmenting: bool) {
        self.augmenting[phase as usize] = augmenting;
        self.av_log.push(self.av.iter().copied().collect());
        self.done = phase;
    }

    /// Runs one phase.
    pub fn step(&mut self, state: &RmmState) -> Result<bool, UpdateError> {
        let phase = self.done + 1;
        if self.prepare_phase(state, phase)? {
            self.scan_aug_phase(state, phase)?;
            Ok(true)
        } else {
            self.scan_nonaug_phase(state, phase)?;
            Ok(false)
        }
    }

    /// Runs all remaining phases.
    pub fn run(&mut self, state: &RmmState) -> Result<(), UpdateError> {
        while self.done < self.phases {
            self.step(state)?;
        }
        Ok(())
    }

    /// Label-correcting search for best-gain alternating paths from `a0` in
    /// the traced graph at `stage`, against `M_i`. Gains are compared rank by
    /// rank, ties by length. Alternating cycles avoiding `a0` are cycles of
    /// the old graph and have non-positive gain, so the search settles.
    /// `enter` filters the vertices reached through unmatched edges.
    fn best_gain_search(&self, state: &RmmState, stage: Stage, enter: impl Fn(&Self, Vid) -> bool) -> Search {
        let phase = stage.phase();
        let width = phase as usize + 1;
        let root = self.root;
        let mut even = HashMap::from([(root, Reach { gain: vec![0; width], len: 0, pred: root })]);
        let mut odd: HashMap<Vid, Reach> = HashMap::new();
        let mut steps = Vec::new();
        let mut seen_steps: HashSet<(Vid, Vid)> = HashSet::new();
        let mut queue = VecDeque::from([root]);
        let mut queued: HashSet<Vid> = HashSet::from([root]);
        while let Some(x) = queue.pop_front() {
            queued.remove(&x);
            let here: Reach = even[&x].clone();
            let mate = self.old_mate(state, x, phase).map(|m| m.0);
            for (y, e1) in self.neighbors(state, x, stage) {
                if Some(y) == mate || y == root || !enter(self, y) {
                    continue;
                }
                let mut gain = here.gain.clone();
                gain[self.edge_rank(state, e1) as usize] += 1;
                let next = self.old_mate(state, y, phase);
                if let Some((z, e2)) = next {
                    if seen_steps.insert((x, y)) {
                        steps.push((x, y, e1, e2, z));
                    }
                }
                if !improves(&gain, here.len + 1, odd.get(&y)) {
                    continue;
                }
                odd.insert(y, Reach { gain: gain.clone(), len: here.len + 1, pred: x });
                if let Some((z, e2)) = next {
                    gain[self.edge_rank(state, e2) as usize] -= 1;
                    if improves(&gain, here.len + 2, even.get(&z)) {
                        even.insert(z, Reach { gain, len: here.len + 2, pred: y });
                        if queued.insert(z) {
                            queue.push_back(z);
                        }
                    }
                }
            }
        }
        Search { even, odd, steps }
    }

    /// Expected gain of the final path, per rank: `+1` where an augmenting
    /// run starts and `-1` right after it ends.
    pub fn expected_gain(&self, phase: u32) -> Vec<i32> {
        let mut g = vec![0; phase as usize + 1];
        for j in 1..=phase {
            g[j as usize] = i32::from(self.is_augmenting(j)) - i32::from(self.is_augmenting(j - 1));
        }
        g
    }
}

/// Best-gain alternating paths from `a0` in the traced graph of one phase.
#[derive(Debug, Clone)]
pub struct PathFamily {
    pub phase: u32,
    /// Gain per rank (index 0 unused) of every member.
    pub gain: Vec<i32>,
    /// Endpoints of members found by the search, sorted.
    pub ends: Vec<Vid>,
    pub shortest: UpdatePath,
}

#[derive(Debug, Clone)]
struct Reach {
    gain: Vec<i32>,
    len: u32,
    pred: Vid,
}

struct Search {
    even: HashMap<Vid, Reach>,
    odd: HashMap<Vid, Reach>,
    /// Explored steps `(x, y, e1, e2, z)`: unmatched `x - y`, matched `y - z`.
    steps: Vec<(Vid, Vid, EdgeId, EdgeId, Vid)>,
}

fn improves(gain: &[i32], len: u32, old: Option<&Reach>) -> bool {
    match old {
        None => true,
        Some(o) => match gain.cmp(&o.gain) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => len < o.len,
        },
    }
}

fn better_end(a: (&[i32], u32, Vid), b: (&[i32], u32, Vid)) -> bool {
    match a.0.cmp(b.0) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (a.1, a.2) < (b.1, b.2),
    }
}

/// The members of `S_i`: alternating paths from `a0` in the traced graph at
/// the end of `phase` whose application to `M_i` gives the best signature.
/// A label-correcting search (best gain, then fewest edges) finds them;
/// alternating cycles away from `a0` have non-positive gain, so it settles.
pub fn collect_update_paths(trace: &UpdateState, state: &RmmState, phase: u32) -> Result<PathFamily, UpdateError> {
    trace.check_base(state)?;
    if phase == 0 || phase > trace.done {
        return Err(UpdateError::PhaseNotProcessed { phase, done: trace.done });
    }
    let root = trace.root;
    let Search { even, odd, .. } = trace.best_gain_search(state, Stage::End(phase), |_, _| true);

    let mut candidates: Vec<(Vid, bool)> = even.keys().map(|&v| (v, true)).collect();
    candidates.extend(odd.keys().filter(|&&y| trace.old_mate(state, y, phase).is_none()).map(|&y| (y, false)));
    let reach = |v: Vid, is_even: bool| if is_even { &even[&v] } else { &odd[&v] };
    let mut best = (root, true);
    for &(v, is_even) in &candidates {
        let (r, b) = (reach(v, is_even), reach(best.0, best.1));
        if better_end((&r.gain, r.len, v), (&b.gain, b.len, best.0)) {
            best = (v, is_even);
        }
    }
    let gain = reach(best.0, best.1).gain.clone();
    let mut ends: Vec<Vid> =
        candidates.iter().filter(|&&(v, e)| reach(v, e).gain == gain).map(|&(v, _)| v).collect();
    ends.sort_unstable();
    ends.dedup();

    let mut vertices = vec![best.0];
    let (mut v, mut is_even) = best;
    while !(is_even && v == root) {
        let pred = reach(v, is_even).pred;
        vertices.push(pred);
        v = pred;
        is_even = !is_even;
    }
    vertices.reverse();
    let end = best.0;
    let kind = if vertices.len() == 1 {
        PathKind::Empty
    } else if !best.1 {
        PathKind::Augmenting
    } else if trace.activated_vertices(phase).contains(&end) {
        PathKind::EvenToActivated
    } else {
        PathKind::EvenToAlive
    };
    Ok(PathFamily { phase, gain, ends, shortest: UpdatePath { vertices, kind } })
}

/// Result of processing one arrival.
#[derive(Debug, Clone)]
pub struct ArrivalOutcome {
    /// `N_r`, a rank-maximal matching of the new instance.
    pub matching: Matching,
    pub path: UpdatePath,
    pub trace: UpdateState,
}

/// Whether the old matching stays rank-maximal after `event`: no phase augments.
/// Stops at the first augmenting phase.
pub fn check_after_arrival(state: &RmmState, event: &ArrivalEvent) -> Result<bool, UpdateError> {
    let mut trace = UpdateState::new(state, event)?;
    while trace.done < trace.phases {
        if trace.step(state)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Runs the phase trace and applies the shortest best-gain path from `a0`.
pub fn apply_arrival(state: &RmmState, event: &ArrivalEvent) -> Result<ArrivalOutcome, UpdateError> {
    let mut trace = UpdateState::new(state, event)?;
    trace.run(state)?;
    let path = if trace.phases == 0 {
        UpdatePath { vertices: vec![trace.root], kind: PathKind::Empty }
    } else {
        collect_update_paths(&trace, state, trace.phases)?.shortest
    };
    let mut matching = state.matching().clone();
    matching.apply_path(&path.vertices);
    Ok(ArrivalOutcome { matching, path, trace })
}

/// Effect of adding one edge at an Even vertex to a graph with a maximum matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeEffect {
    /// The other end is Even: the new edge lies on an augmenting path.
    ForcedAugment,
    /// The other end is Odd: labels do not change.
    NoChange,
    /// The other end was Unreachable: these formerly Unreachable vertices
    /// become Odd or Even, everything else keeps its label.
    UnreachableRelabel(Vec<(Vid, Label)>),
}

/// Classifies the effect of adding `(a, p)` where `a` is Even under `labels`.
pub fn classify_edge_addition<G: Adjacency>(
    view: &G,
    maximum: &Matching,
    labels: &EgLabels,
    a: Vid,
    p: Vid,
) -> Result<EdgeEffect, UpdateError> {
    if labels.get(a) != Label::Even {
        return Err(UpdateError::NotEven(a));
    }
    if view.has_edge(a, p) {
        return Err(UpdateError::EdgePresent(a, p));
    }
    Ok(match labels.get(p) {
        Label::Even => EdgeEffect::ForcedAugment,
        Label::Odd => EdgeEffect::NoChange,
        Label::Unreachable => EdgeEffect::UnreachableRelabel(relabel_unreachable(view, maximum, labels, &[p])),
    })
}

/// Alternating search from `starts` (reached through new edges from Even
/// vertices) confined to formerly Unreachable vertices.
fn relabel_unreachable<G: Adjacency>(view: &G, m: &Matching, labels: &EgLabels, starts: &[Vid]) -> Vec<(Vid, Label)> {
    let mut new: HashMap<Vid, Label> = HashMap::new();
    let mut queue = VecDeque::new();
    let reach_odd = |w: Vid, new: &mut HashMap<Vid, Label>, queue: &mut VecDeque<Vid>| {
        if labels.get(w) != Label::Unreachable || new.contains_key(&w) {
            return;
        }
        new.insert(w, Label::Odd);
        if let Some(x) = m.mate(w) {
            if labels.get(x) == Label::Unreachable && !new.contains_key(&x) {
                new.insert(x, Label::Even);
                queue.push_back(x);
            }
        }
    };
    for &p in starts {
        reach_odd(p, &mut new, &mut queue);
    }
    while let Some(u) = queue.pop_front() {
        let mate = m.mate(u);
        for w in view.neighbors(u) {
            if Some(w) != mate {
                reach_odd(w, &mut new, &mut queue);
            }
        }
    }
    let mut out: Vec<(Vid, Label)> = new.into_iter().collect();
    out.sort_unstable_by_key(|x| x.0);
    out
}

/// Outcome of adding a batch of edges at Even vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BatchOutcome {
    /// The matching grows: an augmenting path through exactly one new edge.
    CaseA(Vec<Vid>),
    /// The matching stays maximum; labels of the enlarged graph.
    CaseB(EgLabels),
}

/// Adds `new_edges`, each with an Even applicant end, to `view`.
pub fn batch_add_even_edges(
    view: &GraphView,
    maximum: &Matching,
    labels: &EgLabels,
    new_edges: &[(Vid, Vid)],
) -> Result<BatchOutcome, UpdateError> {
    let mut starts = Vec::new();
    let mut forced = None;
    for &(u, w) in new_edges {
        if view.has_edge(u, w) {
            return Err(UpdateError::EdgePresent(u, w));
        }
        let (a, p) = if is_post(u) { (w, u) } else { (u, w) };
        if labels.get(a) != Label::Even {
            return Err(UpdateError::NotEven(a));
        }
        if labels.get(p) == Label::Even {
            forced = forced.or(Some((a, p)));
        } else {
            starts.push(p);
        }
    }
    if let Some((u, w)) = forced {
        let tree = |x: Vid| -> Vec<Vid> {
            let roots: Vec<Vid> = (0..view.universe()).filter(|&v| maximum.is_free(v)).collect();
            let forest = crate::matching::build_alternating_forest(view, maximum, &roots).expect("roots are free");
            forest.path_to_root(x)
        };
        let mut path = tree(u);
        path.reverse();
        path.extend(tree(w));
        return Ok(BatchOutcome::CaseA(path));
    }
    let mut out = labels.clone();
    let mut union = view.clone();
    for &(u, w) in new_edges {
        union.add_edge(u, w);
    }
    for (v, l) in relabel_unreachable(&union, maximum, labels, &starts) {
        out.0[v] = l;
    }
    Ok(BatchOutcome::CaseB(out))
}
