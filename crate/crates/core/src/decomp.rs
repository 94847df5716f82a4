//! Rebuilding the per-phase labels of every reduced graph after an arrival.
//!
//! Phases are relabelled bottom-up, but only inside a region. A vertex keeps
//! its old label in a phase when some alternating path from a free vertex
//! reaches it in the old reduced graph without touching anything the arrival
//! perturbed: the new vertex and its partners, the path `s_r`, the component
//! `C`, and every vertex whose list has already changed. The region of a
//! phase is therefore everything downstream of those seeds in the old
//! reduced graph. Its labels are recomputed by a search that starts at its
//! free vertices and at its border with the unchanged rest. Formerly
//! Unreachable vertices the search meets outside the region are pulled in.

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::dynamic::{collect_update_paths, PathKind, Stage, UpdateError, UpdatePath, UpdateState};
use crate::instance::{ArrivalEvent, EdgeId, Instance, InstanceError, Matching, Vid};
use crate::matching::{Label, Work};
use crate::rmm_static::{last_phase, RmmState, TypeChanges};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecompError {
    #[error(transparent)]
    Update(#[from] UpdateError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("trace was built for a different base state")]
    StateMismatch,
    #[error("trace has run {done} of {phases} phases")]
    TraceIncomplete { done: u32, phases: u32 },
    #[error("path does not start at the new vertex")]
    ForeignPath,
    #[error("vertex {0} has no old type list")]
    NewVertex(Vid),
    #[error("vertex {vertex} is Unreachable in phase {phase}")]
    NotActive { vertex: Vid, phase: u32 },
}

/// The relabelled part of one phase.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhaseRegion {
    pub phase: u32,
    /// Vertices whose label was recomputed.
    pub vertices: Vec<Vid>,
    /// Labelled directly: free in `N_i`, or supported by an unchanged neighbour.
    pub roots: Vec<Vid>,
    /// Edges along which the search labelled a region vertex.
    pub forest_edges: Vec<EdgeId>,
    /// Vertices that turned Unreachable in this phase.
    pub settled: Vec<Vid>,
}

/// Record of one rebuild.
#[derive(Debug, Clone, Default)]
pub struct DecompRebuild {
    pub regions: Vec<PhaseRegion>,
    /// Vertices whose list differs from the old state, sorted; includes the new vertex.
    pub changed: Vec<Vid>,
    pub work: Work,
}

impl DecompRebuild {
    /// All vertices settled Unreachable, in settling order. Only grows phase by phase.
    pub fn settled(&self) -> impl Iterator<Item = Vid> + '_ {
        self.regions.iter().flat_map(|r| r.settled.iter().copied())
    }
}

struct Rebuilder<'a> {
    instance: &'a Instance,
    base: &'a [TypeChanges],
    base_edges: usize,
    root: Vid,
    matching: &'a Matching,
    /// Old mates of the vertices on `s_r`; everything else kept its mate.
    old_mates: HashMap<Vid, Option<Vid>>,
    fresh: HashMap<Vid, TypeChanges>,
    work: Work,
}

static EMPTY: TypeChanges = TypeChanges::EMPTY;

impl<'a> Rebuilder<'a> {
    fn old_label(&self, v: Vid, phase: u32) -> Label {
        if v == self.root {
            return Label::Unreachable;
        }
        self.base.get(v).unwrap_or(&EMPTY).label(phase)
    }

    fn list(&self, v: Vid) -> &TypeChanges {
        self.fresh.get(&v).unwrap_or_else(|| self.base.get(v).unwrap_or(&EMPTY))
    }

    fn rank_ok(&self, u: Vid, v: Vid, phase: u32) -> bool {
        self.instance.edge_between(u, v).is_some_and(|e| self.instance.edge(e).rank <= phase)
    }

    fn old_mate(&self, v: Vid, phase: u32) -> Option<Vid> {
        let m = self.old_mates.get(&v).copied().unwrap_or_else(|| self.matching.mate(v))?;
        self.rank_ok(v, m, phase).then_some(m)
    }

    fn new_mate(&self, v: Vid, phase: u32) -> Option<Vid> {
        let m = self.matching.mate(v)?;
        self.rank_ok(v, m, phase).then_some(m)
    }

    fn old_edge_in(&self, e: EdgeId, phase: u32) -> bool {
        if e >= self.base_edges {
            return false;
        }
        let edge = self.instance.edge(e);
        let get = |v: Vid| self.base.get(v).unwrap_or(&EMPTY);
        edge.rank <= phase && last_phase(edge.rank, get(edge.applicant_vid()), get(edge.post_vid())) >= phase
    }

    fn new_edge_in(&self, e: EdgeId, phase: u32) -> bool {
        let edge = self.instance.edge(e);
        edge.rank <= phase
            && last_phase(edge.rank, self.list(edge.applicant_vid()), self.list(edge.post_vid())) >= phase
    }

    /// Edges of `v` with rank at most `phase`; incident lists are sorted by rank.
    fn low_edges(&self, v: Vid, phase: u32) -> &'a [EdgeId] {
        let instance: &'a Instance = self.instance;
        let inc = instance.incident(v);
        let end = inc.partition_point(|&e| instance.edge(e).rank <= phase);
        &inc[..end]
    }

    /// Everything reachable from `seeds` along old alternating paths of `phase`.
    fn region(&mut self, seeds: &HashSet<Vid>, phase: u32) -> (Vec<Vid>, HashSet<Vid>) {
        let mut order: Vec<Vid> = seeds.iter().copied().chain(self.fresh.keys().copied()).collect();
        order.sort_unstable();
        order.dedup();
        let mut inside: HashSet<Vid> = order.iter().copied().collect();
        let mut stack = order.clone();
        while let Some(x) = stack.pop() {
            match self.old_label(x, phase) {
                Label::Even => {
                    let mate = self.old_mate(x, phase);
                    for &e in self.low_edges(x, phase) {
                        self.work.touch();
                        if !self.old_edge_in(e, phase) {
                            continue;
                        }
                        let y = self.instance.edge(e).other(x);
                        if Some(y) != mate && self.old_label(y, phase) == Label::Odd && inside.insert(y) {
                            order.push(y);
                            stack.push(y);
                        }
                    }
                }
                Label::Odd => {
                    if let Some(z) = self.old_mate(x, phase) {
                        self.work.touch();
                        if inside.insert(z) {
                            order.push(z);
                            stack.push(z);
                        }
                    }
                }
                Label::Unreachable => {}
            }
        }
        (order, inside)
    }

    fn relabel(&mut self, seeds: &HashSet<Vid>, phase: u32) -> PhaseRegion {
        let (mut order, mut inside) = self.region(seeds, phase);
        let mut label: HashMap<Vid, Label> = HashMap::new();
        let mut queue = VecDeque::new();
        let mut out = PhaseRegion { phase, ..Default::default() };
        for &v in &order {
            if phase > 1 && self.list(v).label(phase - 1) == Label::Unreachable {
                label.insert(v, Label::Unreachable);
            } else if self.new_mate(v, phase).is_none() {
                label.insert(v, Label::Even);
                out.roots.push(v);
                queue.push_back(v);
            }
        }
        for &v in &order {
            if label.contains_key(&v) {
                continue;
            }
            let mate = self.new_mate(v, phase);
            for &e in self.low_edges(v, phase) {
                self.work.touch();
                let u = self.instance.edge(e).other(v);
                if inside.contains(&u) || !self.new_edge_in(e, phase) {
                    continue;
                }
                let found = match self.old_label(u, phase) {
                    Label::Even if mate != Some(u) => Label::Odd,
                    Label::Odd if mate == Some(u) => Label::Even,
                    _ => continue,
                };
                label.insert(v, found);
                out.roots.push(v);
                queue.push_back(v);
                break;
            }
        }
        while let Some(x) = queue.pop_front() {
            let mate = self.new_mate(x, phase);
            let mut reach = Vec::new();
            if label[&x] == Label::Even {
                for &e in self.low_edges(x, phase) {
                    self.work.touch();
                    let y = self.instance.edge(e).other(x);
                    if Some(y) != mate && self.new_edge_in(e, phase) {
                        reach.push((y, e, Label::Odd));
                    }
                }
            } else if let Some(z) = mate {
                self.work.touch();
                let e = self.instance.edge_between(x, z).expect("matched pairs are edges");
                reach.push((z, e, Label::Even));
            }
            for (y, e, l) in reach {
                if label.contains_key(&y) {
                    continue;
                }
                let outside_unreachable = !inside.contains(&y) && self.old_label(y, phase) == Label::Unreachable;
                if outside_unreachable {
                    inside.insert(y);
                    order.push(y);
                } else if !inside.contains(&y) {
                    continue;
                }
                label.insert(y, l);
                out.forest_edges.push(e);
                queue.push_back(y);
            }
        }
        for &v in &order {
            let l = label.get(&v).copied().unwrap_or(Label::Unreachable);
            let before = if phase > 1 { self.list(v).label(phase - 1) } else { Label::Even };
            if l == Label::Unreachable && before != Label::Unreachable {
                out.settled.push(v);
            }
            if self.fresh.contains_key(&v) || l != self.old_label(v, phase) {
                let base = self.base.get(v).unwrap_or(&EMPTY);
                self.fresh
                    .entry(v)
                    .or_insert_with(|| TypeChanges::from_labels(base.entries().iter().copied().filter(|&(p, _)| p < phase)))
                    .push(phase, l);
            }
        }
        out.vertices = order;
        out
    }
}

/// Turns the old state into the state of the new instance: applies the
/// arrival, `N_r = M_r ⊕ path`, and relabels every phase locally.
///
/// `trace` must have run every phase on `state`; `path` is the path chosen
/// from it (a lone new vertex when the old matching stays rank-maximal).
pub fn rebuild_decompositions(
    state: RmmState,
    trace: &UpdateState,
    path: &UpdatePath,
) -> Result<(RmmState, DecompRebuild), DecompError> {
    if trace.phases_done() < trace.phases() {
        return Err(DecompError::TraceIncomplete { done: trace.phases_done(), phases: trace.phases() });
    }
    let root = trace.root();
    if path.vertices.first() != Some(&root) {
        return Err(DecompError::ForeignPath);
    }
    let (mut instance, mut types, mut matching, _) = state.into_parts();
    if !trace.fits(instance.edge_count(), instance.universe()) {
        return Err(DecompError::StateMismatch);
    }
    let base_edges = instance.edge_count();
    instance.apply_arrival(trace.event())?;
    let old_mates = path.vertices.iter().map(|&v| (v, matching.mate(v))).collect();
    matching.apply_path(&path.vertices);

    let mut seeds: HashSet<Vid> = path.vertices.iter().copied().collect();
    seeds.extend(trace.component(Stage::End(trace.phases())));
    let mut partners: Vec<(u32, Vid)> =
        instance.incident(root).iter().map(|&e| (instance.edge(e).rank, instance.edge(e).other(root))).collect();
    partners.sort_unstable();

    let mut rb = Rebuilder {
        instance: &instance,
        base: &types,
        base_edges,
        root,
        matching: &matching,
        old_mates,
        fresh: HashMap::from([(root, TypeChanges::new())]),
        work: Work::default(),
    };
    let mut regions = Vec::new();
    let mut next_partner = 0;
    for phase in 1..=instance.max_rank() {
        while next_partner < partners.len() && partners[next_partner].0 <= phase {
            seeds.insert(partners[next_partner].1);
            next_partner += 1;
        }
        regions.push(rb.relabel(&seeds, phase));
    }
    let work = rb.work;
    let fresh = rb.fresh;
    types.resize(instance.universe(), TypeChanges::new());
    let mut changed: Vec<Vid> = fresh.keys().copied().collect();
    changed.sort_unstable();
    for (v, list) in fresh {
        types[v] = list;
    }
    let total = Work { edges: work.edges + trace.work().edges };
    let next = RmmState::from_parts(instance, types, matching, total);
    Ok((next, DecompRebuild { regions, changed, work }))
}

/// Type list of the old vertex `v` in the new instance, given the last
/// phase `phase` in which it is Even or Odd there and its label `label`.
///
/// Up to `phase` an old Even or Odd label carries over. An old Unreachable
/// label in phase `j` is `label` when phases `j` and `phase` agree on whether
/// the new matching is larger than the old one, and the opposite label
/// otherwise. After `phase` the vertex is Unreachable.
pub fn propagate_vertex_types(
    v: Vid,
    phase: u32,
    label: Label,
    state: &RmmState,
    trace: &UpdateState,
) -> Result<TypeChanges, DecompError> {
    if label == Label::Unreachable {
        return Err(DecompError::NotActive { vertex: v, phase });
    }
    if v == trace.root() {
        return Err(DecompError::NewVertex(v));
    }
    let at_settle = trace.is_augmenting(phase);
    let mut out = TypeChanges::new();
    for j in 1..=phase {
        let old = state.label(v, j);
        let l = if old != Label::Unreachable {
            old
        } else if trace.is_augmenting(j) == at_settle {
            label
        } else {
            swap(label)
        };
        out.push(j, l);
    }
    if phase < trace.phases() {
        out.push(phase + 1, Label::Unreachable);
    }
    Ok(out)
}

fn swap(l: Label) -> Label {
    match l {
        Label::Even => Label::Odd,
        Label::Odd => Label::Even,
        Label::Unreachable => Label::Unreachable,
    }
}

/// Result of [`process_arrival`].
#[derive(Debug, Clone)]
pub struct StreamStep {
    pub path: UpdatePath,
    pub trace: UpdateState,
    pub rebuild: DecompRebuild,
}

/// Full update for one arrival: trace, path, matching and labels.
pub fn process_arrival(state: RmmState, event: &ArrivalEvent) -> Result<(RmmState, StreamStep), DecompError> {
    let mut trace = UpdateState::new(&state, event)?;
    trace.run(&state)?;
    let path = if trace.phases() == 0 {
        UpdatePath { vertices: vec![trace.root()], kind: PathKind::Empty }
    } else {
        collect_update_paths(&trace, &state, trace.phases())?.shortest
    };
    let (next, rebuild) = rebuild_decompositions(state, &trace, &path)?;
    Ok((next, StreamStep { path, trace, rebuild }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamic::apply_arrival;
    use crate::rmm_static::rmm_solve;
    use crate::scenario::{small_arrival, small_instance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(text: &str, line: &str) -> (RmmState, ArrivalEvent) {
        let state = rmm_solve(&Instance::parse(text).unwrap());
        (state, ArrivalEvent::parse_line(line, 1).unwrap())
    }

    fn recompute(state: &RmmState, event: &ArrivalEvent) -> RmmState {
        let mut h = state.instance().clone();
        h.apply_arrival(event).unwrap();
        rmm_solve(&h)
    }

    #[test]
    fn isolated_arrival_only_adds_an_even_vertex() {
        let (state, event) = setup("rmm 1\n2 2 2\na0 : p0@1 p1@2\na1 : p0@1\n", "arrive p2 :");
        let (next, step) = process_arrival(state.clone(), &event).unwrap();
        let p2 = event.vertex.flat();
        assert_eq!(step.rebuild.changed, vec![p2]);
        for i in 1..=2 {
            assert_eq!(next.label(p2, i), Label::Even);
            for v in state.instance().vertices() {
                assert_eq!(next.label(v, i), state.label(v, i));
            }
        }
        assert_eq!(next.matching(), state.matching());
    }

    #[test]
    fn vertex_reachable_only_before_augmentation_turns_unreachable() {
        // p0 is free, hence Even, in old phases 1-3; a1 takes it at rank 2.
        let (state, event) = setup("rmm 1\n1 1 4\na0 : p0@4\n", "arrive a1 : p0@2");
        let p0 = 1;
        assert_eq!(state.label(p0, 3), Label::Even);
        let (next, step) = process_arrival(state, &event).unwrap();
        assert_eq!(next.types(p0).entries(), &[(2, Label::Unreachable)]);
        assert!(step.rebuild.settled().any(|v| v == p0));
        assert_eq!(next.label_table(), recompute(&rmm_solve(&Instance::parse("rmm 1\n1 1 4\na0 : p0@4\n").unwrap()), &event).label_table());
    }

    #[test]
    fn random_streams_match_recompute() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..120 {
            let (na, np, r) = (rng.gen_range(0..=6), rng.gen_range(1..=6), rng.gen_range(1..=4));
            let mut state = rmm_solve(&small_instance(&mut rng, na, np, r, 16));
            for _ in 0..3 {
                let post_side = rng.gen_bool(0.3);
                let event = small_arrival(&mut rng, state.instance(), post_side, 4, r + 1);
                let want = recompute(&state, &event);
                let (next, step) = process_arrival(state, &event).unwrap();
                assert_eq!(next.label_table(), want.label_table());
                assert_eq!(next.signature(), want.signature());
                let bound: u64 = step
                    .rebuild
                    .regions
                    .iter()
                    .flat_map(|r| r.vertices.iter())
                    .map(|&v| 3 * next.instance().incident(v).len() as u64 + 2)
                    .sum();
                // Each region vertex's low edges are scanned at most three times per phase.
                assert!(step.rebuild.work.edges <= bound);
                state = next;
            }
        }
    }

    #[test]
    fn old_labels_carry_over_and_unreachable_ones_follow_the_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..200 {
            let (na, np, r) = (rng.gen_range(1..=6), rng.gen_range(1..=6), rng.gen_range(1..=4));
            let g = small_instance(&mut rng, na, np, r, 16);
            let event = small_arrival(&mut rng, &g, false, 4, r);
            let state = rmm_solve(&g);
            let out = apply_arrival(&state, &event).unwrap();
            let want = recompute(&state, &event);
            for v in g.vertices() {
                let list = want.types(v);
                let Some(settle) = (1..=want.phases()).rev().find(|&j| list.label(j) != Label::Unreachable) else {
                    continue;
                };
                let got = propagate_vertex_types(v, settle, list.label(settle), &state, &out.trace).unwrap();
                assert_eq!(&got, list);
            }
        }
    }

    #[test]
    fn propagation_examples() {
        // a0 and a1 share p0, so a0 stays Even; the arrival takes an unrelated post.
        let (state, event) = setup("rmm 1\n2 2 2\na0 : p0@1\na1 : p0@1\n", "arrive a2 : p1@2");
        let out = apply_arrival(&state, &event).unwrap();
        let old = state.types(0).clone();
        assert_eq!(old.label(2), Label::Even);
        assert_eq!(propagate_vertex_types(0, 2, Label::Even, &state, &out.trace).unwrap(), old);

        // a0 is cut off in phase 1 of the old solve; the gap opens in phase 2.
        let (state, event) = setup("rmm 1\n1 3 3\na0 : p0@2 p1@1 p2@2\n", "arrive a1 : p1@1");
        let out = apply_arrival(&state, &event).unwrap();
        assert_eq!(state.label(0, 1), Label::Unreachable);
        assert!(!out.trace.is_augmenting(1) && out.trace.is_augmenting(3));
        let list = propagate_vertex_types(0, 3, Label::Odd, &state, &out.trace).unwrap();
        assert_eq!(list.label(1), Label::Even);
        assert_eq!(list.label(2), Label::Odd);
        assert_eq!(list, recompute(&state, &event).types(0).clone());

        assert!(matches!(
            propagate_vertex_types(0, 3, Label::Unreachable, &state, &out.trace),
            Err(DecompError::NotActive { .. })
        ));
        assert_eq!(
            propagate_vertex_types(2, 1, Label::Even, &state, &out.trace),
            Err(DecompError::NewVertex(2))
        );
    }

    #[test]
    fn rebuild_rejects_mismatched_inputs() {
        let (state, event) = setup("rmm 1\n1 2 1\na0 : p0@1\n", "arrive a1 : p1@1");
        let out = apply_arrival(&state, &event).unwrap();
        let other = rmm_solve(&Instance::parse("rmm 1\n2 2 1\na0 : p0@1\na1 : p0@1\n").unwrap());
        assert_eq!(
            rebuild_decompositions(other, &out.trace, &out.path).unwrap_err(),
            DecompError::StateMismatch
        );
        let fresh = UpdateState::new(&state, &event).unwrap();
        assert!(matches!(
            rebuild_decompositions(state.clone(), &fresh, &out.path),
            Err(DecompError::TraceIncomplete { done: 0, .. })
        ));
        let stray = UpdatePath { vertices: vec![0], kind: PathKind::Empty };
        assert_eq!(rebuild_decompositions(state, &out.trace, &stray).unwrap_err(), DecompError::ForeignPath);
    }
}
