//! The phase-by-phase rank-maximal matching solver and the state it leaves
//! behind for the dynamic modules.
//!
//! Labels are stored per vertex as a list of `(phase, new label)` changes
//! with an implicit initial Even. An Odd vertex may turn Even again in a
//! later phase (it is no longer alive then), but Unreachable is final: once
//! the Odd–Unreachable edges are deleted an Unreachable region is cut off
//! and, holding no alive vertex, never gains an edge. Membership of an edge
//! in every reduced graph follows from the lists of its endpoints, so the
//! state keeps no per-phase edge copies.

use thiserror::Error;

use crate::instance::{signature_of, EdgeId, Instance, Matching, Signature, Vid};
use crate::matching::{augment_in_place, label_from_roots, Adjacency, EgLabels, GraphView, Label, Work};

/// Phase number meaning "never".
pub const NEVER: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PhaseError {
    #[error("phase {phase} out of range 1..={max}")]
    OutOfRange { phase: u32, max: u32 },
}

/// Type-change list of one vertex: phases where its label changes, in
/// increasing order, with the label taken from then on. Even before the first entry.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TypeChanges(Vec<(u32, Label)>);

impl TypeChanges {
    pub(crate) const EMPTY: TypeChanges = TypeChanges(Vec::new());

    pub fn new() -> Self {
        TypeChanges(Vec::new())
    }

    pub fn entries(&self) -> &[(u32, Label)] {
        &self.0
    }

    pub fn label(&self, phase: u32) -> Label {
        let at = self.0.partition_point(|&(p, _)| p <= phase);
        if at == 0 {
            Label::Even
        } else {
            self.0[at - 1].1
        }
    }

    /// First phase in which the vertex is not Even.
    pub fn first_non_even(&self) -> u32 {
        self.0.first().map_or(NEVER, |&(p, _)| p)
    }

    /// Alive at phase `i`: Even in every earlier phase.
    pub fn alive(&self, phase: u32) -> bool {
        self.first_non_even() >= phase
    }

    /// Records `label` from `phase` on. Phases must be pushed in increasing
    /// order; a repeat of the current label is ignored.
    pub fn push(&mut self, phase: u32, label: Label) {
        let current = self.0.last().map_or(Label::Even, |&(_, l)| l);
        if current != label {
            debug_assert!(self.0.last().is_none_or(|&(p, _)| p < phase));
            self.0.push((phase, label));
        }
    }

    /// Builds a list from per-phase labels given in increasing phase order.
    pub fn from_labels(labels: impl IntoIterator<Item = (u32, Label)>) -> Self {
        let mut t = TypeChanges::new();
        for (phase, l) in labels {
            t.push(phase, l);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// Visit neighbours in decreasing id order. Reduced graphs and labels
    /// must not depend on this; the matching may.
    pub reverse_neighbors: bool,
}

/// Everything the phase loop produced for one instance.
#[derive(Debug, Clone)]
pub struct RmmState {
    instance: Instance,
    types: Vec<TypeChanges>,
    matching: Matching,
    signature: Signature,
    options: SolveOptions,
    work: Work,
}

/// One materialised phase: the reduced graph's deltas, its matching and labels.
#[derive(Debug, Clone)]
pub struct PhaseRecord {
    pub phase: u32,
    pub added: Vec<EdgeId>,
    pub deleted: Vec<EdgeId>,
    pub matching: Matching,
    pub labels: EgLabels,
}

impl RmmState {
    /// Assembles a state from per-vertex type-change lists and a final matching.
    pub fn from_parts(instance: Instance, types: Vec<TypeChanges>, matching: Matching, work: Work) -> Self {
        let signature = signature_of(&instance, &matching).expect("matching uses instance edges");
        let mut types = types;
        types.resize(instance.universe(), TypeChanges::new());
        RmmState { instance, types, matching, signature, options: SolveOptions::default(), work }
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub(crate) fn into_parts(self) -> (Instance, Vec<TypeChanges>, Matching, Work) {
        (self.instance, self.types, self.matching, self.work)
    }

    /// Number of phases, equal to the instance's max rank.
    pub fn phases(&self) -> u32 {
        self.instance.max_rank()
    }

    /// The final matching `M_r`.
    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn options(&self) -> SolveOptions {
        self.options
    }

    /// Edge inspections spent building this state.
    pub fn work(&self) -> Work {
        self.work
    }

    pub fn types(&self, v: Vid) -> &TypeChanges {
        static EMPTY: TypeChanges = TypeChanges(Vec::new());
        self.types.get(v).unwrap_or(&EMPTY)
    }

    pub fn all_types(&self) -> &[TypeChanges] {
        &self.types
    }

    pub fn label(&self, v: Vid, phase: u32) -> Label {
        self.types(v).label(phase)
    }

    pub fn is_alive(&self, v: Vid, phase: u32) -> bool {
        self.types(v).alive(phase)
    }

    pub fn type_changes(&self, v: Vid) -> &[(u32, Label)] {
        self.types(v).entries()
    }

    /// Last phase whose reduced graph contains edge `e`; below its rank if it never enters.
    pub fn edge_last_phase(&self, e: EdgeId) -> u32 {
        edge_last_phase(&self.instance, &self.types, e)
    }

    pub fn edge_in_phase(&self, e: EdgeId, phase: u32) -> bool {
        self.instance.edge(e).rank <= phase && phase <= self.edge_last_phase(e)
    }

    /// `M_i`: the final matching restricted to ranks up to `phase`.
    pub fn phase_matching(&self, phase: u32) -> Matching {
        restrict_matching(&self.instance, &self.matching, phase)
    }

    fn check_phase(&self, phase: u32) -> Result<(), PhaseError> {
        if phase == 0 || phase > self.phases().max(1) {
            return Err(PhaseError::OutOfRange { phase, max: self.phases() });
        }
        Ok(())
    }

    /// Materialises the reduced graph of `phase`.
    pub fn phase_view(&self, phase: u32) -> Result<GraphView, PhaseError> {
        self.check_phase(phase)?;
        let edges = (0..self.instance.edge_count())
            .filter(|&e| self.edge_in_phase(e, phase))
            .map(|e| {
                let edge = self.instance.edge(e);
                (edge.applicant_vid(), edge.post_vid())
            });
        Ok(GraphView::from_edges(self.instance.universe(), edges))
    }

    pub fn phase_labels(&self, phase: u32) -> EgLabels {
        EgLabels((0..self.instance.universe()).map(|v| self.label(v, phase)).collect())
    }

    pub fn phase_record(&self, phase: u32) -> Result<PhaseRecord, PhaseError> {
        self.check_phase(phase)?;
        let mut added = Vec::new();
        let mut deleted = Vec::new();
        for e in 0..self.instance.edge_count() {
            let edge = self.instance.edge(e);
            let last = self.edge_last_phase(e);
            if edge.rank == phase && last >= phase {
                added.push(e);
            }
            if last == phase && edge.rank <= phase {
                deleted.push(e);
            }
        }
        Ok(PhaseRecord {
            phase,
            added,
            deleted,
            matching: self.phase_matching(phase),
            labels: self.phase_labels(phase),
        })
    }

    /// `table[i - 1][v]` is the label of flat vertex `v` in phase `i`, for
    /// existing vertices; non-existent slots read Even.
    pub fn label_table(&self) -> Vec<Vec<Label>> {
        (1..=self.phases())
            .map(|i| {
                (0..self.instance.universe())
                    .map(|v| if self.instance.vertex_exists(v) { self.label(v, i) } else { Label::Even })
                    .collect()
            })
            .collect()
    }

    /// Phase dump: the reduced graph in instance syntax, its matching, then labels.
    pub fn phase_dump(&self, phase: u32) -> Result<String, PhaseError> {
        let view = self.phase_view(phase)?;
        let inst = &self.instance;
        let mut out = format!(
            "rmm 1\n{} {} {}\n",
            inst.applicant_count(),
            inst.post_count(),
            inst.max_rank()
        );
        for a in 0..inst.applicant_count() {
            out.push_str(&format!("a{a} :"));
            for p in view.neighbors(2 * a as usize) {
                let post = (p / 2) as u32;
                out.push_str(&format!(" p{post}@{}", inst.rank_of(a, post).unwrap_or(0)));
            }
            out.push('\n');
        }
        for (a, p) in self.phase_matching(phase).pairs() {
            out.push_str(&format!("match a{a} p{p}\n"));
        }
        for v in inst.vertices() {
            let id = crate::instance::VertexId::from_flat(v);
            out.push_str(&format!("label {id} {}\n", self.label(v, phase)));
        }
        Ok(out)
    }
}

pub(crate) fn edge_last_phase(instance: &Instance, types: &[TypeChanges], e: EdgeId) -> u32 {
    static EMPTY: TypeChanges = TypeChanges::EMPTY;
    let edge = instance.edge(e);
    let ta = types.get(edge.applicant_vid()).unwrap_or(&EMPTY);
    let tp = types.get(edge.post_vid()).unwrap_or(&EMPTY);
    last_phase(edge.rank, ta, tp)
}

/// Last phase containing an edge of rank `k` whose ends have lists `ta` and `tp`.
pub(crate) fn last_phase(k: u32, ta: &TypeChanges, tp: &TypeChanges) -> u32 {
    if !ta.alive(k) || !tp.alive(k) {
        return k - 1;
    }
    // Deleted in the first phase from `k` on where it is Odd–Odd or Odd–Unreachable.
    let deleted = |j: u32| {
        let (x, y) = (ta.label(j), tp.label(j));
        x != Label::Even && y != Label::Even && !(x == Label::Unreachable && y == Label::Unreachable)
    };
    let next = |t: &TypeChanges, j: u32| {
        let at = t.0.partition_point(|&(p, _)| p <= j);
        t.0.get(at).map_or(NEVER, |&(p, _)| p)
    };
    let mut j = k;
    while j != NEVER {
        if deleted(j) {
            return j;
        }
        j = next(ta, j).min(next(tp, j));
    }
    NEVER
}

pub(crate) fn restrict_matching(instance: &Instance, m: &Matching, phase: u32) -> Matching {
    let mut out = Matching::new();
    for (a, p) in m.pairs() {
        if instance.rank_of(a, p).is_some_and(|k| k <= phase) {
            out.insert(a, p);
        }
    }
    out
}

/// Dynamic adjacency for the solver: lazily deleted entries, kept sorted by neighbour.
struct PhaseGraph<'a> {
    adj: Vec<Vec<(Vid, EdgeId)>>,
    present: Vec<bool>,
    reverse: bool,
    instance: &'a Instance,
}

impl Adjacency for PhaseGraph<'_> {
    fn universe(&self) -> usize {
        self.adj.len()
    }

    fn neighbors(&self, v: Vid) -> impl Iterator<Item = Vid> + '_ {
        let list = &self.adj[v];
        let forward = (!self.reverse).then(|| list.iter());
        let backward = self.reverse.then(|| list.iter().rev());
        forward
            .into_iter()
            .flatten()
            .chain(backward.into_iter().flatten())
            .filter(|&&(_, e)| self.present[e])
            .map(|&(w, _)| w)
    }

    fn has_edge(&self, u: Vid, v: Vid) -> bool {
        self.instance.edge_between(u, v).is_some_and(|e| self.present[e])
    }
}

impl PhaseGraph<'_> {
    fn insert(&mut self, e: EdgeId) {
        let edge = self.instance.edge(e);
        let (a, p) = (edge.applicant_vid(), edge.post_vid());
        self.present[e] = true;
        for (x, y) in [(a, p), (p, a)] {
            let list = &mut self.adj[x];
            let at = list.partition_point(|&(w, _)| w < y);
            list.insert(at, (y, e));
        }
    }

    fn compact(&mut self, v: Vid) {
        let present = &self.present;
        self.adj[v].retain(|&(_, e)| present[e]);
    }
}

/// Runs the phase loop with default options.
pub fn rmm_solve(instance: &Instance) -> RmmState {
    rmm_solve_with(instance, SolveOptions::default())
}

/// Runs the phase loop: add the rank-`i` edges between alive vertices,
/// augment to a maximum matching, label, then delete Odd–Odd and
/// Odd–Unreachable edges. Edges of higher rank at Odd or Unreachable
/// vertices are never added because those vertices are no longer alive.
pub fn rmm_solve_with(instance: &Instance, options: SolveOptions) -> RmmState {
    let n = instance.universe();
    let r = instance.max_rank();
    let mut work = Work::default();
    let mut graph = PhaseGraph {
        adj: vec![Vec::new(); n],
        present: vec![false; instance.edge_count()],
        reverse: options.reverse_neighbors,
        instance,
    };
    let mut types = vec![TypeChanges::new(); n];
    let mut current = vec![Label::Even; n];
    let mut alive = vec![true; n];
    let mut m = Matching::new();
    let mut free: Vec<Vid> = instance.vertices().collect();

    for i in 1..=r {
        let mut added = false;
        for &e in instance.edges_of_rank(i) {
            work.touch();
            let edge = instance.edge(e);
            let (a, p) = (edge.applicant_vid(), edge.post_vid());
            if alive[a] && alive[p] {
                graph.insert(e);
                added = true;
            }
        }
        if added {
            // A new edge joins two Even vertices, so any free applicant may now augment.
            let seeds: Vec<Vid> = free.iter().copied().filter(|&v| v % 2 == 0).collect();
            augment_in_place(&graph, &mut m, Some(&seeds), &mut work);
            free.retain(|&v| m.is_free(v));
        }
        let (labels, _) = label_from_roots(&graph, &m, &free, &mut work);
        let mut leaving = Vec::new();
        for v in instance.vertices() {
            let l = labels.get(v);
            if l != current[v] {
                debug_assert!(current[v] != Label::Unreachable, "Unreachable is final");
                types[v].push(i, l);
                if current[v] == Label::Even {
                    leaving.push(v);
                    alive[v] = false;
                }
                current[v] = l;
            }
        }
        for &v in &leaving {
            let list = std::mem::take(&mut graph.adj[v]);
            for &(w, e) in &list {
                work.touch();
                if !graph.present[e] || current[w] == Label::Even {
                    continue;
                }
                if !(current[v] == Label::Unreachable && current[w] == Label::Unreachable) {
                    graph.present[e] = false;
                }
            }
            graph.adj[v] = list;
            graph.compact(v);
        }
    }
    let signature = signature_of(instance, &m).expect("solver only matches instance edges");
    RmmState { instance: instance.clone(), types, matching: m, signature, options, work }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{eg_decompose, verify_decomposition};

    fn solve(text: &str) -> RmmState {
        rmm_solve(&Instance::parse(text).unwrap())
    }

    #[test]
    fn single_edge() {
        let s = solve("rmm 1\n1 1 1\na0 : p0@1\n");
        assert_eq!(s.signature().0, vec![1]);
        assert!(s.matching().contains(0, 0));
    }

    #[test]
    fn two_applicants_share_first_choice() {
        let s = solve("rmm 1\n2 2 2\na0 : p0@1\na1 : p0@1 p1@2\n");
        assert_eq!(s.signature().0, vec![1, 1]);
    }

    #[test]
    fn all_even_phase_deletes_nothing() {
        // a0 and a1 both free-able on p0: a0, a1 Even, p0 Odd. Nothing deleted.
        let s = solve("rmm 1\n2 1 1\na0 : p0@1\na1 : p0@1\n");
        assert!(s.phase_record(1).unwrap().deleted.is_empty());
    }

    #[test]
    fn unreachable_vertex_loses_higher_rank_edges() {
        let s = solve("rmm 1\n1 2 2\na0 : p0@1 p1@2\n");
        assert_eq!(s.label(0, 1), Label::Unreachable);
        let e = s.instance().find_edge(0, 1).unwrap();
        assert!(!s.edge_in_phase(e, 2));
        assert!(s.phase_record(2).unwrap().added.is_empty());
    }

    #[test]
    fn odd_odd_edges_are_deleted() {
        // p0 is wanted by a0 and a1; a2 then wants p0 at rank 2 but p0 is Odd.
        let s = solve("rmm 1\n3 2 2\na0 : p0@1\na1 : p0@1\na2 : p1@1 p0@2\n");
        let e = s.instance().find_edge(2, 0).unwrap();
        assert_eq!(s.label(1, 1), Label::Odd);
        assert!(!s.edge_in_phase(e, 2));
    }

    #[test]
    fn first_phase_is_rank_one_graph() {
        let inst = Instance::parse("rmm 1\n2 2 2\na0 : p0@1 p1@2\na1 : p1@1\n").unwrap();
        let s = rmm_solve(&inst);
        let view = s.phase_view(1).unwrap();
        assert_eq!(view.edge_count(), inst.edges_of_rank(1).len());
        assert!(s.phase_view(3).is_err());
        assert!(s.phase_view(0).is_err());
    }

    #[test]
    fn phases_satisfy_edmonds_gallai_facts() {
        let s = solve("rmm 1\n3 3 3\na0 : p0@1 p1@2\na1 : p0@1 p2@3\na2 : p1@1 p2@2\n");
        for i in 1..=3 {
            let view = s.phase_view(i).unwrap();
            let m = s.phase_matching(i);
            let labels = eg_decompose(&view, &m).unwrap();
            assert_eq!(labels.0, s.phase_labels(i).0);
            verify_decomposition(&view, &m, &labels, |v| s.instance().vertex_exists(v)).unwrap();
        }
    }

    #[test]
    fn type_lists() {
        let t = TypeChanges::from_labels([(1, Label::Even), (2, Label::Odd), (3, Label::Odd), (4, Label::Unreachable)]);
        assert_eq!(t.entries(), &[(2, Label::Odd), (4, Label::Unreachable)]);
        assert_eq!(t.label(1), Label::Even);
        assert_eq!(t.label(3), Label::Odd);
        assert_eq!(t.label(9), Label::Unreachable);
        assert!(t.alive(2) && !t.alive(3));
    }

    #[test]
    fn odd_vertex_can_turn_even_again() {
        // p0 is Odd after rank 1; a1 then takes p2 and a0 can swap to p1, freeing p0.
        let s = solve("rmm 1\n2 3 2\na0 : p0@1 p1@2\na1 : p0@1 p2@2\n");
        assert_eq!(s.label(1, 1), Label::Odd);
        assert_eq!(s.label(1, 2), Label::Even);
        assert!(!s.is_alive(1, 3));
    }
}
