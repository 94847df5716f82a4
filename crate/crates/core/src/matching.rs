//! Bipartite maximum-matching primitives on arbitrary edge subsets:
//! augmentation, Edmonds–Gallai labelling and alternating forests.
//!
//! Everything here works on flat vertex ids (see [`crate::instance`]) and
//! ignores ranks. Graphs are supplied through the [`Adjacency`] trait so the
//! static solver can run on its phase graphs without materialising them.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::instance::{is_post, Matching, Vid};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchingError {
    #[error("matched pair {0} - {1} is not an edge of the view")]
    SeedEdgeMissing(Vid, Vid),
    #[error("supplied matching is not maximum: augmenting path through {0} - {1}")]
    NotMaximum(Vid, Vid),
    #[error("forest root {0} is matched")]
    RootMatched(Vid),
}

/// Neighbour access for a bipartite graph over flat vertex ids.
pub trait Adjacency {
    /// Exclusive upper bound on vertex ids.
    fn universe(&self) -> usize;
    fn neighbors(&self, v: Vid) -> impl Iterator<Item = Vid> + '_;

    fn has_edge(&self, u: Vid, v: Vid) -> bool {
        self.neighbors(u).any(|w| w == v)
    }
}

/// A materialised edge subset with sorted neighbour lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphView {
    adj: Vec<Vec<Vid>>,
}

impl GraphView {
    pub fn new(universe: usize) -> Self {
        GraphView { adj: vec![Vec::new(); universe] }
    }

    pub fn from_edges(universe: usize, edges: impl IntoIterator<Item = (Vid, Vid)>) -> Self {
        let mut g = GraphView::new(universe);
        for (u, v) in edges {
            g.adj[u].push(v);
            g.adj[v].push(u);
        }
        for list in &mut g.adj {
            list.sort_unstable();
            list.dedup();
        }
        g
    }

    pub fn add_edge(&mut self, u: Vid, v: Vid) {
        let need = u.max(v) + 1;
        if self.adj.len() < need {
            self.adj.resize(need, Vec::new());
        }
        for (x, y) in [(u, v), (v, u)] {
            if let Err(at) = self.adj[x].binary_search(&y) {
                self.adj[x].insert(at, y);
            }
        }
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(applicant, post)` flat pairs, sorted.
    pub fn edges(&self) -> Vec<(Vid, Vid)> {
        let mut out = Vec::new();
        for (u, list) in self.adj.iter().enumerate() {
            if !is_post(u) {
                out.extend(list.iter().map(|&v| (u, v)));
            }
        }
        out
    }

    pub fn degree(&self, v: Vid) -> usize {
        self.adj.get(v).map_or(0, Vec::len)
    }
}

impl Adjacency for GraphView {
    fn universe(&self) -> usize {
        self.adj.len()
    }

    fn neighbors(&self, v: Vid) -> impl Iterator<Item = Vid> + '_ {
        self.adj.get(v).into_iter().flatten().copied()
    }

    fn has_edge(&self, u: Vid, v: Vid) -> bool {
        self.adj.get(u).is_some_and(|l| l.binary_search(&v).is_ok())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Even,
    Odd,
    Unreachable,
}

impl Label {
    pub fn letter(self) -> char {
        match self {
            Label::Even => 'E',
            Label::Odd => 'O',
            Label::Unreachable => 'U',
        }
    }

    pub fn from_letter(c: char) -> Option<Label> {
        match c {
            'E' => Some(Label::Even),
            'O' => Some(Label::Odd),
            'U' => Some(Label::Unreachable),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Even/Odd/Unreachable label per flat vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EgLabels(pub Vec<Label>);

impl EgLabels {
    pub fn get(&self, v: Vid) -> Label {
        self.0.get(v).copied().unwrap_or(Label::Even)
    }

    pub fn count(&self, label: Label, mut present: impl FnMut(Vid) -> bool) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|&(v, &l)| l == label && present(v))
            .count()
    }
}

/// Counts edge inspections. Shared by every traversal in the crate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Work {
    pub edges: u64,
}

impl Work {
    #[inline]
    pub fn touch(&mut self) {
        self.edges += 1;
    }
}

/// Makes `seed` maximum in `view` by repeated augmentation.
///
/// Each round grows one alternating BFS forest from all free applicants,
/// visiting neighbours in iteration order, and stops growing a tree as soon
/// as it yields a shortest augmenting path. All paths found in a round are
/// vertex-disjoint and applied together.
pub fn augment_to_maximum<G: Adjacency>(view: &G, seed: Matching) -> Result<Matching, MatchingError> {
    for (a, p) in seed.pairs() {
        let (u, v) = (2 * a as usize, 2 * p as usize + 1);
        if !view.has_edge(u, v) {
            return Err(MatchingError::SeedEdgeMissing(u, v));
        }
    }
    let mut m = seed;
    augment_in_place(view, &mut m, None, &mut Work::default());
    Ok(m)
}

/// Trusted augmentation. When `sources` is given, only those free applicants
/// start trees (callers pass a superset of the free applicants that can
/// still augment). Returns the number of augmentations.
pub(crate) fn augment_in_place<G: Adjacency>(
    view: &G,
    m: &mut Matching,
    sources: Option<&[Vid]>,
    work: &mut Work,
) -> usize {
    let n = view.universe();
    let mut parent = vec![usize::MAX; n];
    let mut root_of = vec![usize::MAX; n];
    let mut touched: Vec<Vid> = Vec::new();
    let mut total = 0;
    let mut candidates: Vec<Vid> = match sources {
        Some(s) => s.to_vec(),
        None => (0..n).step_by(2).collect(),
    };
    loop {
        candidates.retain(|&a| m.is_free(a) && a < n);
        let mut queue = VecDeque::new();
        for &a in &candidates {
            root_of[a] = a;
            touched.push(a);
            queue.push_back(a);
        }
        let mut done_root = vec![false; 0];
        done_root.resize(n, false);
        let mut paths: Vec<Vid> = Vec::new();
        while let Some(a) = queue.pop_front() {
            let root = root_of[a];
            if done_root[root] {
                continue;
            }
            for p in view.neighbors(a) {
                work.touch();
                if root_of[p] != usize::MAX {
                    continue;
                }
                root_of[p] = root;
                parent[p] = a;
                touched.push(p);
                match m.mate(p) {
                    None => {
                        done_root[root] = true;
                        paths.push(p);
                        break;
                    }
                    Some(b) => {
                        if root_of[b] == usize::MAX {
                            root_of[b] = root;
                            parent[b] = p;
                            touched.push(b);
                            queue.push_back(b);
                        }
                    }
                }
            }
        }
        if paths.is_empty() {
            break;
        }
        total += paths.len();
        for end in paths {
            let mut p = end;
            loop {
                let a = parent[p];
                let next = m.mate(a);
                m.insert_vids(a, p);
                match next {
                    Some(q) => p = q,
                    None => break,
                }
            }
        }
        for v in touched.drain(..) {
            parent[v] = usize::MAX;
            root_of[v] = usize::MAX;
        }
    }
    for v in touched.drain(..) {
        parent[v] = usize::MAX;
        root_of[v] = usize::MAX;
    }
    total
}

/// Edmonds–Gallai labels of `view` with respect to the maximum matching `maximum`.
/// Fails if an augmenting path shows `maximum` is not maximum.
pub fn eg_decompose<G: Adjacency>(view: &G, maximum: &Matching) -> Result<EgLabels, MatchingError> {
    for (a, p) in maximum.pairs() {
        let (u, v) = (2 * a as usize, 2 * p as usize + 1);
        if !view.has_edge(u, v) {
            return Err(MatchingError::SeedEdgeMissing(u, v));
        }
    }
    let roots: Vec<Vid> = (0..view.universe()).filter(|&v| maximum.is_free(v)).collect();
    let (labels, conflict) = label_from_roots(view, maximum, &roots, &mut Work::default());
    match conflict {
        Some((u, v)) => Err(MatchingError::NotMaximum(u, v)),
        None => Ok(labels),
    }
}

/// Labels by alternating BFS from `roots`. Unreached vertices are Unreachable.
/// Also reports an Even–Even edge if one is seen, which witnesses a
/// non-maximum matching when `roots` are all free vertices.
pub(crate) fn label_from_roots<G: Adjacency>(
    view: &G,
    m: &Matching,
    roots: &[Vid],
    work: &mut Work,
) -> (EgLabels, Option<(Vid, Vid)>) {
    let mut labels = vec![Label::Unreachable; view.universe()];
    let mut queue = VecDeque::new();
    for &r in roots {
        if labels[r] != Label::Even {
            labels[r] = Label::Even;
            queue.push_back(r);
        }
    }
    let mut conflict = None;
    while let Some(u) = queue.pop_front() {
        let mate = m.mate(u);
        for w in view.neighbors(u) {
            work.touch();
            if Some(w) == mate {
                continue;
            }
            match labels[w] {
                Label::Unreachable => {
                    labels[w] = Label::Odd;
                    if let Some(x) = m.mate(w) {
                        if labels[x] == Label::Unreachable {
                            labels[x] = Label::Even;
                            queue.push_back(x);
                        } else if labels[x] == Label::Odd && conflict.is_none() {
                            conflict = Some((w, x));
                        }
                    }
                }
                Label::Even => {
                    if conflict.is_none() {
                        conflict = Some((u, w));
                    }
                }
                Label::Odd => {}
            }
        }
    }
    (EgLabels(labels), conflict)
}

/// Alternating forest: parent links and depth parity for every reached vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlternatingForest {
    pub parent: Vec<Option<Vid>>,
    pub depth: Vec<Option<u32>>,
    pub roots: Vec<Vid>,
}

impl AlternatingForest {
    pub fn contains(&self, v: Vid) -> bool {
        self.depth.get(v).is_some_and(Option::is_some)
    }

    pub fn is_even(&self, v: Vid) -> Option<bool> {
        self.depth.get(v).copied().flatten().map(|d| d % 2 == 0)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vid> + '_ {
        (0..self.depth.len()).filter(move |&v| self.contains(v))
    }

    /// Walk from `v` back to its root.
    pub fn path_to_root(&self, mut v: Vid) -> Vec<Vid> {
        let mut out = vec![v];
        while let Some(p) = self.parent[v] {
            out.push(p);
            v = p;
        }
        out
    }
}

/// BFS forest of alternating paths that start at `roots` with an unmatched edge.
pub fn build_alternating_forest<G: Adjacency>(
    view: &G,
    matching: &Matching,
    roots: &[Vid],
) -> Result<AlternatingForest, MatchingError> {
    if let Some(&r) = roots.iter().find(|&&r| !matching.is_free(r)) {
        return Err(MatchingError::RootMatched(r));
    }
    let n = view.universe();
    let mut parent = vec![None; n];
    let mut depth: Vec<Option<u32>> = vec![None; n];
    let mut queue = VecDeque::new();
    for &r in roots {
        if depth[r].is_none() {
            depth[r] = Some(0);
            queue.push_back(r);
        }
    }
    while let Some(u) = queue.pop_front() {
        let d = depth[u].unwrap();
        let mate = matching.mate(u);
        for w in view.neighbors(u) {
            if Some(w) == mate || depth[w].is_some() {
                continue;
            }
            depth[w] = Some(d + 1);
            parent[w] = Some(u);
            if let Some(x) = matching.mate(w) {
                if depth[x].is_none() {
                    depth[x] = Some(d + 2);
                    parent[x] = Some(w);
                    queue.push_back(x);
                }
            }
        }
    }
    Ok(AlternatingForest { parent, depth, roots: roots.to_vec() })
}

/// Checks the Edmonds–Gallai facts for a decomposition: Odd and Unreachable
/// vertices are matched, `|M| = |O| + |U|/2`, no Even–Even or Even–Unreachable
/// edge, and matched edges are Unreachable–Unreachable or Odd–Even.
pub fn verify_decomposition<G: Adjacency>(
    view: &G,
    maximum: &Matching,
    labels: &EgLabels,
    present: impl Fn(Vid) -> bool,
) -> Result<(), String> {
    let mut odd = 0usize;
    let mut unreachable = 0usize;
    for v in (0..view.universe()).filter(|&v| present(v)) {
        let l = labels.get(v);
        match l {
            Label::Odd => odd += 1,
            Label::Unreachable => unreachable += 1,
            Label::Even => {}
        }
        if l != Label::Even && maximum.is_free(v) {
            return Err(format!("vertex {v} is {l} but free"));
        }
        for w in view.neighbors(v) {
            let k = labels.get(w);
            if l == Label::Even && k != Label::Odd {
                return Err(format!("edge {v} - {w} joins {l} and {k}"));
            }
            if maximum.mate(v) == Some(w) {
                let ok = matches!(
                    (l, k),
                    (Label::Unreachable, Label::Unreachable)
                        | (Label::Odd, Label::Even)
                        | (Label::Even, Label::Odd)
                );
                if !ok {
                    return Err(format!("matched edge {v} - {w} is {l}{k}"));
                }
            }
        }
    }
    if !unreachable.is_multiple_of(2) || maximum.len() != odd + unreachable / 2 {
        return Err(format!(
            "|M| = {} but |O| = {odd}, |U| = {unreachable}",
            maximum.len()
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(i: usize) -> Vid {
        2 * i
    }
    fn p(j: usize) -> Vid {
        2 * j + 1
    }

    #[test]
    fn single_edge_augments() {
        let g = GraphView::from_edges(2, [(a(0), p(0))]);
        let m = augment_to_maximum(&g, Matching::new()).unwrap();
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn complete_three_by_three_is_perfect() {
        let edges = (0..3).flat_map(|i| (0..3).map(move |j| (a(i), p(j))));
        let g = GraphView::from_edges(6, edges);
        assert_eq!(augment_to_maximum(&g, Matching::new()).unwrap().len(), 3);
    }

    #[test]
    fn seed_outside_view_rejected() {
        let g = GraphView::from_edges(4, [(a(0), p(0))]);
        let seed = Matching::from_pairs([(1, 1)]).unwrap();
        assert!(matches!(augment_to_maximum(&g, seed), Err(MatchingError::SeedEdgeMissing(..))));
    }

    #[test]
    fn augmentation_reroutes_seed() {
        // a0-p0, a0-p1, a1-p0; seed {a0p0} must become perfect.
        let g = GraphView::from_edges(4, [(a(0), p(0)), (a(0), p(1)), (a(1), p(0))]);
        let seed = Matching::from_pairs([(0, 0)]).unwrap();
        let m = augment_to_maximum(&g, seed).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.contains(1, 0) && m.contains(0, 1));
    }

    #[test]
    fn lone_matched_edge_is_unreachable() {
        let g = GraphView::from_edges(2, [(a(0), p(0))]);
        let m = Matching::from_pairs([(0, 0)]).unwrap();
        let l = eg_decompose(&g, &m).unwrap();
        assert_eq!(l.get(a(0)), Label::Unreachable);
        assert_eq!(l.get(p(0)), Label::Unreachable);
    }

    #[test]
    fn star_labels() {
        let g = GraphView::from_edges(4, [(a(0), p(0)), (a(1), p(0))]);
        let m = Matching::from_pairs([(0, 0)]).unwrap();
        let l = eg_decompose(&g, &m).unwrap();
        assert_eq!(l.get(a(0)), Label::Even);
        assert_eq!(l.get(a(1)), Label::Even);
        assert_eq!(l.get(p(0)), Label::Odd);
        verify_decomposition(&g, &m, &l, |v| v < 3).unwrap();
    }

    #[test]
    fn non_maximum_detected() {
        let g = GraphView::from_edges(2, [(a(0), p(0))]);
        assert!(matches!(eg_decompose(&g, &Matching::new()), Err(MatchingError::NotMaximum(..))));
    }

    #[test]
    fn forest_on_three_vertex_path() {
        let g = GraphView::from_edges(4, [(a(0), p(0)), (a(1), p(0))]);
        let m = Matching::from_pairs([(1, 0)]).unwrap();
        let f = build_alternating_forest(&g, &m, &[a(0)]).unwrap();
        assert_eq!(f.is_even(p(0)), Some(false));
        assert_eq!(f.is_even(a(1)), Some(true));
        assert_eq!(f.path_to_root(a(1)), vec![a(1), p(0), a(0)]);
        assert!(build_alternating_forest(&g, &m, &[]).unwrap().vertices().next().is_none());
        assert!(matches!(
            build_alternating_forest(&g, &m, &[a(1)]),
            Err(MatchingError::RootMatched(_))
        ));
    }
}
