//! Preference instances, matchings, signatures and arrival events, plus the
//! line-oriented text formats used to exchange them.
//!
//! Vertices of both sides share one flat index space: applicant `i` is
//! `2 * i` and post `j` is `2 * j + 1`. Either side can grow without
//! renumbering the other, which is what arrivals need.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

/// Flat vertex index (see module docs).
pub type Vid = usize;

/// Index into [`Instance::edges`]. Stable across arrivals: new edges are appended.
pub type EdgeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("duplicate edge a{applicant} - p{post}")]
    DuplicateEdge { applicant: u32, post: u32 },
    #[error("edge a{applicant} - p{post} has rank 0")]
    ZeroRank { applicant: u32, post: u32 },
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("arriving vertex {got} is not the next fresh id {expected}")]
    NotFresh { expected: VertexId, got: VertexId },
    #[error("pair a{applicant} - p{post} is not an edge of the instance")]
    NotAnEdge { applicant: u32, post: u32 },
    #[error("vertex {0} is matched twice")]
    MatchedTwice(VertexId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Applicant,
    Post,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Applicant => Side::Post,
            Side::Post => Side::Applicant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    pub side: Side,
    pub index: u32,
}

impl VertexId {
    pub fn applicant(index: u32) -> Self {
        VertexId { side: Side::Applicant, index }
    }

    pub fn post(index: u32) -> Self {
        VertexId { side: Side::Post, index }
    }

    pub fn flat(self) -> Vid {
        2 * self.index as usize + (self.side == Side::Post) as usize
    }

    pub fn from_flat(v: Vid) -> Self {
        let index = (v / 2) as u32;
        if v.is_multiple_of(2) {
            VertexId::applicant(index)
        } else {
            VertexId::post(index)
        }
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            Side::Applicant => write!(f, "a{}", self.index),
            Side::Post => write!(f, "p{}", self.index),
        }
    }
}

pub fn is_post(v: Vid) -> bool {
    v % 2 == 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RankedEdge {
    pub applicant: u32,
    pub post: u32,
    pub rank: u32,
}

impl RankedEdge {
    pub fn applicant_vid(&self) -> Vid {
        2 * self.applicant as usize
    }

    pub fn post_vid(&self) -> Vid {
        2 * self.post as usize + 1
    }

    /// The endpoint opposite to `v`.
    pub fn other(&self, v: Vid) -> Vid {
        if v == self.applicant_vid() {
            self.post_vid()
        } else {
            self.applicant_vid()
        }
    }
}

/// A bipartite graph whose edges carry ranks `1..=max_rank`.
#[derive(Debug, Clone)]
pub struct Instance {
    applicant_count: u32,
    post_count: u32,
    max_rank: u32,
    edges: Vec<RankedEdge>,
    by_rank: Vec<Vec<EdgeId>>,
    // per flat vertex, sorted by (rank, neighbour)
    adj: Vec<Vec<EdgeId>>,
    lookup: HashMap<(u32, u32), EdgeId>,
}

impl Instance {
    pub fn new(applicant_count: u32, post_count: u32, max_rank: u32) -> Self {
        let universe = 2 * applicant_count.max(post_count) as usize;
        Instance {
            applicant_count,
            post_count,
            max_rank,
            edges: Vec::new(),
            by_rank: vec![Vec::new(); max_rank as usize + 1],
            adj: vec![Vec::new(); universe],
            lookup: HashMap::new(),
        }
    }

    /// Builds an instance from `(applicant, post, rank)` triples. `max_rank`
    /// is raised to the largest rank present if needed.
    pub fn from_edges(
        applicant_count: u32,
        post_count: u32,
        max_rank: u32,
        edges: impl IntoIterator<Item = (u32, u32, u32)>,
    ) -> Result<Self, InstanceError> {
        let edges: Vec<_> = edges.into_iter().collect();
        let r = edges.iter().map(|e| e.2).max().unwrap_or(0).max(max_rank);
        let mut inst = Instance::new(applicant_count, post_count, r);
        for (a, p, rank) in edges {
            inst.add_edge(a, p, rank)?;
        }
        Ok(inst)
    }

    pub fn applicant_count(&self) -> u32 {
        self.applicant_count
    }

    pub fn post_count(&self) -> u32 {
        self.post_count
    }

    pub fn max_rank(&self) -> u32 {
        self.max_rank
    }

    /// Size of the flat vertex index space.
    pub fn universe(&self) -> usize {
        self.adj.len()
    }

    pub fn vertex_exists(&self, v: Vid) -> bool {
        let id = VertexId::from_flat(v);
        match id.side {
            Side::Applicant => id.index < self.applicant_count,
            Side::Post => id.index < self.post_count,
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vid> + '_ {
        (0..self.universe()).filter(move |&v| self.vertex_exists(v))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: EdgeId) -> &RankedEdge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[RankedEdge] {
        &self.edges
    }

    /// Edge ids of rank `rank` (empty for ranks outside `1..=max_rank`).
    pub fn edges_of_rank(&self, rank: u32) -> &[EdgeId] {
        self.by_rank.get(rank as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Incident edges of `v`, sorted by rank and then neighbour id.
    pub fn incident(&self, v: Vid) -> &[EdgeId] {
        self.adj.get(v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn find_edge(&self, applicant: u32, post: u32) -> Option<EdgeId> {
        self.lookup.get(&(applicant, post)).copied()
    }

    pub fn edge_between(&self, u: Vid, v: Vid) -> Option<EdgeId> {
        let (a, p) = if is_post(u) { (v, u) } else { (u, v) };
        self.find_edge((a / 2) as u32, (p / 2) as u32)
    }

    fn ensure_universe(&mut self) {
        let universe = 2 * self.applicant_count.max(self.post_count) as usize;
        if self.adj.len() < universe {
            self.adj.resize(universe, Vec::new());
        }
    }

    fn add_edge(&mut self, a: u32, p: u32, rank: u32) -> Result<EdgeId, InstanceError> {
        if rank == 0 {
            return Err(InstanceError::ZeroRank { applicant: a, post: p });
        }
        if a >= self.applicant_count {
            return Err(InstanceError::UnknownVertex(VertexId::applicant(a)));
        }
        if p >= self.post_count {
            return Err(InstanceError::UnknownVertex(VertexId::post(p)));
        }
        if self.lookup.contains_key(&(a, p)) {
            return Err(InstanceError::DuplicateEdge { applicant: a, post: p });
        }
        if rank > self.max_rank {
            self.max_rank = rank;
        }
        if self.by_rank.len() <= rank as usize {
            self.by_rank.resize(rank as usize + 1, Vec::new());
        }
        let id = self.edges.len();
        let edge = RankedEdge { applicant: a, post: p, rank };
        self.edges.push(edge);
        self.by_rank[rank as usize].push(id);
        self.lookup.insert((a, p), id);
        for v in [edge.applicant_vid(), edge.post_vid()] {
            let other = edge.other(v);
            let edges = &self.edges;
            let list = &mut self.adj[v];
            let at = list.partition_point(|&f| {
                let g = &edges[f];
                (g.rank, g.other(v)) < (rank, other)
            });
            list.insert(at, id);
        }
        Ok(id)
    }

    /// Checks an arrival against this instance without applying it.
    pub fn validate_arrival(&self, event: &ArrivalEvent) -> Result<(), InstanceError> {
        let expected = match event.vertex.side {
            Side::Applicant => VertexId::applicant(self.applicant_count),
            Side::Post => VertexId::post(self.post_count),
        };
        if event.vertex != expected {
            return Err(InstanceError::NotFresh { expected, got: event.vertex });
        }
        let mut seen = std::collections::HashSet::new();
        for &(partner, rank) in &event.edges {
            let (a, p) = event.pair(partner);
            let pv = VertexId { side: event.vertex.side.other(), index: partner };
            let exists = match pv.side {
                Side::Applicant => partner < self.applicant_count,
                Side::Post => partner < self.post_count,
            };
            if !exists {
                return Err(InstanceError::UnknownVertex(pv));
            }
            if rank == 0 {
                return Err(InstanceError::ZeroRank { applicant: a, post: p });
            }
            if !seen.insert(partner) {
                return Err(InstanceError::DuplicateEdge { applicant: a, post: p });
            }
        }
        Ok(())
    }

    /// Adds the arriving vertex and its edges. Existing edge ids are kept.
    pub fn apply_arrival(&mut self, event: &ArrivalEvent) -> Result<Vec<EdgeId>, InstanceError> {
        self.validate_arrival(event)?;
        match event.vertex.side {
            Side::Applicant => self.applicant_count += 1,
            Side::Post => self.post_count += 1,
        }
        self.ensure_universe();
        let mut ids = Vec::with_capacity(event.edges.len());
        for &(partner, rank) in &event.edges {
            let (a, p) = event.pair(partner);
            ids.push(self.add_edge(a, p, rank)?);
        }
        Ok(ids)
    }

    /// Rank of the edge `(applicant, post)`, if present.
    pub fn rank_of(&self, applicant: u32, post: u32) -> Option<u32> {
        self.find_edge(applicant, post).map(|e| self.edges[e].rank)
    }

    /// Canonical text in the `rmm 1` format.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "rmm 1\n{} {} {}\n",
            self.applicant_count, self.post_count, self.max_rank
        );
        for a in 0..self.applicant_count {
            out.push_str(&format!("a{a} :"));
            let mut prefs: Vec<(u32, u32)> = self
                .incident(2 * a as usize)
                .iter()
                .map(|&e| (self.edges[e].post, self.edges[e].rank))
                .collect();
            prefs.sort_unstable();
            for (p, rank) in prefs {
                out.push_str(&format!(" p{p}@{rank}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the `rmm 1` text format.
    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let malformed = |line: usize, msg: &str| InstanceError::Malformed { line, msg: msg.to_string() };

        let (ln, header) = lines.next().ok_or_else(|| malformed(1, "missing header"))?;
        if header.split_whitespace().collect::<Vec<_>>() != ["rmm", "1"] {
            return Err(malformed(ln, "expected header `rmm 1`"));
        }
        let (ln, sizes) = lines.next().ok_or_else(|| malformed(ln + 1, "missing size line"))?;
        let nums: Vec<u32> = sizes
            .split_whitespace()
            .map(|t| t.parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| malformed(ln, "size line must be three non-negative integers"))?;
        let [na, np, r] = nums[..] else {
            return Err(malformed(ln, "size line must be three non-negative integers"));
        };
        let mut inst = Instance::new(na, np, r);
        let mut seen_lines = vec![false; na as usize];
        for (ln, line) in lines {
            let (head, rest) = line
                .split_once(':')
                .ok_or_else(|| malformed(ln, "expected `a<i> : ...`"))?;
            let a = parse_vertex(head.trim(), 'a').ok_or_else(|| malformed(ln, "bad applicant id"))?;
            if a >= na {
                return Err(InstanceError::UnknownVertex(VertexId::applicant(a)));
            }
            if std::mem::replace(&mut seen_lines[a as usize], true) {
                return Err(malformed(ln, "applicant listed twice"));
            }
            for tok in rest.split_whitespace() {
                let (p, rank) = parse_ranked(tok, 'p').ok_or_else(|| malformed(ln, "expected `p<j>@<rank>`"))?;
                if rank == 0 {
                    return Err(InstanceError::ZeroRank { applicant: a, post: p });
                }
                if rank > r {
                    return Err(malformed(ln, &format!("rank {rank} exceeds max rank {r}")));
                }
                inst.add_edge(a, p, rank)?;
            }
        }
        Ok(inst)
    }
}

fn parse_vertex(tok: &str, prefix: char) -> Option<u32> {
    tok.strip_prefix(prefix)?.parse().ok()
}

fn parse_ranked(tok: &str, prefix: char) -> Option<(u32, u32)> {
    let (v, rank) = tok.split_once('@')?;
    Some((parse_vertex(v, prefix)?, rank.parse().ok()?))
}

/// A new vertex together with its incident edges `(partner index, rank)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalEvent {
    pub vertex: VertexId,
    pub edges: Vec<(u32, u32)>,
}

impl ArrivalEvent {
    pub fn applicant(index: u32, edges: Vec<(u32, u32)>) -> Self {
        ArrivalEvent { vertex: VertexId::applicant(index), edges }
    }

    pub fn post(index: u32, edges: Vec<(u32, u32)>) -> Self {
        ArrivalEvent { vertex: VertexId::post(index), edges }
    }

    /// `(applicant, post)` for the edge to `partner`.
    pub fn pair(&self, partner: u32) -> (u32, u32) {
        match self.vertex.side {
            Side::Applicant => (self.vertex.index, partner),
            Side::Post => (partner, self.vertex.index),
        }
    }

    pub fn max_rank(&self) -> u32 {
        self.edges.iter().map(|e| e.1).max().unwrap_or(0)
    }

    pub fn to_line(&self) -> String {
        let prefix = match self.vertex.side {
            Side::Applicant => 'p',
            Side::Post => 'a',
        };
        let mut edges = self.edges.clone();
        edges.sort_unstable();
        let mut out = format!("arrive {} :", self.vertex);
        for (partner, rank) in edges {
            out.push_str(&format!(" {prefix}{partner}@{rank}"));
        }
        out
    }

    pub fn parse_line(line: &str, ln: usize) -> Result<Self, InstanceError> {
        let malformed = |msg: &str| InstanceError::Malformed { line: ln, msg: msg.to_string() };
        let body = line
            .trim()
            .strip_prefix("arrive")
            .ok_or_else(|| malformed("expected `arrive`"))?;
        let (head, rest) = body.split_once(':').ok_or_else(|| malformed("missing `:`"))?;
        let head = head.trim();
        let (vertex, prefix) = if let Some(i) = parse_vertex(head, 'a') {
            (VertexId::applicant(i), 'p')
        } else if let Some(j) = parse_vertex(head, 'p') {
            (VertexId::post(j), 'a')
        } else {
            return Err(malformed("bad arriving vertex"));
        };
        let edges = rest
            .split_whitespace()
            .map(|tok| parse_ranked(tok, prefix).ok_or_else(|| malformed("bad edge token")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ArrivalEvent { vertex, edges })
    }
}

/// Parses an event file: one `arrive` line per event.
pub fn parse_events(text: &str) -> Result<Vec<ArrivalEvent>, InstanceError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim().starts_with('#'))
        .map(|(i, l)| ArrivalEvent::parse_line(l, i + 1))
        .collect()
}

/// A matching stored from both sides. Indices beyond the stored length are unmatched.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    app: Vec<Option<u32>>,
    post: Vec<Option<u32>>,
    len: usize,
}

impl Matching {
    pub fn new() -> Self {
        Matching::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u32)>) -> Result<Self, InstanceError> {
        let mut m = Matching::new();
        for (a, p) in pairs {
            if m.post_of(a).is_some() {
                return Err(InstanceError::MatchedTwice(VertexId::applicant(a)));
            }
            if m.applicant_of(p).is_some() {
                return Err(InstanceError::MatchedTwice(VertexId::post(p)));
            }
            m.insert(a, p);
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn post_of(&self, a: u32) -> Option<u32> {
        self.app.get(a as usize).copied().flatten()
    }

    pub fn applicant_of(&self, p: u32) -> Option<u32> {
        self.post.get(p as usize).copied().flatten()
    }

    /// Mate of a flat vertex.
    pub fn mate(&self, v: Vid) -> Option<Vid> {
        if is_post(v) {
            self.applicant_of((v / 2) as u32).map(|a| 2 * a as usize)
        } else {
            self.post_of((v / 2) as u32).map(|p| 2 * p as usize + 1)
        }
    }

    pub fn is_free(&self, v: Vid) -> bool {
        self.mate(v).is_none()
    }

    /// Inserts `(a, p)`, dropping any pair currently using `a` or `p`.
    pub fn insert(&mut self, a: u32, p: u32) {
        self.remove_applicant(a);
        self.remove_post(p);
        if self.app.len() <= a as usize {
            self.app.resize(a as usize + 1, None);
        }
        if self.post.len() <= p as usize {
            self.post.resize(p as usize + 1, None);
        }
        self.app[a as usize] = Some(p);
        self.post[p as usize] = Some(a);
        self.len += 1;
    }

    /// Flat-index variant of [`Matching::insert`].
    pub fn insert_vids(&mut self, u: Vid, v: Vid) {
        let (a, p) = if is_post(u) { (v, u) } else { (u, v) };
        self.insert((a / 2) as u32, (p / 2) as u32);
    }

    pub fn remove_applicant(&mut self, a: u32) -> Option<u32> {
        let p = self.post_of(a)?;
        self.app[a as usize] = None;
        self.post[p as usize] = None;
        self.len -= 1;
        Some(p)
    }

    pub fn remove_post(&mut self, p: u32) -> Option<u32> {
        let a = self.applicant_of(p)?;
        self.app[a as usize] = None;
        self.post[p as usize] = None;
        self.len -= 1;
        Some(a)
    }

    pub fn unmatch(&mut self, v: Vid) {
        if is_post(v) {
            self.remove_post((v / 2) as u32);
        } else {
            self.remove_applicant((v / 2) as u32);
        }
    }

    /// Pairs `(applicant, post)` in increasing applicant order.
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.app
            .iter()
            .enumerate()
            .filter_map(|(a, p)| p.map(|p| (a as u32, p)))
    }

    pub fn contains(&self, a: u32, p: u32) -> bool {
        self.post_of(a) == Some(p)
    }

    /// Pairs present in exactly one of the two matchings.
    pub fn symmetric_difference(&self, other: &Matching) -> Vec<(u32, u32)> {
        let mut out: Vec<_> = self
            .pairs()
            .filter(|&(a, p)| !other.contains(a, p))
            .chain(other.pairs().filter(|&(a, p)| !self.contains(a, p)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Flips the matching along a vertex path `v0 v1 ... vk` whose edges alternate.
    /// Edges currently matched are removed, the others are added.
    pub fn apply_path(&mut self, path: &[Vid]) {
        let mut to_add = Vec::new();
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            if self.mate(u) == Some(v) {
                self.unmatch(u);
            } else {
                to_add.push((u, v));
            }
        }
        for (u, v) in to_add {
            self.insert_vids(u, v);
        }
    }

    /// Checks that every pair is an edge of `instance`.
    pub fn validate(&self, instance: &Instance) -> Result<(), InstanceError> {
        for (a, p) in self.pairs() {
            if instance.find_edge(a, p).is_none() {
                return Err(InstanceError::NotAnEdge { applicant: a, post: p });
            }
        }
        Ok(())
    }

    /// Matching output format: `a<i> p<j> <rank>` per pair, then the signature.
    pub fn to_text(&self, instance: &Instance) -> Result<String, InstanceError> {
        let sig = signature_of(instance, self)?;
        let mut out = String::new();
        for (a, p) in self.pairs() {
            let rank = instance.rank_of(a, p).expect("validated above");
            out.push_str(&format!("a{a} p{p} {rank}\n"));
        }
        out.push_str(&format!("signature: {sig}\n"));
        Ok(out)
    }
}

/// Number of applicants matched at each rank, compared lexicographically
/// after zero-padding.
#[derive(Debug, Clone, Default, Eq)]
pub struct Signature(pub Vec<u64>);

impl Signature {
    pub fn zeros(len: usize) -> Self {
        Signature(vec![0; len])
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn padded(&self, len: usize) -> Signature {
        let mut v = self.0.clone();
        if v.len() < len {
            v.resize(len, 0);
        }
        Signature(v)
    }
}

impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        compare_signatures(self, other) == Ordering::Equal
    }
}

impl Hash for Signature {
    /// Trailing zeros are ignored, as in equality.
    fn hash<H: Hasher>(&self, state: &mut H) {
        let len = self.0.iter().rposition(|&c| c != 0).map_or(0, |k| k + 1);
        self.0[..len].hash(state);
    }
}

impl PartialOrd for Signature {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Signature {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_signatures(self, other)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Lexicographic comparison, shorter vector padded with zeros.
pub fn compare_signatures(s1: &Signature, s2: &Signature) -> Ordering {
    let n = s1.0.len().max(s2.0.len());
    (0..n)
        .map(|i| {
            let x = s1.0.get(i).copied().unwrap_or(0);
            let y = s2.0.get(i).copied().unwrap_or(0);
            x.cmp(&y)
        })
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Signature of `matching` in `instance`, of length `instance.max_rank()`.
pub fn signature_of(instance: &Instance, matching: &Matching) -> Result<Signature, InstanceError> {
    let mut counts = vec![0u64; instance.max_rank() as usize];
    for (a, p) in matching.pairs() {
        let rank = instance
            .rank_of(a, p)
            .ok_or(InstanceError::NotAnEdge { applicant: a, post: p })?;
        counts[rank as usize - 1] += 1;
    }
    Ok(Signature(counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_instance_parses() {
        let inst = Instance::parse("rmm 1\n1 1 1\na0 : p0@1\n").unwrap();
        assert_eq!(inst.edge_count(), 1);
        assert_eq!(inst.edges_of_rank(1).len(), 1);
        assert_eq!(inst.edge(0).rank, 1);
    }

    #[test]
    fn duplicate_edge_rejected() {
        let err = Instance::parse("rmm 1\n1 1 1\na0 : p0@1 p0@1\n").unwrap_err();
        assert_eq!(err, InstanceError::DuplicateEdge { applicant: 0, post: 0 });
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Instance::parse("rmm 1\n2 1 1\na0 : p0@1\na1 : p0#1\n").unwrap_err();
        assert!(matches!(err, InstanceError::Malformed { line: 4, .. }));
        assert!(matches!(
            Instance::parse("rmm 2\n1 1 1\n"),
            Err(InstanceError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            Instance::parse("rmm 1\n1 1 2\na0 : p0@0\n"),
            Err(InstanceError::ZeroRank { .. })
        ));
        assert!(matches!(
            Instance::parse("rmm 1\n1 1 2\na0 : p3@1\n"),
            Err(InstanceError::UnknownVertex(_))
        ));
        assert!(matches!(
            Instance::parse("rmm 1\n1 1 2\na4 : p0@1\n"),
            Err(InstanceError::UnknownVertex(_))
        ));
    }

    #[test]
    fn ties_and_gaps_are_allowed() {
        let inst = Instance::parse("rmm 1\n1 3 4\na0 : p0@1 p1@1 p2@4\n").unwrap();
        assert_eq!(inst.edge_count(), 3);
        assert_eq!(inst.edges_of_rank(2).len(), 0);
    }

    #[test]
    fn canonical_text_sorts_posts() {
        let inst = Instance::parse("rmm 1\n2 3 2\na1 : p2@1 p0@2\na0 :\n").unwrap();
        assert_eq!(inst.to_text(), "rmm 1\n2 3 2\na0 :\na1 : p0@2 p2@1\n");
    }

    #[test]
    fn signatures() {
        let inst = Instance::parse("rmm 1\n1 1 3\na0 : p0@1\n").unwrap();
        assert_eq!(signature_of(&inst, &Matching::new()).unwrap().0, vec![0, 0, 0]);
        let m = Matching::from_pairs([(0, 0)]).unwrap();
        assert_eq!(signature_of(&inst, &m).unwrap().0, vec![1, 0, 0]);
        let bad = Matching::from_pairs([(0, 1)]).unwrap();
        assert!(signature_of(&inst, &bad).is_err());
    }

    #[test]
    fn equal_signatures_hash_alike() {
        use std::collections::HashSet;
        let set: HashSet<Signature> = [Signature(vec![1, 0]), Signature(vec![1]), Signature(vec![])].into();
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn lexicographic_order() {
        use Ordering::*;
        assert_eq!(compare_signatures(&Signature(vec![2, 0]), &Signature(vec![1, 5])), Greater);
        assert_eq!(compare_signatures(&Signature(vec![1, 1]), &Signature(vec![1, 1])), Equal);
        assert_eq!(compare_signatures(&Signature(vec![1]), &Signature(vec![1, 0, 0])), Equal);
        assert_eq!(compare_signatures(&Signature(vec![1]), &Signature(vec![1, 0, 1])), Less);
    }

    #[test]
    fn arrivals_validate_freshness() {
        let mut inst = Instance::parse("rmm 1\n1 1 1\na0 : p0@1\n").unwrap();
        let stale = ArrivalEvent::applicant(0, vec![(0, 1)]);
        assert!(matches!(inst.apply_arrival(&stale), Err(InstanceError::NotFresh { .. })));
        let dup = ArrivalEvent::applicant(1, vec![(0, 1), (0, 2)]);
        assert!(matches!(inst.apply_arrival(&dup), Err(InstanceError::DuplicateEdge { .. })));
        let ok = ArrivalEvent::post(1, vec![(0, 3)]);
        inst.apply_arrival(&ok).unwrap();
        assert_eq!(inst.post_count(), 2);
        assert_eq!(inst.max_rank(), 3);
        assert_eq!(inst.rank_of(0, 1), Some(3));
    }

    #[test]
    fn event_lines_round_trip() {
        let ev = ArrivalEvent::parse_line("arrive p3 : a0@2 a1@1", 1).unwrap();
        assert_eq!(ev, ArrivalEvent::post(3, vec![(0, 2), (1, 1)]));
        assert_eq!(ev.to_line(), "arrive p3 : a0@2 a1@1");
        assert!(ArrivalEvent::parse_line("leave a1 :", 7).is_err());
    }

    #[test]
    fn matching_text() {
        let inst = Instance::parse("rmm 1\n2 2 2\na0 : p0@1\na1 : p0@1 p1@2\n").unwrap();
        let m = Matching::from_pairs([(0, 0), (1, 1)]).unwrap();
        assert_eq!(m.to_text(&inst).unwrap(), "a0 p0 1\na1 p1 2\nsignature: (1,1)\n");
    }
}
