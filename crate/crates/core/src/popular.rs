//! Popular matchings for strict one-sided preferences.
//!
//! A matching is popular when every first-choice post (f-post) is matched
//! and every applicant holds either its f-post or its s-post, the best post
//! on its list that is nobody's first choice. Each applicant also gets a
//! private last-resort post standing for "unmatched", so an s-post always
//! exists. The f-edges become rank 1 and the s-edges rank 2. A popular
//! matching exists exactly when a rank-maximal matching of that two-rank
//! instance matches every applicant.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::decomp::{process_arrival, DecompError};
use crate::instance::{ArrivalEvent, Instance, InstanceError, Matching};
use crate::rmm_static::{rmm_solve, RmmState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PopularError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: ties are not supported")]
    Tie { line: usize },
    #[error("applicant a{applicant} lists p{post} twice")]
    DuplicatePost { applicant: u32, post: u32 },
    #[error("applicant a{0} appears twice")]
    DuplicateApplicant(u32),
    #[error("p{post} does not exist ({posts} posts)")]
    UnknownPost { post: u32, posts: u32 },
    #[error("a{applicant} does not exist ({applicants} applicants)")]
    UnknownApplicant { applicant: u32, applicants: u32 },
    #[error("expected {expected}, got {got}")]
    NotFresh { expected: String, got: String },
    #[error("position {position} outside the list of a{applicant}")]
    BadPosition { applicant: u32, position: u32 },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Update(#[from] DecompError),
}

/// Applicants with strictly ordered lists over posts `0..posts`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PreferenceInstance {
    prefs: Vec<Vec<u32>>,
    posts: u32,
}

fn parse_index(token: &str, prefix: char, line: usize) -> Result<u32, PopularError> {
    token
        .strip_prefix(prefix)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| PopularError::Parse { line, msg: format!("expected {prefix}<index>, got `{token}`") })
}

fn parse_posts(tokens: &[&str], line: usize) -> Result<Vec<u32>, PopularError> {
    if tokens.iter().any(|t| t.contains(['(', ')', '{', '}', '='])) {
        return Err(PopularError::Tie { line });
    }
    tokens.iter().map(|t| parse_index(t, 'p', line)).collect()
}

impl PreferenceInstance {
    pub fn new(prefs: Vec<Vec<u32>>, posts: u32) -> Result<Self, PopularError> {
        for (a, list) in prefs.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &p in list {
                if p >= posts {
                    return Err(PopularError::UnknownPost { post: p, posts });
                }
                if !seen.insert(p) {
                    return Err(PopularError::DuplicatePost { applicant: a as u32, post: p });
                }
            }
        }
        Ok(PreferenceInstance { prefs, posts })
    }

    /// Parses lines `a<i> : p<j> p<k> ...`, best first. An optional
    /// `posts <n>` line declares unlisted posts; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, PopularError> {
        let mut lists: Vec<Option<Vec<u32>>> = Vec::new();
        let mut posts = 0;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(n) = body.strip_prefix("posts ") {
                let n: u32 = n.trim().parse().map_err(|_| PopularError::Parse { line, msg: "bad post count".into() })?;
                posts = posts.max(n);
                continue;
            }
            let (head, rest) = body
                .split_once(':')
                .ok_or_else(|| PopularError::Parse { line, msg: "missing `:`".into() })?;
            let a = parse_index(head.trim(), 'a', line)?;
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            let list = parse_posts(&tokens, line)?;
            posts = posts.max(list.iter().map(|&p| p + 1).max().unwrap_or(0));
            if lists.len() <= a as usize {
                lists.resize(a as usize + 1, None);
            }
            if lists[a as usize].replace(list).is_some() {
                return Err(PopularError::DuplicateApplicant(a));
            }
        }
        PreferenceInstance::new(lists.into_iter().map(Option::unwrap_or_default).collect(), posts)
    }

    pub fn applicant_count(&self) -> u32 {
        self.prefs.len() as u32
    }

    pub fn post_count(&self) -> u32 {
        self.posts
    }

    pub fn prefs(&self) -> &[Vec<u32>] {
        &self.prefs
    }

    /// 0-based position of `post` on `applicant`'s list.
    pub fn position(&self, applicant: u32, post: u32) -> Option<usize> {
        self.prefs.get(applicant as usize)?.iter().position(|&p| p == post)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("posts {}\n", self.posts);
        for (a, list) in self.prefs.iter().enumerate() {
            out.push_str(&format!("a{a} :"));
            for p in list {
                out.push_str(&format!(" p{p}"));
            }
            out.push('\n');
        }
        out
    }

    fn validate(&self, event: &PrefEvent) -> Result<(), PopularError> {
        match event {
            PrefEvent::Applicant { index, prefs } => {
                if *index != self.applicant_count() {
                    return Err(PopularError::NotFresh {
                        expected: format!("a{}", self.applicant_count()),
                        got: format!("a{index}"),
                    });
                }
                PreferenceInstance::new(vec![prefs.clone()], self.posts).map(|_| ())
            }
            PrefEvent::Post { index, insertions } => {
                if *index != self.posts {
                    return Err(PopularError::NotFresh { expected: format!("p{}", self.posts), got: format!("p{index}") });
                }
                let mut seen = BTreeSet::new();
                for &(a, position) in insertions {
                    let list = self.prefs.get(a as usize).ok_or(PopularError::UnknownApplicant {
                        applicant: a,
                        applicants: self.applicant_count(),
                    })?;
                    if !seen.insert(a) {
                        return Err(PopularError::DuplicatePost { applicant: a, post: *index });
                    }
                    if position == 0 || position as usize > list.len() + 1 {
                        return Err(PopularError::BadPosition { applicant: a, position });
                    }
                }
                Ok(())
            }
        }
    }

    /// Applies a validated arrival.
    pub fn apply(&mut self, event: &PrefEvent) -> Result<(), PopularError> {
        self.validate(event)?;
        match event {
            PrefEvent::Applicant { prefs, .. } => self.prefs.push(prefs.clone()),
            PrefEvent::Post { index, insertions } => {
                self.posts += 1;
                for &(a, position) in insertions {
                    self.prefs[a as usize].insert(position as usize - 1, *index);
                }
            }
        }
        Ok(())
    }
}

/// Arrival in a preference stream. A new post is inserted into existing
/// lists at the given 1-based positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrefEvent {
    Applicant { index: u32, prefs: Vec<u32> },
    Post { index: u32, insertions: Vec<(u32, u32)> },
}

impl PrefEvent {
    /// `arrive a<i> : p<j> ...` or `arrive p<j> : a<i>@<position> ...`.
    pub fn parse_line(text: &str, line: usize) -> Result<Self, PopularError> {
        let bad = |msg: &str| PopularError::Parse { line, msg: msg.to_string() };
        let body = text.trim().strip_prefix("arrive").ok_or_else(|| bad("expected `arrive`"))?;
        let (head, rest) = body.split_once(':').ok_or_else(|| bad("missing `:`"))?;
        let head = head.trim();
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        if head.starts_with('a') {
            let index = parse_index(head, 'a', line)?;
            Ok(PrefEvent::Applicant { index, prefs: parse_posts(&tokens, line)? })
        } else {
            let index = parse_index(head, 'p', line)?;
            let insertions = tokens
                .iter()
                .map(|t| {
                    let (a, pos) = t.split_once('@').ok_or_else(|| bad("expected a<i>@<position>"))?;
                    let pos = pos.parse().map_err(|_| bad("bad position"))?;
                    Ok((parse_index(a, 'a', line)?, pos))
                })
                .collect::<Result<_, PopularError>>()?;
            Ok(PrefEvent::Post { index, insertions })
        }
    }
}

/// Parses one event per non-empty line; `#` starts a comment.
pub fn parse_pref_events(text: &str) -> Result<Vec<PrefEvent>, PopularError> {
    text.lines()
        .enumerate()
        .filter_map(|(k, raw)| {
            let body = raw.split('#').next().unwrap_or("").trim();
            (!body.is_empty()).then(|| PrefEvent::parse_line(body, k + 1))
        })
        .collect()
}

/// Second edge of an applicant in the two-rank instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SecondPost {
    Real(u32),
    LastResort,
}

/// The two-rank instance: rank-1 edges to f-posts, rank-2 edges to s-posts.
#[derive(Debug, Clone)]
pub struct PopularReduction {
    instance: Instance,
    first: Vec<Option<u32>>,
    second: Vec<SecondPost>,
    /// Instance post index of each real post and of each applicant's last resort.
    real_slot: Vec<u32>,
    resort_slot: Vec<u32>,
    /// Real post behind each instance post; `None` for last resorts.
    origin: Vec<Option<u32>>,
    first_count: Vec<u32>,
    listers: Vec<Vec<u32>>,
}

impl PopularReduction {
    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn f_post(&self, applicant: u32) -> Option<u32> {
        self.first[applicant as usize]
    }

    pub fn s_post(&self, applicant: u32) -> SecondPost {
        self.second[applicant as usize]
    }

    /// Instance post index of `applicant`'s last resort.
    pub fn last_resort(&self, applicant: u32) -> u32 {
        self.resort_slot[applicant as usize]
    }

    /// `(f-post, s-post)` of every applicant.
    pub fn choices(&self) -> Vec<(Option<u32>, SecondPost)> {
        self.first.iter().copied().zip(self.second.iter().copied()).collect()
    }

    fn best_second(&self, list: &[u32]) -> SecondPost {
        list.iter()
            .copied()
            .find(|&p| self.first_count[p as usize] == 0)
            .map_or(SecondPost::LastResort, SecondPost::Real)
    }

    fn count_first(&mut self, p: u32, up: bool, flipped: &mut Vec<u32>) {
        let c = &mut self.first_count[p as usize];
        let was_free = *c == 0;
        if up {
            *c += 1;
        } else {
            *c -= 1;
        }
        if was_free != (*c == 0) {
            flipped.push(p);
        }
    }

    fn edges_of(&self, a: u32) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(2);
        if let Some(f) = self.first[a as usize] {
            out.push((self.real_slot[f as usize], 1));
        }
        let s = match self.second[a as usize] {
            SecondPost::Real(p) => self.real_slot[p as usize],
            SecondPost::LastResort => self.resort_slot[a as usize],
        };
        out.push((s, 2));
        out
    }

    fn add_post(&mut self, real: Option<u32>) -> u32 {
        let slot = self.origin.len() as u32;
        self.origin.push(real);
        match real {
            Some(_) => {
                self.real_slot.push(slot);
                self.first_count.push(0);
                self.listers.push(Vec::new());
            }
            None => self.resort_slot.push(slot),
        }
        slot
    }

    fn rebuild_instance(&mut self) {
        let applicants = self.first.len() as u32;
        let edges: Vec<(u32, u32, u32)> =
            (0..applicants).flat_map(|a| self.edges_of(a).into_iter().map(move |(p, r)| (a, p, r))).collect();
        self.instance = Instance::from_edges(applicants, self.origin.len() as u32, 2, edges).expect("reduction edges are valid");
    }

    /// Matching of the original instance: last-resort pairs dropped.
    pub fn project(&self, m: &Matching) -> Matching {
        Matching::from_pairs(m.pairs().filter_map(|(a, p)| self.origin[p as usize].map(|real| (a, real))))
            .expect("projection keeps a matching")
    }
}

/// Builds the two-rank instance for `pref`.
pub fn reduce_to_rmm(pref: &PreferenceInstance) -> PopularReduction {
    let n = pref.applicant_count();
    let mut red = PopularReduction {
        instance: Instance::new(0, 0, 2),
        first: pref.prefs.iter().map(|l| l.first().copied()).collect(),
        second: Vec::new(),
        real_slot: Vec::new(),
        resort_slot: Vec::new(),
        origin: Vec::new(),
        first_count: Vec::new(),
        listers: Vec::new(),
    };
    for p in 0..pref.posts {
        red.add_post(Some(p));
    }
    for _ in 0..n {
        red.add_post(None);
    }
    for (a, list) in pref.prefs.iter().enumerate() {
        for &p in list {
            red.listers[p as usize].push(a as u32);
        }
        if let Some(&f) = list.first() {
            red.first_count[f as usize] += 1;
        }
    }
    red.second = pref.prefs.iter().map(|l| red.best_second(l)).collect();
    red.rebuild_instance();
    red
}

/// Verdict of [`popular_solve`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PopularVerdict {
    Popular(Matching),
    NoPopularMatching,
}

fn verdict(reduction: &PopularReduction, state: &RmmState) -> PopularVerdict {
    if state.matching().len() == reduction.first.len() {
        PopularVerdict::Popular(reduction.project(state.matching()))
    } else {
        PopularVerdict::NoPopularMatching
    }
}

/// A popular matching of `pref`, or the verdict that none exists.
pub fn popular_solve(pref: &PreferenceInstance) -> PopularVerdict {
    let reduction = reduce_to_rmm(pref);
    verdict(&reduction, &rmm_solve(reduction.instance()))
}

/// How an arrival was absorbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateRoute {
    /// Only the new vertex's edges changed; the dynamic engine handled it.
    Incremental,
    /// Some existing applicant's f- or s-post changed; the two-rank instance was re-solved.
    Resolved,
}

/// Preferences, their reduction and its rank-maximal state, kept in step.
#[derive(Debug, Clone)]
pub struct PopularState {
    pref: PreferenceInstance,
    reduction: PopularReduction,
    state: RmmState,
}

impl PopularState {
    pub fn new(pref: PreferenceInstance) -> Self {
        let reduction = reduce_to_rmm(&pref);
        let state = rmm_solve(reduction.instance());
        PopularState { pref, reduction, state }
    }

    pub fn preferences(&self) -> &PreferenceInstance {
        &self.pref
    }

    pub fn reduction(&self) -> &PopularReduction {
        &self.reduction
    }

    pub fn rmm_state(&self) -> &RmmState {
        &self.state
    }

    pub fn verdict(&self) -> PopularVerdict {
        verdict(&self.reduction, &self.state)
    }
}

fn step(state: RmmState, event: &ArrivalEvent) -> Result<RmmState, PopularError> {
    Ok(process_arrival(state, event)?.0)
}

/// Absorbs one arrival. f- and s-posts are recomputed only for applicants
/// listing a post whose first-choice status changed.
pub fn popular_update(current: PopularState, event: &PrefEvent) -> Result<(PopularState, UpdateRoute), PopularError> {
    let PopularState { mut pref, mut reduction, state } = current;
    pref.apply(event)?;
    // Applicants whose s-post must be recomputed, and posts whose f-status flipped.
    let mut dirty: BTreeSet<u32> = BTreeSet::new();
    let mut flipped: Vec<u32> = Vec::new();
    let mut changed_existing = false;
    let new_applicant = match event {
        PrefEvent::Applicant { prefs, .. } => {
            let a = reduction.first.len() as u32;
            reduction.add_post(None);
            reduction.first.push(prefs.first().copied());
            reduction.second.push(SecondPost::LastResort);
            for &p in prefs {
                reduction.listers[p as usize].push(a);
            }
            if let Some(&f) = prefs.first() {
                reduction.count_first(f, true, &mut flipped);
            }
            Some(a)
        }
        PrefEvent::Post { index, insertions } => {
            reduction.add_post(Some(*index));
            for &(a, position) in insertions {
                reduction.listers[*index as usize].push(a);
                dirty.insert(a);
                if position == 1 {
                    changed_existing = true;
                    let old = reduction.first[a as usize].replace(*index);
                    reduction.count_first(*index, true, &mut flipped);
                    if let Some(q) = old {
                        reduction.count_first(q, false, &mut flipped);
                    }
                }
            }
            None
        }
    };
    for &p in &flipped {
        dirty.extend(reduction.listers[p as usize].iter().copied());
    }
    dirty.extend(new_applicant);
    for &a in &dirty {
        let s = reduction.best_second(&pref.prefs[a as usize]);
        if Some(a) != new_applicant && s != reduction.second[a as usize] {
            changed_existing = true;
        }
        reduction.second[a as usize] = s;
    }

    if changed_existing {
        reduction.rebuild_instance();
        let state = rmm_solve(reduction.instance());
        return Ok((PopularState { pref, reduction, state }, UpdateRoute::Resolved));
    }
    let mut state = state;
    let post = ArrivalEvent::post(state.instance().post_count(), Vec::new());
    reduction.instance.apply_arrival(&post)?;
    state = step(state, &post)?;
    if let Some(a) = new_applicant {
        let event = ArrivalEvent::applicant(a, reduction.edges_of(a));
        reduction.instance.apply_arrival(&event)?;
        state = step(state, &event)?;
    }
    Ok((PopularState { pref, reduction, state }, UpdateRoute::Incremental))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{brute_is_popular, brute_popular_matching};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_prefs(rng: &mut ChaCha8Rng, applicants: u32, posts: u32) -> PreferenceInstance {
        let all: Vec<u32> = (0..posts).collect();
        let prefs = (0..applicants)
            .map(|_| {
                let k = rng.gen_range(0..=posts.min(3) as usize);
                all.choose_multiple(rng, k).copied().collect()
            })
            .collect();
        PreferenceInstance::new(prefs, posts).unwrap()
    }

    fn check_against_votes(pref: &PreferenceInstance, got: &PopularVerdict) {
        let expect = brute_popular_matching(pref.prefs(), pref.post_count());
        match got {
            PopularVerdict::Popular(m) => assert!(brute_is_popular(pref.prefs(), pref.post_count(), m)),
            PopularVerdict::NoPopularMatching => assert!(expect.is_none(), "{}", pref.to_text()),
        }
    }

    #[test]
    fn parsing() {
        let pref = PreferenceInstance::parse("posts 4\na0 : p2 p0\na2 : p1 # late\n").unwrap();
        assert_eq!(pref.prefs(), &[vec![2, 0], vec![], vec![1]]);
        assert_eq!(pref.post_count(), 4);
        assert_eq!(PreferenceInstance::parse(&pref.to_text()).unwrap(), pref);
        assert_eq!(PreferenceInstance::parse("a0 : (p0 p1)\n"), Err(PopularError::Tie { line: 1 }));
        assert!(matches!(PreferenceInstance::parse("a0 : p0 p0\n"), Err(PopularError::DuplicatePost { .. })));
        assert!(matches!(PreferenceInstance::parse("a0 : p0\na0 : p1\n"), Err(PopularError::DuplicateApplicant(0))));
        let events = parse_pref_events("arrive a3 : p1\narrive p4 : a0@1 a2@2\n").unwrap();
        assert_eq!(events[1], PrefEvent::Post { index: 4, insertions: vec![(0, 1), (2, 2)] });
    }

    #[test]
    fn single_applicant_reduction() {
        let red = reduce_to_rmm(&PreferenceInstance::parse("a0 : p0\n").unwrap());
        let inst = red.instance();
        assert_eq!(inst.max_rank(), 2);
        assert_eq!(inst.rank_of(0, 0), Some(1));
        assert_eq!(inst.rank_of(0, red.last_resort(0)), Some(2));
        assert_eq!(red.s_post(0), SecondPost::LastResort);
    }

    #[test]
    fn shared_first_choice_sends_both_to_the_next_post() {
        let red = reduce_to_rmm(&PreferenceInstance::parse("a0 : p0 p1\na1 : p0 p1\n").unwrap());
        for a in 0..2 {
            assert_eq!(red.f_post(a), Some(0));
            assert_eq!(red.s_post(a), SecondPost::Real(1));
        }
    }

    #[test]
    fn small_verdicts() {
        let one = PreferenceInstance::parse("a0 : p0\n").unwrap();
        assert_eq!(popular_solve(&one), PopularVerdict::Popular(Matching::from_pairs([(0, 0)]).unwrap()));
        let three = PreferenceInstance::parse("a0 : p0\na1 : p0\na2 : p0\n").unwrap();
        let got = popular_solve(&three);
        assert!(matches!(&got, PopularVerdict::Popular(m) if m.len() == 1));
        check_against_votes(&three, &got);
        // Classic instance with no popular matching: three applicants, same list of three posts.
        let cyclic = PreferenceInstance::parse("a0 : p0 p1 p2\na1 : p0 p1 p2\na2 : p0 p1 p2\n").unwrap();
        assert_eq!(popular_solve(&cyclic), PopularVerdict::NoPopularMatching);
        assert!(brute_popular_matching(cyclic.prefs(), 3).is_none());
    }

    #[test]
    fn random_verdicts_match_votes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..150 {
            let (na, np) = (rng.gen_range(1..=5), rng.gen_range(1..=4));
            let pref = random_prefs(&mut rng, na, np);
            check_against_votes(&pref, &popular_solve(&pref));
        }
    }

    #[test]
    fn empty_list_arrival_takes_its_last_resort() {
        let state = PopularState::new(PreferenceInstance::parse("a0 : p0\n").unwrap());
        let before = state.verdict();
        let event = PrefEvent::Applicant { index: 1, prefs: vec![] };
        let (next, route) = popular_update(state, &event).unwrap();
        assert_eq!(route, UpdateRoute::Incremental);
        assert_eq!(next.verdict(), before);
        let lr = next.reduction().last_resort(1);
        assert_eq!(next.rmm_state().matching().post_of(1), Some(lr));
    }

    #[test]
    fn new_first_choice_changes_only_its_listers() {
        let pref = PreferenceInstance::parse("a0 : p0 p1\na1 : p1\na2 : p0\n").unwrap();
        let state = PopularState::new(pref);
        let event = PrefEvent::Post { index: 2, insertions: vec![(0, 1), (1, 2)] };
        let before: Vec<_> = state.reduction().choices();
        let (next, _) = popular_update(state, &event).unwrap();
        let after = next.reduction().choices();
        assert_eq!(after[0].0, Some(2));
        assert_eq!(after[1].0, before[1].0);
        assert_eq!(after[2].0, before[2].0);
        assert_eq!(after, reduce_to_rmm(next.preferences()).choices());
    }

    #[test]
    fn random_streams_match_scratch() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut routes = [0; 2];
        for _ in 0..80 {
            let (na, np) = (rng.gen_range(0..=4), rng.gen_range(1..=4));
            let mut state = PopularState::new(random_prefs(&mut rng, na, np));
            for _ in 0..4 {
                let pref = state.preferences();
                let event = if rng.gen_bool(0.5) {
                    let all: Vec<u32> = (0..pref.post_count()).collect();
                    let k = rng.gen_range(0..=all.len().min(3));
                    PrefEvent::Applicant { index: pref.applicant_count(), prefs: all.choose_multiple(&mut rng, k).copied().collect() }
                } else {
                    let mut insertions = Vec::new();
                    for a in 0..pref.applicant_count() {
                        if rng.gen_bool(0.4) {
                            insertions.push((a, rng.gen_range(1..=pref.prefs()[a as usize].len() as u32 + 1)));
                        }
                    }
                    PrefEvent::Post { index: pref.post_count(), insertions }
                };
                let route;
                (state, route) = popular_update(state, &event).unwrap();
                routes[(route == UpdateRoute::Resolved) as usize] += 1;
                let scratch = popular_solve(state.preferences());
                assert_eq!(
                    matches!(state.verdict(), PopularVerdict::Popular(_)),
                    matches!(scratch, PopularVerdict::Popular(_))
                );
                assert_eq!(state.reduction().choices(), reduce_to_rmm(state.preferences()).choices());
                if state.preferences().applicant_count() <= 6 {
                    check_against_votes(state.preferences(), &state.verdict());
                }
            }
        }
        assert!(routes[0] > 0 && routes[1] > 0, "{routes:?}");
    }
}
