//! Exhaustive ground truth for small instances. Nothing here depends on the
//! solver modules; only the instance data types are shared.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::instance::{compare_signatures, Instance, Matching, Signature, VertexId};

/// Largest edge count the enumerators accept.
pub const MAX_ORACLE_EDGES: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has {0} edges, oracle limit is {MAX_ORACLE_EDGES}")]
    TooLarge(usize),
}

fn check_size(instance: &Instance) -> Result<(), OracleError> {
    if instance.edge_count() > MAX_ORACLE_EDGES {
        return Err(OracleError::TooLarge(instance.edge_count()));
    }
    Ok(())
}

/// `choices[a]` lists `(post, rank)` for applicant `a`.
fn choices(instance: &Instance) -> Vec<Vec<(u32, u32)>> {
    let mut out = vec![Vec::new(); instance.applicant_count() as usize];
    for e in instance.edges() {
        out[e.applicant as usize].push((e.post, e.rank));
    }
    for list in &mut out {
        list.sort_unstable();
    }
    out
}

/// One matched pair with its rank: `(applicant, post, rank)`.
pub type Triple = (u32, u32, u32);

/// Calls `visit` once per matching, as a list of `(applicant, post, rank)`.
/// Backtracks applicant by applicant: each is left unmatched or given an unused post.
pub fn for_each_matching(instance: &Instance, mut visit: impl FnMut(&[Triple])) -> Result<(), OracleError> {
    check_size(instance)?;
    let ch = choices(instance);
    let mut used = vec![false; instance.post_count() as usize];
    let mut current = Vec::new();
    fn rec(
        a: usize,
        ch: &[Vec<(u32, u32)>],
        used: &mut [bool],
        current: &mut Vec<Triple>,
        visit: &mut dyn FnMut(&[Triple]),
    ) {
        if a == ch.len() {
            visit(current);
            return;
        }
        rec(a + 1, ch, used, current, visit);
        for &(p, rank) in &ch[a] {
            if !used[p as usize] {
                used[p as usize] = true;
                current.push((a as u32, p, rank));
                rec(a + 1, ch, used, current, visit);
                current.pop();
                used[p as usize] = false;
            }
        }
    }
    rec(0, &ch, &mut used, &mut current, &mut visit);
    Ok(())
}

/// Number of matchings, counted by a recursion over posts instead of applicants.
pub fn count_matchings_by_posts(instance: &Instance) -> Result<u64, OracleError> {
    check_size(instance)?;
    let mut by_post = vec![Vec::new(); instance.post_count() as usize];
    for e in instance.edges() {
        by_post[e.post as usize].push(e.applicant);
    }
    fn rec(p: usize, by_post: &[Vec<u32>], used: &mut Vec<bool>) -> u64 {
        if p == by_post.len() {
            return 1;
        }
        let mut total = rec(p + 1, by_post, used);
        for &a in &by_post[p] {
            if !used[a as usize] {
                used[a as usize] = true;
                total += rec(p + 1, by_post, used);
                used[a as usize] = false;
            }
        }
        total
    }
    Ok(rec(0, &by_post, &mut vec![false; instance.applicant_count() as usize]))
}

fn signature_of_triples(r: u32, triples: &[Triple]) -> Signature {
    let mut counts = vec![0u64; r as usize];
    for &(_, _, rank) in triples {
        counts[rank as usize - 1] += 1;
    }
    Signature(counts)
}

/// Lexicographically maximum signature over all matchings, with one witness.
pub fn brute_rmm_signature(instance: &Instance) -> Result<(Signature, Matching), OracleError> {
    let r = instance.max_rank();
    let mut best: Option<(Signature, Vec<Triple>)> = None;
    for_each_matching(instance, |m| {
        let sig = signature_of_triples(r, m);
        if best.as_ref().is_none_or(|(b, _)| compare_signatures(&sig, b).is_gt()) {
            best = Some((sig, m.to_vec()));
        }
    })?;
    let (sig, triples) = best.expect("the empty matching is always visited");
    let witness = Matching::from_pairs(triples.iter().map(|&(a, p, _)| (a, p))).expect("enumerated matching");
    Ok((sig, witness))
}

/// Every rank-maximal matching of the instance.
pub fn brute_rank_maximal_matchings(instance: &Instance) -> Result<Vec<Matching>, OracleError> {
    let (best, _) = brute_rmm_signature(instance)?;
    let r = instance.max_rank();
    let mut out = Vec::new();
    for_each_matching(instance, |m| {
        if signature_of_triples(r, m) == best {
            out.push(Matching::from_pairs(m.iter().map(|&(a, p, _)| (a, p))).expect("enumerated matching"));
        }
    })?;
    Ok(out)
}

/// Largest matching size among edges `(applicant, post)`.
pub fn brute_max_matching_size(applicants: u32, posts: u32, edges: &[(u32, u32)]) -> Result<usize, OracleError> {
    let inst = Instance::from_edges(applicants, posts, 1, edges.iter().map(|&(a, p)| (a, p, 1)))
        .expect("oracle edges are valid");
    let mut best = 0;
    for_each_matching(&inst, |m| best = best.max(m.len()))?;
    Ok(best)
}

/// Every alternating path `P` from `start` (free in `m`) in `instance` such that
/// `m ⊕ P` is a matching of maximum signature. Paths are flat vertex sequences;
/// the empty path is `[start]`.
pub fn brute_update_paths(instance: &Instance, m: &Matching, start: VertexId) -> Result<Vec<Vec<usize>>, OracleError> {
    let (best, _) = brute_rmm_signature(instance)?;
    let n = instance.universe();
    let mut adj = vec![Vec::new(); n];
    for e in instance.edges() {
        let (a, p) = (e.applicant_vid(), e.post_vid());
        adj[a].push(p);
        adj[p].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let mate = |v: usize| m.mate(v);
    let s = start.flat();
    let mut found = BTreeSet::new();
    let mut path = vec![s];
    let mut on_path = vec![false; n];
    on_path[s] = true;

    let mut check = |path: &[usize]| {
        let mut flipped = m.clone();
        flipped.apply_path(path);
        let sig = crate::instance::signature_of(instance, &flipped).expect("path edges exist");
        if sig == best {
            found.insert(path.to_vec());
        }
    };
    check(&path);

    // Depth-first over alternating extensions: unmatched edge, then the mate.
    fn dfs(
        adj: &[Vec<usize>],
        mate: &dyn Fn(usize) -> Option<usize>,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        check: &mut dyn FnMut(&[usize]),
    ) {
        let u = *path.last().unwrap();
        for &w in &adj[u] {
            if on_path[w] || mate(u) == Some(w) {
                continue;
            }
            path.push(w);
            on_path[w] = true;
            match mate(w) {
                None => check(path),
                Some(x) if !on_path[x] => {
                    path.push(x);
                    on_path[x] = true;
                    check(path);
                    dfs(adj, mate, path, on_path, check);
                    on_path[x] = false;
                    path.pop();
                }
                Some(_) => {}
            }
            on_path[w] = false;
            path.pop();
        }
    }
    dfs(&adj, &mate, &mut path, &mut on_path, &mut check);
    Ok(found.into_iter().collect())
}

/// Votes for `m1` minus votes for `m2`. `prefs[a]` lists applicant `a`'s posts,
/// most preferred first; being matched beats being unmatched.
pub fn vote_compare(prefs: &[Vec<u32>], m1: &Matching, m2: &Matching) -> i64 {
    let position = |a: usize, m: &Matching| -> usize {
        match m.post_of(a as u32) {
            Some(p) => prefs[a].iter().position(|&q| q == p).unwrap_or(usize::MAX - 1),
            None => usize::MAX,
        }
    };
    let mut score = 0i64;
    for a in 0..prefs.len() {
        let (x, y) = (position(a, m1), position(a, m2));
        score += (x < y) as i64 - (y < x) as i64;
    }
    score
}

fn all_preference_matchings(prefs: &[Vec<u32>], posts: u32) -> Vec<Matching> {
    let edges = prefs
        .iter()
        .enumerate()
        .flat_map(|(a, list)| list.iter().map(move |&p| (a as u32, p, 1)));
    let inst = Instance::from_edges(prefs.len() as u32, posts, 1, edges).expect("valid preference lists");
    let mut out = Vec::new();
    for_each_matching(&inst, |m| {
        out.push(Matching::from_pairs(m.iter().map(|&(a, p, _)| (a, p))).expect("enumerated"))
    })
    .expect("preference oracle within size limit");
    out
}

/// Whether no matching is preferred to `m` by a strict majority.
pub fn brute_is_popular(prefs: &[Vec<u32>], posts: u32, m: &Matching) -> bool {
    all_preference_matchings(prefs, posts)
        .iter()
        .all(|other| vote_compare(prefs, other, m) <= 0)
}

/// Some popular matching if one exists.
pub fn brute_popular_matching(prefs: &[Vec<u32>], posts: u32) -> Option<Matching> {
    let all = all_preference_matchings(prefs, posts);
    // A matching that can be extended by one pair is beaten by the extension.
    let maximal = |m: &Matching| {
        prefs.iter().enumerate().all(|(a, list)| {
            m.post_of(a as u32).is_some() || list.iter().all(|&p| m.applicant_of(p).is_some())
        })
    };
    all.iter()
        .filter(|m| maximal(m))
        .find(|m| all.iter().all(|other| vote_compare(prefs, other, m) <= 0))
        .cloned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_instance() {
        let inst = Instance::new(0, 0, 0);
        let (sig, m) = brute_rmm_signature(&inst).unwrap();
        assert!(sig.0.is_empty());
        assert!(m.is_empty());
    }

    #[test]
    fn two_applicant_example() {
        let inst = Instance::parse("rmm 1\n2 2 2\na0 : p0@1\na1 : p0@1 p1@2\n").unwrap();
        let mut count = 0;
        for_each_matching(&inst, |_| count += 1).unwrap();
        assert_eq!(count, 5);
        assert_eq!(brute_rmm_signature(&inst).unwrap().0 .0, vec![1, 1]);
    }

    #[test]
    fn size_cap_enforced() {
        let edges = (0..5).flat_map(|a| (0..5).map(move |p| (a, p, 1)));
        let inst = Instance::from_edges(5, 5, 1, edges).unwrap();
        assert_eq!(brute_rmm_signature(&inst).unwrap_err(), OracleError::TooLarge(25));
    }

    #[test]
    fn no_edge_arrival_has_only_empty_path() {
        let mut inst = Instance::parse("rmm 1\n1 1 1\na0 : p0@1\n").unwrap();
        inst.apply_arrival(&crate::instance::ArrivalEvent::applicant(1, vec![])).unwrap();
        let m = Matching::from_pairs([(0, 0)]).unwrap();
        let paths = brute_update_paths(&inst, &m, VertexId::applicant(1)).unwrap();
        assert_eq!(paths, vec![vec![2]]);
    }

    #[test]
    fn forced_augment_paths_are_odd() {
        let mut inst = Instance::parse("rmm 1\n1 2 1\na0 : p0@1\n").unwrap();
        inst.apply_arrival(&crate::instance::ArrivalEvent::applicant(1, vec![(0, 1), (1, 1)])).unwrap();
        let m = Matching::from_pairs([(0, 0)]).unwrap();
        let paths = brute_update_paths(&inst, &m, VertexId::applicant(1)).unwrap();
        assert!(!paths.is_empty());
        for p in paths {
            assert_eq!(p.len() % 2, 0, "odd edge count means an even vertex count");
            assert!(m.is_free(*p.last().unwrap()));
        }
    }

    #[test]
    fn votes() {
        let prefs = vec![vec![0]];
        let m1 = Matching::from_pairs([(0, 0)]).unwrap();
        let m2 = Matching::new();
        assert_eq!(vote_compare(&prefs, &m1, &m1), 0);
        assert_eq!(vote_compare(&prefs, &m1, &m2), 1);
        assert_eq!(vote_compare(&prefs, &m2, &m1), -1);
    }

    #[test]
    fn three_applicants_one_post() {
        let prefs = vec![vec![0], vec![0], vec![0]];
        let m = brute_popular_matching(&prefs, 1).unwrap();
        assert_eq!(m.len(), 1);
        assert!(brute_is_popular(&prefs, 1, &m));
    }

    #[test]
    fn classic_instance_without_popular_matching() {
        // Three applicants with identical lists over three posts.
        let prefs = vec![vec![0, 1, 2], vec![0, 1, 2], vec![0, 1, 2]];
        assert!(brute_popular_matching(&prefs, 3).is_none());
    }
}
