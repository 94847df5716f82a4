//! Seeded instance and arrival-stream generation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{ArrivalEvent, Instance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("{applicants} applicants need at least one post")]
    NoPosts { applicants: u32 },
    #[error("max rank must be at least 1")]
    NoRanks,
    #[error("density {0} outside [0, 1]")]
    BadDensity(f64),
}

/// Generator parameters. Every applicant–post pair is an edge with
/// probability `density`; ranks are uniform in `1..=max_rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub applicants: u32,
    pub posts: u32,
    pub max_rank: u32,
    pub density: f64,
    pub events: usize,
    /// Share of events that are post arrivals.
    pub post_arrival_share: f64,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            applicants: 8,
            posts: 8,
            max_rank: 4,
            density: 0.3,
            events: 1,
            post_arrival_share: 0.2,
            seed: 0,
        }
    }
}

/// A base instance plus an arrival stream.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub instance: Instance,
    pub events: Vec<ArrivalEvent>,
}

fn sample_edges(rng: &mut ChaCha8Rng, partners: u32, density: f64, max_rank: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for partner in 0..partners {
        if rng.gen_bool(density) {
            out.push((partner, rng.gen_range(1..=max_rank)));
        }
    }
    out
}

/// Deterministic instance and arrival stream for `params`.
pub fn generate_scenario(params: &ScenarioParams) -> Result<Scenario, ScenarioError> {
    if params.posts == 0 && params.applicants > 0 {
        return Err(ScenarioError::NoPosts { applicants: params.applicants });
    }
    if params.max_rank == 0 {
        return Err(ScenarioError::NoRanks);
    }
    if !(0.0..=1.0).contains(&params.density) {
        return Err(ScenarioError::BadDensity(params.density));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut edges = Vec::new();
    for a in 0..params.applicants {
        for (p, rank) in sample_edges(&mut rng, params.posts, params.density, params.max_rank) {
            edges.push((a, p, rank));
        }
    }
    let instance = Instance::from_edges(params.applicants, params.posts, params.max_rank, edges)
        .expect("generated edges are valid");
    let (mut na, mut np) = (params.applicants, params.posts);
    let mut events = Vec::with_capacity(params.events);
    for _ in 0..params.events {
        if rng.gen_bool(params.post_arrival_share.clamp(0.0, 1.0)) {
            events.push(ArrivalEvent::post(np, sample_edges(&mut rng, na, params.density, params.max_rank)));
            np += 1;
        } else {
            events.push(ArrivalEvent::applicant(na, sample_edges(&mut rng, np, params.density, params.max_rank)));
            na += 1;
        }
    }
    Ok(Scenario { instance, events })
}

/// Small random instance for exhaustive checks: at most `max_edges` edges,
/// each applicant listing up to `max_degree` distinct posts.
pub fn small_instance(rng: &mut impl Rng, applicants: u32, posts: u32, max_rank: u32, max_edges: usize) -> Instance {
    let max_degree = if applicants == 0 { 0 } else { (max_edges / applicants as usize).clamp(0, posts as usize) };
    let mut edges = Vec::new();
    let all_posts: Vec<u32> = (0..posts).collect();
    for a in 0..applicants {
        let degree = rng.gen_range(0..=max_degree);
        for &p in all_posts.choose_multiple(rng, degree) {
            edges.push((a, p, rng.gen_range(1..=max_rank.max(1))));
        }
    }
    Instance::from_edges(applicants, posts, max_rank.max(1), edges).expect("valid random edges")
}

/// Random arrival for `instance` with at most `max_degree` edges and ranks up to `max_rank`.
pub fn small_arrival(rng: &mut impl Rng, instance: &Instance, post_side: bool, max_degree: usize, max_rank: u32) -> ArrivalEvent {
    let partners = if post_side { instance.applicant_count() } else { instance.post_count() };
    let all: Vec<u32> = (0..partners).collect();
    let degree = rng.gen_range(0..=max_degree.min(all.len()));
    let edges = all
        .choose_multiple(rng, degree)
        .map(|&x| (x, rng.gen_range(1..=max_rank.max(1))))
        .collect();
    if post_side {
        ArrivalEvent::post(instance.post_count(), edges)
    } else {
        ArrivalEvent::applicant(instance.applicant_count(), edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bytes() {
        let params = ScenarioParams { applicants: 20, posts: 15, events: 5, ..Default::default() };
        let a = generate_scenario(&params).unwrap();
        let b = generate_scenario(&params).unwrap();
        assert_eq!(a.instance.to_text(), b.instance.to_text());
        assert_eq!(a.events, b.events);
    }

    #[test]
    fn zero_events() {
        let params = ScenarioParams { events: 0, ..Default::default() };
        assert!(generate_scenario(&params).unwrap().events.is_empty());
    }

    #[test]
    fn degenerate_params_rejected() {
        let params = ScenarioParams { posts: 0, ..Default::default() };
        assert_eq!(generate_scenario(&params).unwrap_err(), ScenarioError::NoPosts { applicants: 8 });
    }

    #[test]
    fn stream_is_applicable() {
        let params = ScenarioParams { applicants: 10, posts: 10, events: 20, post_arrival_share: 0.5, ..Default::default() };
        let s = generate_scenario(&params).unwrap();
        let mut inst = s.instance.clone();
        for ev in &s.events {
            inst.apply_arrival(ev).unwrap();
        }
        let reparsed = Instance::parse(&inst.to_text()).unwrap();
        assert_eq!(reparsed.to_text(), inst.to_text());
    }
}
