//! Update-versus-recompute harness.
//!
//! Each scenario replays a seeded arrival stream twice: once through the
//! incremental update and once by solving every prefix from scratch. The
//! report has one CSV row per event and mode with columns `event_index`,
//! `mode`, `wall_ns`, `edges_touched` and `signature`.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rmm_core::{generate_scenario, process_arrival, rmm_solve, DecompError, InstanceError, ScenarioError, ScenarioParams};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Update,
    Recompute,
    Both,
}

impl Mode {
    fn runs_update(self) -> bool {
        self != Mode::Recompute
    }

    fn runs_recompute(self) -> bool {
        self != Mode::Update
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchScenario {
    pub params: ScenarioParams,
    pub mode: Mode,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Update(#[from] DecompError),
    #[error("event {event}: update gives {update}, recompute gives {recompute}")]
    Mismatch { event: usize, update: String, recompute: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub event_index: usize,
    pub mode: &'static str,
    pub wall_ns: u64,
    pub edges_touched: u64,
    pub signature: String,
}

/// Totals per mode, for the rows that mode produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ModeTotals {
    pub wall_ns: u64,
    pub edges_touched: u64,
    pub max_edges_touched: u64,
}

impl ModeTotals {
    fn add(&mut self, wall_ns: u64, edges: u64) {
        self.wall_ns += wall_ns;
        self.edges_touched += edges;
        self.max_edges_touched = self.max_edges_touched.max(edges);
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub applicants: u32,
    pub posts: u32,
    pub edges: usize,
    pub update: ModeTotals,
    pub recompute: ModeTotals,
    /// Vertices whose type lists the incremental rebuild rewrote.
    pub label_changes: u64,
}

impl BenchReport {
    /// Recompute wall time over update wall time; needs both modes.
    pub fn speedup(&self) -> Option<f64> {
        (self.update.wall_ns > 0 && self.recompute.wall_ns > 0)
            .then(|| self.recompute.wall_ns as f64 / self.update.wall_ns as f64)
    }

    /// Cumulative update work over cumulative recompute work.
    pub fn work_ratio(&self) -> Option<f64> {
        (self.recompute.edges_touched > 0).then(|| self.update.edges_touched as f64 / self.recompute.edges_touched as f64)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BenchError> {
        let mut writer = csv::Writer::from_writer(out);
        for row in &self.rows {
            writer.serialize(row)?;
        }
        writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut out = format!("n={} posts={} m={}", self.applicants, self.posts, self.edges);
        if self.update.edges_touched > 0 || self.update.wall_ns > 0 {
            out.push_str(&format!(
                " update: {} edges (max {}) {:.2} ms",
                self.update.edges_touched,
                self.update.max_edges_touched,
                self.update.wall_ns as f64 / 1e6
            ));
        }
        if self.recompute.edges_touched > 0 {
            out.push_str(&format!(
                " recompute: {} edges {:.2} ms",
                self.recompute.edges_touched,
                self.recompute.wall_ns as f64 / 1e6
            ));
        }
        if let Some(r) = self.work_ratio().filter(|_| self.update.edges_touched > 0) {
            out.push_str(&format!(" work ratio {r:.4}"));
        }
        if let Some(s) = self.speedup() {
            out.push_str(&format!(" speedup {s:.2}x"));
        }
        out
    }
}

fn signature_cell(s: &rmm_core::Signature) -> String {
    s.counts().iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
}

fn elapsed_ns(start: Instant) -> u64 {
    start.elapsed().as_nanos().try_into().unwrap_or(u64::MAX)
}

/// Replays one scenario. With [`Mode::Both`] the signatures of the two
/// modes are compared after every event and a difference is an error.
pub fn run_bench(scenario: &BenchScenario) -> Result<BenchReport, BenchError> {
    let generated = generate_scenario(&scenario.params)?;
    let mut report = BenchReport {
        applicants: generated.instance.applicant_count(),
        posts: generated.instance.post_count(),
        edges: generated.instance.edge_count(),
        ..Default::default()
    };
    let mut update_sigs = Vec::new();
    if scenario.mode.runs_update() {
        let mut state = rmm_solve(&generated.instance);
        for (k, event) in generated.events.iter().enumerate() {
            let start = Instant::now();
            let (next, step) = process_arrival(state, event)?;
            let wall = elapsed_ns(start);
            let edges = step.trace.work().edges + step.rebuild.work.edges;
            report.update.add(wall, edges);
            report.label_changes += step.rebuild.changed.len() as u64;
            let signature = signature_cell(next.signature());
            update_sigs.push(signature.clone());
            report.rows.push(BenchRow { event_index: k, mode: "update", wall_ns: wall, edges_touched: edges, signature });
            state = next;
        }
    }
    if scenario.mode.runs_recompute() {
        let mut instance = generated.instance.clone();
        for (k, event) in generated.events.iter().enumerate() {
            let start = Instant::now();
            instance.apply_arrival(event)?;
            let state = rmm_solve(&instance);
            let wall = elapsed_ns(start);
            let edges = state.work().edges;
            report.recompute.add(wall, edges);
            let signature = signature_cell(state.signature());
            if let Some(theirs) = update_sigs.get(k) {
                if *theirs != signature {
                    return Err(BenchError::Mismatch { event: k, update: theirs.clone(), recompute: signature });
                }
            }
            report.rows.push(BenchRow { event_index: k, mode: "recompute", wall_ns: wall, edges_touched: edges, signature });
        }
    }
    Ok(report)
}

/// Runs independent scenarios on up to `jobs` threads; results keep input order.
pub fn run_benches(scenarios: &[BenchScenario], jobs: usize) -> Vec<Result<BenchReport, BenchError>> {
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<BenchReport, BenchError>>>> =
        scenarios.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, scenarios.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(scenario) = scenarios.get(k) else { break };
                *results[k].lock().expect("no panics while holding the lock") = Some(run_bench(scenario));
            });
        }
    });
    results
        .into_iter()
        .map(|slot| slot.into_inner().expect("lock not poisoned").expect("every scenario ran"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(n: u32, events: usize, mode: Mode, seed: u64) -> BenchScenario {
        BenchScenario {
            params: ScenarioParams { applicants: n, posts: n, max_rank: 3, density: 0.5, events, seed, ..Default::default() },
            mode,
        }
    }

    #[test]
    fn tiny_scenario_rows() {
        let both = run_bench(&scenario(2, 1, Mode::Both, 1)).unwrap();
        assert_eq!(both.rows.len(), 2);
        assert_eq!(both.rows[0].signature, both.rows[1].signature);
        assert_eq!(run_bench(&scenario(2, 1, Mode::Update, 1)).unwrap().rows.len(), 1);
        let mut csv = Vec::new();
        both.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("event_index,mode,wall_ns,edges_touched,signature\n0,update,"));
    }

    #[test]
    fn update_touches_fewer_edges_at_moderate_scale() {
        let mut s = scenario(500, 10, Mode::Both, 3);
        s.params.max_rank = 8;
        s.params.density = 0.02;
        let report = run_bench(&s).unwrap();
        let (upd, rec): (Vec<_>, Vec<_>) = report.rows.iter().partition(|r| r.mode == "update");
        for (u, r) in upd.iter().zip(&rec) {
            assert!(u.edges_touched <= r.edges_touched, "event {}", u.event_index);
        }
    }

    #[test]
    fn parallel_runs_keep_order_and_bytes() {
        let scenarios: Vec<_> = (0..4).map(|seed| scenario(12, 6, Mode::Both, seed)).collect();
        let parallel = run_benches(&scenarios, 3);
        for (s, got) in scenarios.iter().zip(parallel) {
            let got = got.unwrap();
            let again = run_bench(s).unwrap();
            let sigs = |r: &BenchReport| r.rows.iter().map(|x| x.signature.clone()).collect::<Vec<_>>();
            assert_eq!(sigs(&got), sigs(&again));
            assert_eq!(got.update.edges_touched, again.update.edges_touched);
        }
    }
}
