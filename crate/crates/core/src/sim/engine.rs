//! Exact event-driven simulation of the N-individual system.
//!
//! A global Poisson proposal process of rate `N λ*` dominates every
//! individual reinfection rate `F^N(t) γ(a_k, θ_k) ≤ λ*`, so thinning is
//! statistically exact: at each proposal an individual is picked uniformly
//! and accepted with probability `F^N γ_k / λ*`. Between events all ages
//! advance linearly.
//!
//! The population infectivity sum behind `F^N` is maintained incrementally:
//! each individual's infectivity is affine within a curve segment, so the
//! sum is affine in time between segment crossings, which live in a
//! priority queue. A periodic full refresh keeps rounding drift below
//! statistical relevance without breaking determinism.

use super::stream::{ChaChaStream, ProposalStream};
use crate::model::{validate_model, AgeGrid, ModelSpec, Segment, TraitSpace};
use serde::Serialize;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("model fails validation ({0})")]
    InvalidModel(String),
    #[error("bad simulation config: {0}")]
    BadConfig(String),
    #[error("martingale estimate needs at least 10 replicas, got {0}")]
    InsufficientReplicas(usize),
}

/// How the initial `(age, trait)` pairs are drawn.
#[derive(Debug, Clone)]
pub enum InitMode {
    /// Inverse-CDF sampling from the model's initial density, ages at cell
    /// midpoints (overflow mass sits at the maximum age).
    FromDensity,
    /// Explicit list of `(age, trait)` atoms, one per individual.
    Atoms(Vec<(f64, usize)>),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n: usize,
    pub horizon: f64,
    pub seed: u64,
    /// Times at which `F^N` (and optionally histograms) are recorded.
    pub sample_times: Vec<f64>,
    pub record_events: bool,
    pub record_histograms: bool,
    pub init: InitMode,
}

impl SimConfig {
    pub fn new(n: usize, horizon: f64, seed: u64) -> Self {
        Self {
            n,
            horizon,
            seed,
            sample_times: Vec::new(),
            record_events: false,
            record_histograms: false,
            init: InitMode::FromDensity,
        }
    }

    pub fn with_samples(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    pub fn recording_events(mut self) -> Self {
        self.record_events = true;
        self
    }

    pub fn recording_histograms(mut self) -> Self {
        self.record_histograms = true;
        self
    }
}

/// Ages and traits of the population at one instant.
#[derive(Debug, Clone, Serialize)]
pub struct PopulationState {
    pub ages: Vec<f64>,
    pub traits: Vec<usize>,
    pub clock: f64,
}

/// One reinfection event.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Event {
    pub t: f64,
    pub individual: u32,
    pub old_trait: u32,
    pub new_trait: u32,
    pub old_age: f64,
}

/// Empirical age/trait measure: mass per grid cell plus overflow, total 1.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub cells: Vec<Vec<f64>>,
    pub overflow: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub sample_times: Vec<f64>,
    pub force: Vec<f64>,
    /// Population mean susceptibility at sample times (with histograms on).
    pub gamma_mean: Vec<f64>,
    pub events: Vec<Event>,
    pub event_count: u64,
    pub proposal_count: u64,
    pub histograms: Vec<(f64, Histogram)>,
    pub initial_state: PopulationState,
    pub final_state: PopulationState,
}

impl Trajectory {
    pub fn accepted_fraction(&self) -> f64 {
        if self.proposal_count == 0 {
            0.0
        } else {
            self.event_count as f64 / self.proposal_count as f64
        }
    }
}

/// `F^N = (1/N) Σ_k λ(a_k, θ_k)` evaluated directly on a state.
pub fn empirical_force(state: &PopulationState, spec: &ModelSpec) -> f64 {
    let n = state.ages.len();
    let sum: f64 = state
        .ages
        .iter()
        .zip(&state.traits)
        .map(|(&a, &i)| spec.lambda(i).eval(a))
        .sum();
    sum / n as f64
}

/// Count-based empirical measure on the grid; ages at or beyond the maximum
/// age accumulate in the overflow cell. Total mass is exactly 1.
pub fn empirical_measure(
    state: &PopulationState,
    grid: &AgeGrid,
    traits: &TraitSpace,
) -> Histogram {
    let n = state.ages.len();
    let unit = 1.0 / n as f64;
    let mut cells = vec![vec![0.0; traits.len()]; grid.count()];
    let mut overflow = vec![0.0; traits.len()];
    for (&a, &i) in state.ages.iter().zip(&state.traits) {
        match grid.cell_of(a) {
            Some(m) => cells[m][i] += unit,
            None => overflow[i] += unit,
        }
    }
    Histogram { cells, overflow }
}

/// Run the simulation with the seeded default stream.
pub fn simulate(spec: &ModelSpec, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    let mut stream = ChaChaStream::seed_from_u64(cfg.seed);
    simulate_with_stream(spec, cfg, &mut stream)
}

/// Segment-crossing entry; min-ordered by time then individual.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Crossing {
    t: f64,
    k: u32,
    gen: u32,
    seg: u32,
}

impl Eq for Crossing {}

impl Ord for Crossing {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.k.cmp(&other.k))
            .then(self.seg.cmp(&other.seg))
    }
}

impl PartialOrd for Crossing {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct InfectivitySum<'a> {
    lam_segs: &'a [Vec<Segment>],
    births: Vec<f64>,
    trait_of: Vec<usize>,
    seg_idx: Vec<u32>,
    gen: Vec<u32>,
    heap: BinaryHeap<Reverse<Crossing>>,
    value: f64,
    slope: f64,
    t_ref: f64,
    events_since_refresh: usize,
}

impl<'a> InfectivitySum<'a> {
    fn new(lam_segs: &'a [Vec<Segment>], births: Vec<f64>, trait_of: Vec<usize>, t0: f64) -> Self {
        let n = births.len();
        let mut s = Self {
            lam_segs,
            births,
            trait_of,
            seg_idx: vec![0; n],
            gen: vec![0; n],
            heap: BinaryHeap::with_capacity(n + 16),
            value: 0.0,
            slope: 0.0,
            t_ref: t0,
            events_since_refresh: 0,
        };
        for k in 0..n {
            let segs = &s.lam_segs[s.trait_of[k]];
            let age = t0 - s.births[k];
            let idx = segs.partition_point(|sg| sg.start <= age).saturating_sub(1);
            s.seg_idx[k] = idx as u32;
            s.schedule(k as u32);
        }
        s.refresh();
        s
    }

    fn refresh(&mut self) {
        let mut value = 0.0;
        let mut slope = 0.0;
        for k in 0..self.births.len() {
            let seg = &self.lam_segs[self.trait_of[k]][self.seg_idx[k] as usize];
            value += seg.value_at(self.t_ref - self.births[k]);
            slope += seg.slope;
        }
        self.value = value;
        self.slope = slope;
        self.events_since_refresh = 0;
    }

    fn advance(&mut self, t: f64) {
        self.value += self.slope * (t - self.t_ref);
        self.t_ref = t;
    }

    fn sum_at(&self, t: f64) -> f64 {
        self.value + self.slope * (t - self.t_ref)
    }

    fn schedule(&mut self, k: u32) {
        let segs = &self.lam_segs[self.trait_of[k as usize]];
        let next = self.seg_idx[k as usize] as usize + 1;
        if next < segs.len() {
            self.heap.push(Reverse(Crossing {
                t: self.births[k as usize] + segs[next].start,
                k,
                gen: self.gen[k as usize],
                seg: next as u32,
            }));
        }
    }

    /// Time of the next live crossing (stale entries dropped lazily).
    fn next_crossing_time(&mut self) -> f64 {
        while let Some(Reverse(c)) = self.heap.peek() {
            if c.gen == self.gen[c.k as usize] {
                return c.t;
            }
            self.heap.pop();
        }
        f64::INFINITY
    }

    fn apply_crossing(&mut self) {
        let Reverse(c) = self.heap.pop().expect("crossing present");
        debug_assert_eq!(c.gen, self.gen[c.k as usize]);
        self.advance(c.t);
        let k = c.k as usize;
        let segs = &self.lam_segs[self.trait_of[k]];
        let old = &segs[self.seg_idx[k] as usize];
        let new = &segs[c.seg as usize];
        self.value += new.value_at_start - old.value_at(new.start);
        self.slope += new.slope - old.slope;
        self.seg_idx[k] = c.seg;
        self.schedule(c.k);
    }

    fn infect(&mut self, k: usize, t: f64, new_trait: usize) {
        self.advance(t);
        let old_seg = &self.lam_segs[self.trait_of[k]][self.seg_idx[k] as usize];
        let old_val = old_seg.value_at(t - self.births[k]);
        let new_seg = &self.lam_segs[new_trait][0];
        self.value += new_seg.value_at_start - old_val;
        self.slope += new_seg.slope - old_seg.slope;
        self.births[k] = t;
        self.trait_of[k] = new_trait;
        self.seg_idx[k] = 0;
        self.gen[k] += 1;
        self.schedule(k as u32);
        self.events_since_refresh += 1;
        if self.events_since_refresh >= self.births.len().max(1 << 14) {
            self.advance(t);
            self.refresh();
        }
    }

    fn state_at(&self, t: f64) -> PopulationState {
        PopulationState {
            ages: self.births.iter().map(|&b| t - b).collect(),
            traits: self.trait_of.clone(),
            clock: t,
        }
    }
}

/// Draw the initial `(birth, trait)` pairs.
fn sample_initial(
    spec: &ModelSpec,
    cfg: &SimConfig,
    stream: &mut dyn ProposalStream,
) -> Result<(Vec<f64>, Vec<usize>), SimError> {
    match &cfg.init {
        InitMode::Atoms(atoms) => {
            if atoms.len() != cfg.n {
                return Err(SimError::BadConfig(format!(
                    "{} initial atoms for n = {}",
                    atoms.len(),
                    cfg.n
                )));
            }
            for &(age, tr) in atoms {
                if age < 0.0 || tr >= spec.n_atoms() {
                    return Err(SimError::BadConfig(format!(
                        "bad initial atom ({age}, {tr})"
                    )));
                }
            }
            Ok((
                atoms.iter().map(|&(age, _)| -age).collect(),
                atoms.iter().map(|&(_, tr)| tr).collect(),
            ))
        }
        InitMode::FromDensity => {
            let grid = &spec.age_grid;
            let n_atoms = spec.n_atoms();
            // cumulative cell masses: cells in age-major order, then overflow
            let mut cum = Vec::with_capacity(grid.count() * n_atoms + n_atoms);
            let mut acc = 0.0;
            for (m, row) in spec.u0.values().iter().enumerate() {
                let _ = m;
                for (i, &v) in row.iter().enumerate() {
                    acc += v * grid.delta() * spec.traits.weight(i);
                    cum.push(acc);
                }
            }
            for (i, &o) in spec.u0.overflow().iter().enumerate() {
                acc += o * spec.traits.weight(i);
                cum.push(acc);
            }
            let total = acc;
            let mut births = Vec::with_capacity(cfg.n);
            let mut trait_of = Vec::with_capacity(cfg.n);
            for _ in 0..cfg.n {
                let u = stream.init_u() * total;
                let idx = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
                let (age, tr) = if idx >= grid.count() * n_atoms {
                    (grid.max_age(), idx - grid.count() * n_atoms)
                } else {
                    (grid.midpoint(idx / n_atoms), idx % n_atoms)
                };
                births.push(-age);
                trait_of.push(tr);
            }
            Ok((births, trait_of))
        }
    }
}

/// Run the simulation against an injectable uniform stream.
pub fn simulate_with_stream(
    spec: &ModelSpec,
    cfg: &SimConfig,
    stream: &mut dyn ProposalStream,
) -> Result<Trajectory, SimError> {
    let report = validate_model(spec);
    if !(report.bounds_ok && report.kernel_ok) {
        let failing: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        return Err(SimError::InvalidModel(failing.join(", ")));
    }
    if cfg.n == 0 || !(cfg.horizon > 0.0) {
        return Err(SimError::BadConfig(format!(
            "n = {}, horizon = {}",
            cfg.n, cfg.horizon
        )));
    }

    let n = cfg.n;
    let lam_segs: Vec<Vec<Segment>> = (0..spec.n_atoms())
        .map(|i| spec.lambda(i).segments())
        .collect();
    let row_cdfs: Vec<Vec<f64>> = (0..spec.n_atoms())
        .map(|i| spec.kernel.row_cdf(i, &spec.traits))
        .collect();

    let (births, trait_of) = sample_initial(spec, cfg, stream)?;
    let mut sum = InfectivitySum::new(&lam_segs, births, trait_of, 0.0);
    let initial_state = sum.state_at(0.0);

    let mut sample_times = cfg.sample_times.clone();
    sample_times.sort_by(f64::total_cmp);
    sample_times.retain(|&t| (0.0..=cfg.horizon).contains(&t));

    let mut out = Trajectory {
        sample_times: Vec::with_capacity(sample_times.len()),
        force: Vec::with_capacity(sample_times.len()),
        gamma_mean: Vec::new(),
        events: Vec::new(),
        event_count: 0,
        proposal_count: 0,
        histograms: Vec::new(),
        initial_state,
        final_state: PopulationState {
            ages: Vec::new(),
            traits: Vec::new(),
            clock: 0.0,
        },
    };

    let rate = n as f64 * spec.lambda_star;
    // λ* = 0 degenerates the proposal process: the run is pure aging
    let mut next_prop = if rate > 0.0 {
        -(1.0 - stream.gap_u()).ln() / rate
    } else {
        f64::INFINITY
    };

    let mut sample_iter = sample_times.into_iter().peekable();
    loop {
        let t_cross = sum.next_crossing_time();
        let t_next = t_cross.min(next_prop);

        while let Some(&s) = sample_iter.peek() {
            if s > t_next.min(cfg.horizon) {
                break;
            }
            let force = (sum.sum_at(s) / n as f64).clamp(0.0, spec.lambda_star);
            out.sample_times.push(s);
            out.force.push(force);
            if cfg.record_histograms {
                let state = sum.state_at(s);
                let gbar = state
                    .ages
                    .iter()
                    .zip(&state.traits)
                    .map(|(&a, &i)| spec.gamma(i).eval(a))
                    .sum::<f64>()
                    / n as f64;
                out.gamma_mean.push(gbar);
                out.histograms
                    .push((s, empirical_measure(&state, &spec.age_grid, &spec.traits)));
            }
            sample_iter.next();
        }

        if t_next > cfg.horizon {
            break;
        }

        if t_cross <= next_prop {
            sum.apply_crossing();
            continue;
        }

        // proposal
        let t = next_prop;
        out.proposal_count += 1;
        sum.advance(t);
        let force = (sum.value / n as f64).clamp(0.0, spec.lambda_star);
        let k = ((stream.pick_u() * n as f64) as usize).min(n - 1);
        let age = t - sum.births[k];
        let gamma_val = spec.gamma(sum.trait_of[k]).eval(age);
        if stream.accept_u() * spec.lambda_star < force * gamma_val {
            let old_trait = sum.trait_of[k];
            let cdf = &row_cdfs[old_trait];
            let u = stream.trait_u();
            let new_trait = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            sum.infect(k, t, new_trait);
            out.event_count += 1;
            if cfg.record_events {
                out.events.push(Event {
                    t,
                    individual: k as u32,
                    old_trait: old_trait as u32,
                    new_trait: new_trait as u32,
                    old_age: age,
                });
            }
        }
        next_prop = t + -(1.0 - stream.gap_u()).ln() / rate;
    }

    out.final_state = sum.state_at(cfg.horizon);
    Ok(out)
}
