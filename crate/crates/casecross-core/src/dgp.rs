//! Data-generating processes and subject trajectories.
//!
//! All processes share one shape: a subject is followed over discrete time
//! steps `0..horizon_steps`; at each step an unobserved outcome cause `U`
//! and a binary treatment `A` are realized (possibly as broadcasts of
//! block-level draws), the step's counterfactual hazards `lambda0 <= 1` and
//! `lambda1 = beta * lambda0` are evaluated, and both potential outcomes are
//! drawn from one shared uniform. Follow-up stops at the first factual
//! event; the outcome is absorbing.
//!
//! Per-step draw order is fixed (U, then A, then the outcome uniform) so
//! that a subject's trajectory is a pure function of
//! `(spec, master_seed, subject_id)`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::bitseq::BitSeq;
use crate::rng::{self, StreamKind};
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Largest horizon for which exhaustive enumeration is supported.
pub const MAX_ORACLE_HORIZON: u32 = 12;

// ── Specs ─────────────────────────────────────────────────────────────

/// Hour-scale process with iid per-step treatments and a two-step window of
/// `U` influence: the hazard at step `t` is
/// `min(cap, w_lag*U_{t-1} + w_now*U_t)` untreated, `beta` times that (capped
/// at 1) treated.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CoarseIndependent {
    pub horizon: u32,
    pub p_u: f64,
    pub w_lag: f64,
    pub w_now: f64,
    pub hazard_cap: f64,
    pub beta: f64,
    pub p_a: f64,
}

/// Second-scale process with hour-blocked draws: `U` and `A` are drawn once
/// per hour and broadcast to every step in the hour, and the per-step
/// untreated hazard is `lambda0_coef * (U_hour + U_prev_hour)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FineCorrelated {
    pub hours: u32,
    pub steps_per_hour: u32,
    pub p_u: f64,
    pub lambda0_coef: f64,
    pub beta: f64,
    pub p_a: f64,
}

/// Two latent subject types with type-specific constant hazards and
/// treatment probabilities; the causal hazard ratio may differ between
/// types (effect heterogeneity).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TwoGroup {
    pub horizon: u32,
    /// Probability of membership in group `g = 1`.
    pub p_g: f64,
    pub lambda0_g0: f64,
    pub lambda0_g1: f64,
    pub lambda1_g0: f64,
    pub lambda1_g1: f64,
    pub p_a_g0: f64,
    pub p_a_g1: f64,
}

/// Untreated hazard lookup `rate(step, u_now, u_lag)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HazardTable {
    /// One `[f64; 4]` per step, indexed by `(u_now << 1) | u_lag`.
    pub rates: Vec<[f64; 4]>,
}

impl HazardTable {
    /// Same rate at every step and `U` configuration.
    pub fn flat(horizon: u32, rate: f64) -> Self {
        HazardTable { rates: vec![[rate; 4]; horizon as usize] }
    }

    /// Build from a closure of `(step, u_now, u_lag)`.
    pub fn from_fn(horizon: u32, mut f: impl FnMut(u32, bool, bool) -> f64) -> Self {
        let rates = (0..horizon)
            .map(|t| {
                [
                    f(t, false, false),
                    f(t, false, true),
                    f(t, true, false),
                    f(t, true, true),
                ]
            })
            .collect();
        HazardTable { rates }
    }

    /// The capped two-weight structure of [`CoarseIndependent`].
    pub fn coarse_like(horizon: u32, w_lag: f64, w_now: f64, cap: f64) -> Self {
        Self::from_fn(horizon, |_, u_now, u_lag| {
            let raw = w_lag * (u_lag as u8 as f64) + w_now * (u_now as u8 as f64);
            if raw > cap {
                cap
            } else {
                raw
            }
        })
    }

    #[inline]
    pub fn rate(&self, step: u32, u_now: bool, u_lag: bool) -> f64 {
        self.rates[step as usize][((u_now as usize) << 1) | u_lag as usize]
    }

    pub fn horizon(&self) -> u32 {
        self.rates.len() as u32
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().flatten().fold(0.0f64, |m, &r| if r > m { r } else { m })
    }
}

/// A short-horizon process that supports exhaustive enumeration.
///
/// `U` and `A` are drawn per block of `u_block` / `a_block` consecutive
/// steps (1 = iid per step) and broadcast within the block, mirroring the
/// hour-blocked structure of [`FineCorrelated`] at enumerable sizes. The
/// treatment probability may vary by step but must be constant within a
/// shared-draw block. `lambda1 = beta * lambda0` pointwise.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SmallOracle {
    pub horizon: u32,
    pub p_u: f64,
    /// Per-step treatment probability (length = `horizon`).
    pub p_a: Vec<f64>,
    /// Steps sharing one `U` draw.
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub u_block: u32,
    /// Steps sharing one `A` draw.
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub a_block: u32,
    pub hazard0: HazardTable,
    pub beta: f64,
}

#[cfg(feature = "serde")]
fn one() -> u32 {
    1
}

impl SmallOracle {
    /// Fully iid instance with a constant treatment probability.
    pub fn iid(horizon: u32, p_u: f64, p_a: f64, hazard0: HazardTable, beta: f64) -> Self {
        SmallOracle {
            horizon,
            p_u,
            p_a: vec![p_a; horizon as usize],
            u_block: 1,
            a_block: 1,
            hazard0,
            beta,
        }
    }

    /// An instance with the hazard structure of [`CoarseIndependent`] at an
    /// enumerable horizon.
    pub fn mimic_coarse(horizon: u32, coarse: &CoarseIndependent) -> Self {
        Self::iid(
            horizon,
            coarse.p_u,
            coarse.p_a,
            HazardTable::coarse_like(horizon, coarse.w_lag, coarse.w_now, coarse.hazard_cap),
            coarse.beta,
        )
    }

    /// Treatment probability governing the a-block that contains `step`.
    #[inline]
    pub fn p_a_at(&self, step: u32) -> f64 {
        self.p_a[(step - step % self.a_block) as usize]
    }
}

/// A data-generating process.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum DgpSpec {
    CoarseIndependent(CoarseIndependent),
    FineCorrelated(FineCorrelated),
    TwoGroup(TwoGroup),
    SmallOracle(SmallOracle),
}

fn check_prob(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

fn check_hazard(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::HazardOutOfRange { name, value })
    }
}

impl CoarseIndependent {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::HorizonTooShort { horizon: self.horizon });
        }
        check_prob("p_u", self.p_u)?;
        check_prob("p_a", self.p_a)?;
        check_prob("hazard_cap", self.hazard_cap)?;
        if !(self.w_lag >= 0.0 && self.w_lag.is_finite()) {
            return Err(Error::HazardOutOfRange { name: "w_lag", value: self.w_lag });
        }
        if !(self.w_now >= 0.0 && self.w_now.is_finite()) {
            return Err(Error::HazardOutOfRange { name: "w_now", value: self.w_now });
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::HazardOutOfRange { name: "beta", value: self.beta });
        }
        // The cap applies to the untreated hazard; the treated hazard is
        // additionally clamped to 1 at evaluation, exactly like the capped
        // display it implements.
        Ok(())
    }

    /// Untreated hazard at a step given the governing `U` values.
    #[inline]
    pub fn lambda0(&self, u_now: bool, u_lag: bool) -> f64 {
        let raw = self.w_lag * (u_lag as u8 as f64) + self.w_now * (u_now as u8 as f64);
        if raw > self.hazard_cap {
            self.hazard_cap
        } else {
            raw
        }
    }

    #[inline]
    pub fn lambda1(&self, u_now: bool, u_lag: bool) -> f64 {
        let v = self.beta * self.lambda0(u_now, u_lag);
        if v > 1.0 {
            1.0
        } else {
            v
        }
    }
}

impl FineCorrelated {
    pub fn validate(&self) -> Result<()> {
        if self.hours < 2 || self.steps_per_hour < 1 {
            return Err(Error::HorizonTooShort { horizon: self.hours });
        }
        check_prob("p_u", self.p_u)?;
        check_prob("p_a", self.p_a)?;
        check_hazard("lambda0_coef", self.lambda0_coef)?;
        check_hazard("2 * lambda0_coef", 2.0 * self.lambda0_coef)?;
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::HazardOutOfRange { name: "beta", value: self.beta });
        }
        // No silent capping here: beta must keep the treated hazard valid.
        check_hazard("beta * 2 * lambda0_coef", self.beta * 2.0 * self.lambda0_coef)?;
        Ok(())
    }

    pub fn horizon_steps(&self) -> u32 {
        self.hours * self.steps_per_hour
    }

    /// Per-step untreated hazard in an hour with flags `(u_hour, u_prev)`.
    #[inline]
    pub fn lambda0(&self, u_hour: bool, u_prev: bool) -> f64 {
        self.lambda0_coef * (u_hour as u8 as f64 + u_prev as u8 as f64)
    }
}

impl TwoGroup {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::HorizonTooShort { horizon: self.horizon });
        }
        check_prob("p_g", self.p_g)?;
        check_prob("p_a_g0", self.p_a_g0)?;
        check_prob("p_a_g1", self.p_a_g1)?;
        check_hazard("lambda0_g0", self.lambda0_g0)?;
        check_hazard("lambda0_g1", self.lambda0_g1)?;
        check_hazard("lambda1_g0", self.lambda1_g0)?;
        check_hazard("lambda1_g1", self.lambda1_g1)?;
        Ok(())
    }

    #[inline]
    pub fn hazards(&self, group: bool) -> (f64, f64) {
        if group {
            (self.lambda0_g1, self.lambda1_g1)
        } else {
            (self.lambda0_g0, self.lambda1_g0)
        }
    }

    #[inline]
    pub fn p_a(&self, group: bool) -> f64 {
        if group {
            self.p_a_g1
        } else {
            self.p_a_g0
        }
    }
}

impl SmallOracle {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::HorizonTooShort { horizon: self.horizon });
        }
        if self.horizon > MAX_ORACLE_HORIZON {
            return Err(Error::HorizonTooLong { horizon: self.horizon, max: MAX_ORACLE_HORIZON });
        }
        check_prob("p_u", self.p_u)?;
        if self.p_a.len() != self.horizon as usize {
            return Err(Error::LengthMismatch {
                name: "p_a",
                expected: self.horizon as usize,
                actual: self.p_a.len(),
            });
        }
        for &p in &self.p_a {
            check_prob("p_a", p)?;
        }
        if self.u_block < 1 || self.a_block < 1 {
            return Err(Error::InvalidBlock { what: "block lengths must be at least 1" });
        }
        for step in 0..self.horizon {
            let head = step - step % self.a_block;
            if self.p_a[step as usize] != self.p_a[head as usize] {
                return Err(Error::InvalidBlock {
                    what: "p_a must be constant within each shared treatment block",
                });
            }
        }
        if self.hazard0.horizon() != self.horizon {
            return Err(Error::LengthMismatch {
                name: "hazard0",
                expected: self.horizon as usize,
                actual: self.hazard0.rates.len(),
            });
        }
        for row in &self.hazard0.rates {
            for &r in row {
                check_hazard("hazard0", r)?;
            }
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::HazardOutOfRange { name: "beta", value: self.beta });
        }
        check_hazard("beta * max(hazard0)", self.beta * self.hazard0.max_rate())?;
        Ok(())
    }
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DgpSpec::CoarseIndependent(s) => s.validate(),
            DgpSpec::FineCorrelated(s) => s.validate(),
            DgpSpec::TwoGroup(s) => s.validate(),
            DgpSpec::SmallOracle(s) => s.validate(),
        }
    }

    /// Total flattened steps per subject.
    pub fn horizon_steps(&self) -> u32 {
        match self {
            DgpSpec::CoarseIndependent(s) => s.horizon,
            DgpSpec::FineCorrelated(s) => s.horizon_steps(),
            DgpSpec::TwoGroup(s) => s.horizon,
            DgpSpec::SmallOracle(s) => s.horizon,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DgpSpec::CoarseIndependent(_) => "coarse_independent",
            DgpSpec::FineCorrelated(_) => "fine_correlated",
            DgpSpec::TwoGroup(_) => "two_group",
            DgpSpec::SmallOracle(_) => "small_oracle",
        }
    }
}

// ── Trajectories ──────────────────────────────────────────────────────

/// What to retain beyond treatments and the event time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimOptions {
    /// Keep the `U` history (diagnostics only).
    pub retain_u: bool,
    /// Keep both potential-outcome draw sequences (needed for Monte Carlo
    /// evaluation of the randomized-trial estimand).
    pub retain_potentials: bool,
}

/// Per-step potential-outcome draws, shared-uniform coupled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PotentialDraws {
    pub y0: BitSeq,
    pub y1: BitSeq,
}

/// One subject's history, censored at the first event.
///
/// Treatments are stored as drawn; the public accessor reports 0 for steps
/// after the event, which is how treatments are defined once the outcome has
/// occurred. Draws are only available through the event step.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectTrajectory {
    pub subject_id: u64,
    horizon: u32,
    treatments: BitSeq,
    outcome_step: Option<u32>,
    u_history: Option<BitSeq>,
    group: Option<bool>,
    potentials: Option<PotentialDraws>,
}

impl SubjectTrajectory {
    fn empty() -> Self {
        SubjectTrajectory {
            subject_id: 0,
            horizon: 0,
            treatments: BitSeq::zeros(0, 1),
            outcome_step: None,
            u_history: None,
            group: None,
            potentials: None,
        }
    }

    /// A reusable buffer for [`simulate_subject_into`].
    pub fn scratch() -> Self {
        Self::empty()
    }

    /// Rebuild a trajectory from recorded data (e.g. a cohort export):
    /// censored treatment sequence, first-event step, and group.
    ///
    /// The treatment sequence must already be 0 after the event step, which
    /// is how trajectories are recorded.
    pub fn from_recorded_parts(
        subject_id: u64,
        treatments: BitSeq,
        outcome_step: Option<u32>,
        group: Option<bool>,
    ) -> Result<Self> {
        let horizon = treatments.len();
        if horizon < 2 {
            return Err(Error::HorizonTooShort { horizon });
        }
        if let Some(e) = outcome_step {
            if e >= horizon {
                return Err(Error::LengthMismatch {
                    name: "outcome_step",
                    expected: horizon as usize,
                    actual: e as usize,
                });
            }
        }
        Ok(SubjectTrajectory {
            subject_id,
            horizon,
            treatments,
            outcome_step,
            u_history: None,
            group,
            potentials: None,
        })
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Step of the first event, if any.
    pub fn outcome_step(&self) -> Option<u32> {
        self.outcome_step
    }

    pub fn is_case(&self) -> bool {
        self.outcome_step.is_some()
    }

    /// Last step with draws: the event step, or the final step if no event.
    pub fn end_step(&self) -> u32 {
        self.outcome_step.unwrap_or(self.horizon - 1)
    }

    /// Recorded treatment at `step`: 0 after the event has occurred.
    #[inline]
    pub fn treatment_at(&self, step: u32) -> bool {
        match self.outcome_step {
            Some(e) if step > e => false,
            _ => self.treatments.get(step),
        }
    }

    /// Treatment as drawn, before event-censoring zeroes it. Only valid
    /// through [`Self::end_step`].
    #[inline]
    pub fn drawn_treatment_at(&self, step: u32) -> bool {
        debug_assert!(step <= self.end_step());
        self.treatments.get(step)
    }

    /// Count of treated steps among the first `upto` drawn steps.
    pub fn drawn_treated_before(&self, upto: u32) -> u64 {
        debug_assert!(upto <= self.end_step() + 1);
        self.treatments.count_ones_before(upto)
    }

    pub fn u_history(&self) -> Option<&BitSeq> {
        self.u_history.as_ref()
    }

    /// Group indicator for two-group processes.
    pub fn group(&self) -> Option<bool> {
        self.group
    }

    pub fn potentials(&self) -> Option<&PotentialDraws> {
        self.potentials.as_ref()
    }
}

// ── Simulation ────────────────────────────────────────────────────────

struct Recorder<'a> {
    traj: &'a mut SubjectTrajectory,
    opts: SimOptions,
}

impl Recorder<'_> {
    fn prepare(
        traj: &mut SubjectTrajectory,
        subject_id: u64,
        horizon: u32,
        a_block: u32,
        u_block: u32,
        opts: SimOptions,
    ) -> Recorder<'_> {
        traj.subject_id = subject_id;
        traj.horizon = horizon;
        traj.treatments.reset(horizon, a_block);
        traj.outcome_step = None;
        traj.group = None;
        if opts.retain_u {
            match &mut traj.u_history {
                Some(u) => u.reset(horizon, u_block),
                none => *none = Some(BitSeq::zeros(horizon, u_block)),
            }
        } else {
            traj.u_history = None;
        }
        if opts.retain_potentials {
            match &mut traj.potentials {
                Some(p) => {
                    p.y0.reset(horizon, 1);
                    p.y1.reset(horizon, 1);
                }
                none => {
                    *none = Some(PotentialDraws {
                        y0: BitSeq::zeros(horizon, 1),
                        y1: BitSeq::zeros(horizon, 1),
                    })
                }
            }
        } else {
            traj.potentials = None;
        }
        Recorder { traj, opts }
    }

    #[inline]
    fn treatment(&mut self, step: u32, a: bool) {
        if a {
            self.traj.treatments.set_step(step);
        }
    }

    #[inline]
    fn u(&mut self, step: u32, u: bool) {
        if self.opts.retain_u && u {
            self.traj.u_history.as_mut().unwrap().set_step(step);
        }
    }

    /// Record both potential draws; returns the factual outcome.
    #[inline]
    fn outcome(&mut self, step: u32, a: bool, y0: bool, y1: bool) -> bool {
        if self.opts.retain_potentials {
            let p = self.traj.potentials.as_mut().unwrap();
            if y0 {
                p.y0.set_step(step);
            }
            if y1 {
                p.y1.set_step(step);
            }
        }
        let y = if a { y1 } else { y0 };
        if y {
            self.traj.outcome_step = Some(step);
        }
        y
    }
}

/// Simulate one subject into a reusable trajectory buffer.
///
/// `spec` must already be validated; [`simulate_cohort`] and the accumulator
/// drivers do this once per run.
pub fn simulate_subject_into(
    spec: &DgpSpec,
    master_seed: u64,
    subject_id: u64,
    opts: SimOptions,
    traj: &mut SubjectTrajectory,
) {
    let mut rng = rng::stream(master_seed, subject_id, StreamKind::Simulate);
    match spec {
        DgpSpec::CoarseIndependent(s) => {
            let mut rec = Recorder::prepare(traj, subject_id, s.horizon, 1, 1, opts);
            let mut u_lag = false;
            for step in 0..s.horizon {
                let u = rng::bernoulli(&mut rng, s.p_u);
                let a = rng::bernoulli(&mut rng, s.p_a);
                rec.u(step, u);
                rec.treatment(step, a);
                let draw = rng::u01(&mut rng);
                let y0 = draw < s.lambda0(u, u_lag);
                let y1 = draw < s.lambda1(u, u_lag);
                if rec.outcome(step, a, y0, y1) {
                    return;
                }
                u_lag = u;
            }
        }
        DgpSpec::FineCorrelated(s) => {
            let sp = s.steps_per_hour;
            let mut rec =
                Recorder::prepare(traj, subject_id, s.horizon_steps(), sp, sp, opts);
            let mut u_prev = false;
            for hour in 0..s.hours {
                let u = rng::bernoulli(&mut rng, s.p_u);
                let a = rng::bernoulli(&mut rng, s.p_a);
                rec.u(hour * sp, u);
                rec.treatment(hour * sp, a);
                let lam0 = s.lambda0(u, u_prev);
                // Hazard is identically 0 in hours with both governing flags
                // down; the per-step outcome draws can be skipped without
                // changing the distribution.
                if lam0 > 0.0 {
                    let lam1 = s.beta * lam0;
                    for t in 0..sp {
                        let step = hour * sp + t;
                        let draw = rng::u01(&mut rng);
                        let y0 = draw < lam0;
                        let y1 = draw < lam1;
                        if rec.outcome(step, a, y0, y1) {
                            return;
                        }
                    }
                }
                u_prev = u;
            }
        }
        DgpSpec::TwoGroup(s) => {
            let mut rec = Recorder::prepare(traj, subject_id, s.horizon, 1, 1, opts);
            let group = rng::bernoulli(&mut rng, s.p_g);
            rec.traj.group = Some(group);
            let (lam0, lam1) = s.hazards(group);
            let p_a = s.p_a(group);
            for step in 0..s.horizon {
                let a = rng::bernoulli(&mut rng, p_a);
                rec.treatment(step, a);
                let draw = rng::u01(&mut rng);
                let y0 = draw < lam0;
                let y1 = draw < lam1;
                if rec.outcome(step, a, y0, y1) {
                    return;
                }
            }
        }
        DgpSpec::SmallOracle(s) => {
            let mut rec =
                Recorder::prepare(traj, subject_id, s.horizon, s.a_block, s.u_block, opts);
            let mut u = false;
            let mut u_lag;
            let mut a = false;
            let mut u_block_val = false;
            for step in 0..s.horizon {
                u_lag = if step == 0 { false } else { u };
                if step % s.u_block == 0 {
                    u_block_val = rng::bernoulli(&mut rng, s.p_u);
                    rec.u(step, u_block_val);
                }
                u = u_block_val;
                if step % s.a_block == 0 {
                    a = rng::bernoulli(&mut rng, s.p_a[step as usize]);
                    rec.treatment(step, a);
                }
                let lam0 = s.hazard0.rate(step, u, u_lag);
                let lam1 = s.beta * lam0;
                let draw = rng::u01(&mut rng);
                let y0 = draw < lam0;
                let y1 = draw < lam1;
                if rec.outcome(step, a, y0, y1) {
                    return;
                }
            }
        }
    }
}

/// Simulate one subject.
pub fn simulate_subject(
    spec: &DgpSpec,
    master_seed: u64,
    subject_id: u64,
    opts: SimOptions,
) -> SubjectTrajectory {
    let mut traj = SubjectTrajectory::empty();
    simulate_subject_into(spec, master_seed, subject_id, opts, &mut traj);
    traj
}

/// Simulate subjects `0..n_subjects`, serially.
///
/// Deterministic given `(spec, n_subjects, master_seed)`; sharded drivers
/// that split the id range across threads produce the same cohort.
pub fn simulate_cohort(
    spec: &DgpSpec,
    n_subjects: u64,
    master_seed: u64,
    opts: SimOptions,
) -> Result<Vec<SubjectTrajectory>> {
    spec.validate()?;
    if n_subjects == 0 {
        return Err(Error::EmptyCohortRequest);
    }
    Ok((0..n_subjects)
        .map(|id| simulate_subject(spec, master_seed, id, opts))
        .collect())
}

// ── Randomized-trial estimand ─────────────────────────────────────────

/// Mergeable tallies for the Monte Carlo randomized-trial relative risk at
/// one step: subjects still at risk, and their potential events under each
/// arm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RctCounts {
    pub at_risk: u64,
    pub treated_events: u64,
    pub untreated_events: u64,
}

impl RctCounts {
    pub fn merge(&mut self, other: &RctCounts) {
        self.at_risk += other.at_risk;
        self.treated_events += other.treated_events;
        self.untreated_events += other.untreated_events;
    }

    /// Ratio of arm-specific event risks among survivors.
    pub fn point(&self) -> Option<f64> {
        if self.at_risk == 0 || self.untreated_events == 0 {
            None
        } else {
            Some(self.treated_events as f64 / self.untreated_events as f64)
        }
    }
}

/// Accumulate randomized-trial tallies at `step` over a subject id range.
///
/// `spec` must be validated and `step < horizon_steps`.
pub fn accumulate_rct(
    spec: &DgpSpec,
    step: u32,
    master_seed: u64,
    subjects: Range<u64>,
    counts: &mut RctCounts,
) {
    let opts = SimOptions { retain_u: false, retain_potentials: true };
    let mut traj = SubjectTrajectory::scratch();
    for id in subjects {
        simulate_subject_into(spec, master_seed, id, opts, &mut traj);
        let at_risk = match traj.outcome_step() {
            Some(e) => e >= step,
            None => true,
        };
        if at_risk {
            counts.at_risk += 1;
            let p = traj.potentials().unwrap();
            counts.treated_events += p.y1.get(step) as u64;
            counts.untreated_events += p.y0.get(step) as u64;
        }
    }
}

/// The relative risk a single-step randomized trial at `step` would target,
/// evaluated in closed form (two-group) or by exhaustive enumeration
/// (small-oracle).
///
/// For the Monte Carlo processes use [`accumulate_rct`] /
/// [`rct_relative_risk_mc`].
pub fn rct_relative_risk(spec: &DgpSpec, step: u32) -> Result<f64> {
    spec.validate()?;
    if step >= spec.horizon_steps() {
        return Err(Error::UndefinedEstimand { detail: "step beyond horizon" });
    }
    match spec {
        DgpSpec::TwoGroup(s) => {
            // Exact survivor-weighted mixture: group shares drift from the
            // baseline mix as the groups deplete at different rates.
            let surv_g = |g: bool| -> f64 {
                let (l0, l1) = s.hazards(g);
                let p_a = s.p_a(g);
                1.0 - (p_a * l1 + (1.0 - p_a) * l0)
            };
            let w1 = s.p_g * powi(surv_g(true), step);
            let w0 = (1.0 - s.p_g) * powi(surv_g(false), step);
            if w0 + w1 <= 0.0 {
                return Err(Error::UndefinedEstimand { detail: "no survivor mass at step" });
            }
            let num = s.lambda1_g1 * w1 + s.lambda1_g0 * w0;
            let den = s.lambda0_g1 * w1 + s.lambda0_g0 * w0;
            if den == 0.0 {
                return Err(Error::UndefinedEstimand { detail: "untreated risk is zero" });
            }
            Ok(num / den)
        }
        DgpSpec::SmallOracle(s) => {
            let (num, den) = crate::enumerate::rct_components(s, step)?;
            if den == 0.0 {
                return Err(Error::UndefinedEstimand {
                    detail: "untreated risk among survivors is zero",
                });
            }
            Ok(num / den)
        }
        _ => Err(Error::UnsupportedSpec {
            operation: "rct_relative_risk",
            detail: "no closed form; use the Monte Carlo evaluator",
        }),
    }
}

/// Monte Carlo estimate of the randomized-trial relative risk at `step`,
/// serial reference implementation.
pub fn rct_relative_risk_mc(
    spec: &DgpSpec,
    step: u32,
    n_subjects: u64,
    master_seed: u64,
) -> Result<(Option<f64>, RctCounts)> {
    spec.validate()?;
    if n_subjects == 0 {
        return Err(Error::EmptyCohortRequest);
    }
    if step >= spec.horizon_steps() {
        return Err(Error::UndefinedEstimand { detail: "step beyond horizon" });
    }
    let mut counts = RctCounts::default();
    accumulate_rct(spec, step, master_seed, 0..n_subjects, &mut counts);
    Ok((counts.point(), counts))
}

/// Integer power by squaring; exact factor count, no libm.
pub(crate) fn powi(base: f64, mut exp: u32) -> f64 {
    let mut acc = 1.0f64;
    let mut b = base;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= b;
        }
        b *= b;
        exp >>= 1;
    }
    acc
}
