//! Shared helpers for the integration tests.

#![allow(dead_code)]

use casecross_core::dgp::{DgpSpec, HazardTable, SmallOracle};
use casecross_core::rng::{self, StreamKind};
use rand_core::RngCore;

/// Standard error of the log of a discordant-pair ratio.
pub fn log_ratio_se(n10: u64, n01: u64) -> f64 {
    (1.0 / n10 as f64 + 1.0 / n01 as f64).sqrt()
}

/// True when `estimate` is within `k` standard errors of `target` on the
/// log scale.
pub fn within_k_log_se(estimate: f64, target: f64, se: f64, k: f64) -> bool {
    ((estimate / target).ln()).abs() <= k * se
}

/// The hour-scale strong-common-cause process.
pub fn coarse_spec(w: f64, beta: f64) -> DgpSpec {
    DgpSpec::CoarseIndependent(casecross_core::dgp::CoarseIndependent {
        horizon: 24,
        p_u: 0.001,
        w_lag: w,
        w_now: w,
        hazard_cap: 0.5,
        beta,
        p_a: 0.5,
    })
}

/// Deterministic pseudo-random small-oracle instances for property suites.
pub struct InstanceGen {
    rng: rand_xoshiro::Xoshiro256PlusPlus,
}

impl InstanceGen {
    pub fn new(seed: u64) -> Self {
        InstanceGen { rng: rng::stream(seed, 0, StreamKind::Auxiliary) }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * rng::u01(&mut self.rng)
    }

    pub fn pick(&mut self, choices: &[u32]) -> u32 {
        choices[(self.rng.next_u64() % choices.len() as u64) as usize]
    }

    /// An iid-treatment instance with hazards bounded away from zero and
    /// `beta * max_hazard <= 1`.
    pub fn iid_oracle(&mut self, beta: f64) -> SmallOracle {
        let horizon = self.pick(&[3, 4, 5, 6]);
        let hi = 0.9 / beta.max(1.0);
        let lo = 0.02;
        let base = self.uniform(lo, 0.25f64.min(hi));
        let w_now = self.uniform(0.0, (hi - base).clamp(0.0, 0.3));
        let w_lag = self.uniform(0.0, (hi - base - w_now).clamp(0.0, 0.3));
        let table = HazardTable::from_fn(horizon, |_, u_now, u_lag| {
            base + w_now * (u_now as u8 as f64) + w_lag * (u_lag as u8 as f64)
        });
        let p_u = self.uniform(0.05, 0.9);
        let p_a = self.uniform(0.1, 0.9);
        SmallOracle::iid(horizon, p_u, p_a, table, beta)
    }

    /// An instance with block-shared draws allowed.
    pub fn blocked_oracle(&mut self, beta: f64) -> SmallOracle {
        let mut spec = self.iid_oracle(beta);
        spec.u_block = self.pick(&[1, 2, 3]);
        spec.a_block = self.pick(&[1, 2, 3]);
        spec
    }
}
