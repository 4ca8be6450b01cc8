//! Effect-heterogeneity limits for two-type populations.
//!
//! With type-specific constant hazards, iid treatments within type, and a
//! rare outcome, the case-crossover estimator with one control converges to
//! a weighted average of the type-specific hazard ratios whose weights carry
//! a `p_a (1 - p_a)` treatment-variance factor; a single-step randomized
//! trial weights the same ratios by untreated risk alone. Whichever type
//! has treatment probability closer to 1/2 is overweighted by the
//! case-crossover limit.

use crate::dgp::TwoGroup;
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// A two-type heterogeneity model: hazards and treatment probability per
/// type, and the population share of type `g = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HeterogeneityModel {
    pub lambda0_g0: f64,
    pub lambda1_g0: f64,
    pub lambda0_g1: f64,
    pub lambda1_g1: f64,
    pub p_a_g0: f64,
    pub p_a_g1: f64,
    pub p_g: f64,
}

/// Ratio of the weight on the `g = 0` hazard ratio to the weight on the
/// `g = 1` hazard ratio, for each estimand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightRatios {
    pub gamma_rct: f64,
    pub gamma_cc: f64,
}

impl HeterogeneityModel {
    pub fn validate(&self) -> Result<()> {
        let open = |name: &'static str, v: f64, hazard: bool| -> Result<()> {
            if v.is_finite() && v > 0.0 && v < 1.0 {
                Ok(())
            } else if hazard {
                Err(Error::HazardOutOfRange { name, value: v })
            } else {
                Err(Error::InvalidProbability { name, value: v })
            }
        };
        open("lambda0_g0", self.lambda0_g0, true)?;
        open("lambda1_g0", self.lambda1_g0, true)?;
        open("lambda0_g1", self.lambda0_g1, true)?;
        open("lambda1_g1", self.lambda1_g1, true)?;
        open("p_a_g0", self.p_a_g0, false)?;
        open("p_a_g1", self.p_a_g1, false)?;
        open("p_g", self.p_g, false)?;
        Ok(())
    }

    /// The model underlying a two-group process.
    pub fn from_two_group(spec: &TwoGroup) -> Self {
        HeterogeneityModel {
            lambda0_g0: spec.lambda0_g0,
            lambda1_g0: spec.lambda1_g0,
            lambda0_g1: spec.lambda0_g1,
            lambda1_g1: spec.lambda1_g1,
            p_a_g0: spec.p_a_g0,
            p_a_g1: spec.p_a_g1,
            p_g: spec.p_g,
        }
    }

    /// Type-specific hazard ratios `(g = 0, g = 1)`.
    pub fn group_ratios(&self) -> (f64, f64) {
        (self.lambda1_g0 / self.lambda0_g0, self.lambda1_g1 / self.lambda0_g1)
    }

    /// Limit of the case-crossover estimator with one control: treated over
    /// untreated hazards, each averaged with
    /// `p_a (1 - p_a) x population-share` weights.
    pub fn cc_limit(&self) -> f64 {
        let v0 = self.p_a_g0 * (1.0 - self.p_a_g0) * (1.0 - self.p_g);
        let v1 = self.p_a_g1 * (1.0 - self.p_a_g1) * self.p_g;
        (self.lambda1_g1 * v1 + self.lambda1_g0 * v0)
            / (self.lambda0_g1 * v1 + self.lambda0_g0 * v0)
    }

    /// Relative risk a single-step randomized trial would estimate:
    /// population-share-weighted treated over untreated hazards.
    pub fn rct_estimand(&self) -> f64 {
        (self.lambda1_g1 * self.p_g + self.lambda1_g0 * (1.0 - self.p_g))
            / (self.lambda0_g1 * self.p_g + self.lambda0_g0 * (1.0 - self.p_g))
    }

    /// Weight ratios of the two estimands. The identity
    /// `gamma_cc = gamma_rct * [p_a0 (1 - p_a0)] / [p_a1 (1 - p_a1)]` holds
    /// exactly.
    pub fn weight_ratios(&self) -> WeightRatios {
        let gamma_rct = self.lambda0_g0 * (1.0 - self.p_g) / (self.lambda0_g1 * self.p_g);
        let gamma_cc = gamma_rct * (self.p_a_g0 * (1.0 - self.p_a_g0))
            / (self.p_a_g1 * (1.0 - self.p_a_g1));
        WeightRatios { gamma_rct, gamma_cc }
    }

    /// Rare-outcome limit of the naive pooled cohort hazard ratio: the
    /// treated event rate over the untreated event rate, with person-time
    /// pooled across types and no adjustment for type.
    pub fn cohort_limit(&self) -> f64 {
        let treated_pt = self.p_a_g1 * self.p_g + self.p_a_g0 * (1.0 - self.p_g);
        let untreated_pt = (1.0 - self.p_a_g1) * self.p_g + (1.0 - self.p_a_g0) * (1.0 - self.p_g);
        let treated_rate =
            (self.lambda1_g1 * self.p_a_g1 * self.p_g + self.lambda1_g0 * self.p_a_g0 * (1.0 - self.p_g))
                / treated_pt;
        let untreated_rate = (self.lambda0_g1 * (1.0 - self.p_a_g1) * self.p_g
            + self.lambda0_g0 * (1.0 - self.p_a_g0) * (1.0 - self.p_g))
            / untreated_pt;
        treated_rate / untreated_rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The worked two-type example: ratios 2 and 10, exposure 0.8 vs 0.5.
    pub(crate) fn example() -> HeterogeneityModel {
        HeterogeneityModel {
            lambda0_g0: 0.001,
            lambda1_g0: 0.002,
            lambda0_g1: 0.0005,
            lambda1_g1: 0.005,
            p_a_g0: 0.8,
            p_a_g1: 0.5,
            p_g: 0.5,
        }
    }

    #[test]
    fn example_reference_values() {
        let m = example();
        m.validate().unwrap();
        assert!((m.cc_limit() - 5.508771929824562).abs() < 1e-12);
        assert!((m.rct_estimand() - 14.0 / 3.0).abs() < 1e-12);
        assert!((m.cohort_limit() - 4.905982905982906).abs() < 1e-12);
        let w = m.weight_ratios();
        assert!((w.gamma_rct - 2.0).abs() < 1e-12);
        assert!((w.gamma_cc - 1.28).abs() < 1e-12);
        assert!((w.gamma_cc / w.gamma_rct - 0.64).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_model_returns_the_common_ratio() {
        let m = HeterogeneityModel {
            lambda0_g0: 0.002,
            lambda1_g0: 0.006,
            lambda0_g1: 0.002,
            lambda1_g1: 0.006,
            p_a_g0: 0.3,
            p_a_g1: 0.3,
            p_g: 0.4,
        };
        assert!((m.cc_limit() - 3.0).abs() < 1e-12);
        assert!((m.rct_estimand() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn equal_exposure_collapses_cc_to_rct() {
        // Same treatment probability in both types: the treatment-variance
        // factor cancels and the two weight ratios coincide.
        let mut m = example();
        m.p_a_g0 = 0.5;
        let w = m.weight_ratios();
        assert!((w.gamma_cc - w.gamma_rct).abs() < 1e-12);
        assert!((m.cc_limit() - m.rct_estimand()).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_from_weight_ratio() {
        // cc_limit rebuilt from (gamma_cc, group ratios) as the weighted
        // average gamma/(1+gamma) r0 + 1/(1+gamma) r1.
        let m = example();
        let w = m.weight_ratios();
        let (r0, r1) = m.group_ratios();
        let rebuilt = (r0 * w.gamma_cc + r1) / (w.gamma_cc + 1.0);
        assert!((rebuilt - m.cc_limit()).abs() < 1e-12);
    }

    #[test]
    fn equal_exposure_collapses_cc_to_rct_over_random_models() {
        let mut state = 0xabcdef12345u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let p_a = 0.05 + 0.9 * next();
            let m = HeterogeneityModel {
                lambda0_g0: 0.0005 + 0.01 * next(),
                lambda1_g0: 0.0005 + 0.01 * next(),
                lambda0_g1: 0.0005 + 0.01 * next(),
                lambda1_g1: 0.0005 + 0.01 * next(),
                p_a_g0: p_a,
                p_a_g1: p_a,
                p_g: 0.05 + 0.9 * next(),
            };
            assert!((m.cc_limit() - m.rct_estimand()).abs() < 1e-12);
        }
    }

    #[test]
    fn limits_are_bounded_by_group_ratios() {
        // Pseudo-random models: both limits stay inside the interval
        // spanned by the type-specific ratios.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..500 {
            let m = HeterogeneityModel {
                lambda0_g0: 0.0005 + 0.01 * next(),
                lambda1_g0: 0.0005 + 0.01 * next(),
                lambda0_g1: 0.0005 + 0.01 * next(),
                lambda1_g1: 0.0005 + 0.01 * next(),
                p_a_g0: 0.05 + 0.9 * next(),
                p_a_g1: 0.05 + 0.9 * next(),
                p_g: 0.05 + 0.9 * next(),
            };
            let (r0, r1) = m.group_ratios();
            let (lo, hi) = if r0 < r1 { (r0, r1) } else { (r1, r0) };
            for v in [m.cc_limit(), m.rct_estimand()] {
                assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "{v} outside [{lo}, {hi}]");
            }
        }
    }
}
