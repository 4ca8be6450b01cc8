//! Grid sweep of two-type models, comparing the case-crossover and naive
//! cohort limits against the randomized-trial estimand.

use alloc::vec::Vec;

use super::hetero::HeterogeneityModel;
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Sweep bounds. Both groups range over the same baseline hazards and
/// exposure probabilities; the `g = 1` hazard ratio is a multiple of the
/// `g = 0` ratio.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GridSpec {
    /// Baseline (untreated) hazards tried for each group.
    pub lambda0_values: Vec<f64>,
    /// Hazard ratios of group 0.
    pub ratios_g0: Vec<u32>,
    /// Multipliers: group 1's ratio is `multiplier * ratio_g0`.
    pub ratio_multipliers: Vec<u32>,
    /// Exposure probabilities tried for each group.
    pub p_a_values: Vec<f64>,
    /// Population share of group 1, fixed across the sweep.
    pub p_g: f64,
}

impl Default for GridSpec {
    /// The standard sweep: baseline hazards {5e-4, 1e-3} per group, group-0
    /// ratios 1..=5, multipliers 1..=10, exposure probabilities k/20 for
    /// k = 1..=19, group share 1/2. 72,200 settings.
    fn default() -> Self {
        GridSpec {
            lambda0_values: alloc::vec![0.0005, 0.001],
            ratios_g0: (1..=5).collect(),
            ratio_multipliers: (1..=10).collect(),
            p_a_values: (1..=19).map(|k| k as f64 / 20.0).collect(),
            p_g: 0.5,
        }
    }
}

impl GridSpec {
    pub fn n_rows(&self) -> usize {
        self.lambda0_values.len()
            * self.lambda0_values.len()
            * self.ratios_g0.len()
            * self.ratio_multipliers.len()
            * self.p_a_values.len()
            * self.p_a_values.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda0_values.is_empty()
            || self.ratios_g0.is_empty()
            || self.ratio_multipliers.is_empty()
            || self.p_a_values.is_empty()
        {
            return Err(Error::UnsupportedSpec {
                operation: "grid_sweep",
                detail: "every grid axis needs at least one value",
            });
        }
        if !(self.p_g.is_finite() && self.p_g > 0.0 && self.p_g < 1.0) {
            return Err(Error::InvalidProbability { name: "p_g", value: self.p_g });
        }
        Ok(())
    }
}

/// One grid setting with its limits and multiplicative biases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub lambda0_g0: f64,
    pub lambda0_g1: f64,
    pub ratio_g0: u32,
    pub ratio_g1: u32,
    pub p_a_g0: f64,
    pub p_a_g1: f64,
    pub p_g: f64,
    pub cc_limit: f64,
    pub rct_estimand: f64,
    pub cohort_limit: f64,
    /// `cc_limit / rct_estimand`.
    pub cc_bias: f64,
    /// `cohort_limit / rct_estimand`.
    pub cohort_bias: f64,
    /// False when the setting is degenerate (invalid hazards or zero
    /// estimand); such rows carry NaN limits.
    pub defined: bool,
}

/// Evaluate every grid setting, in deterministic row order
/// `(lambda0_g0, lambda0_g1, ratio_g0, multiplier, p_a_g0, p_a_g1)`.
///
/// Re-running yields an identical table: every row is a closed-form
/// function of its setting.
pub fn grid_sweep(grid: &GridSpec) -> Result<Vec<GridRow>> {
    grid.validate()?;
    let mut rows = Vec::with_capacity(grid.n_rows());
    for &l0_g0 in &grid.lambda0_values {
        for &l0_g1 in &grid.lambda0_values {
            for &r0 in &grid.ratios_g0 {
                for &mult in &grid.ratio_multipliers {
                    let r1 = mult * r0;
                    for &pa0 in &grid.p_a_values {
                        for &pa1 in &grid.p_a_values {
                            let model = HeterogeneityModel {
                                lambda0_g0: l0_g0,
                                lambda1_g0: r0 as f64 * l0_g0,
                                lambda0_g1: l0_g1,
                                lambda1_g1: r1 as f64 * l0_g1,
                                p_a_g0: pa0,
                                p_a_g1: pa1,
                                p_g: grid.p_g,
                            };
                            let defined = model.validate().is_ok();
                            let (cc, rct, cohort) = if defined {
                                (model.cc_limit(), model.rct_estimand(), model.cohort_limit())
                            } else {
                                (f64::NAN, f64::NAN, f64::NAN)
                            };
                            rows.push(GridRow {
                                lambda0_g0: l0_g0,
                                lambda0_g1: l0_g1,
                                ratio_g0: r0,
                                ratio_g1: r1,
                                p_a_g0: pa0,
                                p_a_g1: pa1,
                                p_g: grid.p_g,
                                cc_limit: cc,
                                rct_estimand: rct,
                                cohort_limit: cohort,
                                cc_bias: cc / rct,
                                cohort_bias: cohort / rct,
                                defined,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_grid_has_expected_cardinality() {
        let grid = GridSpec::default();
        assert_eq!(grid.n_rows(), 72_200);
        let rows = grid_sweep(&grid).unwrap();
        assert_eq!(rows.len(), 72_200);
        assert!(rows.iter().all(|r| r.defined));
    }

    #[test]
    fn null_rows_have_unit_bias() {
        // Null effect in both groups: the case-crossover limit controls
        // baseline type, so its bias is 1 in every cell. The naive cohort
        // limit stays confounded whenever baseline hazard and exposure both
        // vary by type, and collapses to 1 exactly when either is shared.
        let grid = GridSpec { ratios_g0: alloc::vec![1], ratio_multipliers: alloc::vec![1], ..GridSpec::default() };
        for row in grid_sweep(&grid).unwrap() {
            assert!((row.cc_bias - 1.0).abs() < 1e-12);
            if row.lambda0_g0 == row.lambda0_g1 || row.p_a_g0 == row.p_a_g1 {
                assert!((row.cohort_bias - 1.0).abs() < 1e-12);
            }
        }
        // Confounded null cells really do exist.
        let rows = grid_sweep(&grid).unwrap();
        assert!(rows
            .iter()
            .any(|r| (r.cohort_bias - 1.0).abs() > 0.05 && (r.cc_bias - 1.0).abs() < 1e-12));
    }

    #[test]
    fn worked_example_cell_is_on_the_grid() {
        // lambda0 pair (.001, .0005), ratios (2, 10), exposures (.8, .5).
        let rows = grid_sweep(&GridSpec::default()).unwrap();
        let row = rows
            .iter()
            .find(|r| {
                r.lambda0_g0 == 0.001
                    && r.lambda0_g1 == 0.0005
                    && r.ratio_g0 == 2
                    && r.ratio_g1 == 10
                    && r.p_a_g0 == 0.8
                    && r.p_a_g1 == 0.5
            })
            .expect("cell present");
        assert!((row.cc_bias - 1.1804511278195489).abs() < 1e-12);
        assert!((row.cohort_bias - 1.0512820512820513).abs() < 1e-12);
    }

    #[test]
    fn neither_estimator_dominates() {
        let rows = grid_sweep(&GridSpec::default()).unwrap();
        let cc_better = rows.iter().any(|r| r.cc_bias < r.cohort_bias);
        let cohort_better = rows.iter().any(|r| r.cohort_bias < r.cc_bias);
        assert!(cc_better && cohort_better);
    }

    #[test]
    fn rerun_is_identical() {
        let grid = GridSpec::default();
        let a = grid_sweep(&grid).unwrap();
        let b = grid_sweep(&grid).unwrap();
        assert_eq!(a, b);
    }
}
