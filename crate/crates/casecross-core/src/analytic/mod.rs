//! Closed-form and exactly enumerated limits of the case-crossover
//! estimator, effect-heterogeneity analysis, grid sweeps, and numeric
//! audits of the design assumptions.

mod audit;
mod bias;
mod grid;
mod hetero;

pub use audit::{
    assumption_audit, AssumptionAudit, PairTerm, RareOutcomeAudit, SumAudit, EXACT_AUDIT_TOL,
    RARE_OUTCOME_NOTE,
};
pub use bias::{
    tau_correlated_expansion, tau_exact, tau_exact_with_budget, tau_fine_closed_form,
    tau_independent_approx, BiasReport, BiasTerm, TauMethod, UPattern,
};
pub use grid::{grid_sweep, GridRow, GridSpec};
pub use hetero::{HeterogeneityModel, WeightRatios};
