//! Text output formats: delimited tables with a `#` metadata preamble, and
//! line-oriented `key=value` records.
//!
//! Outputs contain no timestamps, so identical inputs produce byte-identical
//! files.

use std::io::{self, BufRead, Write};

use anyhow::{bail, Context, Result};

use casecross_core::analytic::{AssumptionAudit, BiasReport, GridRow, GridSpec, HeterogeneityModel};
use casecross_core::dgp::{RctCounts, SubjectTrajectory};
use casecross_core::estimators::{CohortHrEstimate, MhEstimate};
use casecross_core::sampler::CaseRecord;
use casecross_core::BitSeq;

fn fmt_opt_point(point: Option<f64>) -> String {
    match point {
        Some(p) => format!("{p}"),
        None => "NA".to_string(),
    }
}

// ── Records (key=value lines) ─────────────────────────────────────────

pub fn mh_record_line(est: &MhEstimate, seed: u64, spec_hash: u64) -> String {
    format!(
        "estimator=mh-irr point={} n10={} n01={} n_pairs={} defined={} seed={} spec_hash={:016x}",
        fmt_opt_point(est.point),
        est.counts.n10,
        est.counts.n01,
        est.counts.n_pairs,
        est.defined(),
        seed,
        spec_hash,
    )
}

pub fn cohort_hr_record_line(est: &CohortHrEstimate, seed: u64, spec_hash: u64) -> String {
    format!(
        "estimator=cohort-hr point={} treated_steps={} untreated_steps={} treated_events={} \
         untreated_events={} defined={} seed={} spec_hash={:016x}",
        fmt_opt_point(est.point),
        est.counts.treated_steps,
        est.counts.untreated_steps,
        est.counts.treated_events,
        est.counts.untreated_events,
        est.defined(),
        seed,
        spec_hash,
    )
}

pub fn rct_record_line(
    point: Option<f64>,
    counts: Option<&RctCounts>,
    step: u32,
    seed: u64,
    spec_hash: u64,
) -> String {
    let mut line = format!("estimator=rct-rr step={step} point={}", fmt_opt_point(point));
    if let Some(c) = counts {
        line.push_str(&format!(
            " at_risk={} treated_events={} untreated_events={}",
            c.at_risk, c.treated_events, c.untreated_events
        ));
    }
    line.push_str(&format!(
        " defined={} seed={} spec_hash={:016x}",
        point.is_some(),
        seed,
        spec_hash
    ));
    line
}

pub fn bias_record_line(report: &BiasReport, spec_hash: u64) -> String {
    format!(
        "method={} beta={} tau={} limit={} spec_hash={:016x}",
        report.method, report.beta, report.tau, report.limit, spec_hash
    )
}

pub fn hetero_record_line(model: &HeterogeneityModel) -> String {
    let w = model.weight_ratios();
    let (r0, r1) = model.group_ratios();
    format!(
        "cc_limit={} rct_estimand={} cohort_limit={} gamma_rct={} gamma_cc={} ratio_g0={} ratio_g1={}",
        model.cc_limit(),
        model.rct_estimand(),
        model.cohort_limit(),
        w.gamma_rct,
        w.gamma_cc,
        r0,
        r1,
    )
}

// ── Cohort export / import ────────────────────────────────────────────

/// One row per subject: id, first-event step (-1 if none), the recorded
/// (event-censored) treatment bitstring, and group (-1 when the process has
/// none). Debugging format; estimators consume in-memory trajectories.
pub fn write_cohort_csv<W: Write>(mut w: W, cohort: &[SubjectTrajectory]) -> io::Result<()> {
    writeln!(w, "subject_id,outcome_step,treatments,group")?;
    let mut bits = String::new();
    for t in cohort {
        bits.clear();
        for step in 0..t.horizon() {
            bits.push(if t.treatment_at(step) { '1' } else { '0' });
        }
        let outcome = t.outcome_step().map_or(-1i64, |s| s as i64);
        let group = t.group().map_or(-1i64, |g| g as i64);
        writeln!(w, "{},{},{},{}", t.subject_id, outcome, bits, group)?;
    }
    Ok(())
}

/// Parse the cohort export format back into trajectories.
pub fn read_cohort_csv<R: BufRead>(r: R) -> Result<Vec<SubjectTrajectory>> {
    let mut lines = r.lines();
    match lines.next() {
        Some(header) => {
            let header = header?;
            if header.trim() != "subject_id,outcome_step,treatments,group" {
                bail!("unrecognized cohort header: {header}");
            }
        }
        None => return Ok(Vec::new()),
    }
    let mut cohort = Vec::new();
    let mut horizon: Option<u32> = None;
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = idx + 2;
        let mut fields = line.split(',');
        let mut next = |name: &str| {
            fields.next().with_context(|| format!("row {row}: missing field {name}"))
        };
        let subject_id: u64 = next("subject_id")?.trim().parse()?;
        let outcome: i64 = next("outcome_step")?.trim().parse()?;
        let bits = next("treatments")?.trim();
        let group: i64 = next("group")?.trim().parse()?;
        let len = bits.len() as u32;
        match horizon {
            None => horizon = Some(len),
            Some(h) if h != len => bail!("row {row}: horizon {len} differs from {h}"),
            _ => {}
        }
        let mut seq = BitSeq::zeros(len, 1);
        for (step, ch) in bits.chars().enumerate() {
            match ch {
                '1' => seq.set_step(step as u32),
                '0' => {}
                other => bail!("row {row}: invalid treatment bit {other:?}"),
            }
        }
        let outcome_step = match outcome {
            -1 => None,
            s if s >= 0 => Some(s as u32),
            s => bail!("row {row}: invalid outcome step {s}"),
        };
        let group = match group {
            -1 => None,
            0 => Some(false),
            1 => Some(true),
            g => bail!("row {row}: invalid group {g}"),
        };
        cohort.push(
            SubjectTrajectory::from_recorded_parts(subject_id, seq, outcome_step, group)
                .with_context(|| format!("row {row}"))?,
        );
    }
    Ok(cohort)
}

/// Case-record export: the minimal data of a real study.
pub fn write_case_records_csv<W: Write>(
    mut w: W,
    records: &[CaseRecord],
    n_controls: usize,
) -> io::Result<()> {
    write!(w, "subject_id,case_step,a_case")?;
    for l in 1..=n_controls {
        write!(w, ",a_control_{l}")?;
    }
    writeln!(w)?;
    for r in records {
        write!(w, "{},{},{}", r.subject_id, r.case_step, r.a_case as u8)?;
        for &a in &r.a_controls {
            write!(w, ",{}", a as u8)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

// ── Grid / audit / bias tables ────────────────────────────────────────

pub fn write_grid_csv<W: Write>(
    mut w: W,
    grid: &GridSpec,
    rows: &[GridRow],
    version: &str,
) -> io::Result<()> {
    writeln!(w, "# casecross grid v{version}")?;
    writeln!(w, "# spec_hash={:016x}", casecross_core::hash::grid_spec_hash(grid))?;
    writeln!(w, "# rows={}", rows.len())?;
    writeln!(w, "# p_g={}", grid.p_g)?;
    writeln!(w, "# lambda0_values={:?}", grid.lambda0_values)?;
    writeln!(w, "# ratios_g0={:?}", grid.ratios_g0)?;
    writeln!(w, "# ratio_multipliers={:?}", grid.ratio_multipliers)?;
    writeln!(w, "# p_a_values={:?}", grid.p_a_values)?;
    writeln!(
        w,
        "lambda0_g0,lambda0_g1,ratio_g0,ratio_g1,p_a_g0,p_a_g1,p_g,cc_limit,rct_estimand,cohort_limit,cc_bias,cohort_bias,defined"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.lambda0_g0,
            r.lambda0_g1,
            r.ratio_g0,
            r.ratio_g1,
            r.p_a_g0,
            r.p_a_g1,
            r.p_g,
            r.cc_limit,
            r.rct_estimand,
            r.cohort_limit,
            r.cc_bias,
            r.cohort_bias,
            r.defined,
        )?;
    }
    Ok(())
}

pub fn write_audit_csv<W: Write>(
    mut w: W,
    audit: &AssumptionAudit,
    version: &str,
    spec_hash: u64,
) -> io::Result<()> {
    writeln!(w, "# casecross audit v{version}")?;
    writeln!(w, "# spec_hash={spec_hash:016x}")?;
    writeln!(w, "# rare_outcome_note={}", audit.rare_outcome.note)?;
    writeln!(w, "section,kind,case_step,offset,value,threshold,pass")?;
    writeln!(
        w,
        "rare_outcome,total,,,{},{},{}",
        audit.rare_outcome.max_cumulative_risk, audit.rare_outcome.epsilon, audit.rare_outcome.pass
    )?;
    for (name, sum) in
        [("time_modified", &audit.time_modified), ("time_trends", &audit.time_trends)]
    {
        for t in &sum.per_pair {
            writeln!(w, "{name},pair,{},{},{},,", t.case_step, t.offset, t.value)?;
        }
        writeln!(w, "{name},total,,,{},{},{}", sum.total, sum.tolerance, sum.pass)?;
    }
    Ok(())
}

pub fn write_bias_terms_csv<W: Write>(
    mut w: W,
    report: &BiasReport,
    version: &str,
    spec_hash: u64,
) -> io::Result<()> {
    writeln!(w, "# casecross bias v{version}")?;
    writeln!(w, "# spec_hash={spec_hash:016x}")?;
    writeln!(w, "# method={}", report.method)?;
    writeln!(w, "# beta={}", report.beta)?;
    writeln!(w, "# tau={}", report.tau)?;
    writeln!(w, "# limit={}", report.limit)?;
    writeln!(w, "case_step,offset,u_pattern,numerator,denominator")?;
    if let Some(terms) = &report.terms {
        for t in terms {
            writeln!(
                w,
                "{},{},{},{},{}",
                t.case_step, t.offset, t.u_pattern, t.numerator, t.denominator
            )?;
        }
    }
    Ok(())
}
