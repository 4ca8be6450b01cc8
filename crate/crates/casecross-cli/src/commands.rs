//! Command implementations shared by the binary and the tests.

use std::fs::{self, File};
use std::io::{BufReader, Write as _};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use casecross_core::analytic::{
    assumption_audit, grid_sweep, tau_correlated_expansion, tau_exact, tau_fine_closed_form,
    tau_independent_approx, BiasReport,
};
use casecross_core::dgp::{rct_relative_risk, DgpSpec, SimOptions};
use casecross_core::estimators::{CohortHrEstimate, MhEstimate, mh_irr, naive_cohort_hr};
use casecross_core::hash::{run_hash, spec_hash};
use casecross_core::sampler::extract_cases;

use crate::config::RunConfig;
use crate::formats;
use crate::reproduce;
use crate::runner;

/// Output format of tabular-capable commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Records,
    Csv,
}

/// Options resolved from the command line.
#[derive(Debug, Clone)]
pub struct CommonOpts {
    pub config: Option<PathBuf>,
    pub seed_override: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl CommonOpts {
    fn load_config(&self, command: &str) -> Result<RunConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| anyhow!("`{command}` needs --config PATH"))?;
        let mut config = RunConfig::load(path)?;
        config.check_command(command)?;
        if let Some(seed) = self.seed_override {
            config.run.master_seed = seed;
        }
        Ok(config)
    }

    /// Write `content` to --out, or stdout when unset.
    fn emit(&self, content: &str) -> Result<()> {
        match &self.out {
            Some(path) => {
                fs::write(path, content)
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            None => {
                print!("{content}");
                std::io::stdout().flush()?;
            }
        }
        Ok(())
    }
}

/// Exit status of a completed command.
pub enum Outcome {
    Success,
    /// Acceptance or assertion failure (exit 1).
    Failed,
}

pub fn simulate(opts: &CommonOpts) -> Result<Outcome> {
    let config = opts.load_config("simulate")?;
    let spec = config.dgp()?;
    spec.validate().map_err(|e| anyhow!("invalid dgp: {e}"))?;
    let run = &config.run;
    let cohort = runner::with_threads(opts.threads, || {
        runner::simulate_cohort_parallel(spec, run.n_subjects, run.master_seed, SimOptions::default())
    })?;
    let mut buf = Vec::new();
    formats::write_cohort_csv(&mut buf, &cohort)?;
    opts.emit(&String::from_utf8(buf)?)?;
    Ok(Outcome::Success)
}

/// The case-record table: the minimal per-case data, with the resulting
/// estimate in the preamble.
fn case_records_csv(
    cohort: &[casecross_core::dgp::SubjectTrajectory],
    plan: &casecross_core::sampler::SamplingPlan,
    seed: u64,
    hash: u64,
) -> Result<String> {
    let records = extract_cases(cohort, plan).map_err(|e| anyhow!("{e}"))?;
    let est = mh_irr(&records);
    let mut buf = Vec::new();
    writeln!(buf, "# casecross case-records v{}", crate::VERSION)?;
    writeln!(buf, "# {}", formats::mh_record_line(&est, seed, hash))?;
    formats::write_case_records_csv(&mut buf, &records, plan.n_controls())?;
    Ok(String::from_utf8(buf)?)
}

fn estimate_from_cohort_file(
    opts: &CommonOpts,
    config: &RunConfig,
    path: &Path,
) -> Result<Outcome> {
    let cohort = formats::read_cohort_csv(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))?;
    if opts.format == OutputFormat::Csv {
        let plan = config.plan()?;
        plan.validate().map_err(|e| anyhow!("invalid plan: {e}"))?;
        opts.emit(&case_records_csv(&cohort, plan, config.run.master_seed, 0)?)?;
        return Ok(Outcome::Success);
    }
    let mut out = String::new();
    if let Some(plan) = &config.plan {
        plan.validate().map_err(|e| anyhow!("invalid plan: {e}"))?;
        let records = extract_cases(&cohort, plan).map_err(|e| anyhow!("{e}"))?;
        let est = mh_irr(&records);
        out.push_str(&formats::mh_record_line(&est, config.run.master_seed, 0));
        out.push('\n');
    }
    if config.run.cohort_hr || config.plan.is_none() {
        let est = naive_cohort_hr(&cohort);
        out.push_str(&formats::cohort_hr_record_line(&est, config.run.master_seed, 0));
        out.push('\n');
    }
    opts.emit(&out)?;
    Ok(Outcome::Success)
}

pub fn estimate(opts: &CommonOpts) -> Result<Outcome> {
    let config = opts.load_config("estimate")?;
    if let Some(section) = &config.estimate {
        if let Some(path) = &section.cohort_file {
            let path = path.clone();
            return estimate_from_cohort_file(opts, &config, Path::new(&path));
        }
    }
    let spec = config.dgp()?;
    spec.validate().map_err(|e| anyhow!("invalid dgp: {e}"))?;
    let run = config.run.clone();
    if opts.format == OutputFormat::Csv {
        // Case-record export needs materialized trajectories of one run.
        if run.seeds != 1 {
            bail!("case-record export (--format csv) supports a single seed; set run.seeds = 1");
        }
        let plan = config.plan()?;
        plan.validate_for_horizon(spec.horizon_steps())
            .map_err(|e| anyhow!("invalid plan: {e}"))?;
        let cohort = runner::with_threads(opts.threads, || {
            runner::simulate_cohort_parallel(spec, run.n_subjects, run.master_seed, SimOptions::default())
        })?;
        let hash = run_hash(spec, plan, run.n_subjects, run.master_seed);
        opts.emit(&case_records_csv(&cohort, plan, run.master_seed, hash)?)?;
        return Ok(Outcome::Success);
    }
    let mut out = String::new();
    runner::with_threads(opts.threads, || -> Result<()> {
        if let Some(plan) = &config.plan {
            plan.validate_for_horizon(spec.horizon_steps())
                .map_err(|e| anyhow!("invalid plan: {e}"))?;
            let counts =
                runner::mh_counts_pooled(spec, plan, run.n_subjects, run.master_seed, run.seeds);
            let est = MhEstimate { point: counts.point(), counts };
            let hash = run_hash(spec, plan, run.n_subjects, run.master_seed);
            out.push_str(&formats::mh_record_line(&est, run.master_seed, hash));
            out.push('\n');
        }
        if run.cohort_hr {
            let counts = runner::person_time_counts(spec, run.n_subjects, run.master_seed);
            let est = CohortHrEstimate { point: counts.point(), counts };
            out.push_str(&formats::cohort_hr_record_line(
                &est,
                run.master_seed,
                spec_hash(spec),
            ));
            out.push('\n');
        }
        if let Some(step) = run.rct_step {
            let line = match rct_relative_risk(spec, step) {
                Ok(point) => {
                    formats::rct_record_line(Some(point), None, step, run.master_seed, spec_hash(spec))
                }
                Err(casecross_core::Error::UnsupportedSpec { .. }) => {
                    let counts = runner::rct_counts(spec, step, run.n_subjects, run.master_seed);
                    formats::rct_record_line(
                        counts.point(),
                        Some(&counts),
                        step,
                        run.master_seed,
                        spec_hash(spec),
                    )
                }
                Err(e) => bail!("rct estimand: {e}"),
            };
            out.push_str(&line);
            out.push('\n');
        }
        Ok(())
    })??;
    if out.is_empty() {
        bail!("estimate config selects nothing: add [plan], run.cohort_hr, or run.rct_step");
    }
    opts.emit(&out)?;
    Ok(Outcome::Success)
}

fn bias_report(config: &RunConfig) -> Result<BiasReport> {
    let method = config
        .bias
        .as_ref()
        .context("config needs a [bias] section with `method`")?
        .method
        .as_str();
    let spec = config.dgp()?;
    let report = match method {
        "exact" => {
            let plan = config.plan()?;
            match spec {
                DgpSpec::SmallOracle(s) => tau_exact(s, plan),
                _ => bail!("bias method `exact` needs a small_oracle dgp"),
            }
        }
        "correlated-expansion" => {
            let plan = config.plan()?;
            match spec {
                DgpSpec::SmallOracle(s) => tau_correlated_expansion(s, plan),
                _ => bail!("bias method `correlated-expansion` needs a small_oracle dgp"),
            }
        }
        "independent-approx" => tau_independent_approx(spec, config.plan()?),
        "fine-closed-form" => match spec {
            DgpSpec::FineCorrelated(s) => tau_fine_closed_form(s),
            _ => bail!("bias method `fine-closed-form` needs a fine_correlated dgp"),
        },
        other => bail!(
            "unknown bias method `{other}`; expected exact, correlated-expansion, \
             independent-approx, or fine-closed-form"
        ),
    }
    .map_err(|e| anyhow!("{e}"))?;
    Ok(report)
}

pub fn bias(opts: &CommonOpts) -> Result<Outcome> {
    let config = opts.load_config("bias")?;
    let report = bias_report(&config)?;
    let hash = spec_hash(config.dgp()?);
    match opts.format {
        OutputFormat::Records => {
            opts.emit(&format!("{}\n", formats::bias_record_line(&report, hash)))?
        }
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            formats::write_bias_terms_csv(&mut buf, &report, crate::VERSION, hash)?;
            opts.emit(&String::from_utf8(buf)?)?;
        }
    }
    Ok(Outcome::Success)
}

pub fn hetero(opts: &CommonOpts) -> Result<Outcome> {
    let config = opts.load_config("hetero")?;
    let model = config.hetero()?;
    model.validate().map_err(|e| anyhow!("invalid hetero model: {e}"))?;
    opts.emit(&format!("{}\n", formats::hetero_record_line(model)))?;
    Ok(Outcome::Success)
}

pub fn grid(opts: &CommonOpts) -> Result<Outcome> {
    // Config is optional: the default sweep needs none.
    let grid_spec = match &opts.config {
        Some(_) => {
            let config = opts.load_config("grid")?;
            config.grid.clone().unwrap_or_default().to_grid_spec()
        }
        None => Default::default(),
    };
    let rows = grid_sweep(&grid_spec).map_err(|e| anyhow!("{e}"))?;
    let mut buf = Vec::new();
    formats::write_grid_csv(&mut buf, &grid_spec, &rows, crate::VERSION)?;
    opts.emit(&String::from_utf8(buf)?)?;
    Ok(Outcome::Success)
}

pub fn audit(opts: &CommonOpts) -> Result<Outcome> {
    let config = opts.load_config("audit")?;
    let epsilon = config
        .audit
        .as_ref()
        .context("config needs an [audit] section with `epsilon`")?
        .epsilon;
    let spec = config.dgp()?;
    let plan = config.plan()?;
    let audit = assumption_audit(spec, plan, epsilon).map_err(|e| anyhow!("{e}"))?;
    let mut buf = Vec::new();
    formats::write_audit_csv(&mut buf, &audit, crate::VERSION, spec_hash(spec))?;
    opts.emit(&String::from_utf8(buf)?)?;
    Ok(Outcome::Success)
}

pub fn reproduce_cmd(opts: &CommonOpts) -> Result<Outcome> {
    if let Some(path) = &opts.config {
        // A config is allowed for uniformity but adds nothing.
        RunConfig::load(path)?.check_command("reproduce")?;
    }
    let results = reproduce::run_all(opts.threads);
    let table = reproduce::format_table(&results);
    opts.emit(&table)?;
    if opts.out.is_some() {
        // Also surface the table on stdout when writing to a file.
        print!("{table}");
    }
    Ok(if reproduce::all_passed(&results) { Outcome::Success } else { Outcome::Failed })
}
