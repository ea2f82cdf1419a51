//! The acceptance criteria, run end to end.

use pilotwave::acceptance::{self, CRITERIA};
use pilotwave::table::Table;
use serde::{Deserialize, Serialize};

use crate::config::{Checker, Invalid};
use crate::report::{CliError, Report};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    /// Criterion ids to run; empty runs all of them.
    pub criteria: Vec<usize>,
}

impl SuiteConfig {
    pub fn validate(&self) -> Vec<Invalid> {
        let mut c = Checker::new("suite");
        c.require(
            self.criteria.iter().all(|id| (1..=CRITERIA).contains(id)),
            "criteria",
            &format!("ids must lie in 1..={CRITERIA}"),
        );
        c.found
    }
}

pub fn run(cfg: &SuiteConfig, seed: u64, report: &mut Report) -> Result<(), CliError> {
    let ids: Vec<usize> = if cfg.criteria.is_empty() {
        (1..=CRITERIA).collect()
    } else {
        cfg.criteria.clone()
    };
    let mut table = Table::new(["criterion", "passed", "budget_seconds"]);
    table.comment(
        "units",
        "budget in seconds of wall time; timings are in acceptance.log",
    );
    let mut lines = String::new();
    for id in ids {
        let c = acceptance::run(id, seed);
        println!("{c}");
        lines.push_str(&format!("{c}\n"));
        table.comment(&format!("criterion {id}"), c.title);
        let _ = table.push(vec![
            id as f64,
            if c.passed { 1.0 } else { 0.0 },
            c.budget.as_secs_f64(),
        ]);
        if !c.within_budget() {
            report.warn(format!(
                "criterion {id} took {:.1}s of {}s",
                c.elapsed.as_secs_f64(),
                c.budget.as_secs()
            ));
        }
        report.check(&format!("criterion_{id}"), c.passed, c.summary.clone());
    }
    report.table("acceptance.txt", "one row per acceptance criterion", &table)?;
    report.log(
        "acceptance.log",
        "criterion verdicts with measured values",
        lines.as_bytes(),
    )?;
    Ok(())
}
