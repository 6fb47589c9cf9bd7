//! Result emission: CSV artifacts and the human-readable report.
//!
//! The CSV layout is a stable contract: a `schema` version column first,
//! then fixed columns in fixed order, floats printed with 12 significant
//! digits, booleans as `true`/`false`, and absent values (for example sim
//! columns of an analytic-only run) as empty cells. Identical inputs
//! produce byte-identical files.
//!
//! Report verdict lines are pure functions of the result rows: re-deriving
//! them from the CSV produces the same text.

use nakamoto_econ::stats::{one_sided_z, Z_99};
use nakamoto_econ::{CostRegime, Equilibrium};

use crate::runner::{PosRow, ResultRow};
use crate::scenario::Scenario;

/// 12 significant digits, locale-independent.
#[must_use]
pub fn fmt_f(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_bool(b: bool) -> &'static str {
    if b { "true" } else { "false" }
}

fn fmt_regime(r: CostRegime) -> &'static str {
    match r {
        CostRegime::NegativeCost => "negative",
        CostRegime::ZeroCost => "zero",
        CostRegime::PositiveCost => "positive",
    }
}

pub const RESULTS_HEADER: &str = "schema,alpha,kappa,deployed,rented,retarget_blocks,length,\
phi,phi_se,phi_tilde,phi_tilde_se,min_power,power_used,attack_length,\
opportunity_cost,mounting_cost,net_cost,regime,ic_holds,\
sim_net_mean,sim_net_se,sim_reps,agree";

/// The attack/sweep CSV.
#[must_use]
pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        let p = &r.point;
        let cells: Vec<String> = vec![
            "1".into(),
            fmt_f(p.alpha),
            fmt_f(p.kappa),
            p.deployed.map(fmt_f).unwrap_or_default(),
            fmt_f(p.rented),
            p.retarget_blocks.to_string(),
            p.length.to_string(),
            fmt_f(r.phi),
            fmt_f(r.phi_se),
            fmt_f(r.phi_tilde),
            fmt_f(r.phi_tilde_se),
            fmt_f(r.min_power),
            fmt_f(r.power_used),
            fmt_f(r.attack_length),
            fmt_f(r.opportunity_cost),
            fmt_f(r.mounting_cost),
            fmt_f(r.net_cost),
            fmt_regime(r.regime).into(),
            fmt_bool(r.ic_holds).into(),
            r.sim_net_mean.map(fmt_f).unwrap_or_default(),
            r.sim_net_se.map(fmt_f).unwrap_or_default(),
            r.sim_reps.map(|n| n.to_string()).unwrap_or_default(),
            r.agree.map(|a| fmt_bool(a).to_string()).unwrap_or_default(),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub const POS_HEADER: &str = "schema,slot_time,total_stake,attacker_stake,phi,phi_se,phi_tilde,\
mean_slots,se_slots,mean_attack_blocks,se_attack_blocks,guaranteed,attack_cost,ic_holds,\
replications";

/// The pos CSV (single row).
#[must_use]
pub fn pos_csv(row: &PosRow) -> String {
    let cells: Vec<String> = vec![
        "1".into(),
        fmt_f(row.slot_time),
        fmt_f(row.total_stake),
        fmt_f(row.attacker_stake),
        fmt_f(row.phi),
        fmt_f(row.phi_se),
        fmt_f(row.phi_tilde),
        fmt_f(row.mean_slots),
        fmt_f(row.se_slots),
        fmt_f(row.mean_attack_blocks),
        fmt_f(row.se_attack_blocks),
        fmt_bool(row.guaranteed).into(),
        fmt_f(row.attack_cost),
        fmt_bool(row.ic_holds).into(),
        row.replications.to_string(),
    ];
    format!("{POS_HEADER}\n{}\n", cells.join(","))
}

pub const EQUILIBRIUM_HEADER: &str = "schema,miner,power,share";

/// Per-miner allocation CSV.
#[must_use]
pub fn equilibrium_csv(eq: &Equilibrium) -> String {
    let mut out = String::from(EQUILIBRIUM_HEADER);
    out.push('\n');
    for (id, h) in &eq.allocations {
        let share = h / eq.aggregate_power;
        out.push_str(&format!("1,{id},{},{}\n", fmt_f(*h), fmt_f(share)));
    }
    out
}

/// Verdict lines derived from the rows alone.
#[must_use]
pub fn verdicts(rows: &[ResultRow]) -> Vec<String> {
    let mut lines = Vec::new();
    if rows.is_empty() {
        return lines;
    }
    let (mut neg, mut zero, mut pos) = (0usize, 0usize, 0usize);
    for r in rows {
        match r.regime {
            CostRegime::NegativeCost => neg += 1,
            CostRegime::ZeroCost => zero += 1,
            CostRegime::PositiveCost => pos += 1,
        }
    }
    lines.push(format!(
        "cost regimes: {neg} negative, {zero} zero, {pos} positive of {} rows \
         (negative: attacking pays by itself)",
        rows.len()
    ));
    let ic = rows.iter().filter(|r| r.ic_holds).count();
    lines.push(format!(
        "incentive compatibility (net cost covers the prize): holds on {ic}/{} rows",
        rows.len()
    ));

    // Fee comparison only where the attack-chain fees came from the market
    // (a Monte Carlo estimate with a standard error), not from an override.
    let market_rows: Vec<&ResultRow> = rows.iter().filter(|r| r.phi_tilde_se > 0.0).collect();
    if !market_rows.is_empty() {
        let richer = market_rows
            .iter()
            .filter(|r| one_sided_z(r.phi_tilde, r.phi_tilde_se, r.phi, r.phi_se) > Z_99)
            .count();
        let poorer = market_rows
            .iter()
            .filter(|r| one_sided_z(r.phi, r.phi_se, r.phi_tilde, r.phi_tilde_se) > Z_99)
            .count();
        lines.push(format!(
            "attack-chain fees vs benchmark at 99% one-sided: {richer} rows richer, \
             {poorer} poorer, {} inconclusive",
            market_rows.len() - richer - poorer
        ));
    }

    let compared: Vec<&ResultRow> = rows.iter().filter(|r| r.agree.is_some()).collect();
    if !compared.is_empty() {
        let ok = compared.iter().filter(|r| r.agree == Some(true)).count();
        let verdict = if ok == compared.len() { "CONFIRMED" } else { "REFUTED" };
        lines.push(format!(
            "cross-validation (simulated net cost within 3 standard errors of the \
             analytic value): {ok}/{} rows — {verdict}",
            compared.len()
        ));
    }
    lines
}

/// Verdict lines for the stake-lottery run.
#[must_use]
pub fn pos_verdicts(row: &PosRow) -> Vec<String> {
    let mut lines = Vec::new();
    lines.push(format!(
        "attack success guaranteed (majority stake): {}",
        if row.guaranteed { "yes" } else { "no" }
    ));
    let dir = if row.phi_tilde > row.phi { "richer than" } else { "at or below" };
    lines.push(format!(
        "attack-chain fees per block {dir} the benchmark: {} vs {}",
        fmt_f(row.phi_tilde),
        fmt_f(row.phi)
    ));
    lines.push(format!(
        "sustained-attack cost over the mean race: {} ({})",
        fmt_f(row.attack_cost),
        if row.attack_cost < 0.0 { "negative: attacking pays" } else { "positive" }
    ));
    lines.push(format!(
        "incentive compatibility: {}",
        if row.ic_holds { "holds" } else { "fails" }
    ));
    lines
}

/// The full report text.
#[must_use]
pub fn report_text(
    s: &Scenario,
    eq: Option<&Equilibrium>,
    rows: Option<&[ResultRow]>,
    pos: Option<&PosRow>,
) -> String {
    let mut out = String::new();
    out.push_str("majority-attack economics report\n");
    out.push_str("================================\n\n");
    out.push_str(&format!(
        "run: mode {}, seed {}, replications {}, fee samples {}\n",
        s.run.mode, s.run.seed, s.run.replications, s.run.samples
    ));
    out.push_str("scenario echo: scenario_echo.toml (reloadable; reproduces this run)\n\n");

    if let Some(eq) = eq {
        out.push_str("benchmark\n");
        out.push_str(&format!("  aggregate power  = {}\n", fmt_f(eq.aggregate_power)));
        out.push_str(&format!("  difficulty       = {}\n", fmt_f(eq.difficulty)));
        out.push_str(&format!(
            "  fees per block   = {} (se {})\n",
            fmt_f(eq.phi),
            fmt_f(eq.phi_se)
        ));
        let actives: Vec<String> = eq
            .active
            .iter()
            .map(|id| format!("{id}={}", fmt_f(eq.power_of(*id))))
            .collect();
        out.push_str(&format!("  active miners    = {}\n\n", actives.join(", ")));
    }

    if let Some(rows) = rows {
        out.push_str(&format!("attack sweep: {} rows (results.csv)\n", rows.len()));
        for line in verdicts(rows) {
            out.push_str(&format!("  - {line}\n"));
        }
        out.push('\n');
    }

    if let Some(row) = pos {
        out.push_str("stake lottery (pos.csv)\n");
        out.push_str(&format!(
            "  total stake = {}, attacker = {}, mean race {} slots\n",
            fmt_f(row.total_stake),
            fmt_f(row.attacker_stake),
            fmt_f(row.mean_slots)
        ));
        for line in pos_verdicts(row) {
            out.push_str(&format!("  - {line}\n"));
        }
        out.push('\n');
    }
    out
}
