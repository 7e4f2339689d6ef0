//! JSON records and CSV tables written by each command.

use std::fs;
use std::io;
use std::path::Path;

use factfind::equilibrium::EquilibriumSolution;
use factfind::netsim::CrossValidation;
use factfind::statics::{SweepReport, Verdict, VolunteerReport};
use serde::Serialize;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io::Error::other)?;
    w.write_record(header).map_err(io::Error::other)?;
    for row in rows {
        w.write_record(&row).map_err(io::Error::other)?;
    }
    w.flush()
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictRecord {
    pub claim: String,
    pub step: usize,
    pub holds: bool,
    pub margin: f64,
}

impl From<&Verdict<f64>> for VerdictRecord {
    fn from(v: &Verdict<f64>) -> Self {
        VerdictRecord {
            claim: v.claim.clone(),
            step: v.step,
            holds: v.holds,
            margin: v.margin,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub holds: bool,
}

impl Check {
    pub fn below(name: &'static str, value: f64, limit: f64) -> Self {
        Check {
            name,
            value,
            limit,
            holds: value < limit,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionRecord {
    pub q: f64,
    pub integrated_success: f64,
    pub pi: f64,
    pub pi_closed_form: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub switch_value: f64,
    pub shape: &'static str,
    pub h_class: &'static str,
    pub h_interval: (f64, f64),
    pub nodes: usize,
    pub corner_nodes: usize,
    pub checks: Vec<Check>,
}

impl SolutionRecord {
    pub fn new(s: &EquilibriumSolution<f64>, checks: Vec<Check>) -> Self {
        SolutionRecord {
            q: s.q,
            integrated_success: s.integrated_success,
            pi: s.pi,
            pi_closed_form: s.pi_closed_form,
            residual: s.fixed_point.residual,
            iterations: s.fixed_point.iterations,
            converged: s.fixed_point.converged,
            switch_value: s.switch_value,
            shape: s.shape.label(),
            h_class: s.h_class.label(),
            h_interval: s.h_interval,
            nodes: s.nodes.len(),
            corner_nodes: s.corner_count(),
            checks,
        }
    }
}

pub fn write_solution_csv(path: &Path, s: &EquilibriumSolution<f64>) -> io::Result<()> {
    write_csv(
        path,
        &["v", "x", "psi", "pi"],
        s.nodes
            .iter()
            .map(|n| vec![num(n.v), num(n.effort), num(n.psi), num(n.pi)]),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepStepRecord {
    pub param: f64,
    pub q: f64,
    pub integrated_success: f64,
    pub pi: f64,
    pub min_x: f64,
    pub max_x: f64,
    pub converged: bool,
    pub policy: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub name: String,
    pub h_class: &'static str,
    pub all_hold: bool,
    pub all_converged: bool,
    pub steps: Vec<SweepStepRecord>,
    pub verdicts: Vec<VerdictRecord>,
}

impl SweepRecord {
    pub fn new(r: &SweepReport<f64>) -> Self {
        SweepRecord {
            name: r.name.clone(),
            h_class: r.h_class.label(),
            all_hold: r.all_hold(),
            all_converged: r.all_converged(),
            steps: r
                .steps
                .iter()
                .map(|s| SweepStepRecord {
                    param: s.param,
                    q: s.solution.q,
                    integrated_success: s.solution.integrated_success,
                    pi: s.solution.pi,
                    min_x: s.solution.min_effort(),
                    max_x: s.solution.max_effort(),
                    converged: s.solution.fixed_point.converged,
                    policy: s.solution.policy_points(),
                })
                .collect(),
            verdicts: r.verdicts.iter().map(VerdictRecord::from).collect(),
        }
    }
}

/// One row per step; the verdict column lists the claims comparing the
/// step with its predecessor.
pub fn write_sweep_csv(path: &Path, r: &SweepReport<f64>) -> io::Result<()> {
    write_csv(
        path,
        &["param", "Q", "I", "pi", "min_x", "max_x", "verdicts"],
        r.steps.iter().enumerate().map(|(i, s)| {
            let verdicts: Vec<String> = r
                .verdicts
                .iter()
                .filter(|v| v.step == i)
                .map(|v| format!("{}={}", v.claim, if v.holds { "pass" } else { "fail" }))
                .collect();
            vec![
                num(s.param),
                num(s.solution.q),
                num(s.solution.integrated_success),
                num(s.solution.pi),
                num(s.solution.min_effort()),
                num(s.solution.max_effort()),
                verdicts.join("; "),
            ]
        }),
    )
}

pub fn verdict_summary<'a>(title: &str, verdicts: impl IntoIterator<Item = &'a Verdict<f64>>) -> String {
    let mut out = format!("{title}\n");
    for v in verdicts {
        out.push_str(&format!(
            "  [{}] step {}: {} (margin {:.3e})\n",
            if v.holds { "ok" } else { "FAIL" },
            v.step,
            v.claim,
            v.margin
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct VolunteerRowRecord {
    pub players: usize,
    pub effort: f64,
    pub success: f64,
    pub q: f64,
    pub residual: f64,
    pub corner_only: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VolunteerRecord {
    pub value: f64,
    pub h_class: &'static str,
    pub success_trend: i8,
    pub all_hold: bool,
    pub rows: Vec<VolunteerRowRecord>,
    pub verdicts: Vec<VerdictRecord>,
}

impl VolunteerRecord {
    pub fn new(r: &VolunteerReport<f64>) -> Self {
        VolunteerRecord {
            value: r.value,
            h_class: r.h_class.label(),
            success_trend: r.success_trend,
            all_hold: r.all_hold(),
            rows: r
                .rows
                .iter()
                .map(|row| VolunteerRowRecord {
                    players: row.players,
                    effort: row.effort,
                    success: row.success,
                    q: row.q,
                    residual: row.residual,
                    corner_only: row.corner_only,
                })
                .collect(),
            verdicts: r.verdicts.iter().map(VerdictRecord::from).collect(),
        }
    }
}

pub fn write_volunteer_csv(path: &Path, r: &VolunteerReport<f64>) -> io::Result<()> {
    write_csv(
        path,
        &["N", "effort", "success", "Q", "residual", "corner_only"],
        r.rows.iter().map(|row| {
            vec![
                row.players.to_string(),
                num(row.effort),
                num(row.success),
                num(row.q),
                num(row.residual),
                row.corner_only.to_string(),
            ]
        }),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationRecord {
    pub voters: usize,
    pub edges: usize,
    pub replications: usize,
    pub mean: f64,
    pub std_error: f64,
    pub analytic_pi: f64,
    pub excess: f64,
    pub passed: bool,
    pub truncated_mass: f64,
    pub truncation_flag: bool,
    pub connections: Vec<f64>,
}

impl SimulationRecord {
    pub fn new(cv: &CrossValidation<f64>, voters: usize, edges: usize) -> Self {
        SimulationRecord {
            voters,
            edges,
            replications: cv.simulated.replications,
            mean: cv.simulated.mean,
            std_error: cv.simulated.std_error,
            analytic_pi: cv.analytic_pi,
            excess: cv.excess,
            passed: cv.passed,
            truncated_mass: cv.simulated.truncated_mass,
            truncation_flag: cv.truncation_flag,
            connections: cv.simulated.connections.masses().to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e-7] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn csv_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&p, &["a", "b"], vec![vec![num(1.0), "x; y".into()]]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next(), Some("a,b"));
    }
}
