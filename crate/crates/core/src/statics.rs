//! Comparative-statics experiments: connectivity shifts, polarization
//! shifts, and the smoothed volunteer's dilemma as the group size grows.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::distributions::{
    check_fosd, derive_value_distribution, polarize, value_fosd, ConnectionDistribution, PreferenceDistribution,
    DEFAULT_CHECK_GRID,
};
use crate::equilibrium::{effort_range, EquilibriumSolution, Scenario, Settings, Solver};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::technology::{classify_h, CostFunction, HClass, SuccessTechnology};

/// Direction claims need a change larger than this multiple of the
/// fixed-point tolerance.
pub const STRICTNESS_FACTOR: f64 = 10.0;

/// Outcome of one directional claim between two consecutive sweep steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict<T> {
    pub claim: String,
    /// Index of the later step of the compared pair.
    pub step: usize,
    pub holds: bool,
    /// Smallest signed slack in the claimed direction (positive when it holds).
    pub margin: T,
}

/// Solved scenario at one sweep parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepStep<T> {
    pub param: T,
    pub solution: EquilibriumSolution<T>,
}

impl<T: Scalar> SweepStep<T> {
    pub fn q(&self) -> T {
        self.solution.q
    }

    pub fn pi(&self) -> T {
        self.solution.pi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport<T> {
    pub name: String,
    pub steps: Vec<SweepStep<T>>,
    pub verdicts: Vec<Verdict<T>>,
    pub h_class: HClass,
}

impl<T: Scalar> SweepReport<T> {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }

    pub fn all_converged(&self) -> bool {
        self.steps.iter().all(|s| s.solution.fixed_point.converged)
    }

    /// Verdicts whose claim starts with `prefix`.
    pub fn verdicts_for<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Verdict<T>> + 'a {
        self.verdicts.iter().filter(move |v| v.claim.starts_with(prefix))
    }
}

/// Both policies evaluated at one value.
#[derive(Debug, Clone, Copy)]
struct PairPoint<T> {
    before_x: T,
    after_x: T,
    before_pi: T,
    after_pi: T,
    before_corner: bool,
    after_corner: bool,
}

/// Evaluates both equilibria on the union of their value nodes.
fn paired_points<T: Scalar>(
    before: (&Solver<T>, &EquilibriumSolution<T>),
    after: (&Solver<T>, &EquilibriumSolution<T>),
) -> Result<Vec<PairPoint<T>>> {
    let vmax = before.1.max_value.min(after.1.max_value);
    let mut vs: Vec<T> = before
        .1
        .nodes
        .iter()
        .chain(&after.1.nodes)
        .map(|n| n.v)
        .filter(|&v| v <= vmax)
        .collect();
    vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vs.dedup();
    let eval = |(solver, sol): (&Solver<T>, &EquilibriumSolution<T>), v: T| -> Result<(T, T, bool)> {
        let br = solver.best_effort(v, sol.q)?;
        let surv = if br.corner {
            T::one()
        } else {
            solver.scenario().tech.survival(br.effort)
        };
        Ok((br.effort, T::one() - surv * sol.q, br.corner))
    };
    vs.into_iter()
        .map(|v| {
            let (bx, bpi, bc) = eval(before, v)?;
            let (ax, api, ac) = eval(after, v)?;
            Ok(PairPoint {
                before_x: bx,
                after_x: ax,
                before_pi: bpi,
                after_pi: api,
                before_corner: bc,
                after_corner: ac,
            })
        })
        .collect()
}

/// Minimum of `f` over the points selected by `keep`, or `None` if none are.
fn min_over<T: Scalar>(
    pts: &[PairPoint<T>],
    keep: impl Fn(&PairPoint<T>) -> bool,
    f: impl Fn(&PairPoint<T>) -> T,
) -> Option<T> {
    pts.iter().filter(|p| keep(p)).map(f).reduce(T::min)
}

fn verdict<T: Scalar>(claim: impl Into<String>, step: usize, margin: T, threshold: T) -> Verdict<T> {
    Verdict {
        claim: claim.into(),
        step,
        holds: margin > threshold,
        margin,
    }
}

fn solve_all<T: Scalar>(scenarios: Vec<Scenario<T>>) -> Result<Vec<(Solver<T>, EquilibriumSolution<T>)>> {
    scenarios
        .into_par_iter()
        .map(|sc| {
            let solver = Solver::new(&sc)?;
            let sol = solver.solve()?;
            Ok((solver, sol))
        })
        .collect()
}

/// Class of `h` over the union of the steps' interior effort ranges.
fn sweep_h_class<T: Scalar>(solved: &[(Solver<T>, EquilibriumSolution<T>)]) -> HClass {
    let range = solved
        .iter()
        .filter_map(|(_, s)| effort_range(&s.nodes))
        .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)));
    match range {
        Some(r) => {
            let sc = solved[0].0.scenario();
            classify_h(&sc.tech, &sc.cost, r, sc.settings.shape_grid)
        }
        None => solved[0].1.h_class,
    }
}

fn check_params<T: Scalar>(params: &[T], what: &str) -> Result<()> {
    if params.len() < 2 {
        return Err(Error::Precondition(format!("{what} sweep needs at least two steps")));
    }
    if params.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition(format!(
            "{what} sweep parameters must be strictly increasing"
        )));
    }
    Ok(())
}

/// Re-solves `base` under each connection distribution and checks that
/// effort falls at every value and that aggregate informedness moves
/// against the direction of `h`.
///
/// Each later distribution must first-order stochastically dominate the
/// one before it.
pub fn connectivity_experiment<T: Scalar>(
    base: &Scenario<T>,
    steps: &[(T, ConnectionDistribution<T>)],
) -> Result<SweepReport<T>> {
    let params: Vec<T> = steps.iter().map(|s| s.0).collect();
    check_params(&params, "connectivity")?;
    for (i, w) in steps.windows(2).enumerate() {
        if !check_fosd(&w[0].1, &w[1].1) {
            return Err(Error::Precondition(format!(
                "connection distribution {} does not dominate step {}",
                i + 1,
                i
            )));
        }
    }
    let solved = solve_all(steps.iter().map(|(_, d)| base.with_connections(d.clone())).collect())?;
    let h_class = sweep_h_class(&solved);
    let margin = T::lit(STRICTNESS_FACTOR) * base.settings.fixed_point_tol;
    let mut verdicts = Vec::new();
    for i in 1..solved.len() {
        let (before, after) = (&solved[i - 1], &solved[i]);
        let pts = paired_points((&before.0, &before.1), (&after.0, &after.1))?;
        let effort_drop = min_over(
            &pts,
            |p| !(p.before_corner && p.after_corner),
            |p| p.before_x - p.after_x,
        );
        verdicts.push(verdict(
            "effort falls at every value",
            i,
            effort_drop.unwrap_or_else(T::infinity),
            T::zero(),
        ));
        let d_pi = after.1.pi - before.1.pi;
        match h_class {
            HClass::Increasing => verdicts.push(verdict("aggregate pi decreases (h increasing)", i, -d_pi, margin)),
            HClass::Decreasing => verdicts.push(verdict("aggregate pi increases (h decreasing)", i, d_pi, margin)),
            HClass::Constant => {
                let drift = min_over(
                    &pts,
                    |p| !p.before_corner && !p.after_corner,
                    |p| -(p.after_pi - p.before_pi).abs(),
                );
                verdicts.push(verdict(
                    "per-type pi unchanged at interior values (h constant)",
                    i,
                    drift.map(|d| d + margin).unwrap_or(margin),
                    T::zero(),
                ));
            }
            HClass::NonMonotone => {}
        }
    }
    Ok(SweepReport {
        name: "connectivity".into(),
        steps: params
            .into_iter()
            .zip(solved)
            .map(|(param, (_, solution))| SweepStep { param, solution })
            .collect(),
        verdicts,
        h_class,
    })
}

/// Re-solves `base` with its types polarized by each `δ` and checks the
/// value-distribution dominance, `Q̂ > Q`, `x̂(v) > x(v)`, the per-type
/// informedness direction set by `h`, and the fall in aggregate informedness.
pub fn polarization_experiment<T: Scalar>(base: &Scenario<T>, deltas: &[T]) -> Result<SweepReport<T>> {
    check_params(deltas, "polarization")?;
    if deltas.iter().any(|&d| !(d >= T::zero() && d < T::one())) {
        return Err(Error::Precondition("polarization weights must lie in [0, 1)".into()));
    }
    let scenarios = deltas
        .iter()
        .map(|&d| polarize(&base.types, d, base.prior).map(|t| base.with_types(t)))
        .collect::<Result<Vec<_>>>()?;
    let solved = solve_all(scenarios)?;
    let h_class = sweep_h_class(&solved);
    let margin = T::lit(STRICTNESS_FACTOR) * base.settings.fixed_point_tol;
    let mut verdicts = Vec::new();
    for i in 1..solved.len() {
        let (before, after) = (&solved[i - 1], &solved[i]);
        let dominated = value_fosd(before.0.values(), after.0.values(), DEFAULT_CHECK_GRID);
        verdicts.push(Verdict {
            claim: "value distribution dominated by its predecessor".into(),
            step: i,
            holds: dominated,
            margin: if dominated { T::zero() } else { -T::one() },
        });
        verdicts.push(verdict("Q increases", i, after.1.q - before.1.q, margin));
        let pts = paired_points((&before.0, &before.1), (&after.0, &after.1))?;
        let effort_rise = min_over(
            &pts,
            |p| !(p.before_corner && p.after_corner),
            |p| p.after_x - p.before_x,
        );
        verdicts.push(verdict(
            "effort rises at every value",
            i,
            effort_rise.unwrap_or_else(T::infinity),
            T::zero(),
        ));
        let interior = |p: &PairPoint<T>| !p.before_corner && !p.after_corner;
        match h_class {
            HClass::Increasing => {
                let m = min_over(&pts, interior, |p| p.after_pi - p.before_pi);
                verdicts.push(verdict(
                    "per-type pi rises (h increasing)",
                    i,
                    m.unwrap_or_else(T::infinity),
                    T::zero(),
                ));
            }
            HClass::Decreasing => {
                let m = min_over(&pts, interior, |p| p.before_pi - p.after_pi);
                verdicts.push(verdict(
                    "per-type pi falls (h decreasing)",
                    i,
                    m.unwrap_or_else(T::infinity),
                    T::zero(),
                ));
            }
            HClass::Constant | HClass::NonMonotone => {}
        }
        verdicts.push(verdict("aggregate pi decreases", i, before.1.pi - after.1.pi, margin));
    }
    Ok(SweepReport {
        name: "polarization".into(),
        steps: deltas
            .iter()
            .zip(solved)
            .map(|(&param, (_, solution))| SweepStep { param, solution })
            .collect(),
        verdicts,
        h_class,
    })
}

/// Equilibrium of the smoothed volunteer's dilemma for one group size.
#[derive(Debug, Clone, PartialEq)]
pub struct VolunteerRow<T> {
    pub players: usize,
    pub effort: T,
    /// `1 − (1 − ψ(x))^N`.
    pub success: T,
    pub q: T,
    pub residual: T,
    /// No interior symmetric equilibrium: the fixed point failed or effort is zero.
    pub corner_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolunteerReport<T> {
    pub value: T,
    pub rows: Vec<VolunteerRow<T>>,
    /// Class of `h` between the smallest and largest equilibrium effort.
    pub h_class: HClass,
    /// +1 if success rises with every added player, −1 if it always falls, 0 otherwise.
    pub success_trend: i8,
    pub verdicts: Vec<Verdict<T>>,
}

impl<T: Scalar> VolunteerReport<T> {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }
}

/// Fully connected groups of `N` players with a common value `v0` and
/// smooth-step success. Value `v0` must not exceed `1/4`, the largest
/// value of information at prior one half.
pub fn volunteer_experiment<T: Scalar>(
    threshold: T,
    half_width: T,
    cost: CostFunction<T>,
    value: T,
    players: RangeInclusive<usize>,
    settings: Settings<T>,
) -> Result<VolunteerReport<T>> {
    let prior = T::lit(0.5);
    if !(value > T::zero() && value <= prior * prior) {
        return Err(Error::domain("volunteer value", value.as_f64(), "0 < v0 <= 1/4"));
    }
    if *players.start() == 0 || players.is_empty() {
        return Err(Error::Precondition("group sizes must start at one".into()));
    }
    let tech = SuccessTechnology::smooth_step(threshold, half_width)?;
    // A single type at λ = 2v0 has value λ(1 − p) = v0.
    let types = PreferenceDistribution::point_mass(value / (T::one() - prior))?;
    let base = Scenario::new(
        prior,
        types,
        tech,
        cost,
        ConnectionDistribution::point_mass(0),
        settings,
    )?;
    if derive_value_distribution(&base.types, prior)?.atoms()[0].location != value {
        return Err(Error::invalid("volunteer value", "not exactly representable as a type"));
    }
    let sizes: Vec<usize> = players.collect();
    let rows: Vec<VolunteerRow<T>> = sizes
        .par_iter()
        .map(|&n| {
            let sc = base.with_connections(ConnectionDistribution::point_mass(n - 1));
            let sol = Solver::new(&sc)?.solve()?;
            let node = sol.nodes[0];
            let surv = tech.survival(node.effort);
            Ok(VolunteerRow {
                players: n,
                effort: node.effort,
                success: T::one() - surv.powi(n as i32),
                q: sol.q,
                residual: sol.fixed_point.residual,
                corner_only: node.corner || !sol.fixed_point.converged,
            })
        })
        .collect::<Result<_>>()?;
    let interior: Vec<&VolunteerRow<T>> = rows.iter().filter(|r| !r.corner_only).collect();
    let lo = interior.iter().map(|r| r.effort).fold(T::infinity(), T::min);
    let hi = interior.iter().map(|r| r.effort).fold(T::zero(), T::max);
    let h_class = if interior.len() >= 2 {
        classify_h(&tech, &cost, (lo, hi), settings.shape_grid)
    } else {
        HClass::NonMonotone
    };
    let diffs: Vec<T> = rows.windows(2).map(|w| w[1].success - w[0].success).collect();
    let success_trend = if !diffs.is_empty() && diffs.iter().all(|&d| d > T::zero()) {
        1
    } else if !diffs.is_empty() && diffs.iter().all(|&d| d < T::zero()) {
        -1
    } else {
        0
    };
    let mut verdicts: Vec<Verdict<T>> = rows
        .iter()
        .map(|r| Verdict {
            claim: format!("interior equilibrium exists for N = {}", r.players),
            step: r.players,
            holds: !r.corner_only,
            margin: if r.corner_only { -T::one() } else { r.effort },
        })
        .collect();
    for (i, w) in rows.windows(2).enumerate() {
        verdicts.push(verdict(
            format!("per-player effort falls from N = {} to {}", w[0].players, w[1].players),
            i + 1,
            w[0].effort - w[1].effort,
            T::zero(),
        ));
    }
    let expected_trend = match h_class {
        HClass::Increasing => Some(-1),
        HClass::Decreasing => Some(1),
        _ => None,
    };
    verdicts.push(Verdict {
        claim: format!("success trend opposes h (h {})", h_class.label()),
        step: rows.len(),
        holds: expected_trend == Some(success_trend),
        margin: diffs.iter().map(|d| d.abs()).fold(T::infinity(), T::min),
    });
    Ok(VolunteerReport {
        value,
        rows,
        h_class,
        success_trend,
        verdicts,
    })
}
