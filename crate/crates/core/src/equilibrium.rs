//! Symmetric equilibrium: best-response effort, the fixed point for the
//! probability `Q` that no eventual connection acquires a signal, and the
//! resulting informedness.
//!
//! A voter with value `v` facing `Q` maximises `[1 − (1 − ψ(x))Q]·v − c(x)`.
//! `T(Q) = Σ_n p_n (1 − I(Q))^n` with `I(Q) = ∫ψ(x(w; Q)) dF(w)` is
//! nonincreasing in `Q`, so the fixed point `Q = T(Q)` is the unique
//! crossing of `Q − T(Q)` on `[0, 1]` and is found by bisection.

use crate::distributions::{
    check_prior, derive_value_distribution, ConnectionDistribution, PreferenceDistribution, ValueDistribution,
};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::roots::bisect;
use crate::scalar::Scalar;
use crate::technology::{
    classify_h, classify_shape, hazard_ratio, relevant_interval, slope_ratio, CostFunction, HClass, Shape,
    SuccessTechnology, DEFAULT_SHAPE_GRID,
};

/// Numeric knobs for a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings<T> {
    /// Gauss–Legendre nodes per piece of the value distribution.
    pub grid: usize,
    /// Relative bracket width at which effort bisection stops.
    pub root_tol: T,
    /// Largest acceptable `|Q − T(Q)|` at the reported fixed point.
    pub fixed_point_tol: T,
    /// Iteration cap for the fixed-point bisection.
    pub max_iter: usize,
    /// Effort bracket cap; `None` means `c⁻¹(v_max)` plus ten technology scales.
    pub x_max: Option<T>,
    pub shape_grid: usize,
}

impl<T: Scalar> Default for Settings<T> {
    fn default() -> Self {
        Settings {
            grid: 128,
            root_tol: T::lit(1e-13).max(T::resolution()),
            fixed_point_tol: T::lit(1e-10).max(T::resolution() * T::lit(64.0)),
            max_iter: 200,
            x_max: None,
            shape_grid: DEFAULT_SHAPE_GRID,
        }
    }
}

impl<T: Scalar> Settings<T> {
    pub fn validate(&self) -> Result<()> {
        const OBJ: &str = "settings";
        if self.grid < 16 {
            return Err(Error::invalid(OBJ, format!("grid = {} must be at least 16", self.grid)));
        }
        if !(self.root_tol > T::zero()) {
            return Err(Error::invalid(OBJ, "root_tol must be positive"));
        }
        if !(self.fixed_point_tol > T::zero()) {
            return Err(Error::invalid(OBJ, "fixed_point_tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid(OBJ, "max_iter must be positive"));
        }
        if let Some(x) = self.x_max {
            if !(x > T::zero()) {
                return Err(Error::invalid(OBJ, "x_max must be positive"));
            }
        }
        if self.shape_grid < 3 {
            return Err(Error::invalid(OBJ, "shape_grid must be at least 3"));
        }
        Ok(())
    }
}

/// Model primitives plus numeric settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub prior: T,
    pub types: PreferenceDistribution<T>,
    pub tech: SuccessTechnology<T>,
    pub cost: CostFunction<T>,
    pub connections: ConnectionDistribution<T>,
    pub settings: Settings<T>,
}

impl<T: Scalar> Scenario<T> {
    pub fn new(
        prior: T,
        types: PreferenceDistribution<T>,
        tech: SuccessTechnology<T>,
        cost: CostFunction<T>,
        connections: ConnectionDistribution<T>,
        settings: Settings<T>,
    ) -> Result<Self> {
        check_prior(prior)?;
        settings.validate()?;
        Ok(Scenario {
            prior,
            types,
            tech,
            cost,
            connections,
            settings,
        })
    }

    pub fn max_value(&self) -> T {
        self.prior * (T::one() - self.prior)
    }

    pub fn with_connections(&self, connections: ConnectionDistribution<T>) -> Self {
        Scenario {
            connections,
            ..self.clone()
        }
    }

    pub fn with_types(&self, types: PreferenceDistribution<T>) -> Self {
        Scenario { types, ..self.clone() }
    }

    pub fn with_cost(&self, cost: CostFunction<T>) -> Self {
        Scenario { cost, ..self.clone() }
    }
}

/// `[1 − (1 − ψ(x))Q]·v − c(x)`.
pub fn expected_utility<T: Scalar>(v: T, x: T, q: T, tech: &SuccessTechnology<T>, cf: &CostFunction<T>) -> Result<T> {
    if !(v >= T::zero()) {
        return Err(Error::domain("value", v.as_f64(), "v >= 0"));
    }
    if !(x >= T::zero() && x.is_finite()) {
        return Err(Error::domain("effort", x.as_f64(), "x >= 0"));
    }
    check_q(q)?;
    Ok(utility(v, x, q, tech, cf))
}

fn utility<T: Scalar>(v: T, x: T, q: T, tech: &SuccessTechnology<T>, cf: &CostFunction<T>) -> T {
    (T::one() - tech.survival(x) * q) * v - cf.cost(x)
}

fn check_q<T: Scalar>(q: T) -> Result<()> {
    if q >= T::zero() && q <= T::one() {
        Ok(())
    } else {
        Err(Error::domain("Q", q.as_f64(), "0 <= Q <= 1"))
    }
}

/// A best response and whether it sits at the zero-effort corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse<T> {
    pub effort: T,
    pub corner: bool,
}

impl<T: Scalar> BestResponse<T> {
    fn corner() -> Self {
        BestResponse {
            effort: T::zero(),
            corner: true,
        }
    }
}

/// Best-response oracle for one technology/cost pair, with the shape of
/// `ψ'/c'` and the effort cap precomputed.
#[derive(Debug, Clone)]
pub struct Responder<T> {
    tech: SuccessTechnology<T>,
    cost: CostFunction<T>,
    shape: Shape<T>,
    x_max: T,
    root_tol: T,
}

impl<T: Scalar> Responder<T> {
    /// `max_value` bounds the values that will be queried; it sets the
    /// default effort cap `c⁻¹(v_max) + 10·scale`.
    pub fn new(
        tech: SuccessTechnology<T>,
        cost: CostFunction<T>,
        max_value: T,
        settings: &Settings<T>,
    ) -> Result<Self> {
        let cap = match settings.x_max {
            Some(x) => x,
            None => cost.inverse(max_value).unwrap_or_else(T::zero) + T::lit(10.0) * tech.scale(),
        };
        let shape = classify_shape(&tech, &cost, (T::zero(), cap), settings.shape_grid);
        if shape == Shape::Invalid {
            return Err(Error::invalid(
                "technology",
                "psi'/c' is neither decreasing nor single-peaked on the effort range",
            ));
        }
        Ok(Responder {
            tech,
            cost,
            shape,
            x_max: cap,
            root_tol: settings.root_tol,
        })
    }

    pub fn shape(&self) -> Shape<T> {
        self.shape
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn tech(&self) -> &SuccessTechnology<T> {
        &self.tech
    }

    pub fn cost(&self) -> &CostFunction<T> {
        &self.cost
    }

    /// Global maximiser of expected utility over `x ≥ 0`.
    ///
    /// With decreasing `ψ'/c'` the first-order condition `ψ'(x)Qv = c'(x)`
    /// has at most one root, and no root means the corner. With a
    /// single-peaked ratio the root is sought on the falling branch beyond
    /// the peak and then compared with zero effort; ties go to the root.
    pub fn best_effort(&self, v: T, q: T) -> Result<BestResponse<T>> {
        if !(v >= T::zero()) {
            return Err(Error::domain("value", v.as_f64(), "v >= 0"));
        }
        check_q(q)?;
        let qv = q * v;
        if qv == T::zero() {
            return Ok(BestResponse::corner());
        }
        let foc = |x: T| {
            let dpsi = self.tech.psi_prime(x);
            if dpsi == T::zero() {
                -self.cost.cost_prime(x)
            } else {
                dpsi * qv - self.cost.cost_prime(x)
            }
        };
        let start = match self.shape {
            Shape::SinglePeakedR { peak } => peak,
            _ => T::zero(),
        };
        if !(foc(start) > T::zero()) {
            return Ok(BestResponse::corner());
        }
        let (lo, hi) = self.grow_bracket(&foc, start)?;
        let root = bisect(foc, lo, hi, self.root_tol, T::min_positive_value(), 4096).root;
        if let Shape::SinglePeakedR { .. } = self.shape {
            let gain = utility(v, root, q, &self.tech, &self.cost) - utility(v, T::zero(), q, &self.tech, &self.cost);
            if gain < -T::lit(1e-12) {
                return Ok(BestResponse::corner());
            }
        }
        Ok(BestResponse {
            effort: root,
            corner: false,
        })
    }

    fn grow_bracket(&self, foc: &impl Fn(T) -> T, start: T) -> Result<(T, T)> {
        let two = T::lit(2.0);
        let mut lo = start;
        let mut step = self.tech.scale().min(self.x_max - start).max(T::min_positive_value());
        loop {
            let hi = (start + step).min(self.x_max);
            if foc(hi) <= T::zero() {
                return Ok((lo, hi));
            }
            if hi >= self.x_max {
                return Err(Error::NonConvergence {
                    routine: "best_effort",
                    detail: format!(
                        "first-order condition still positive at the bracket cap x_max = {}",
                        self.x_max
                    ),
                });
            }
            lo = hi;
            step = step * two;
        }
    }
}

/// Range of interior efforts: the branch on which `h` matters.
pub fn effort_range<T: Scalar>(nodes: &[SolutionNode<T>]) -> Option<(T, T)> {
    nodes
        .iter()
        .filter(|n| !n.corner)
        .map(|n| (n.effort, n.effort))
        .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
}

/// One-shot best response for a scenario's technology and cost.
pub fn best_effort<T: Scalar>(v: T, q: T, scenario: &Scenario<T>) -> Result<BestResponse<T>> {
    Responder::new(
        scenario.tech,
        scenario.cost,
        scenario.max_value().max(v),
        &scenario.settings,
    )?
    .best_effort(v, q)
}

/// A quadrature node or atom of the value distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueNode<T> {
    pub v: T,
    pub weight: T,
    pub atom: bool,
}

/// Result of the fixed-point search for `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint<T> {
    pub q: T,
    /// `Q − T(Q)` at the reported point.
    pub residual: T,
    pub converged: bool,
    pub iterations: usize,
}

/// Policy, informedness and diagnostics at one value node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionNode<T> {
    pub v: T,
    pub weight: T,
    pub atom: bool,
    pub effort: T,
    pub psi: T,
    /// `1 − π(v) = (1 − ψ(x(v)))·Q`.
    pub uninformed: T,
    pub pi: T,
    pub corner: bool,
    /// `ψ'Qv/c' − 1` at interior nodes, zero at corners.
    pub foc_residual: T,
}

/// Solved symmetric equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution<T> {
    pub prior: T,
    pub max_value: T,
    pub q: T,
    pub fixed_point: FixedPoint<T>,
    /// `I = ∫ψ(x(w)) dF(w)`.
    pub integrated_success: T,
    /// `Σ_n p_n (1 − I)^n` at the solution.
    pub no_signal: T,
    /// `∫π(v) dF(v)` by quadrature.
    pub pi: T,
    /// `1 − Σ_n p_n (1 − I)^{n+1}`.
    pub pi_closed_form: T,
    /// Lowest value at which effort leaves the corner.
    pub switch_value: T,
    pub nodes: Vec<SolutionNode<T>>,
    pub shape: Shape<T>,
    pub h_class: HClass,
    pub h_interval: (T, T),
}

impl<T: Scalar> EquilibriumSolution<T> {
    pub fn corner_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.corner).count()
    }

    pub fn min_effort(&self) -> T {
        self.nodes.iter().map(|n| n.effort).fold(T::infinity(), T::min)
    }

    pub fn max_effort(&self) -> T {
        self.nodes.iter().map(|n| n.effort).fold(T::zero(), T::max)
    }

    /// `(v, x(v))` pairs at every node, ascending in `v`.
    pub fn policy_points(&self) -> Vec<(T, T)> {
        self.nodes.iter().map(|n| (n.v, n.effort)).collect()
    }

    /// Largest downward step of `x(v)` between consecutive nodes (zero if monotone).
    pub fn max_policy_decrease(&self) -> T {
        self.nodes
            .windows(2)
            .map(|w| (w[0].effort - w[1].effort).max(T::zero()))
            .fold(T::zero(), T::max)
    }

    /// Smallest increase of `x(v)` between consecutive interior nodes.
    pub fn min_interior_increase(&self) -> Option<T> {
        self.nodes
            .windows(2)
            .filter(|w| !w[0].corner && !w[1].corner && w[1].v > w[0].v)
            .map(|w| w[1].effort - w[0].effort)
            .reduce(T::min)
    }
}

/// Scenario-level solver state: the value distribution, quadrature rules
/// and best-response oracle are built once and shared by every `T(Q)` call.
#[derive(Debug, Clone)]
pub struct Solver<T> {
    scenario: Scenario<T>,
    values: ValueDistribution<T>,
    responder: Responder<T>,
    segments: Vec<(T, T, T)>,
    rule: GaussLegendre<T>,
}

impl<T: Scalar> Solver<T> {
    pub fn new(scenario: &Scenario<T>) -> Result<Self> {
        scenario.settings.validate()?;
        let values = derive_value_distribution(&scenario.types, scenario.prior)?;
        let responder = Responder::new(scenario.tech, scenario.cost, values.max_value(), &scenario.settings)?;
        let segments = values.segments();
        let m = scenario.settings.grid;
        // Many pieces (tabulated types) share the node budget; a handful each get the full rule.
        let order = if segments.len() <= 4 {
            m
        } else {
            (4 * m).div_ceil(segments.len()).max(8)
        };
        Ok(Solver {
            scenario: scenario.clone(),
            values,
            responder,
            segments,
            rule: GaussLegendre::new(order),
        })
    }

    pub fn scenario(&self) -> &Scenario<T> {
        &self.scenario
    }

    pub fn values(&self) -> &ValueDistribution<T> {
        &self.values
    }

    pub fn responder(&self) -> &Responder<T> {
        &self.responder
    }

    pub fn best_effort(&self, v: T, q: T) -> Result<BestResponse<T>> {
        self.responder.best_effort(v, q)
    }

    /// Smallest value whose best response is interior at this `Q`.
    /// The interior region is an up-set in `v`, so bisection on the corner flag works.
    pub fn switch_value(&self, q: T) -> Result<T> {
        let vmax = self.values.max_value();
        if self.best_effort(vmax, q)?.corner {
            return Ok(vmax);
        }
        let (mut lo, mut hi) = (T::zero(), vmax);
        let two = T::lit(2.0);
        for _ in 0..200 {
            let mid = lo + (hi - lo) / two;
            if mid <= lo || mid >= hi {
                break;
            }
            if self.best_effort(mid, q)?.corner {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    /// Atoms plus Gauss–Legendre nodes on every constant-density piece,
    /// with pieces split where the policy leaves the corner.
    pub fn value_nodes(&self, q: T) -> Result<Vec<ValueNode<T>>> {
        let split = self.switch_value(q)?;
        let mut nodes: Vec<ValueNode<T>> = self
            .values
            .atoms()
            .iter()
            .map(|a| ValueNode {
                v: a.location,
                weight: a.mass,
                atom: true,
            })
            .collect();
        for &(a, b, mass) in &self.segments {
            let density = mass / (b - a);
            let pieces = if split > a && split < b {
                vec![(a, split), (split, b)]
            } else {
                vec![(a, b)]
            };
            for (s, e) in pieces {
                nodes.extend(self.rule.on_interval(s, e).map(|(v, w)| ValueNode {
                    v,
                    weight: w * density,
                    atom: false,
                }));
            }
        }
        nodes.sort_by(|x, y| x.v.partial_cmp(&y.v).unwrap());
        Ok(nodes)
    }

    /// `I(Q) = ∫ψ(x(w; Q)) dF(w)`.
    pub fn integrated_success(&self, q: T) -> Result<T> {
        let mut total = T::zero();
        for n in self.value_nodes(q)? {
            let br = self.best_effort(n.v, q)?;
            if !br.corner {
                total = total + n.weight * self.scenario.tech.psi(br.effort);
            }
        }
        Ok(total.min(T::one()))
    }

    /// `T(Q) = Σ_n p_n (1 − I(Q))^n`.
    pub fn no_signal_prob(&self, q: T) -> Result<T> {
        let i = self.integrated_success(q)?;
        Ok(self.scenario.connections.miss_all(i, 0).max(T::zero()).min(T::one()))
    }

    /// Bisection on `f(Q) = Q − T(Q)` over `[0, 1]`.
    ///
    /// Non-convergence is reported through `converged`, not raised, since a
    /// jump in the best response can leave `f` without a zero.
    pub fn solve_q(&self) -> Result<FixedPoint<T>> {
        let f = |q: T| -> Result<T> { Ok(q - self.no_signal_prob(q)?) };
        let tol = self.scenario.settings.fixed_point_tol;
        let f_hi = f(T::one())?;
        if f_hi <= T::zero() {
            return Ok(FixedPoint {
                q: T::one(),
                residual: f_hi,
                converged: f_hi.abs() < tol,
                iterations: 0,
            });
        }
        let (mut lo, mut hi) = (T::zero(), T::one());
        let f_lo = f(T::zero())?;
        let mut best = if f_lo.abs() < f_hi {
            (T::zero(), f_lo)
        } else {
            (T::one(), f_hi)
        };
        let two = T::lit(2.0);
        let mut iterations = 0;
        while iterations < self.scenario.settings.max_iter {
            let mid = lo + (hi - lo) / two;
            if mid <= lo || mid >= hi {
                break;
            }
            iterations += 1;
            let fm = f(mid)?;
            if fm.abs() <= best.1.abs() {
                best = (mid, fm);
            }
            if fm == T::zero() {
                break;
            }
            if fm < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(FixedPoint {
            q: best.0,
            residual: best.1,
            converged: best.1.abs() < tol,
            iterations,
        })
    }

    /// Evaluates the policy and informedness at a given `Q`.
    pub fn evaluate(&self, fixed_point: FixedPoint<T>) -> Result<EquilibriumSolution<T>> {
        let q = fixed_point.q;
        let tech = &self.scenario.tech;
        let cost = &self.scenario.cost;
        let mut nodes = Vec::new();
        for n in self.value_nodes(q)? {
            let br = self.best_effort(n.v, q)?;
            let psi = if br.corner { T::zero() } else { tech.psi(br.effort) };
            let uninformed = if br.corner { q } else { tech.survival(br.effort) * q };
            let foc_residual = if br.corner {
                T::zero()
            } else {
                slope_ratio(tech, cost, br.effort) * q * n.v - T::one()
            };
            nodes.push(SolutionNode {
                v: n.v,
                weight: n.weight,
                atom: n.atom,
                effort: br.effort,
                psi,
                uninformed,
                pi: T::one() - uninformed,
                corner: br.corner,
                foc_residual,
            });
        }
        let integrated_success: T = nodes.iter().map(|n| n.weight * n.psi).sum::<T>().min(T::one());
        let connections = &self.scenario.connections;
        let no_signal = connections.miss_all(integrated_success, 0);
        let pi = nodes.iter().map(|n| n.weight * n.pi).sum();
        let pi_closed_form = T::one() - connections.miss_all(integrated_success, 1);
        let shape = self.responder.shape();
        let h_interval =
            effort_range(&nodes).unwrap_or_else(|| relevant_interval(&shape, cost, self.values.max_value()));
        let h_class = classify_h(tech, cost, h_interval, self.scenario.settings.shape_grid);
        Ok(EquilibriumSolution {
            prior: self.scenario.prior,
            max_value: self.values.max_value(),
            q,
            fixed_point,
            integrated_success,
            no_signal,
            pi,
            pi_closed_form,
            switch_value: self.switch_value(q)?,
            nodes,
            shape,
            h_class,
            h_interval,
        })
    }

    pub fn solve(&self) -> Result<EquilibriumSolution<T>> {
        let fp = self.solve_q()?;
        self.evaluate(fp)
    }

    /// Policy table on `points` uniformly spaced values plus every node,
    /// for lookup by interpolation.
    pub fn policy(&self, q: T, points: usize) -> Result<Policy<T>> {
        let vmax = self.values.max_value();
        let n = points.max(2);
        let mut vs: Vec<T> = (0..n)
            .map(|i| vmax * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1))
            .chain(self.value_nodes(q)?.into_iter().map(|n| n.v))
            .collect();
        let s = self.switch_value(q)?;
        vs.push(s);
        vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vs.dedup();
        let mut table = Vec::with_capacity(vs.len() + 1);
        for v in vs {
            let br = self.best_effort(v, q)?;
            if v == s && !br.corner {
                // Keep the jump (if any) at the switch point visible to interpolation.
                table.push((v, T::zero()));
            }
            table.push((v, br.effort));
        }
        Policy::new(table)
    }
}

pub fn no_signal_prob<T: Scalar>(q: T, scenario: &Scenario<T>) -> Result<T> {
    check_q(q)?;
    Solver::new(scenario)?.no_signal_prob(q)
}

pub fn solve_q<T: Scalar>(scenario: &Scenario<T>) -> Result<FixedPoint<T>> {
    Solver::new(scenario)?.solve_q()
}

pub fn solve<T: Scalar>(scenario: &Scenario<T>) -> Result<EquilibriumSolution<T>> {
    Solver::new(scenario)?.solve()
}

/// Largest `|h(x(v))·(1 − π(v))·v − 1|` over interior nodes.
pub fn interior_identity_check<T: Scalar>(
    solution: &EquilibriumSolution<T>,
    tech: &SuccessTechnology<T>,
    cf: &CostFunction<T>,
) -> T {
    solution
        .nodes
        .iter()
        .filter(|n| !n.corner)
        .filter_map(|n| {
            hazard_ratio(tech, cf, n.effort)
                .ok()
                .map(|h| (h * n.uninformed * n.v - T::one()).abs())
        })
        .fold(T::zero(), T::max)
}

/// Largest utility gain any node could get by switching to an effort on
/// `deviations` while everyone else keeps the solved policy.
pub fn epsilon_equilibrium_check<T: Scalar>(
    solution: &EquilibriumSolution<T>,
    scenario: &Scenario<T>,
    deviations: &[T],
) -> T {
    let (tech, cf, q) = (&scenario.tech, &scenario.cost, solution.q);
    solution
        .nodes
        .iter()
        .map(|n| {
            let base = utility(n.v, n.effort, q, tech, cf);
            deviations
                .iter()
                .map(|&x| utility(n.v, x, q, tech, cf) - base)
                .fold(T::neg_infinity(), T::max)
        })
        .fold(T::neg_infinity(), T::max)
}

/// Uniform deviation grid on `[0, x_max]`.
pub fn deviation_grid<T: Scalar>(x_max: T, points: usize) -> Vec<T> {
    let n = points.max(2);
    (0..n)
        .map(|i| x_max * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1))
        .collect()
}

/// Effort as a function of value, looked up by linear interpolation in a
/// table that is nondecreasing in both coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy<T> {
    points: Vec<(T, T)>,
}

impl<T: Scalar> Policy<T> {
    pub fn new(points: Vec<(T, T)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("policy", "empty table"));
        }
        for w in points.windows(2) {
            if w[1].0 < w[0].0 {
                return Err(Error::invalid(
                    "policy",
                    format!("values out of order at v = {}", w[1].0),
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::invalid("policy", format!("effort decreases at v = {}", w[1].0)));
            }
        }
        if points.iter().any(|p| !(p.1 >= T::zero() && p.1.is_finite())) {
            return Err(Error::invalid("policy", "efforts must be finite and nonnegative"));
        }
        Ok(Policy { points })
    }

    /// The zero policy on `[0, max_value]`.
    pub fn zero(max_value: T) -> Self {
        Policy {
            points: vec![(T::zero(), T::zero()), (max_value, T::zero())],
        }
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    /// The same table with every effort shifted by `delta` (floored at zero).
    pub fn shifted(&self, delta: T) -> Self {
        Policy {
            points: self
                .points
                .iter()
                .map(|&(v, x)| (v, (x + delta).max(T::zero())))
                .collect(),
        }
    }

    pub fn effort(&self, v: T) -> Result<T> {
        let (first, last) = (self.points[0], self.points[self.points.len() - 1]);
        let slack = T::resolution() * last.0.abs().max(T::one());
        if !(v >= first.0 - slack && v <= last.0 + slack) {
            return Err(Error::domain("value", v.as_f64(), "inside the policy table range"));
        }
        if v <= first.0 {
            return Ok(first.1);
        }
        if v >= last.0 {
            return Ok(last.1);
        }
        let i = self.points.partition_point(|p| p.0 <= v);
        let (v0, x0) = self.points[i - 1];
        let (v1, x1) = self.points[i];
        if v1 == v0 {
            return Ok(x1);
        }
        Ok(x0 + (x1 - x0) * (v - v0) / (v1 - v0))
    }
}

/// The closed-form best response for exponential success and linear cost,
/// `max(0, ln(ρQv/γ)/ρ)` with `ρ = 1/s`. Used by tests and diagnostics.
pub fn exponential_linear_effort<T: Scalar>(scale: T, gamma: T, v: T, q: T) -> T {
    let rho = T::one() / scale;
    let z = rho * q * v / gamma;
    if z <= T::one() {
        T::zero()
    } else {
        z.ln() / rho
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::binomial_connections;

    fn exp_scenario(gamma: f64) -> Scenario<f64> {
        Scenario::new(
            0.5,
            PreferenceDistribution::uniform(0.0, 1.0).unwrap(),
            SuccessTechnology::exponential(1.0).unwrap(),
            CostFunction::linear(gamma).unwrap(),
            binomial_connections(5, 0.5).unwrap(),
            Settings::default(),
        )
        .unwrap()
    }

    #[test]
    fn utility_examples() {
        let t = SuccessTechnology::weibull(1.0, 0.5).unwrap();
        let c = CostFunction::linear(0.3).unwrap();
        assert_eq!(expected_utility(0.2, 0.0, 0.4, &t, &c).unwrap(), (1.0 - 0.4) * 0.2);
        let v = 0.2;
        let at_zero = expected_utility(v, 0.0, 0.0, &t, &c).unwrap();
        assert!((0..50).all(|i| expected_utility(v, 0.1 * i as f64, 0.0, &t, &c).unwrap() <= at_zero));
        assert!((0..50).all(|i| expected_utility(0.0, 0.1 * i as f64, 0.7, &t, &c).unwrap() <= 0.0));
        assert!(expected_utility(0.2, -1.0, 0.4, &t, &c).is_err());
        assert!(expected_utility(0.2, 1.0, 1.4, &t, &c).is_err());
    }

    #[test]
    fn best_effort_closed_form() {
        let sc = exp_scenario(0.02);
        let solver = Solver::new(&sc).unwrap();
        assert!(solver.best_effort(0.0, 0.6).unwrap().corner);
        for i in 0..=40 {
            let v = 0.25 * i as f64 / 40.0;
            for q in [0.1, 0.5, 1.0] {
                let got = solver.best_effort(v, q).unwrap().effort;
                let want = exponential_linear_effort(1.0, 0.02, v, q);
                assert!((got - want).abs() < 1e-12, "v={v} q={q}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn bracket_cap_is_reported() {
        let mut sc = exp_scenario(0.02);
        sc.settings.x_max = Some(0.01);
        let solver = Solver::new(&sc).unwrap();
        assert!(matches!(
            solver.best_effort(0.25, 1.0),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn no_connections_means_q_one() {
        let sc = exp_scenario(0.02).with_connections(ConnectionDistribution::point_mass(0));
        let solver = Solver::new(&sc).unwrap();
        for q in [0.0, 0.3, 1.0] {
            assert_eq!(solver.no_signal_prob(q).unwrap(), 1.0);
        }
        assert_eq!(solver.solve_q().unwrap().q, 1.0);
    }

    #[test]
    fn nobody_values_information() {
        let types = PreferenceDistribution::point_mass(0.0).unwrap();
        let sc = exp_scenario(0.02).with_types(types);
        let s = solve(&sc).unwrap();
        assert_eq!(s.q, 1.0);
        assert_eq!(s.integrated_success, 0.0);
        let none = sc.with_connections(ConnectionDistribution::point_mass(0));
        assert_eq!(solve(&none).unwrap().pi, 0.0);
    }

    #[test]
    fn two_connections_square_the_miss() {
        let d = ConnectionDistribution::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(d.miss_all(0.5, 0), 0.25);
    }

    #[test]
    fn single_type_at_prior_without_connections() {
        let types = PreferenceDistribution::point_mass(0.5).unwrap();
        let sc = exp_scenario(0.02)
            .with_types(types)
            .with_connections(ConnectionDistribution::point_mass(0));
        let s = solve(&sc).unwrap();
        let x: f64 = exponential_linear_effort(1.0, 0.02, 0.25, 1.0);
        assert!((s.pi - (1.0 - (-x).exp())).abs() < 1e-12);
    }

    #[test]
    fn policy_is_monotone_and_identity_holds() {
        let s = solve(&exp_scenario(0.02)).unwrap();
        assert!(s.fixed_point.converged);
        assert_eq!(s.max_policy_decrease(), 0.0);
        assert!(s.min_interior_increase().unwrap() > 0.0);
        let sc = exp_scenario(0.02);
        assert!(interior_identity_check(&s, &sc.tech, &sc.cost) < 1e-9);
        assert!((s.pi - s.pi_closed_form).abs() < 1e-8);
        for n in &s.nodes {
            assert!(n.pi >= 1.0 - s.q - 1e-15 && n.pi <= 1.0);
        }
    }

    #[test]
    fn deviation_checker_detects_perturbation() {
        let sc = exp_scenario(0.02);
        let s = solve(&sc).unwrap();
        let grid = deviation_grid(5.0, 2001);
        assert!(epsilon_equilibrium_check(&s, &sc, &grid) < 1e-6);
        let mut bumped = s.clone();
        for n in &mut bumped.nodes {
            n.effort += 0.1;
        }
        assert!(epsilon_equilibrium_check(&bumped, &sc, &grid) > 1e-6);
    }

    #[test]
    fn policy_table_interpolates() {
        let p = Policy::new(vec![(0.0, 0.0), (1.0, 2.0)]).unwrap();
        assert_eq!(p.effort(0.25).unwrap(), 0.5);
        assert!(p.effort(1.5).is_err());
        assert!(Policy::new(vec![(0.0, 1.0), (1.0, 0.5)]).is_err());
    }
}
