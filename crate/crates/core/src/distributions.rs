//! Type, value-of-information and connection-count distributions.
//!
//! Every one-dimensional distribution here is a continuous part with a
//! piecewise-linear cdf plus an explicit list of atoms. Piecewise-linear
//! continuous parts are closed under the type-to-value map, so the value
//! distribution is represented exactly rather than on a smoothed grid.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mass tolerance for "sums to one" checks.
pub const MASS_TOL: f64 = 1e-12;

/// Default number of grid points for the order checks.
pub const DEFAULT_CHECK_GRID: usize = 1001;

/// A point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub location: T,
    pub mass: T,
}

impl<T> Atom<T> {
    pub fn new(location: T, mass: T) -> Self {
        Atom { location, mass }
    }
}

/// Gain from learning the state for a voter of type `lambda` at prior `prior`:
/// `min{p, λ} − pλ`, which lies in `[0, p(1−p)]`.
pub fn value_of_information<T: Scalar>(lambda: T, prior: T) -> Result<T> {
    check_prior(prior)?;
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(Error::domain("type", lambda.as_f64(), "0 <= lambda <= 1"));
    }
    Ok(prior.min(lambda) - prior * lambda)
}

pub(crate) fn check_prior<T: Scalar>(prior: T) -> Result<()> {
    if prior > T::zero() && prior < T::one() {
        Ok(())
    } else {
        Err(Error::domain("prior", prior.as_f64(), "0 < p < 1"))
    }
}

/// Continuous part (piecewise-linear sub-cdf through `knots`) plus atoms.
///
/// `knots` hold `(x, G(x))` with `G` rising from 0 to the continuous mass;
/// atoms are sorted by location with coincident locations merged.
#[derive(Debug, Clone, PartialEq)]
struct Mixture<T> {
    knots: Vec<(T, T)>,
    atoms: Vec<Atom<T>>,
}

impl<T: Scalar> Mixture<T> {
    fn empty() -> Self {
        Mixture {
            knots: Vec::new(),
            atoms: Vec::new(),
        }
    }

    fn new(mut knots: Vec<(T, T)>, mut atoms: Vec<Atom<T>>) -> Self {
        // Drop a degenerate continuous part.
        if knots.len() < 2 || knots.last().map(|k| k.1).unwrap_or(T::zero()) <= T::zero() {
            knots.clear();
        }
        atoms.retain(|a| a.mass > T::zero());
        atoms.sort_by(|a, b| a.location.partial_cmp(&b.location).expect("NaN atom location"));
        let mut merged: Vec<Atom<T>> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.location == a.location => last.mass = last.mass + a.mass,
                _ => merged.push(a),
            }
        }
        Mixture { knots, atoms: merged }
    }

    fn continuous_mass(&self) -> T {
        self.knots.last().map(|k| k.1).unwrap_or(T::zero())
    }

    fn atom_mass(&self) -> T {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    fn total_mass(&self) -> T {
        self.continuous_mass() + self.atom_mass()
    }

    fn scaled(&self, factor: T) -> Self {
        Mixture {
            knots: self.knots.iter().map(|&(x, g)| (x, g * factor)).collect(),
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom::new(a.location, a.mass * factor))
                .filter(|a| a.mass > T::zero())
                .collect(),
        }
    }

    /// Continuous sub-cdf, linear between knots.
    fn continuous_cdf(&self, x: T) -> T {
        let k = &self.knots;
        if k.is_empty() || x <= k[0].0 {
            return T::zero();
        }
        let last = k[k.len() - 1];
        if x >= last.0 {
            return last.1;
        }
        // First knot strictly to the right of x.
        let i = k.partition_point(|&(kx, _)| kx <= x);
        let (x0, g0) = k[i - 1];
        let (x1, g1) = k[i];
        if x1 == x0 {
            return g1;
        }
        g0 + (g1 - g0) * (x - x0) / (x1 - x0)
    }

    fn cdf(&self, x: T) -> T {
        let atoms: T = self.atoms.iter().take_while(|a| a.location <= x).map(|a| a.mass).sum();
        self.continuous_cdf(x) + atoms
    }

    fn cdf_left(&self, x: T) -> T {
        let atoms: T = self.atoms.iter().take_while(|a| a.location < x).map(|a| a.mass).sum();
        self.continuous_cdf(x) + atoms
    }

    /// Linear pieces with positive mass, as `(start, end, mass)`.
    fn segments(&self) -> Vec<(T, T, T)> {
        self.knots
            .windows(2)
            .filter_map(|w| {
                let m = w[1].1 - w[0].1;
                (m > T::zero() && w[1].0 > w[0].0).then_some((w[0].0, w[1].0, m))
            })
            .collect()
    }

    /// Inverse-cdf draw treating atoms exactly.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let total = self.total_mass();
        let u = T::lit(rng.gen::<f64>()) * total;
        let mut acc = T::zero();
        for a in &self.atoms {
            acc = acc + a.mass;
            if u < acc {
                return a.location;
            }
        }
        for (s, e, m) in self.segments() {
            if u < acc + m {
                let t = (u - acc) / m;
                return s + (e - s) * t;
            }
            acc = acc + m;
        }
        // Rounding left u just above the accumulated mass.
        self.segments()
            .last()
            .map(|s| s.1)
            .or_else(|| self.atoms.last().map(|a| a.location))
            .unwrap_or_else(T::zero)
    }

    fn combine(&self, other: &Self) -> Self {
        let mut xs: Vec<T> = self.knots.iter().chain(&other.knots).map(|k| k.0).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        let knots = if self.knots.is_empty() && other.knots.is_empty() {
            Vec::new()
        } else {
            xs.into_iter()
                .map(|x| (x, self.continuous_cdf(x) + other.continuous_cdf(x)))
                .collect()
        };
        let atoms = self.atoms.iter().chain(&other.atoms).copied().collect();
        Mixture::new(knots, atoms)
    }
}

/// Parametric family underlying a [`PreferenceDistribution`].
#[derive(Debug, Clone, PartialEq)]
pub enum PreferenceKind<T> {
    /// Uniform on `[lo, hi] ⊆ [0, 1]`.
    Uniform { lo: T, hi: T },
    /// Piecewise-linear cdf through `(λ, F(λ))` points, starting at 0 and ending at 1.
    Tabulated { points: Vec<(T, T)> },
    /// No continuous part; all mass sits in the atom list.
    Discrete,
    /// `(1−δ)·base + δ·TwoPoint{F(p) at 0, 1−F(p) at 1}`.
    Polarized {
        base: Box<PreferenceDistribution<T>>,
        delta: T,
        pivot: T,
    },
}

/// Distribution of voter types on `[0, 1]`: a parametric continuous family
/// carrying the mass left over after an explicit atom list.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceDistribution<T> {
    kind: PreferenceKind<T>,
    extra_atoms: Vec<Atom<T>>,
    mix: Mixture<T>,
}

impl<T: Scalar> PreferenceDistribution<T> {
    pub fn new(kind: PreferenceKind<T>, atoms: Vec<Atom<T>>) -> Result<Self> {
        const OBJ: &str = "preference distribution";
        let mut atom_mass = T::zero();
        for a in &atoms {
            if !(a.location >= T::zero() && a.location <= T::one()) {
                return Err(Error::invalid(
                    OBJ,
                    format!("atom location {} outside [0,1]", a.location),
                ));
            }
            if !(a.mass >= T::zero()) {
                return Err(Error::invalid(OBJ, format!("negative atom mass {}", a.mass)));
            }
            atom_mass = atom_mass + a.mass;
        }
        let tol = T::lit(MASS_TOL).max(T::resolution());
        if atom_mass > T::one() + tol {
            return Err(Error::invalid(OBJ, format!("atom masses sum to {atom_mass} > 1")));
        }
        let rest = (T::one() - atom_mass).max(T::zero());
        let body = match &kind {
            PreferenceKind::Uniform { lo, hi } => {
                let (lo, hi) = (*lo, *hi);
                if !(lo >= T::zero() && hi <= T::one() && lo < hi) {
                    return Err(Error::invalid(
                        OBJ,
                        format!("uniform support [{lo}, {hi}] not inside [0,1]"),
                    ));
                }
                Mixture::new(vec![(lo, T::zero()), (hi, T::one())], Vec::new())
            }
            PreferenceKind::Tabulated { points } => {
                validate_table(points)?;
                Mixture::new(points.clone(), Vec::new())
            }
            PreferenceKind::Discrete => {
                if (atom_mass - T::one()).abs() > tol {
                    return Err(Error::invalid(
                        OBJ,
                        format!("discrete atoms sum to {atom_mass}, expected 1"),
                    ));
                }
                Mixture::empty()
            }
            PreferenceKind::Polarized { base, delta, pivot } => {
                let (delta, pivot) = (*delta, *pivot);
                if !(delta >= T::zero() && delta <= T::one()) {
                    return Err(Error::invalid(
                        OBJ,
                        format!("polarization weight {delta} outside [0,1]"),
                    ));
                }
                check_prior(pivot)?;
                let below = base.cdf(pivot);
                let two_point = Mixture::new(
                    Vec::new(),
                    vec![
                        Atom::new(T::zero(), delta * below),
                        Atom::new(T::one(), delta * (T::one() - below)),
                    ],
                );
                base.mix.scaled(T::one() - delta).combine(&two_point)
            }
        };
        let mix = if matches!(kind, PreferenceKind::Discrete) {
            Mixture::new(Vec::new(), atoms.clone())
        } else {
            body.scaled(rest).combine(&Mixture::new(Vec::new(), atoms.clone()))
        };
        if (mix.total_mass() - T::one()).abs() > tol {
            return Err(Error::invalid(
                OBJ,
                format!("total mass {} differs from 1", mix.total_mass()),
            ));
        }
        Ok(PreferenceDistribution {
            kind,
            extra_atoms: atoms,
            mix,
        })
    }

    pub fn uniform(lo: T, hi: T) -> Result<Self> {
        Self::new(PreferenceKind::Uniform { lo, hi }, Vec::new())
    }

    pub fn tabulated(points: Vec<(T, T)>) -> Result<Self> {
        Self::new(PreferenceKind::Tabulated { points }, Vec::new())
    }

    pub fn point_mass(location: T) -> Result<Self> {
        Self::new(PreferenceKind::Discrete, vec![Atom::new(location, T::one())])
    }

    pub fn discrete(atoms: Vec<Atom<T>>) -> Result<Self> {
        Self::new(PreferenceKind::Discrete, atoms)
    }

    pub fn kind(&self) -> &PreferenceKind<T> {
        &self.kind
    }

    /// Atoms given explicitly at construction (not those created by polarization).
    pub fn extra_atoms(&self) -> &[Atom<T>] {
        &self.extra_atoms
    }

    /// All atoms of the distribution, merged and sorted.
    pub fn atoms(&self) -> &[Atom<T>] {
        &self.mix.atoms
    }

    pub fn cdf(&self, lambda: T) -> T {
        self.mix.cdf(lambda)
    }

    /// `P(type < λ)`.
    pub fn cdf_left(&self, lambda: T) -> T {
        self.mix.cdf_left(lambda)
    }

    pub fn continuous_mass(&self) -> T {
        self.mix.continuous_mass()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.mix.sample(rng)
    }
}

fn validate_table<T: Scalar>(points: &[(T, T)]) -> Result<()> {
    const OBJ: &str = "tabulated cdf";
    if points.len() < 2 {
        return Err(Error::invalid(OBJ, "needs at least two points"));
    }
    let tol = T::lit(MASS_TOL).max(T::resolution());
    let (x0, f0) = points[0];
    let (xn, fn_) = points[points.len() - 1];
    if x0 < T::zero() || xn > T::one() {
        return Err(Error::invalid(OBJ, "grid must lie inside [0,1]"));
    }
    if f0.abs() > tol || (fn_ - T::one()).abs() > tol {
        return Err(Error::invalid(
            OBJ,
            format!("cdf must run from 0 to 1, got {f0}..{fn_}"),
        ));
    }
    for w in points.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::invalid(
                OBJ,
                format!("grid not strictly increasing at {}", w[1].0),
            ));
        }
        if w[1].1 < w[0].1 {
            return Err(Error::invalid(OBJ, format!("cdf decreases at {}", w[1].0)));
        }
    }
    Ok(())
}

/// Distribution of the value of information over `[0, p(1−p)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueDistribution<T> {
    prior: T,
    mix: Mixture<T>,
}

impl<T: Scalar> ValueDistribution<T> {
    pub fn prior(&self) -> T {
        self.prior
    }

    /// Upper end of the value support, `p(1−p)`.
    pub fn max_value(&self) -> T {
        self.prior * (T::one() - self.prior)
    }

    pub fn cdf(&self, v: T) -> T {
        self.mix.cdf(v)
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.mix.atoms
    }

    /// Pieces of constant density as `(start, end, mass)`.
    pub fn segments(&self) -> Vec<(T, T, T)> {
        self.mix.segments()
    }

    pub fn continuous_mass(&self) -> T {
        self.mix.continuous_mass()
    }

    pub fn total_mass(&self) -> T {
        self.mix.total_mass()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.mix.sample(rng)
    }
}

/// Pushes a type distribution through `λ ↦ min{p,λ} − pλ`.
///
/// The continuous part stays piecewise linear: knots at `λ(1−p)` for type
/// knots below `p` and at `p(1−λ)` for those above. Atoms map one-to-one,
/// so atoms at `λ = 0` and `λ = 1` land together on `v = 0`.
pub fn derive_value_distribution<T: Scalar>(
    types: &PreferenceDistribution<T>,
    prior: T,
) -> Result<ValueDistribution<T>> {
    check_prior(prior)?;
    let p = prior;
    let q = T::one() - p;
    let vmax = p * q;
    let cont = &types.mix;
    let mut vs = vec![T::zero(), vmax];
    for &(lambda, _) in &cont.knots {
        let v = if lambda <= p {
            lambda * q
        } else {
            p * (T::one() - lambda)
        };
        vs.push(v.max(T::zero()).min(vmax));
    }
    vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vs.dedup();
    let total = cont.continuous_mass();
    let knots = if cont.knots.is_empty() {
        Vec::new()
    } else {
        let mut running = T::zero();
        vs.into_iter()
            .map(|v| {
                let below = cont.continuous_cdf((v / q).min(p));
                let above = total - cont.continuous_cdf((T::one() - v / p).max(p));
                // Monotone clamp against rounding between the two branches.
                running = running.max((below + above).min(total));
                (v, running)
            })
            .collect()
    };
    let atoms = types
        .atoms()
        .iter()
        .map(|a| Atom::new(prior.min(a.location) - prior * a.location, a.mass))
        .map(|a| Atom::new(a.location.max(T::zero()).min(vmax), a.mass))
        .collect();
    Ok(ValueDistribution {
        prior,
        mix: Mixture::new(knots, atoms),
    })
}

/// Mixes `types` with the two-point distribution on `{0, 1}` that keeps the
/// mass on each side of `p`: `(1−δ)·F + δ·TwoPoint{F(p) at 0, 1−F(p) at 1}`.
pub fn polarize<T: Scalar>(types: &PreferenceDistribution<T>, delta: T, prior: T) -> Result<PreferenceDistribution<T>> {
    PreferenceDistribution::new(
        PreferenceKind::Polarized {
            base: Box::new(types.clone()),
            delta,
            pivot: prior,
        },
        Vec::new(),
    )
}

fn check_grid<T: Scalar>(resolution: usize, a: &[Atom<T>], b: &[Atom<T>]) -> Vec<T> {
    let n = resolution.max(2);
    let mut grid: Vec<T> = (0..n)
        .map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(n - 1))
        .chain(a.iter().chain(b).map(|at| at.location))
        .collect();
    grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
    grid.dedup();
    grid
}

/// True iff `polarized` single-crosses `base` at `p`: higher cdf below `p`,
/// lower cdf above `p`, on a uniform grid plus every atom location.
pub fn check_polarization_order<T: Scalar>(
    base: &PreferenceDistribution<T>,
    polarized: &PreferenceDistribution<T>,
    prior: T,
    resolution: usize,
) -> bool {
    let tol = T::lit(MASS_TOL).max(T::resolution());
    check_grid(resolution, base.atoms(), polarized.atoms())
        .into_iter()
        .all(|lambda| {
            let (f, g) = (base.cdf(lambda), polarized.cdf(lambda));
            if lambda < prior {
                g >= f - tol
            } else if lambda > prior {
                g <= f + tol
            } else {
                true
            }
        })
}

/// True iff `dominated` is first-order stochastically dominated by
/// `dominant`, i.e. `F_dominant(v) ≤ F_dominated(v)` on the grid plus atoms.
pub fn value_fosd<T: Scalar>(
    dominant: &ValueDistribution<T>,
    dominated: &ValueDistribution<T>,
    resolution: usize,
) -> bool {
    let tol = T::lit(MASS_TOL).max(T::resolution());
    let vmax = dominant.max_value().max(dominated.max_value());
    check_grid::<T>(resolution, &[], &[])
        .into_iter()
        .map(|t| t * vmax)
        .chain(dominant.atoms().iter().chain(dominated.atoms()).map(|a| a.location))
        .all(|v| dominant.cdf(v) <= dominated.cdf(v) + tol)
}

/// Probability mass over the number of eventual connections `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionDistribution<T> {
    masses: Vec<T>,
}

impl<T: Scalar> ConnectionDistribution<T> {
    pub fn new(masses: Vec<T>) -> Result<Self> {
        const OBJ: &str = "connection distribution";
        if masses.is_empty() {
            return Err(Error::invalid(OBJ, "mass vector is empty"));
        }
        if let Some((n, m)) = masses.iter().enumerate().find(|(_, m)| !(**m >= T::zero())) {
            return Err(Error::invalid(OBJ, format!("p_{n} = {m} is negative")));
        }
        let total: T = masses.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(MASS_TOL).max(T::resolution()) {
            return Err(Error::invalid(OBJ, format!("masses sum to {total}, expected 1")));
        }
        Ok(ConnectionDistribution { masses })
    }

    /// All mass on exactly `n` connections.
    pub fn point_mass(n: usize) -> Self {
        let mut masses = vec![T::zero(); n + 1];
        masses[n] = T::one();
        ConnectionDistribution { masses }
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    /// Largest count `N` in the support vector.
    pub fn max_count(&self) -> usize {
        self.masses.len() - 1
    }

    pub fn mean(&self) -> T {
        self.masses
            .iter()
            .enumerate()
            .map(|(n, &m)| T::from_usize_lossy(n) * m)
            .sum()
    }

    /// `Σ_n p_n (1 − I)^{n + shift}` evaluated by Horner's rule.
    pub fn miss_all(&self, success: T, shift: usize) -> T {
        let miss = T::one() - success;
        let poly = self.masses.iter().rev().fold(T::zero(), |acc, &m| acc * miss + m);
        poly * miss.powi(shift as i32)
    }
}

/// `Binomial(N, q)` counts.
pub fn binomial_connections<T: Scalar>(max_count: usize, q: T) -> Result<ConnectionDistribution<T>> {
    if !(q >= T::zero() && q <= T::one()) {
        return Err(Error::domain("binomial q", q.as_f64(), "0 <= q <= 1"));
    }
    let mut coeff = T::one();
    let masses = (0..=max_count)
        .map(|n| {
            if n > 0 {
                coeff = coeff * T::from_usize_lossy(max_count + 1 - n) / T::from_usize_lossy(n);
            }
            coeff * q.powi(n as i32) * (T::one() - q).powi((max_count - n) as i32)
        })
        .collect();
    ConnectionDistribution::new(masses)
}

/// True iff `shifted` first-order stochastically dominates `base`: every
/// partial sum of `shifted` is at most the matching partial sum of `base`.
pub fn check_fosd<T: Scalar>(base: &ConnectionDistribution<T>, shifted: &ConnectionDistribution<T>) -> bool {
    let tol = T::lit(MASS_TOL).max(T::resolution());
    let len = base.masses.len().max(shifted.masses.len());
    let at = |d: &ConnectionDistribution<T>, i: usize| d.masses.get(i).copied().unwrap_or_else(T::zero);
    let (mut cb, mut cs) = (T::zero(), T::zero());
    (0..len).all(|i| {
        cb = cb + at(base, i);
        cs = cs + at(shifted, i);
        cs <= cb + tol
    })
}

pub fn sample_type<T: Scalar, R: Rng + ?Sized>(types: &PreferenceDistribution<T>, rng: &mut R) -> T {
    types.sample(rng)
}

pub fn sample_value<T: Scalar, R: Rng + ?Sized>(values: &ValueDistribution<T>, rng: &mut R) -> T {
    values.sample(rng)
}
