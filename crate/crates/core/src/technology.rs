//! Success-probability and cost families, the hazard ratio `h`, and the
//! shape checks that decide which best-response routine applies.

use crate::error::{Error, Result};
use crate::roots::{golden_max, invert_increasing};
use crate::scalar::Scalar;

/// Default grid size for shape classification.
pub const DEFAULT_SHAPE_GRID: usize = 2048;

/// Tolerance on grid differences of `h`.
pub const H_TOL: f64 = 1e-10;

/// Probability `ψ(x)` that effort `x` yields a signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuccessTechnology<T> {
    /// `ψ(x) = 1 − exp(−(x/s)^k)`.
    Weibull { scale: T, shape: T },
    /// Zero below `b − ε`, one above `b + ε`, and the quintic
    /// `6t⁵ − 15t⁴ + 10t³` with `t = (x − b + ε)/(2ε)` in between.
    SmoothStep { threshold: T, half_width: T },
}

impl<T: Scalar> SuccessTechnology<T> {
    pub fn weibull(scale: T, shape: T) -> Result<Self> {
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(Error::invalid(
                "weibull technology",
                format!("scale {scale} must be positive"),
            ));
        }
        if !(shape > T::zero() && shape.is_finite()) {
            return Err(Error::invalid(
                "weibull technology",
                format!("shape {shape} must be positive"),
            ));
        }
        Ok(SuccessTechnology::Weibull { scale, shape })
    }

    pub fn exponential(scale: T) -> Result<Self> {
        Self::weibull(scale, T::one())
    }

    pub fn smooth_step(threshold: T, half_width: T) -> Result<Self> {
        if !(threshold > T::zero() && threshold.is_finite()) {
            return Err(Error::invalid(
                "smoothstep technology",
                format!("threshold {threshold} must be positive"),
            ));
        }
        if !(half_width > T::zero() && half_width < threshold) {
            return Err(Error::invalid(
                "smoothstep technology",
                format!("half-width {half_width} must lie in (0, {threshold})"),
            ));
        }
        Ok(SuccessTechnology::SmoothStep { threshold, half_width })
    }

    /// Characteristic effort length used to size brackets.
    pub fn scale(&self) -> T {
        match *self {
            SuccessTechnology::Weibull { scale, .. } => scale,
            SuccessTechnology::SmoothStep { threshold, half_width } => threshold + half_width,
        }
    }

    /// Effort interval outside which `ψ'` vanishes, if bounded.
    pub fn active_interval(&self) -> Option<(T, T)> {
        match *self {
            SuccessTechnology::Weibull { .. } => None,
            SuccessTechnology::SmoothStep { threshold, half_width } => {
                Some(((threshold - half_width).max(T::zero()), threshold + half_width))
            }
        }
    }

    fn bridge(threshold: T, half_width: T, x: T) -> T {
        let lower = threshold - half_width;
        if x <= lower {
            return T::zero();
        }
        if x >= threshold + half_width {
            return T::one();
        }
        ((x - lower) / (half_width + half_width)).min(T::one())
    }

    pub fn psi(&self, x: T) -> T {
        match *self {
            SuccessTechnology::Weibull { scale, shape } => -(-(x / scale).powf(shape)).exp_m1(),
            SuccessTechnology::SmoothStep { threshold, half_width } => {
                let t = Self::bridge(threshold, half_width, x);
                t * t * t * (t * (t * T::lit(6.0) - T::lit(15.0)) + T::lit(10.0))
            }
        }
    }

    /// `1 − ψ(x)` computed without cancellation.
    pub fn survival(&self, x: T) -> T {
        match *self {
            SuccessTechnology::Weibull { scale, shape } => (-(x / scale).powf(shape)).exp(),
            SuccessTechnology::SmoothStep { threshold, half_width } => {
                let s = T::one() - Self::bridge(threshold, half_width, x);
                s * s * s * (s * (s * T::lit(6.0) - T::lit(15.0)) + T::lit(10.0))
            }
        }
    }

    pub fn psi_prime(&self, x: T) -> T {
        match *self {
            SuccessTechnology::Weibull { scale, shape } => {
                let z = x / scale;
                if z == T::zero() {
                    return if shape < T::one() {
                        T::infinity()
                    } else if shape == T::one() {
                        T::one() / scale
                    } else {
                        T::zero()
                    };
                }
                shape / scale * z.powf(shape - T::one()) * (-z.powf(shape)).exp()
            }
            SuccessTechnology::SmoothStep { threshold, half_width } => {
                let t = Self::bridge(threshold, half_width, x);
                let u = t * (T::one() - t);
                T::lit(30.0) * u * u / (half_width + half_width)
            }
        }
    }
}

/// Effort cost `c(x)` with `c(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostFunction<T> {
    /// `γx`.
    Linear { gamma: T },
    /// `γx^a`, `a ≥ 1`.
    Power { gamma: T, exponent: T },
    /// `γ(√(x+1) − 1)`.
    RootShift { gamma: T },
}

impl<T: Scalar> CostFunction<T> {
    fn check_gamma(gamma: T) -> Result<()> {
        if gamma > T::zero() && gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(
                "cost function",
                format!("gamma {gamma} must be positive"),
            ))
        }
    }

    pub fn linear(gamma: T) -> Result<Self> {
        Self::check_gamma(gamma)?;
        Ok(CostFunction::Linear { gamma })
    }

    pub fn power(gamma: T, exponent: T) -> Result<Self> {
        Self::check_gamma(gamma)?;
        if !(exponent >= T::one() && exponent.is_finite()) {
            return Err(Error::invalid(
                "cost function",
                format!("exponent {exponent} must be >= 1"),
            ));
        }
        Ok(CostFunction::Power { gamma, exponent })
    }

    pub fn root_shift(gamma: T) -> Result<Self> {
        Self::check_gamma(gamma)?;
        Ok(CostFunction::RootShift { gamma })
    }

    pub fn gamma(&self) -> T {
        match *self {
            CostFunction::Linear { gamma } | CostFunction::Power { gamma, .. } | CostFunction::RootShift { gamma } => {
                gamma
            }
        }
    }

    /// The same family with `γ` multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        match *self {
            CostFunction::Linear { gamma } => CostFunction::Linear { gamma: gamma * factor },
            CostFunction::Power { gamma, exponent } => CostFunction::Power {
                gamma: gamma * factor,
                exponent,
            },
            CostFunction::RootShift { gamma } => CostFunction::RootShift { gamma: gamma * factor },
        }
    }

    pub fn cost(&self, x: T) -> T {
        match *self {
            CostFunction::Linear { gamma } => gamma * x,
            CostFunction::Power { gamma, exponent } => gamma * x.powf(exponent),
            CostFunction::RootShift { gamma } => gamma * ((x + T::one()).sqrt() - T::one()),
        }
    }

    pub fn cost_prime(&self, x: T) -> T {
        match *self {
            CostFunction::Linear { gamma } => gamma,
            CostFunction::Power { gamma, exponent } => {
                if exponent == T::one() {
                    gamma
                } else {
                    gamma * exponent * x.powf(exponent - T::one())
                }
            }
            CostFunction::RootShift { gamma } => gamma / (T::lit(2.0) * (x + T::one()).sqrt()),
        }
    }

    /// `c⁻¹(value)` by bisection.
    pub fn inverse(&self, value: T) -> Option<T> {
        let start = (value / self.gamma()).max(T::one());
        invert_increasing(|x| self.cost(x), value, start, T::max_value().sqrt())
    }
}

fn check_effort<T: Scalar>(x: T) -> Result<()> {
    if x >= T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("effort", x.as_f64(), "x >= 0"))
    }
}

pub fn psi<T: Scalar>(tech: &SuccessTechnology<T>, x: T) -> Result<T> {
    check_effort(x)?;
    Ok(tech.psi(x))
}

pub fn psi_prime<T: Scalar>(tech: &SuccessTechnology<T>, x: T) -> Result<T> {
    check_effort(x)?;
    Ok(tech.psi_prime(x))
}

pub fn cost<T: Scalar>(cf: &CostFunction<T>, x: T) -> Result<T> {
    check_effort(x)?;
    Ok(cf.cost(x))
}

pub fn cost_prime<T: Scalar>(cf: &CostFunction<T>, x: T) -> Result<T> {
    check_effort(x)?;
    Ok(cf.cost_prime(x))
}

/// `ψ'(x)/c'(x)`, taken as zero wherever `ψ'` vanishes.
pub fn slope_ratio<T: Scalar>(tech: &SuccessTechnology<T>, cf: &CostFunction<T>, x: T) -> T {
    let num = tech.psi_prime(x);
    if num == T::zero() {
        T::zero()
    } else {
        num / cf.cost_prime(x)
    }
}

pub fn benefit_cost_slope<T: Scalar>(tech: &SuccessTechnology<T>, cf: &CostFunction<T>, x: T) -> Result<T> {
    check_effort(x)?;
    Ok(slope_ratio(tech, cf, x))
}

/// `h(x) = ψ'(x) / (c'(x)(1 − ψ(x)))`; undefined once `ψ` reaches one.
pub fn hazard_ratio<T: Scalar>(tech: &SuccessTechnology<T>, cf: &CostFunction<T>, x: T) -> Result<T> {
    check_effort(x)?;
    let surv = tech.survival(x);
    if surv <= T::zero() {
        return Err(Error::domain("effort", x.as_f64(), "psi(x) < 1 for the hazard ratio"));
    }
    Ok(slope_ratio(tech, cf, x) / surv)
}

/// Shape of `r = ψ'/c'` on an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape<T> {
    DecreasingR,
    SinglePeakedR { peak: T },
    Invalid,
}

impl<T> Shape<T> {
    pub fn label(&self) -> &'static str {
        match self {
            Shape::DecreasingR => "decreasing-r",
            Shape::SinglePeakedR { .. } => "single-peaked-r",
            Shape::Invalid => "invalid",
        }
    }
}

/// Monotonicity class of `h` on an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HClass {
    Increasing,
    Decreasing,
    Constant,
    NonMonotone,
}

impl HClass {
    pub fn label(&self) -> &'static str {
        match self {
            HClass::Increasing => "increasing",
            HClass::Decreasing => "decreasing",
            HClass::Constant => "constant",
            HClass::NonMonotone => "non-monotone",
        }
    }
}

fn grid<T: Scalar>(lo: T, hi: T, points: usize) -> impl Iterator<Item = T> {
    let n = points.max(2);
    let step = (hi - lo) / T::from_usize_lossy(n - 1);
    (0..n).map(move |i| {
        if i + 1 == n {
            hi
        } else {
            lo + step * T::from_usize_lossy(i)
        }
    })
}

/// Classifies `r` on `[lo, hi]` from the signs of its grid differences:
/// only falls is `decreasing-r`, rises then falls is `single-peaked-r`
/// (with the peak refined by golden-section search), anything else is
/// `invalid`. Flat stretches are ignored.
pub fn classify_shape<T: Scalar>(
    tech: &SuccessTechnology<T>,
    cf: &CostFunction<T>,
    interval: (T, T),
    points: usize,
) -> Shape<T> {
    let (mut lo, mut hi) = interval;
    if !(lo >= T::zero() && hi > lo) {
        return Shape::Invalid;
    }
    // r is identically zero off the active interval, so only grid that.
    if let Some((a, b)) = tech.active_interval() {
        lo = lo.max(a);
        hi = hi.min(b);
        if !(hi > lo) {
            return Shape::Invalid;
        }
    }
    let xs: Vec<T> = grid(lo, hi, points).collect();
    let rs: Vec<T> = xs.iter().map(|&x| slope_ratio(tech, cf, x)).collect();
    if rs.iter().any(|r| r.is_nan()) {
        return Shape::Invalid;
    }
    let scale = rs
        .iter()
        .filter(|r| r.is_finite())
        .fold(T::zero(), |m, r| m.max(r.abs()));
    let tol = T::lit(1e-12).max(T::resolution()) * scale;
    let mut rising = false;
    let mut falling = false;
    for w in rs.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= tol {
            continue;
        }
        if d > T::zero() {
            if falling {
                return Shape::Invalid;
            }
            rising = true;
        } else {
            falling = true;
        }
    }
    match (rising, falling) {
        (false, true) => Shape::DecreasingR,
        (true, true) => {
            let (imax, _) = rs.iter().enumerate().fold(
                (0, T::neg_infinity()),
                |best, (i, &r)| if r > best.1 { (i, r) } else { best },
            );
            let a = xs[imax.saturating_sub(1)];
            let b = xs[(imax + 1).min(xs.len() - 1)];
            let peak = golden_max(|x| slope_ratio(tech, cf, x), a, b, T::resolution());
            Shape::SinglePeakedR { peak }
        }
        _ => Shape::Invalid,
    }
}

/// Classifies `h` on `[lo, hi]` by grid differences, skipping points where
/// `h` is undefined or infinite.
pub fn classify_h<T: Scalar>(
    tech: &SuccessTechnology<T>,
    cf: &CostFunction<T>,
    interval: (T, T),
    points: usize,
) -> HClass {
    let (lo, hi) = interval;
    let hs: Vec<T> = grid(lo, hi.max(lo), points)
        .filter_map(|x| hazard_ratio(tech, cf, x).ok())
        .filter(|h| h.is_finite())
        .collect();
    let tol = T::lit(H_TOL).max(T::resolution());
    let mut up = false;
    let mut down = false;
    for w in hs.windows(2) {
        let d = w[1] - w[0];
        let band = tol * T::one().max(w[0].abs());
        if d > band {
            up = true;
        } else if d < -band {
            down = true;
        }
    }
    match (up, down) {
        (false, false) => HClass::Constant,
        (true, false) => HClass::Increasing,
        (false, true) => HClass::Decreasing,
        (true, true) => HClass::NonMonotone,
    }
}

/// Interval on which the equilibrium effort can lie: from the peak of `r`
/// (or zero) up to `c⁻¹(v_max)`.
pub fn relevant_interval<T: Scalar>(shape: &Shape<T>, cf: &CostFunction<T>, max_value: T) -> (T, T) {
    let lo = match *shape {
        Shape::SinglePeakedR { peak } => peak,
        _ => T::zero(),
    };
    let hi = cf.inverse(max_value).unwrap_or(lo);
    (lo, hi.max(lo))
}
