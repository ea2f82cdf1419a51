//! Functional-equation routes to the |Ψ|² rule, as numerical residual checks.
//!
//! Additivity of `g` over orthogonal weights forces `g(x) = Ax`; requiring the density
//! `|Ψ|^A` to be carried by the guidance flow forces `A = 2` whenever the flow is
//! compressible.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::pilot::{GuidingField, Trajectory};
use crate::{Error, Result};

/// Candidate probability law `g` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum CandidateG {
    /// `x^p`.
    Power(f64),
    /// `A x + B`.
    Linear { a: f64, b: f64 },
    /// Values on a uniform grid of `[0, 1]`, linearly interpolated.
    Tabulated(Vec<f64>),
}

impl CandidateG {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CandidateG::Power(p) => x.powf(*p),
            CandidateG::Linear { a, b } => a * x + b,
            CandidateG::Tabulated(v) if v.len() == 1 => v[0],
            CandidateG::Tabulated(v) => {
                let n = v.len() - 1;
                let s = x.clamp(0.0, 1.0) * n as f64;
                let j = (s.floor() as usize).min(n - 1);
                let u = s - j as f64;
                v[j] * (1.0 - u) + v[j + 1] * u
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            CandidateG::Power(p) => format!("x^{p}"),
            CandidateG::Linear { a, b } => format!("{a}x+{b}"),
            CandidateG::Tabulated(v) => format!("tabulated({} nodes)", v.len()),
        }
    }
}

/// `max_sets |g(Σ c_α) − Σ g(c_α)|`.
pub fn gleason_residual(g: &CandidateG, sets: &[Vec<f64>]) -> Result<f64> {
    if let CandidateG::Tabulated(v) = g {
        if v.is_empty() {
            return Err(Error::InvalidArgument(
                "tabulated g needs at least one value".into(),
            ));
        }
    }
    let mut worst: f64 = 0.0;
    for (k, set) in sets.iter().enumerate() {
        let total: f64 = set.iter().sum();
        if set.iter().any(|&c| c < 0.0) || total > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "coefficient set {k} must be nonnegative with sum <= 1"
            )));
        }
        let parts: f64 = set.iter().map(|&c| g.eval(c)).sum();
        worst = worst.max((g.eval(total) - parts).abs());
    }
    Ok(worst)
}

/// `count` weight sets from a symmetric Dirichlet distribution of the given
/// concentration, with sizes cycling through `sizes`. Each set is drawn as normalized
/// Gamma variates.
pub fn dirichlet_sets(
    count: usize,
    sizes: std::ops::RangeInclusive<usize>,
    concentration: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::InvalidArgument(format!("concentration: {e}")))?;
    let (lo, hi) = (*sizes.start(), *sizes.end());
    if lo == 0 || hi < lo {
        return Err(Error::InvalidArgument(
            "set sizes must be a nonempty range of positive sizes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|k| {
            let n = lo + k % (hi - lo + 1);
            let draws: Vec<f64> = (0..n).map(|_| gamma.sample(&mut rng)).collect();
            let s: f64 = draws.iter().sum();
            draws.iter().map(|d| d / s).collect()
        })
        .collect())
}

/// Normalized law `|c_α|²/Σ|c_β|²`.
pub fn born_probabilities(c: &[Complex64]) -> Vec<f64> {
    let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    c.iter().map(|z| z.norm_sqr() / total).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyFit {
    /// Least-squares slope of a line through the origin.
    pub slope: f64,
    /// `max |F(x+y) − F(x) − F(y)|` over grid pairs with `x + y ≤ 1`.
    pub max_deviation: f64,
}

/// `values[j] = F(j/n)` on `n + 1` points of `[0, 1]`.
pub fn cauchy_linearity_fit(values: &[f64]) -> Result<CauchyFit> {
    if values.len() < 3 {
        return Err(Error::InvalidArgument(
            "need at least three samples of F".into(),
        ));
    }
    let n = values.len() - 1;
    let xs: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
    let sxy: f64 = xs.iter().zip(values).map(|(x, f)| x * f).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let mut max_deviation: f64 = 0.0;
    for i in 0..=n {
        for j in 0..=(n - i) {
            max_deviation = max_deviation.max((values[i + j] - values[i] - values[j]).abs());
        }
    }
    Ok(CauchyFit {
        slope: sxy / sxx,
        max_deviation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DestouchesReport {
    pub exponent: f64,
    /// `max |f(t) − f(t₀)|` with `f = |Ψ|^{A−2}` along every trajectory.
    pub max_drift: f64,
    /// `max |e^{−∫∇·v} (|Ψ₀|/|Ψ(t)|)^A − 1|`: how far a density `|Ψ|^A` carried by the
    /// continuity equation departs from `|Ψ(t)|^A`. Nonzero for `A = 2` only through
    /// discretization error.
    pub transport_drift: f64,
    /// Largest `|∫∇·v dt|` seen along the bundle.
    pub max_divergence_integral: f64,
    pub warning: Option<String>,
}

/// Tests the exponent `A` of a candidate law `ρ ∝ |Ψ|^A` along integrated trajectories.
pub fn destouches_exponent_test<F: GuidingField + ?Sized>(
    field: &F,
    exponent: f64,
    bundle: &[Trajectory],
) -> DestouchesReport {
    let mut max_drift: f64 = 0.0;
    let mut transport_drift: f64 = 0.0;
    let mut max_div: f64 = 0.0;
    for traj in bundle {
        let s0 = traj.start();
        let a0 = field.psi_at(&s0.position, s0.time).norm();
        let f0 = a0.powf(exponent - 2.0);
        for s in &traj.samples {
            let a = field.psi_at(&s.position, s.time).norm();
            max_drift = max_drift.max((a.powf(exponent - 2.0) - f0).abs());
            let carried = (-s.divergence_integral).exp() * (a0 / a).powf(exponent);
            transport_drift = transport_drift.max((carried - 1.0).abs());
            max_div = max_div.max(s.divergence_integral.abs());
        }
    }
    let warning = (max_div < 1e-9 && (exponent - 2.0).abs() > 1e-12).then(|| {
        "flow is divergence-free along the bundle: every exponent is transported; \
         the test does not discriminate"
            .to_string()
    });
    DestouchesReport {
        exponent,
        max_drift,
        transport_drift,
        max_divergence_integral: max_div,
        warning,
    }
}
