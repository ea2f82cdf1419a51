//! Boltzmann counting over coarse cells: multinomial complexions, their optimum, the
//! Gaussian limit near it, and the Chebyshev and weak-law bounds on deviations from it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// Largest total for which exact integer multinomial coefficients are provided.
pub const EXACT_LIMIT: u64 = 20;

/// Born weights `Γ_α` of the coarse cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPartition {
    gammas: Vec<f64>,
}

impl CellPartition {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() || gammas.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(Error::InvalidArgument(
                "cell weights must be positive".into(),
            ));
        }
        let sum: f64 = gammas.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "cell weights sum to {sum}, not 1"
            )));
        }
        Ok(Self { gammas })
    }

    /// Rescales positive weights to sum to 1.
    pub fn normalized(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    pub fn uniform(cells: usize) -> Result<Self> {
        Self::normalized(&vec![1.0; cells])
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn cell_count(&self) -> usize {
        self.gammas.len()
    }
}

/// Occupation numbers `m_α` summing to `M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Complexion {
    occupations: Vec<u64>,
}

impl Complexion {
    pub fn new(occupations: Vec<u64>) -> Self {
        Self { occupations }
    }

    pub fn occupations(&self) -> &[u64] {
        &self.occupations
    }

    pub fn total(&self) -> u64 {
        self.occupations.iter().sum()
    }

    /// Every complexion of `total` points over `cells` cells.
    pub fn enumerate(cells: usize, total: u64) -> Vec<Complexion> {
        fn rec(cells: usize, left: u64, prefix: &mut Vec<u64>, out: &mut Vec<Complexion>) {
            if cells == 1 {
                prefix.push(left);
                out.push(Complexion::new(prefix.clone()));
                prefix.pop();
                return;
            }
            for m in 0..=left {
                prefix.push(m);
                rec(cells - 1, left - m, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if cells > 0 {
            rec(cells, total, &mut Vec::with_capacity(cells), &mut out);
        }
        out
    }
}

fn check_shape(c: &Complexion, p: &CellPartition) -> Result<()> {
    if c.occupations.len() != p.cell_count() {
        return Err(Error::InvalidArgument(format!(
            "complexion has {} cells, partition {}",
            c.occupations.len(),
            p.cell_count()
        )));
    }
    Ok(())
}

/// `ln[M!/Π m_α! · Π Γ_α^{m_α}]`.
pub fn complexion_log_weight(c: &Complexion, p: &CellPartition) -> Result<f64> {
    check_shape(c, p)?;
    let m = c.total() as f64;
    let mut w = ln_gamma(m + 1.0);
    for (&k, &g) in c.occupations.iter().zip(&p.gammas) {
        w += k as f64 * g.ln() - ln_gamma(k as f64 + 1.0);
    }
    Ok(w)
}

/// Exact multinomial coefficient `M!/Π m_α!` for `M ≤ 20`.
pub fn multinomial_coefficient(c: &Complexion) -> Result<u128> {
    let total = c.total();
    if total > EXACT_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "exact coefficients need M <= {EXACT_LIMIT}"
        )));
    }
    // product of binomials keeps every intermediate value integral
    let mut acc: u128 = 1;
    let mut seen: u64 = 0;
    for &k in &c.occupations {
        for j in 1..=k {
            acc = acc * (seen + j) as u128 / j as u128;
        }
        seen += k;
    }
    Ok(acc)
}

/// The continuous optimum `MΓ_α` and the integer complexion of largest weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub continuous: Vec<f64>,
    pub integer: Complexion,
}

/// Maximizes the complexion weight. The log weight is a sum of concave functions of the
/// occupations, so a vector admitting no improving single-point transfer is optimal.
pub fn boltzmann_optimum(p: &CellPartition, total: u64) -> Result<Optimum> {
    if total == 0 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    let g = &p.gammas;
    let continuous: Vec<f64> = g.iter().map(|x| x * total as f64).collect();
    let mut m: Vec<u64> = continuous.iter().map(|x| x.floor() as u64).collect();
    // adding a point to α multiplies the weight by Γ_α/(m_α+1)
    let gain = |m: &[u64], a: usize| g[a].ln() - ((m[a] + 1) as f64).ln();
    while m.iter().sum::<u64>() < total {
        let best = (0..g.len())
            .max_by(|&a, &b| gain(&m, a).total_cmp(&gain(&m, b)))
            .unwrap();
        m[best] += 1;
    }
    loop {
        let mut improved = false;
        for from in 0..g.len() {
            if m[from] == 0 {
                continue;
            }
            let loss = g[from].ln() - (m[from] as f64).ln();
            for to in 0..g.len() {
                if to != from && gain(&m, to) - loss > 1e-12 {
                    m[from] -= 1;
                    m[to] += 1;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(Optimum {
        continuous,
        integer: Complexion::new(m),
    })
}

/// Laplace–Gauss approximation of the weight of `m̃ + δ`:
/// `√(2πM)/Π√(2πm̃_α) · exp(−½ Σ δ_α²/m̃_α)`.
pub fn gaussian_ratio(deltas: &[f64], p: &CellPartition, total: u64) -> Result<f64> {
    if deltas.len() != p.cell_count() {
        return Err(Error::InvalidArgument(
            "one deviation per cell is required".into(),
        ));
    }
    let sum: f64 = deltas.iter().sum();
    if sum.abs() > 1e-9 * (1.0 + total as f64) {
        return Err(Error::ConstraintViolation { sum });
    }
    let m = total as f64;
    let tilde: Vec<f64> = p.gammas.iter().map(|g| g * m).collect();
    let smallest = tilde.iter().cloned().fold(f64::INFINITY, f64::min);
    if smallest < 10.0 {
        return Err(Error::GaussianRegime { smallest });
    }
    let tau = std::f64::consts::TAU;
    let mut log = 0.5 * (tau * m).ln();
    for (d, t) in deltas.iter().zip(&tilde) {
        log -= 0.5 * (tau * t).ln() + 0.5 * d * d / t;
    }
    Ok(log.exp())
}

/// Width `√m̃_α / m̃_α` of the Gaussian near the optimum, relative to `m̃_α`.
pub fn relative_width(p: &CellPartition, total: u64) -> Vec<f64> {
    p.gammas
        .iter()
        .map(|g| 1.0 / (g * total as f64).sqrt())
        .collect()
}

/// Draws a complexion by sequential binomial conditionals.
pub fn sample_complexion(p: &CellPartition, total: u64, rng: &mut impl rand::Rng) -> Complexion {
    let g = &p.gammas;
    let mut left = total;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(g.len());
    for &ga in &g[..g.len() - 1] {
        let k = if left == 0 {
            0
        } else {
            let q = (ga / mass).clamp(0.0, 1.0);
            Binomial::new(left, q)
                .expect("probability in [0, 1]")
                .sample(rng)
        };
        out.push(k);
        left -= k;
        mass -= ga;
    }
    out.push(left);
    Complexion::new(out)
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn deviates(c: &Complexion, p: &CellPartition, total: u64, eps: f64, a: usize) -> bool {
    let g = p.gammas[a];
    let frac = c.occupations[a] as f64 / total as f64;
    (frac - g).abs() >= eps * (g * (1.0 - g)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyshevReport {
    pub total: u64,
    pub epsilon: f64,
    pub trials: usize,
    /// Fraction of trials deviating by at least `ε√(Γ(1−Γ))`.
    pub fraction: f64,
    /// `√(p̂(1−p̂)/trials)`.
    pub standard_error: f64,
    pub bound: f64,
}

impl ChebyshevReport {
    /// `fraction ≤ bound + 3·SE`.
    pub fn satisfied(&self) -> bool {
        self.fraction <= self.bound + 3.0 * self.standard_error
    }
}

fn experiment(
    p: &CellPartition,
    total: u64,
    eps: f64,
    cells: &[usize],
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(eps > 0.0) || trials < 100 || cells.iter().any(|&a| a >= p.cell_count()) {
        return Err(Error::InvalidArgument(
            "need ε > 0, at least 100 trials and valid cell indices".into(),
        ));
    }
    let hits: usize = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let c = sample_complexion(p, total, &mut trial_rng(seed, t));
            cells.iter().any(|&a| deviates(&c, p, total, eps, a)) as usize
        })
        .sum();
    let frac = hits as f64 / trials as f64;
    Ok((frac, (frac * (1.0 - frac) / trials as f64).sqrt()))
}

/// Monte Carlo test of `P(|m_α/M − Γ_α| ≥ ε√(Γ_α(1−Γ_α))) ≤ 1/(ε²M)` for cell `alpha`.
pub fn chebyshev_experiment(
    p: &CellPartition,
    total: u64,
    eps: f64,
    alpha: usize,
    trials: usize,
    seed: u64,
) -> Result<ChebyshevReport> {
    let (fraction, standard_error) = experiment(p, total, eps, &[alpha], trials, seed)?;
    Ok(ChebyshevReport {
        total,
        epsilon: eps,
        trials,
        fraction,
        standard_error,
        bound: chebyshev_bound(eps, total),
    })
}

pub fn chebyshev_bound(eps: f64, total: u64) -> f64 {
    1.0 / (eps * eps * total as f64)
}

/// Exact probability of the Chebyshev event for cell `alpha`, summed over its binomial
/// marginal.
pub fn exact_tail_fraction(p: &CellPartition, total: u64, eps: f64, alpha: usize) -> f64 {
    let g = p.gammas[alpha];
    let m = total as f64;
    let ln_norm = ln_gamma(m + 1.0);
    (0..=total)
        .filter(|&k| ((k as f64 / m) - g).abs() >= eps * (g * (1.0 - g)).sqrt())
        .map(|k| {
            let k = k as f64;
            (ln_norm - ln_gamma(k + 1.0) - ln_gamma(m - k + 1.0)
                + k * g.ln()
                + (m - k) * (1.0 - g).ln())
            .exp()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakLawBound {
    /// Union bound `ΔM/(ε²M)` over a subset of `ΔM` cells.
    pub union: f64,
    /// Continuum form `1/(ε²M)`.
    pub continuum: f64,
}

pub fn weak_law_bound(subset_cells: usize, eps: f64, total: u64) -> Result<WeakLawBound> {
    if subset_cells == 0 || !(eps > 0.0) || total == 0 {
        return Err(Error::InvalidArgument(
            "need ΔM ≥ 1, ε > 0 and M ≥ 1".into(),
        ));
    }
    let continuum = chebyshev_bound(eps, total);
    Ok(WeakLawBound {
        union: subset_cells as f64 * continuum,
        continuum,
    })
}

/// Bound `f_max Γ_M/(ε²M)` on the probability of the deviating region for a smooth
/// density bounded by `f_max`, with `Γ_M = 1`.
pub fn weighted_bound(f_max: f64, eps: f64, total: u64) -> f64 {
    f_max * chebyshev_bound(eps, total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakLawReport {
    pub cells: Vec<usize>,
    pub fraction: f64,
    pub standard_error: f64,
    pub bound: WeakLawBound,
}

/// Monte Carlo frequency of any cell of `cells` deviating, against the union bound.
pub fn weak_law_experiment(
    p: &CellPartition,
    total: u64,
    eps: f64,
    cells: &[usize],
    trials: usize,
    seed: u64,
) -> Result<WeakLawReport> {
    let bound = weak_law_bound(cells.len(), eps, total)?;
    let (fraction, standard_error) = experiment(p, total, eps, cells, trials, seed)?;
    Ok(WeakLawReport {
        cells: cells.to_vec(),
        fraction,
        standard_error,
        bound,
    })
}

/// Sample standard deviation of `m_α/M` over seeded trials.
pub fn empirical_spread(
    p: &CellPartition,
    total: u64,
    alpha: usize,
    trials: usize,
    seed: u64,
) -> f64 {
    let fracs: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            sample_complexion(p, total, &mut trial_rng(seed, t)).occupations[alpha] as f64
                / total as f64
        })
        .collect();
    let n = fracs.len() as f64;
    let mean = fracs.iter().sum::<f64>() / n;
    (fracs.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_coefficients() {
        assert_eq!(
            multinomial_coefficient(&Complexion::new(vec![2, 2])).unwrap(),
            6
        );
        assert_eq!(
            multinomial_coefficient(&Complexion::new(vec![3, 1, 2])).unwrap(),
            60
        );
        // 20!/(10! 10!)
        assert_eq!(
            multinomial_coefficient(&Complexion::new(vec![10, 10])).unwrap(),
            184_756
        );
    }

    #[test]
    fn sampled_complexions_have_the_right_total() {
        let p = CellPartition::normalized(&[1.0, 2.0, 3.0, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_complexion(&p, 37, &mut rng).total(), 37);
        }
    }
}
