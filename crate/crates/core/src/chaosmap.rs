//! The Bernoulli shift `y → 2y mod 1` acting on densities over `[0, 1)`.
//!
//! A density is stored as cell averages on a uniform grid together with its
//! coefficients on the Bernoulli polynomials `B_m`. The transfer operator
//! `ρ'(y) = ½[ρ(y/2) + ρ((y+1)/2)]` multiplies the coefficient of `B_m` by `2^{-m}`,
//! so the stored coefficients advance exactly while the grid is updated from a
//! reconstruction of half-cell averages.

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};

use crate::ensemble::pairwise_sum;
use crate::table::Table;
use crate::{Error, Result};

pub const DEFAULT_CELLS: usize = 1024;
pub const DEFAULT_MODES: usize = 8;
pub const MAX_MODES: usize = 12;

const BERNOULLI_NUMBERS: [f64; MAX_MODES + 2] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
    0.0,
];

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `B_m(y)` for `m ≤ 13`.
pub fn bernoulli_polynomial(m: usize, y: f64) -> f64 {
    assert!(m < BERNOULLI_NUMBERS.len(), "degree {m} out of range");
    // Horner in y over the coefficients C(m,k) B_k y^{m−k}
    (0..=m).fold(0.0, |acc, j| {
        acc * y + binomial(m, j) * BERNOULLI_NUMBERS[j]
    })
}

/// Average of `B_m` over `[a, b]`, from `B_m = B'_{m+1}/(m+1)`.
fn bernoulli_average(m: usize, a: f64, b: f64) -> f64 {
    (bernoulli_polynomial(m + 1, b) - bernoulli_polynomial(m + 1, a)) / ((m + 1) as f64 * (b - a))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitDensity {
    values: Vec<f64>,
    coefficients: Vec<f64>,
}

impl UnitDensity {
    /// Takes cell averages. The coefficients come from a least-squares fit on at most
    /// `modes` polynomials, fewer when the grid is too coarse for them.
    pub fn new(values: Vec<f64>, modes: usize) -> Result<Self> {
        let n = values.len();
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "cell count must be even and >= 8, got {n}"
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "density must be finite and non-negative".into(),
            ));
        }
        let mass = pairwise_sum(&values) / n as f64;
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "density integrates to {mass}, not 1"
            )));
        }
        let modes = modes.min(n / 2 - 1).min(MAX_MODES);
        let coefficients = bernoulli_decompose_values(&values, modes)?.coefficients;
        Ok(Self {
            values,
            coefficients,
        })
    }

    /// Cell averages of `f` by 8-point Gauss-Legendre, rescaled to unit mass.
    pub fn from_fn(cells: usize, modes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let gl = GaussLegendre::new(8).expect("order is at least 2");
        let h = 1.0 / cells as f64;
        let mut values: Vec<f64> = (0..cells)
            .map(|j| gl.integrate(j as f64 * h, (j + 1) as f64 * h, &f) / h)
            .collect();
        let mass = pairwise_sum(&values) / cells as f64;
        if !(mass > 0.0) {
            return Err(Error::InvalidArgument("density carries no mass".into()));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Self::new(values, modes)
    }

    /// `1 + Σ_{m≥1} c_m B_m` with exact cell averages. `extra[0]` multiplies `B_1`.
    pub fn from_modes(cells: usize, extra: &[f64]) -> Result<Self> {
        if extra.len() > MAX_MODES {
            return Err(Error::InvalidArgument(format!("at most {MAX_MODES} modes")));
        }
        let h = 1.0 / cells as f64;
        let values = (0..cells)
            .map(|j| {
                let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
                1.0 + extra
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * bernoulli_average(k + 1, a, b))
                    .sum::<f64>()
            })
            .collect();
        Self::new(values, extra.len().max(1))
    }

    pub fn uniform(cells: usize) -> Result<Self> {
        Self::new(vec![1.0; cells], DEFAULT_MODES)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    /// `C_0 ..= C_{m_max}`, advanced exactly by [`pf_step`].
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn centers(&self) -> Vec<f64> {
        let h = 1.0 / self.cells() as f64;
        (0..self.cells()).map(|j| (j as f64 + 0.5) * h).collect()
    }

    /// `‖ρ − 1‖₂` over the cells.
    pub fn distance_from_uniform(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| (v - 1.0) * (v - 1.0)).collect();
        (pairwise_sum(&sq) / self.cells() as f64).sqrt()
    }
}

/// Lagrange weights at `t` for nodes `0..=5`.
fn lagrange6(t: f64) -> [f64; 6] {
    let mut w = [0.0; 6];
    for (m, wm) in w.iter_mut().enumerate() {
        let mut p = 1.0;
        for k in 0..6 {
            if k != m {
                p *= (t - k as f64) / (m as f64 - k as f64);
            }
        }
        *wm = p;
    }
    w
}

/// Undivided fourth difference magnitude of a 5-cell window.
fn roughness(v: &[f64]) -> f64 {
    (v[0] - 4.0 * v[1] + 6.0 * v[2] - 4.0 * v[3] + v[4]).abs()
}

/// Average over the left half of every cell, from a quartic fitted to five
/// neighbouring averages. Among the windows containing the cell the smoothest is
/// taken, so jumps in `ρ` do not leak into cells on either side.
fn left_half_averages(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let weights: Vec<[f64; 6]> = (0..5).map(|o| lagrange6(o as f64 + 0.5)).collect();
    (0..n)
        .map(|k| {
            let first = k.saturating_sub(4);
            let last = k.min(n - 5);
            let centered = k.saturating_sub(2).min(n - 5);
            let mut best = centered;
            let mut best_r = roughness(&values[centered..centered + 5]);
            for s in first..=last {
                let r = roughness(&values[s..s + 5]);
                if r < best_r * (1.0 - 1e-12) {
                    best = s;
                    best_r = r;
                }
            }
            let o = k - best;
            // primitive in cell units at the window's six boundaries
            let mut prim = [0.0; 6];
            for i in 0..5 {
                prim[i + 1] = prim[i] + values[best + i];
            }
            let mid: f64 = weights[o].iter().zip(&prim).map(|(w, p)| w * p).sum();
            // both halves stay in [0, 2·average], which keeps the step non-negative
            (2.0 * (mid - prim[o])).clamp(0.0, 2.0 * values[k].max(0.0))
        })
        .collect()
}

/// One application of the transfer operator of the doubling map.
pub fn pf_step(rho: &UnitDensity) -> UnitDensity {
    let n = rho.cells();
    let left = left_half_averages(&rho.values);
    let half = |j: usize| -> f64 {
        // fine cell j of width 1/(2n) is half of coarse cell j / 2
        let k = j / 2;
        if j % 2 == 0 {
            left[k]
        } else {
            2.0 * rho.values[k] - left[k]
        }
    };
    let values: Vec<f64> = (0..n).map(|j| 0.5 * (half(j) + half(j + n))).collect();
    let coefficients = rho
        .coefficients
        .iter()
        .enumerate()
        .map(|(m, c)| c * 0.5f64.powi(m as i32))
        .collect();
    UnitDensity {
        values,
        coefficients,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliFit {
    pub coefficients: Vec<f64>,
    /// RMS difference between the cell averages and the fitted expansion.
    pub residual: f64,
    pub condition: f64,
}

/// Least-squares coefficients on `B_0 ..= B_{m_max}` using exact cell averages of the basis.
pub fn bernoulli_decompose(rho: &UnitDensity, m_max: usize) -> Result<BernoulliFit> {
    bernoulli_decompose_values(&rho.values, m_max)
}

fn bernoulli_decompose_values(values: &[f64], m_max: usize) -> Result<BernoulliFit> {
    if m_max > MAX_MODES {
        return Err(Error::IllConditioned(format!(
            "m_max {m_max} exceeds {MAX_MODES}"
        )));
    }
    let n = values.len();
    let cols = m_max + 1;
    if n < 2 * cols {
        return Err(Error::IllConditioned(format!(
            "{n} cells cannot resolve {cols} polynomial modes"
        )));
    }
    let h = 1.0 / n as f64;
    let a = DMatrix::from_fn(n, cols, |j, m| {
        bernoulli_average(m, j as f64 * h, (j + 1) as f64 * h)
    });
    let b = DVector::from_column_slice(values);
    let svd = a.clone().svd(true, true);
    let s = &svd.singular_values;
    let condition = s.max() / s.min();
    if !(condition < 1e10) {
        return Err(Error::IllConditioned(format!(
            "condition number {condition:.3e}"
        )));
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;
    let r = &a * &x - &b;
    Ok(BernoulliFit {
        coefficients: x.iter().copied().collect(),
        residual: (r.norm_squared() / n as f64).sqrt(),
        condition,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeRate {
    pub mode: usize,
    /// Fitted decay per iteration, `−d ln|C_m| / dn`.
    pub rate: f64,
    pub expected: f64,
    pub points: usize,
}

impl ModeRate {
    pub fn relative_error(&self) -> f64 {
        (self.rate / self.expected - 1.0).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub rates: Vec<ModeRate>,
    /// Modes without enough coefficients above the floor, with the reason.
    pub skipped: Vec<(usize, String)>,
    /// Largest `|C_m|`, `m ≥ 1`, seen after the last iterate.
    pub final_floor: f64,
    pub history: Vec<Vec<f64>>,
}

impl DecayFit {
    pub fn mode(&self, m: usize) -> Option<&ModeRate> {
        self.rates.iter().find(|r| r.mode == m)
    }
}

/// Coefficients below this are treated as lost to round-off.
pub const COEFFICIENT_FLOOR: f64 = 1e-11;

/// Iterates `pf_step`, decomposes every iterate and fits `ln|C_m(n)|` against `n`.
pub fn decay_rate_fit(rho0: &UnitDensity, n_steps: usize, m_max: usize) -> Result<DecayFit> {
    if n_steps < 4 {
        return Err(Error::InvalidArgument(
            "need at least four iterations".into(),
        ));
    }
    let mut rho = rho0.clone();
    let mut history = vec![bernoulli_decompose(&rho, m_max)?.coefficients];
    for _ in 0..n_steps {
        rho = pf_step(&rho);
        history.push(bernoulli_decompose(&rho, m_max)?.coefficients);
    }
    let mut rates = Vec::new();
    let mut skipped = Vec::new();
    for m in 1..=m_max {
        let pts: Vec<(f64, f64)> = history
            .iter()
            .enumerate()
            .take_while(|(_, c)| c[m].abs() > COEFFICIENT_FLOOR)
            .map(|(n, c)| (n as f64, c[m].abs().ln()))
            .collect();
        if pts.len() < 3 {
            skipped.push((
                m,
                format!(
                    "|C_{m}| reaches the {COEFFICIENT_FLOOR:e} floor after {} iterates",
                    pts.len()
                ),
            ));
            continue;
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        rates.push(ModeRate {
            mode: m,
            rate: -sxy / sxx,
            expected: m as f64 * std::f64::consts::LN_2,
            points: pts.len(),
        });
    }
    let final_floor = history
        .last()
        .map(|c| c[1..].iter().fold(0.0f64, |a, v| a.max(v.abs())))
        .unwrap_or(0.0);
    Ok(DecayFit {
        rates,
        skipped,
        final_floor,
        history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionCheck {
    pub tau: f64,
    /// Largest pointwise `|(ρ' − ρ) + (1 − e^{−ln 2})(ρ − 1)|`.
    pub residual: f64,
}

/// `τ = τ₀ / (1 − e^{−ln 2})`.
pub fn collision_limit(tau0: f64) -> Result<f64> {
    if !(tau0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cycle time must be positive, got {tau0}"
        )));
    }
    Ok(tau0 / (1.0 - (-std::f64::consts::LN_2).exp()))
}

/// Checks the relaxation-time form of one step on a density dominated by `B_1`.
pub fn collision_check(tau0: f64, rho: &UnitDensity) -> Result<CollisionCheck> {
    let tau = collision_limit(tau0)?;
    let c = bernoulli_decompose(rho, DEFAULT_MODES)?.coefficients;
    let lead = c[1].abs();
    if let Some((m, v)) = c
        .iter()
        .enumerate()
        .skip(2)
        .find(|(_, v)| v.abs() > 0.01 * lead)
    {
        return Err(Error::NotAsymptotic(format!(
            "|C_{m}| = {:.3e} exceeds 1% of |C_1| = {lead:.3e}",
            v.abs()
        )));
    }
    let next = pf_step(rho);
    let k = 1.0 - (-std::f64::consts::LN_2).exp();
    let residual = next
        .values
        .iter()
        .zip(&rho.values)
        .map(|(b, a)| ((b - a) + k * (a - 1.0)).abs())
        .fold(0.0, f64::max);
    Ok(CollisionCheck { tau, residual })
}

/// Long-format dump `(n, y, rho)` of `steps` iterates.
pub fn iterate_table(rho0: &UnitDensity, steps: usize) -> Table {
    let mut t = Table::new(["n", "y", "rho"]);
    let mut rho = rho0.clone();
    for n in 0..=steps {
        for (y, v) in rho.centers().into_iter().zip(&rho.values) {
            let _ = t.push(vec![n as f64, y, *v]);
        }
        rho = pf_step(&rho);
    }
    t
}

pub fn coefficient_table(fit: &DecayFit) -> Table {
    let modes = fit.history.first().map_or(0, Vec::len);
    let mut t =
        Table::new(std::iter::once("n".to_string()).chain((0..modes).map(|m| format!("C{m}"))));
    for (n, c) in fit.history.iter().enumerate() {
        let _ = t.push(std::iter::once(n as f64).chain(c.iter().copied()).collect());
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_bernoulli_polynomials() {
        for &y in &[0.0, 0.3, 0.77, 1.0] {
            assert!((bernoulli_polynomial(1, y) - (y - 0.5)).abs() < 1e-15);
            assert!((bernoulli_polynomial(2, y) - (y * y - y + 1.0 / 6.0)).abs() < 1e-15);
            assert!(
                (bernoulli_polynomial(3, y) - (y * y * y - 1.5 * y * y + 0.5 * y)).abs() < 1e-15
            );
        }
        // B_m(1 − y) = (−1)^m B_m(y)
        for m in 0..=13 {
            let s = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert!(
                (bernoulli_polynomial(m, 0.8) - s * bernoulli_polynomial(m, 0.2)).abs() < 1e-12,
                "{m}"
            );
        }
    }

    #[test]
    fn basis_means_vanish() {
        for m in 1..=MAX_MODES {
            assert!(bernoulli_average(m, 0.0, 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn half_cells_exact_for_quartics() {
        let n = 32;
        let h = 1.0 / n as f64;
        let prim = |y: f64| y.powi(5) / 5.0 - y.powi(3) / 3.0 + 0.5 * y;
        let avg = |a: f64, b: f64| (prim(b) - prim(a)) / (b - a);
        let values: Vec<f64> = (0..n)
            .map(|j| avg(j as f64 * h, (j + 1) as f64 * h))
            .collect();
        let left = left_half_averages(&values);
        for (j, l) in left.iter().enumerate() {
            let a = j as f64 * h;
            assert!((l - avg(a, a + 0.5 * h)).abs() < 1e-11, "cell {j}");
        }
    }
}
