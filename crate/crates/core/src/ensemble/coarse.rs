//! Coarse cells, their Born weights and the coarse-grained H-function.

use gauss_quad::GaussLegendre;

use super::Ensemble;
use crate::grid::{Point, MAX_AXES};
use crate::pilot::GuidingField;
use crate::{Error, Result};

/// Gauss–Legendre order used per axis when integrating |Ψ|² over a cell.
const QUADRATURE_ORDER: usize = 8;

/// Uniform tiling of a box by `cells^axes` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseGrid {
    pub axes: usize,
    pub lower: Point,
    pub upper: Point,
    pub cells: usize,
}

impl CoarseGrid {
    pub fn new(axes: usize, lower: Point, upper: Point, cells: usize) -> Result<Self> {
        if axes == 0 || axes > MAX_AXES || cells == 0 || (0..axes).any(|a| !(upper[a] > lower[a])) {
            return Err(Error::InvalidArgument(
                "coarse grid needs cells > 0 and upper > lower".into(),
            ));
        }
        Ok(Self {
            axes,
            lower,
            upper,
            cells,
        })
    }

    /// 32 cells for one axis, 16 per axis for two.
    pub fn with_default_cells(axes: usize, lower: Point, upper: Point) -> Result<Self> {
        Self::new(axes, lower, upper, if axes == 1 { 32 } else { 16 })
    }

    pub fn cell_count(&self) -> usize {
        self.cells.pow(self.axes as u32)
    }

    fn width(&self, a: usize) -> f64 {
        (self.upper[a] - self.lower[a]) / self.cells as f64
    }

    /// Cell containing `x`, or `None` outside the box. The upper faces belong to the last cell.
    pub fn cell_of(&self, x: &Point) -> Option<usize> {
        let mut flat = 0;
        for a in 0..self.axes {
            if x[a] < self.lower[a] || x[a] > self.upper[a] {
                return None;
            }
            let j = (((x[a] - self.lower[a]) / self.width(a)) as usize).min(self.cells - 1);
            flat = flat * self.cells + j;
        }
        Some(flat)
    }

    pub fn cell_bounds(&self, alpha: usize) -> (Point, Point) {
        let mut lo = [0.0; MAX_AXES];
        let mut hi = [0.0; MAX_AXES];
        let mut rest = alpha;
        for a in (0..self.axes).rev() {
            let j = rest % self.cells;
            rest /= self.cells;
            lo[a] = self.lower[a] + j as f64 * self.width(a);
            hi[a] = lo[a] + self.width(a);
        }
        (lo, hi)
    }

    /// `Γ_α = ∫_α |Ψ|²` for every cell, normalized to sum to 1, and the raw sum.
    pub fn gammas<F: GuidingField + ?Sized>(&self, field: &F, t: f64) -> (Vec<f64>, f64) {
        let gl = GaussLegendre::new(QUADRATURE_ORDER).expect("order is at least 2");
        let raw: Vec<f64> = (0..self.cell_count())
            .map(|alpha| {
                let (lo, hi) = self.cell_bounds(alpha);
                match self.axes {
                    1 => gl.integrate(lo[0], hi[0], |x| field.density(&[x, 0.0], t)),
                    _ => gl.integrate(lo[0], hi[0], |x| {
                        gl.integrate(lo[1], hi[1], |y| field.density(&[x, y], t))
                    }),
                }
            })
            .collect();
        let sum = super::pairwise_sum(&raw);
        (raw.iter().map(|g| g / sum).collect(), sum)
    }
}

/// Histogram of an ensemble against the Born weights of the cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseReport {
    pub time: f64,
    pub counts: Vec<usize>,
    pub gammas: Vec<f64>,
    /// Sum of the unnormalized Γ_α, ideally 1.
    pub raw_gamma_sum: f64,
    /// `f̄_α = (count_α/n)/Γ_α`.
    pub f_bar: Vec<f64>,
    /// Cells holding no points; they contribute nothing to `h_coarse`.
    pub empty_cells: Vec<usize>,
    /// Points outside the coarse box.
    pub outside: usize,
    /// `Σ_α Γ_α f̄_α ln f̄_α`.
    pub h_coarse: f64,
}

impl CoarseReport {
    pub fn max_deviation(&self) -> f64 {
        self.nonempty()
            .map(|a| (self.f_bar[a] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_α |f̄_α − 1| / (5/√count_α)`.
    pub fn noise_ratio(&self) -> f64 {
        self.nonempty()
            .map(|a| (self.f_bar[a] - 1.0).abs() * (self.counts[a] as f64).sqrt() / 5.0)
            .fold(0.0, f64::max)
    }

    fn nonempty(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.counts.len()).filter(|&a| self.counts[a] > 0)
    }
}

pub fn coarse_report<F: GuidingField + ?Sized>(
    e: &Ensemble,
    field: &F,
    cg: &CoarseGrid,
    t: f64,
) -> Result<CoarseReport> {
    if e.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    let (gammas, raw_gamma_sum) = cg.gammas(field, t);
    let mut counts = vec![0usize; cg.cell_count()];
    let mut outside = 0;
    for x in &e.positions {
        match cg.cell_of(x) {
            Some(a) => counts[a] += 1,
            None => outside += 1,
        }
    }
    let n = e.len() as f64;
    let f_bar: Vec<f64> = counts
        .iter()
        .zip(&gammas)
        .map(|(&c, g)| c as f64 / n / g)
        .collect();
    let mut empty_cells = Vec::new();
    let mut terms = Vec::with_capacity(counts.len());
    for a in 0..counts.len() {
        if counts[a] == 0 {
            empty_cells.push(a);
        } else {
            terms.push(gammas[a] * f_bar[a] * f_bar[a].ln());
        }
    }
    Ok(CoarseReport {
        time: t,
        counts,
        gammas,
        raw_gamma_sum,
        f_bar,
        empty_cells,
        outside,
        h_coarse: super::pairwise_sum(&terms),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HFunctions {
    pub h_fine: f64,
    pub h_coarse: f64,
    pub coarse: CoarseReport,
}

/// Fine-grained and coarse-grained H at the ensemble's current time.
pub fn h_functions<F: GuidingField + ?Sized>(
    e: &Ensemble,
    field: &F,
    cg: &CoarseGrid,
) -> Result<HFunctions> {
    let coarse = coarse_report(e, field, cg, e.time)?;
    Ok(HFunctions {
        h_fine: e.h_fine(),
        h_coarse: coarse.h_coarse,
        coarse,
    })
}
