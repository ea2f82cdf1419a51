use std::fmt;
use std::sync::Arc;

use crate::grid::Point;

/// A nonnegative density on a rectangular support with a known upper bound.
pub trait Density: Sync {
    fn eval(&self, x: &Point) -> f64;

    /// Any value at least as large as `eval` on the support.
    fn upper_bound(&self) -> f64;

    fn support(&self) -> (Point, Point);
}

type Eval = dyn Fn(&Point) -> f64 + Send + Sync;

/// A density given by a closure. Values outside the support are zero.
#[derive(Clone)]
pub struct DensityFn {
    f: Arc<Eval>,
    bound: f64,
    lower: Point,
    upper: Point,
}

impl fmt::Debug for DensityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityFn")
            .field("bound", &self.bound)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish()
    }
}

impl DensityFn {
    pub fn new(
        lower: Point,
        upper: Point,
        bound: f64,
        f: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(f),
            bound,
            lower,
            upper,
        }
    }

    /// Normalized uniform density on the box `[lower, upper]` over `axes` axes.
    pub fn uniform(axes: usize, lower: Point, upper: Point) -> Self {
        let volume: f64 = (0..axes).map(|a| upper[a] - lower[a]).product();
        let value = 1.0 / volume;
        Self::new(lower, upper, value, move |_| value)
    }

    fn inside(&self, x: &Point) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| lo == hi || (v >= lo && v <= hi))
    }
}

impl Density for DensityFn {
    fn eval(&self, x: &Point) -> f64 {
        if self.inside(x) {
            (self.f)(x)
        } else {
            0.0
        }
    }

    fn upper_bound(&self) -> f64 {
        self.bound
    }

    fn support(&self) -> (Point, Point) {
        (self.lower, self.upper)
    }
}
