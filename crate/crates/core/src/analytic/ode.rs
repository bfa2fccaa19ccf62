use super::first_round::{bid_unchecked, first_round_bid_derivative};
use super::AnalyticError;

/// A bid function of the value, optionally with an exact derivative.
pub trait BidFunction {
    fn value(&self, v: f64) -> f64;

    fn derivative(&self, _v: f64) -> Option<f64> {
        None
    }
}

impl<F: Fn(f64) -> f64> BidFunction for F {
    fn value(&self, v: f64) -> f64 {
        self(v)
    }
}

/// The closed-form first-round equilibrium with its exact derivative.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedFormBid;

impl BidFunction for ClosedFormBid {
    fn value(&self, v: f64) -> f64 {
        bid_unchecked(v)
    }

    fn derivative(&self, v: f64) -> Option<f64> {
        first_round_bid_derivative(v).ok()
    }
}

pub const FD_STEP: f64 = 1e-6;

/// First-order-condition residual `v - b(v) - v b'(v) - v^2/(1+v)`. Without an exact
/// derivative, `b'` is a central difference with step 1e-6.
pub fn foc_residual<B: BidFunction + ?Sized>(bidfn: &B, v: f64) -> f64 {
    let slope = bidfn
        .derivative(v)
        .unwrap_or_else(|| (bidfn.value(v + FD_STEP) - bidfn.value(v - FD_STEP)) / (2.0 * FD_STEP));
    v - bidfn.value(v) - v * slope - v * v / (1.0 + v)
}

fn rhs(v: f64, b: f64) -> f64 {
    (v - b - v * v / (1.0 + v)) / v
}

fn rk4_step(v: f64, b: f64, h: f64) -> f64 {
    let k1 = rhs(v, b);
    let k2 = rhs(v + 0.5 * h, b + 0.5 * h * k1);
    let k3 = rhs(v + 0.5 * h, b + 0.5 * h * k2);
    let k4 = rhs(v + h, b + h * k3);
    b + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Bid function tabulated on a value grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedBid {
    pub grid: Vec<f64>,
    pub bids: Vec<f64>,
}

impl TabulatedBid {
    /// Largest absolute deviation from `reference` over grid points in `[lo, hi]`.
    pub fn sup_distance(&self, reference: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        self.grid
            .iter()
            .zip(&self.bids)
            .filter(|(&v, _)| v >= lo && v <= hi)
            .map(|(&v, &b)| (b - reference(v)).abs())
            .fold(0.0, f64::max)
    }

    pub fn last(&self) -> f64 {
        *self.bids.last().expect("non-empty grid")
    }
}

const LOCAL_TOL: f64 = 1e-9;
const MAX_SPLITS: u32 = 12;

/// Integrates the first-order ODE `b' = (v - b - v^2/(1+v)) / v` over an increasing grid
/// by classical RK4, starting from the series `v0/2 - v0^2/3 + v0^3/4` at the first grid
/// point. Each grid step is checked by step doubling; a step whose local error estimate
/// exceeds 1e-9 is rejected and retried on halves.
pub fn solve_foc_ode(v_grid: &[f64]) -> Result<TabulatedBid, AnalyticError> {
    let v0 = *v_grid.first().ok_or(AnalyticError::Grid("empty grid"))?;
    if v0 < 1e-3 {
        return Err(AnalyticError::Grid("grid must start at or above 1e-3"));
    }
    if v_grid.windows(2).any(|w| !(w[1] > w[0]) || w[1] - w[0] > 1e-3 + 1e-15) {
        return Err(AnalyticError::Grid("grid must increase with steps of at most 1e-3"));
    }
    let mut b = v0 / 2.0 - v0 * v0 / 3.0 + v0 * v0 * v0 / 4.0;
    let mut bids = Vec::with_capacity(v_grid.len());
    bids.push(b);
    for w in v_grid.windows(2) {
        b = controlled_step(w[0], b, w[1] - w[0], 0)?;
        bids.push(b);
    }
    Ok(TabulatedBid { grid: v_grid.to_vec(), bids })
}

fn controlled_step(v: f64, b: f64, h: f64, depth: u32) -> Result<f64, AnalyticError> {
    let full = rk4_step(v, b, h);
    let mid = rk4_step(v, b, 0.5 * h);
    let halves = rk4_step(v + 0.5 * h, mid, 0.5 * h);
    let err = (halves - full).abs() / 15.0;
    if err <= LOCAL_TOL {
        // Richardson-corrected result
        return Ok(halves + (halves - full) / 15.0);
    }
    if depth >= MAX_SPLITS {
        return Err(AnalyticError::StepRejected { v, error: err });
    }
    let mid = controlled_step(v, b, 0.5 * h, depth + 1)?;
    controlled_step(v + 0.5 * h, mid, 0.5 * h, depth + 1)
}

/// Plain fixed-step RK4 from `(v0, b0)` to `v1`, without error control. Used to measure
/// the order of convergence.
pub fn solve_foc_ode_fixed(v0: f64, b0: f64, v1: f64, steps: usize) -> f64 {
    let h = (v1 - v0) / steps as f64;
    let mut b = b0;
    for s in 0..steps {
        b = rk4_step(v0 + s as f64 * h, b, h);
    }
    b
}
