//! Type distributions: per-player marginals (piecewise-polynomial densities or discrete
//! tables) combined independently, or a joint discrete table over scalar profiles.

use thiserror::Error;

use super::profile::ValuationProfile;
use super::rng::RngStream;

const DENSITY_TOL: f64 = 1e-9;
const TABLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("breakpoints must be finite, non-negative and strictly increasing")]
    BadBreaks,
    #[error("expected {expected} coefficient lists, got {got}")]
    PieceCount { expected: usize, got: usize },
    #[error("density is negative near x = {x}")]
    NegativeDensity { x: f64 },
    #[error("density integrates to {total}, not 1")]
    NotNormalized { total: f64 },
    #[error("discrete table: {0}")]
    BadTable(String),
    #[error("player {player}: interest pattern has {got} entries, expected {expected}")]
    PatternLength { player: usize, expected: usize, got: usize },
    #[error("no players")]
    Empty,
    #[error("player {player} has no table outcome with value {value}")]
    NoConditional { player: usize, value: f64 },
}

/// Density given by a polynomial on each piece `[breaks[k], breaks[k+1])`, expressed in
/// the local coordinate `x - breaks[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial {
    breaks: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
    cum: Vec<f64>,
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn poly_antiderivative(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (d, &a)| acc * x + a / (d as f64 + 1.0))
        * x
}

impl PiecewisePolynomial {
    pub fn new(breaks: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self, DistError> {
        if breaks.len() < 2
            || breaks.iter().any(|b| !b.is_finite())
            || breaks[0] < 0.0
            || breaks.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(DistError::BadBreaks);
        }
        if coeffs.len() != breaks.len() - 1 {
            return Err(DistError::PieceCount { expected: breaks.len() - 1, got: coeffs.len() });
        }
        let mut cum = Vec::with_capacity(breaks.len());
        cum.push(0.0);
        for (k, c) in coeffs.iter().enumerate() {
            let width = breaks[k + 1] - breaks[k];
            if c.iter().any(|a| !a.is_finite()) {
                return Err(DistError::NegativeDensity { x: breaks[k] });
            }
            for s in 0..=64 {
                let local = width * s as f64 / 64.0;
                if poly_eval(c, local) < -DENSITY_TOL {
                    return Err(DistError::NegativeDensity { x: breaks[k] + local });
                }
            }
            cum.push(cum[k] + poly_antiderivative(c, width));
        }
        let total = *cum.last().unwrap();
        if (total - 1.0).abs() > DENSITY_TOL {
            return Err(DistError::NotNormalized { total });
        }
        Ok(Self { breaks, coeffs, cum })
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self, DistError> {
        if !(high > low) {
            return Err(DistError::BadBreaks);
        }
        Self::new(vec![low, high], vec![vec![1.0 / (high - low)]])
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().unwrap())
    }

    fn piece(&self, x: f64) -> usize {
        let k = self.breaks.partition_point(|&b| b <= x);
        k.saturating_sub(1).min(self.coeffs.len() - 1)
    }

    pub fn density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        let k = self.piece(x);
        poly_eval(&self.coeffs[k], x - self.breaks[k])
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let k = self.piece(x);
        (self.cum[k] + poly_antiderivative(&self.coeffs[k], x - self.breaks[k])).clamp(0.0, 1.0)
    }

    /// Inverse CDF. Linear pieces of the CDF (constant density) are inverted in closed
    /// form; higher degrees by safeguarded Newton on the piece's antiderivative.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let m = self.coeffs.len();
        let mut k = self.cum.partition_point(|&c| c <= u).saturating_sub(1).min(m - 1);
        while k + 1 < m && self.cum[k + 1] - self.cum[k] <= 0.0 {
            k += 1;
        }
        let c = &self.coeffs[k];
        let width = self.breaks[k + 1] - self.breaks[k];
        let target = (u - self.cum[k]).max(0.0);
        if target == 0.0 {
            return self.breaks[k];
        }
        if c.len() == 1 || c[1..].iter().all(|&a| a == 0.0) {
            let local = if c[0] > 0.0 { (target / c[0]).min(width) } else { 0.0 };
            return self.breaks[k] + local;
        }
        let (mut lo, mut hi) = (0.0, width);
        let mut x = 0.5 * width;
        for _ in 0..200 {
            let g = poly_antiderivative(c, x) - target;
            if g == 0.0 || hi - lo <= 1e-15 * width.max(1.0) {
                break;
            }
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = poly_eval(c, x);
            let newton = if d > 0.0 { x - g / d } else { f64::NAN };
            let next = if newton.is_finite() && newton >= lo && newton <= hi { newton } else { 0.5 * (lo + hi) };
            if next == x {
                break;
            }
            x = next;
        }
        self.breaks[k] + x
    }

    pub fn mean(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                // integral of (x_k + s) * p(s) ds over the piece
                let w = self.breaks[k + 1] - self.breaks[k];
                let shifted: Vec<f64> = std::iter::once(0.0).chain(c.iter().copied()).collect();
                self.breaks[k] * poly_antiderivative(c, w) + poly_antiderivative(&shifted, w)
            })
            .sum()
    }
}

/// Finite distribution on explicit points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTable {
    points: Vec<f64>,
    probs: Vec<f64>,
    cum: Vec<f64>,
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn pick(cum: &[f64], u: f64) -> usize {
    let total = *cum.last().unwrap();
    cum.partition_point(|&c| c <= u * total).min(cum.len() - 1)
}

fn check_probs(probs: &[f64]) -> Result<(), DistError> {
    if probs.is_empty() {
        return Err(DistError::BadTable("empty".into()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(DistError::BadTable("probabilities must be finite and non-negative".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > TABLE_TOL {
        return Err(DistError::BadTable(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

impl DiscreteTable {
    pub fn new(points: Vec<f64>, probs: Vec<f64>) -> Result<Self, DistError> {
        if points.len() != probs.len() {
            return Err(DistError::BadTable("points and probs differ in length".into()));
        }
        if points.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(DistError::BadTable("points must be finite and non-negative".into()));
        }
        check_probs(&probs)?;
        let cum = cumulative(&probs);
        Ok(Self { points, probs, cum })
    }

    pub fn point_mass(x: f64) -> Result<Self, DistError> {
        Self::new(vec![x], vec![1.0])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.points[pick(&self.cum, u)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarDist {
    Continuous(PiecewisePolynomial),
    Discrete(DiscreteTable),
}

impl ScalarDist {
    pub fn uniform(low: f64, high: f64) -> Result<Self, DistError> {
        PiecewisePolynomial::uniform(low, high).map(ScalarDist::Continuous)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            ScalarDist::Continuous(p) => p.quantile(u),
            ScalarDist::Discrete(t) => t.quantile(u),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        self.quantile(rng.uniform())
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            ScalarDist::Continuous(p) => p.support(),
            ScalarDist::Discrete(t) => {
                let lo = t.points.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = t.points.iter().copied().fold(0.0, f64::max);
                (lo, hi)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ScalarDist::Continuous(p) => p.cdf(x),
            ScalarDist::Discrete(t) => t
                .points
                .iter()
                .zip(&t.probs)
                .filter(|(p, _)| **p <= x)
                .map(|(_, q)| q)
                .sum(),
        }
    }
}

/// One player's prior in an independent product.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    /// A scalar value `v` scaled by a fixed per-item interest pattern: `v_ij = v * interest[j]`.
    /// Matroid players use a one-entry pattern `[1]`.
    Scalar { dist: ScalarDist, interest: Vec<f64> },
    /// Independent value per item.
    PerItem(Vec<ScalarDist>),
}

impl Marginal {
    fn width(&self) -> usize {
        match self {
            Marginal::Scalar { interest, .. } => interest.len(),
            Marginal::PerItem(d) => d.len(),
        }
    }

    fn eligible(&self, item: usize) -> bool {
        match self {
            Marginal::Scalar { dist, interest } => interest[item] > 0.0 && dist.support().1 > 0.0,
            Marginal::PerItem(d) => d[item].support().1 > 0.0,
        }
    }

    fn sample_row(&self, rng: &mut RngStream) -> Vec<f64> {
        match self {
            Marginal::Scalar { dist, interest } => {
                let v = dist.sample(rng);
                interest.iter().map(|w| v * w).collect()
            }
            Marginal::PerItem(d) => d.iter().map(|x| x.sample(rng)).collect(),
        }
    }
}

/// Correlated prior: a table over scalar profiles, each player's scalar scaled by its
/// interest pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    interest: Vec<Vec<f64>>,
    outcomes: Vec<Vec<f64>>,
    probs: Vec<f64>,
    cum: Vec<f64>,
}

impl JointTable {
    pub fn new(interest: Vec<Vec<f64>>, outcomes: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self, DistError> {
        let n = interest.len();
        if n == 0 {
            return Err(DistError::Empty);
        }
        let width = interest[0].len();
        for (player, pat) in interest.iter().enumerate() {
            if pat.len() != width {
                return Err(DistError::PatternLength { player, expected: width, got: pat.len() });
            }
        }
        if outcomes.len() != probs.len() {
            return Err(DistError::BadTable("outcomes and probs differ in length".into()));
        }
        if outcomes.iter().any(|o| o.len() != n || o.iter().any(|x| !x.is_finite() || *x < 0.0)) {
            return Err(DistError::BadTable(format!("each outcome needs {n} finite non-negative values")));
        }
        check_probs(&probs)?;
        let cum = cumulative(&probs);
        Ok(Self { interest, outcomes, probs, cum })
    }

    pub fn outcomes(&self) -> &[Vec<f64>] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn interest(&self) -> &[Vec<f64>] {
        &self.interest
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeDistribution {
    Independent(Vec<Marginal>),
    Joint(JointTable),
}

impl TypeDistribution {
    pub fn independent(marginals: Vec<Marginal>) -> Result<Self, DistError> {
        if marginals.is_empty() {
            return Err(DistError::Empty);
        }
        let width = marginals[0].width();
        for (player, m) in marginals.iter().enumerate() {
            if m.width() != width {
                return Err(DistError::PatternLength { player, expected: width, got: m.width() });
            }
        }
        Ok(TypeDistribution::Independent(marginals))
    }

    /// Product of identical `U(low, high)` scalar marginals with the given interest patterns.
    pub fn uniform_scalars(low: f64, high: f64, interest: Vec<Vec<f64>>) -> Result<Self, DistError> {
        let dist = ScalarDist::uniform(low, high)?;
        Self::independent(interest.into_iter().map(|interest| Marginal::Scalar { dist: dist.clone(), interest }).collect())
    }

    pub fn players(&self) -> usize {
        match self {
            TypeDistribution::Independent(m) => m.len(),
            TypeDistribution::Joint(t) => t.interest.len(),
        }
    }

    /// Length of each valuation row (item count, or 1 for matroid players).
    pub fn width(&self) -> usize {
        match self {
            TypeDistribution::Independent(m) => m[0].width(),
            TypeDistribution::Joint(t) => t.interest[0].len(),
        }
    }

    pub fn eligible(&self, player: usize, item: usize) -> bool {
        match self {
            TypeDistribution::Independent(m) => m[player].eligible(item),
            TypeDistribution::Joint(t) => {
                t.interest[player][item] > 0.0 && t.outcomes.iter().any(|o| o[player] > 0.0)
            }
        }
    }

    /// Interest pattern of a scalar-type player, `None` for per-item marginals.
    pub fn interest(&self, player: usize) -> Option<&[f64]> {
        match self {
            TypeDistribution::Independent(m) => match &m[player] {
                Marginal::Scalar { interest, .. } => Some(interest),
                Marginal::PerItem(_) => None,
            },
            TypeDistribution::Joint(t) => Some(&t.interest[player]),
        }
    }

    /// Scalar marginal of a player (for independent scalar priors).
    pub fn scalar_marginal(&self, player: usize) -> Option<&ScalarDist> {
        match self {
            TypeDistribution::Independent(m) => match &m[player] {
                Marginal::Scalar { dist, .. } => Some(dist),
                Marginal::PerItem(_) => None,
            },
            TypeDistribution::Joint(_) => None,
        }
    }

    /// Smallest interval containing every player's scalar or per-item value.
    pub fn value_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        match self {
            TypeDistribution::Independent(ms) => {
                for m in ms {
                    let dists = match m {
                        Marginal::Scalar { dist, .. } => std::slice::from_ref(dist),
                        Marginal::PerItem(d) => d.as_slice(),
                    };
                    for d in dists {
                        let (a, b) = d.support();
                        lo = lo.min(a);
                        hi = hi.max(b);
                    }
                }
            }
            TypeDistribution::Joint(t) => {
                for x in t.outcomes.iter().flatten() {
                    lo = lo.min(*x);
                    hi = hi.max(*x);
                }
            }
        }
        (lo, hi)
    }

    pub fn row_from_scalar(&self, player: usize, value: f64) -> Option<Vec<f64>> {
        self.interest(player).map(|pat| pat.iter().map(|w| value * w).collect())
    }

    /// Draws a full profile. Independent players use sub-stream `player` of `rng`.
    pub fn sample(&self, rng: &RngStream) -> ValuationProfile {
        match self {
            TypeDistribution::Independent(ms) => {
                let mut flat = Vec::with_capacity(ms.len() * self.width());
                for (i, m) in ms.iter().enumerate() {
                    flat.extend(m.sample_row(&mut rng.split(i as u64)));
                }
                ValuationProfile::from_flat(self.width(), flat)
            }
            TypeDistribution::Joint(t) => {
                let k = pick(&t.cum, rng.split(0).uniform());
                self.joint_profile(t, k)
            }
        }
    }

    fn joint_profile(&self, t: &JointTable, k: usize) -> ValuationProfile {
        let mut flat = Vec::with_capacity(t.interest.len() * self.width());
        for (i, pat) in t.interest.iter().enumerate() {
            flat.extend(pat.iter().map(|w| t.outcomes[k][i] * w));
        }
        ValuationProfile::from_flat(self.width(), flat)
    }

    /// Draws everyone except `player`, whose row is fixed to `own_row`. For joint tables
    /// the opponents come from the table conditioned on the player's scalar value.
    pub fn sample_given(&self, player: usize, own_row: &[f64], rng: &RngStream) -> Result<ValuationProfile, DistError> {
        match self {
            TypeDistribution::Independent(_) => Ok(self.sample(rng).with_row(player, own_row)),
            TypeDistribution::Joint(t) => {
                let own = own_row.iter().copied().fold(0.0, f64::max);
                let rows: Vec<usize> = (0..t.outcomes.len())
                    .filter(|&k| t.probs[k] > 0.0 && self.joint_scalar_matches(t, k, player, own))
                    .collect();
                if rows.is_empty() {
                    return Err(DistError::NoConditional { player, value: own });
                }
                let cum = cumulative(&rows.iter().map(|&k| t.probs[k]).collect::<Vec<_>>());
                let k = rows[pick(&cum, rng.split(0).uniform())];
                Ok(self.joint_profile(t, k).with_row(player, own_row))
            }
        }
    }

    fn joint_scalar_matches(&self, t: &JointTable, k: usize, player: usize, own_max: f64) -> bool {
        let scale = t.interest[player].iter().copied().fold(0.0, f64::max);
        (t.outcomes[k][player] * scale - own_max).abs() <= 1e-12 * own_max.abs().max(1.0)
    }
}
