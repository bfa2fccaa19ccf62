//! Compensated accumulation and deterministic chunked Monte Carlo reduction.

use rayon::prelude::*;

/// 97.5% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Compensated) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// First and second moments of a `K`-dimensional sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    n: usize,
    sums: Vec<Compensated>,
    cross: Vec<Compensated>,
    full: bool,
}

impl Moments {
    /// Tracks every covariance.
    pub fn new(dim: usize) -> Self {
        Self { n: 0, sums: vec![Compensated::default(); dim], cross: vec![Compensated::default(); dim * dim], full: true }
    }

    /// Tracks variances only; `cov(a, b)` with `a != b` is NaN.
    pub fn diagonal(dim: usize) -> Self {
        Self { n: 0, sums: vec![Compensated::default(); dim], cross: vec![Compensated::default(); dim], full: false }
    }

    fn empty_like(&self) -> Self {
        if self.full {
            Self::new(self.dim())
        } else {
            Self::diagonal(self.dim())
        }
    }

    pub fn dim(&self) -> usize {
        self.sums.len()
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, x: &[f64]) {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        self.n += 1;
        for a in 0..d {
            self.sums[a].add(x[a]);
            if self.full {
                for b in a..d {
                    self.cross[a * d + b].add(x[a] * x[b]);
                }
            } else {
                self.cross[a].add(x[a] * x[a]);
            }
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        for (s, o) in self.sums.iter_mut().zip(&other.sums) {
            s.merge(o);
        }
        for (s, o) in self.cross.iter_mut().zip(&other.cross) {
            s.merge(o);
        }
    }

    pub fn mean(&self, a: usize) -> f64 {
        self.sums[a].value() / self.n as f64
    }

    /// Unbiased sample covariance.
    pub fn cov(&self, a: usize, b: usize) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if self.n < 2 {
            return 0.0;
        }
        let k = match (self.full, a == b) {
            (true, _) => a * self.dim() + b,
            (false, true) => a,
            (false, false) => return f64::NAN,
        };
        let n = self.n as f64;
        let raw = self.cross[k].value() / n - self.mean(a) * self.mean(b);
        raw * n / (n - 1.0)
    }

    pub fn var(&self, a: usize) -> f64 {
        self.cov(a, a).max(0.0)
    }

    /// Standard error of the mean of coordinate `a`.
    pub fn stderr(&self, a: usize) -> f64 {
        (self.var(a) / self.n as f64).sqrt()
    }
}

/// Samples per rayon task. Fixed so the reduction tree, and hence every rounding, is
/// independent of the thread count.
pub const CHUNK: usize = 4096;

/// Runs `sample(s)` for `s in 0..n` and accumulates into `Moments` of dimension `dim`.
/// Chunks run in parallel but are merged sequentially in index order, so the result is
/// bit-identical regardless of scheduling.
pub fn accumulate<F>(n: usize, dim: usize, sample: F) -> Moments
where
    F: Fn(usize, &mut Moments) + Sync,
{
    accumulate_into(n, Moments::new(dim), sample)
}

/// [`accumulate`] starting from an empty accumulator of the given kind.
pub fn accumulate_into<F>(n: usize, proto: Moments, sample: F) -> Moments
where
    F: Fn(usize, &mut Moments) + Sync,
{
    match try_accumulate_into::<_, std::convert::Infallible>(n, proto, |s, m| {
        sample(s, m);
        Ok(())
    }) {
        Ok(m) => m,
        Err(e) => match e {},
    }
}

/// Fallible variant of [`accumulate`]; the first error in index order wins.
pub fn try_accumulate<F, E>(n: usize, dim: usize, sample: F) -> Result<Moments, E>
where
    F: Fn(usize, &mut Moments) -> Result<(), E> + Sync,
    E: Send,
{
    try_accumulate_into(n, Moments::new(dim), sample)
}

pub fn try_accumulate_into<F, E>(n: usize, proto: Moments, sample: F) -> Result<Moments, E>
where
    F: Fn(usize, &mut Moments) -> Result<(), E> + Sync,
    E: Send,
{
    let proto = proto.empty_like();
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Result<Moments, E>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = proto.empty_like();
            for s in c * CHUNK..((c + 1) * CHUNK).min(n) {
                sample(s, &mut m)?;
            }
            Ok(m)
        })
        .collect();
    let mut total = proto;
    for p in parts {
        total.merge(&p?);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_beats_naive() {
        let mut c = Compensated::default();
        let mut naive = 0.0f64;
        c.add(1.0);
        naive += 1.0;
        for _ in 0..10_000 {
            c.add(1e-16);
            naive += 1e-16;
        }
        assert_eq!(naive, 1.0);
        assert!((c.value() - (1.0 + 1e-12)).abs() < 1e-24);
    }

    #[test]
    fn moments_match_direct_formulas() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let ys = [0.5, 1.0, 1.5, 3.0];
        let mut m = Moments::new(2);
        for (x, y) in xs.iter().zip(&ys) {
            m.push(&[*x, *y]);
        }
        let mx = 3.5;
        let my = 1.5;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / 3.0;
        assert!((m.mean(0) - mx).abs() < 1e-15);
        assert!((m.cov(0, 1) - cov).abs() < 1e-12);
        assert!((m.cov(1, 0) - cov).abs() < 1e-12);
        let mut d = Moments::diagonal(2);
        for (x, y) in xs.iter().zip(&ys) {
            d.push(&[*x, *y]);
        }
        assert_eq!(d.var(0), m.var(0));
        assert_eq!(d.stderr(1), m.stderr(1));
        assert!(d.cov(0, 1).is_nan());
    }

    #[test]
    fn accumulate_is_order_independent_of_chunking() {
        let f = |s: usize, m: &mut Moments| m.push(&[(s as f64).sin()]);
        let a = accumulate(10_000, 1, f);
        let b = accumulate(10_000, 1, f);
        assert_eq!(a.mean(0).to_bits(), b.mean(0).to_bits());
        assert_eq!(a.count(), 10_000);
    }
}
