use std::fmt::Write as _;
use std::sync::Arc;

use crate::combinat::{greedy_max_basis, optimal_assignment};
use crate::engine::{run_auction, Market, Scenario, Strategy};
use crate::model::{RngStream, ValuationProfile};
use crate::stats::{try_accumulate, Z95};

use super::MetricsError;

/// Optimal social welfare of a valuation profile in the scenario's market.
pub fn optimal_welfare(scenario: &Scenario, profile: &ValuationProfile) -> f64 {
    match &scenario.market {
        Market::Matching { .. } => optimal_assignment(&profile.matrix()).welfare(),
        Market::MatroidCut { matroid, .. } => {
            let scalars: Vec<f64> = (0..profile.players()).map(|i| profile.scalar(i)).collect();
            greedy_max_basis(matroid.as_ref(), &scalars).iter().map(|&e| scalars[e]).sum()
        }
    }
}

/// Monte Carlo estimate of the ratio of expected optimal welfare to expected welfare
/// under a strategy profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PoAReport {
    pub samples: usize,
    pub e_opt: f64,
    pub e_sw: f64,
    pub e_revenue: f64,
    pub e_utility: f64,
    pub se_opt: f64,
    pub se_sw: f64,
    /// `None` when the expected welfare estimate is not positive.
    pub ratio: Option<f64>,
    /// Delta-method standard error of the ratio.
    pub ratio_se: Option<f64>,
}

pub const POA_HEADER: &str = "samples,e_opt,e_sw,e_revenue,e_utility,ratio,ci_low,ci_high";

impl PoAReport {
    /// 95% confidence interval of the ratio.
    pub fn ci(&self) -> Option<(f64, f64)> {
        let (r, se) = (self.ratio?, self.ratio_se?);
        Some((r - Z95 * se, r + Z95 * se))
    }

    pub fn half_width(&self) -> Option<f64> {
        self.ratio_se.map(|se| Z95 * se)
    }

    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let ci = self.ci();
        format!(
            "{POA_HEADER}\n{},{},{},{},{},{},{},{}\n",
            self.samples,
            self.e_opt,
            self.e_sw,
            self.e_revenue,
            self.e_utility,
            opt(self.ratio),
            opt(ci.map(|c| c.0)),
            opt(ci.map(|c| c.1))
        )
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "samples          {}", self.samples);
        let _ = writeln!(out, "E[OPT]           {:.6} ± {:.6}", self.e_opt, self.se_opt);
        let _ = writeln!(out, "E[SW]            {:.6} ± {:.6}", self.e_sw, self.se_sw);
        let _ = writeln!(out, "E[revenue]       {:.6}", self.e_revenue);
        let _ = writeln!(out, "E[utility]       {:.6}", self.e_utility);
        match (self.ratio, self.ci()) {
            (Some(r), Some((lo, hi))) => {
                let _ = writeln!(out, "ratio            {r:.6} (95% CI {lo:.6} .. {hi:.6})");
            }
            _ => out.push_str("ratio            undefined (expected welfare is not positive)\n"),
        }
        out
    }
}

const MIN_SAMPLES: usize = 1000;

/// Runs the profile on `n` sampled valuation profiles. Sample `s` draws values from
/// `rng.split(s).split(0)` and plays with `rng.split(s).split(1)`. Each sample must
/// satisfy welfare = total utility + revenue up to rounding.
pub fn estimate_poa(scenario: &Scenario, strategies: &[Arc<dyn Strategy>], rng: &RngStream, n: usize) -> Result<PoAReport, MetricsError> {
    if n < MIN_SAMPLES {
        return Err(MetricsError::TooFewSamples { min: MIN_SAMPLES, got: n });
    }
    let m = try_accumulate(n, 4, |s, acc| {
        let stream = rng.split(s as u64);
        let profile = scenario.dist.sample(&stream.split(0));
        let trace = run_auction(scenario, strategies, &profile, &stream.split(1))?;
        let sw = trace.welfare();
        let revenue = trace.revenue();
        let utility = trace.total_utility();
        let residual = sw - (utility + revenue);
        let scale = sw.abs() + revenue.abs() + trace.utilities.iter().map(|u| u.abs()).sum::<f64>();
        if residual.abs() > 4.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE) * (trace.utilities.len() + 1) as f64 {
            return Err(MetricsError::Accounting { sample: s, residual });
        }
        acc.push(&[optimal_welfare(scenario, &profile), sw, revenue, utility]);
        Ok(())
    })?;
    let count = n as f64;
    let (mo, ms) = (m.mean(0), m.mean(1));
    let (ratio, ratio_se) = if ms > 0.0 {
        let var = (m.var(0) / (ms * ms) - 2.0 * mo * m.cov(0, 1) / ms.powi(3) + mo * mo * m.var(1) / ms.powi(4)) / count;
        (Some(mo / ms), Some(var.max(0.0).sqrt()))
    } else {
        (None, None)
    };
    Ok(PoAReport {
        samples: n,
        e_opt: mo,
        e_sw: ms,
        e_revenue: m.mean(2),
        e_utility: m.mean(3),
        se_opt: m.stderr(0),
        se_sw: m.stderr(1),
        ratio,
        ratio_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Abstain, InfoPolicy, TieRule, Truthful};
    use crate::model::TypeDistribution;

    fn single_item(players: usize) -> Scenario {
        let dist = TypeDistribution::uniform_scalars(0.0, 1.0, vec![vec![1.0]; players]).unwrap();
        let market = Market::Matching { items: 1, groups: vec![vec![0]], single_value: true };
        Scenario::new("one", market, dist, InfoPolicy::WinnerPrice, TieRule::LowestIndex).unwrap()
    }

    #[test]
    fn efficient_profile_has_ratio_one() {
        let sc = single_item(3);
        let s: Vec<Arc<dyn Strategy>> = vec![Arc::new(Truthful); 3];
        let r = estimate_poa(&sc, &s, &RngStream::new(1), 5000).unwrap();
        assert_eq!(r.ratio, Some(1.0));
        assert!((r.e_sw - 0.75).abs() < 0.02);
        let (lo, hi) = r.ci().unwrap();
        assert!(lo <= 1.0 && 1.0 <= hi);
        assert!(r.to_csv().starts_with(POA_HEADER));
    }

    #[test]
    fn delta_method_against_direct_formula() {
        // abstaining bidders: the lowest index always wins at price 0
        let sc = single_item(2);
        let s: Vec<Arc<dyn Strategy>> = vec![Arc::new(Abstain); 2];
        let rng = RngStream::new(4);
        let n = 20_000;
        let r = estimate_poa(&sc, &s, &rng, n).unwrap();
        // E[max(U1, U2)] / E[U1] = (2/3) / (1/2)
        assert!((r.ratio.unwrap() - 4.0 / 3.0).abs() < 4.0 * r.ratio_se.unwrap());
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let p = sc.dist.sample(&rng.split(k as u64).split(0));
                (p.scalar(0).max(p.scalar(1)), p.scalar(0))
            })
            .collect();
        let mean = |f: &dyn Fn(&(f64, f64)) -> f64| pairs.iter().map(f).sum::<f64>() / n as f64;
        let (mo, ms) = (mean(&|p| p.0), mean(&|p| p.1));
        assert!((r.ratio.unwrap() - mo / ms).abs() < 1e-12);
        let g: Vec<f64> = pairs.iter().map(|p| (p.0 - mo / ms * p.1) / ms).collect();
        let gm = g.iter().sum::<f64>() / n as f64;
        let var = g.iter().map(|x| (x - gm).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((r.ratio_se.unwrap() - (var / n as f64).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples() {
        let s: Vec<Arc<dyn Strategy>> = vec![Arc::new(Truthful); 2];
        assert!(matches!(estimate_poa(&single_item(2), &s, &RngStream::new(1), 10), Err(MetricsError::TooFewSamples { .. })));
    }
}
