//! Scenario files: a JSON schema with built-in examples, validation into an engine
//! [`Scenario`], and strategy-spec resolution.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use seqauction::analytic::TwoItemEquilibrium;
use seqauction::combinat::{check_axioms, AnyMatroid, ExplicitMatroid, GraphicMatroid, Matroid, TransversalMatroid, UniformMatroid};
use seqauction::engine::{ConstantBid, CutPolicy, InfoPolicy, Market, MyopicHalving, Scenario, Strategy, TieRule, Truthful};
use seqauction::model::{DiscreteTable, JointTable, Marginal, PiecewisePolynomial, ScalarDist, TypeDistribution};
use seqauction::solver::TableStrategy;

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub market: MarketSpec,
    pub distribution: DistributionSpec,
    #[serde(default)]
    pub info: InfoSpec,
    #[serde(default)]
    pub tie: TieSpec,
    pub strategy: StrategySpec,
    pub seed: u64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MarketSpec {
    /// Items sold in the listed groups; each group is one round.
    Matching { items: usize, rounds: Vec<Vec<usize>> },
    /// As `matching`, for players with one value scaled by an interest pattern.
    SingleValueMatching { items: usize, rounds: Vec<Vec<usize>> },
    /// Players are matroid elements. `cuts` lists the first cuts; later rounds use the
    /// cospan of the winners.
    MatroidCut {
        matroid: MatroidSpec,
        #[serde(default)]
        cuts: Vec<Vec<usize>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MatroidSpec {
    Graphic { edges: Vec<(usize, usize)> },
    /// Left nodes are the elements; a set is independent when it can be matched.
    Transversal { left: usize, right: usize, edges: Vec<(usize, usize)> },
    Uniform { n: usize, rank: usize },
    /// Independent sets are the subsets of the listed bases.
    Bases { n: usize, bases: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    Independent { players: Vec<MarginalSpec> },
    /// Finite joint law of scalar values: row `k` of `outcomes` has one value per player.
    Joint { interest: Vec<Vec<f64>>, outcomes: Vec<Vec<f64>>, probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum MarginalSpec {
    Scalar { dist: ScalarSpec, interest: Vec<f64> },
    PerItem(Vec<ScalarSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarSpec {
    Uniform { low: f64, high: f64 },
    Discrete { points: Vec<f64>, probs: Vec<f64> },
    /// Polynomial density per piece in the local coordinate `x - breaks[k]`.
    Piecewise { breaks: Vec<f64>, coeffs: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfoSpec {
    WinnerOnly,
    #[default]
    WinnerPrice,
    AllBids,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieSpec {
    #[default]
    LowestIndex,
    UniformRandom,
}

/// One spec for everybody or one per player. A spec is `appendixA`, `myopic-halving`,
/// `truthful`, `constant:<bid>` or `table:<csv path>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategySpec {
    Shared(String),
    PerPlayer(Vec<String>),
}

/// A scenario ready to run, with the file it came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub file: ScenarioFile,
    pub scenario: Scenario,
    /// Directory against which relative table paths resolve.
    pub base: PathBuf,
}

pub const BUILTIN: [(&str, &str); 3] = [
    ("three-bidder-two-items", include_str!("../scenarios/three-bidder-two-items.json")),
    ("triangle-matroid", include_str!("../scenarios/triangle-matroid.json")),
    ("single-value-bipartite", include_str!("../scenarios/single-value-bipartite.json")),
];

fn schema(origin: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Schema(format!("{origin}: {msg}"))
}

/// Parses scenario JSON; errors carry the line and column.
pub fn parse_scenario(text: &str, origin: &str) -> Result<ScenarioFile, Failure> {
    serde_json::from_str(text).map_err(|e| schema(&format!("{origin}:{}:{}", e.line(), e.column()), e))
}

/// Loads a scenario by built-in name or file path and validates it.
pub fn load_scenario(reference: &str) -> Result<Loaded, Failure> {
    let file = match BUILTIN.iter().find(|(n, _)| *n == reference) {
        Some((name, text)) => parse_scenario(text, name)?,
        None => {
            let text = fs::read_to_string(reference).map_err(|e| schema(reference, format!("cannot read scenario: {e}")))?;
            parse_scenario(&text, reference)?
        }
    };
    from_file(file, reference)
}

/// Validates an already parsed scenario. `source` is the built-in name or path it came
/// from; table paths resolve against the directory of a path.
pub fn from_file(file: ScenarioFile, source: &str) -> Result<Loaded, Failure> {
    let base = if BUILTIN.iter().any(|(n, _)| *n == source) {
        PathBuf::from(".")
    } else {
        Path::new(source).parent().map(Path::to_path_buf).unwrap_or_default()
    };
    resolve(file, base, source)
}

fn scalar(spec: &ScalarSpec) -> Result<ScalarDist, String> {
    match spec {
        ScalarSpec::Uniform { low, high } => ScalarDist::uniform(*low, *high).map_err(|e| e.to_string()),
        ScalarSpec::Discrete { points, probs } => {
            DiscreteTable::new(points.clone(), probs.clone()).map(ScalarDist::Discrete).map_err(|e| e.to_string())
        }
        ScalarSpec::Piecewise { breaks, coeffs } => {
            PiecewisePolynomial::new(breaks.clone(), coeffs.clone()).map(ScalarDist::Continuous).map_err(|e| e.to_string())
        }
    }
}

fn distribution(spec: &DistributionSpec) -> Result<TypeDistribution, String> {
    match spec {
        DistributionSpec::Independent { players } => {
            let marginals = players
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let m = match m {
                        MarginalSpec::Scalar { dist, interest } => scalar(dist).map(|dist| Marginal::Scalar { dist, interest: interest.clone() }),
                        MarginalSpec::PerItem(ds) => ds.iter().map(scalar).collect::<Result<_, _>>().map(Marginal::PerItem),
                    };
                    m.map_err(|e| format!("player {i}: {e}"))
                })
                .collect::<Result<Vec<_>, String>>();
            let marginals = marginals.map_err(|e| format!("distribution: {e}"))?;
            TypeDistribution::independent(marginals).map_err(|e| format!("distribution: {e}"))
        }
        DistributionSpec::Joint { interest, outcomes, probs } => JointTable::new(interest.clone(), outcomes.clone(), probs.clone())
            .map(TypeDistribution::Joint)
            .map_err(|e| format!("distribution: {e}")),
    }
}

/// Builds the matroid and spot-checks the independence axioms exhaustively for ground
/// sets of at most 12 elements.
pub fn matroid(spec: &MatroidSpec) -> Result<AnyMatroid, String> {
    let m = match spec {
        MatroidSpec::Graphic { edges } => AnyMatroid::Graphic(GraphicMatroid::new(edges.clone())),
        MatroidSpec::Transversal { left, right, edges } => {
            AnyMatroid::Transversal(TransversalMatroid::new(*left, *right, edges).map_err(|e| e.to_string())?)
        }
        MatroidSpec::Uniform { n, rank } => AnyMatroid::Uniform(UniformMatroid::new(*n, *rank).map_err(|e| e.to_string())?),
        MatroidSpec::Bases { n, bases } => AnyMatroid::Explicit(ExplicitMatroid::from_bases(*n, bases).map_err(|e| e.to_string())?),
    };
    if m.ground_size() == 0 {
        return Err("matroid has an empty ground set".into());
    }
    check_axioms(&m, 12, 100_000).map_err(|e| e.to_string())?;
    Ok(m)
}

fn resolve(file: ScenarioFile, base: PathBuf, origin: &str) -> Result<Loaded, Failure> {
    let dist = distribution(&file.distribution).map_err(|e| schema(origin, e))?;
    let market = match &file.market {
        MarketSpec::Matching { items, rounds } => Market::Matching { items: *items, groups: rounds.clone(), single_value: false },
        MarketSpec::SingleValueMatching { items, rounds } => {
            if (0..dist.players()).any(|i| dist.interest(i).is_none()) {
                return Err(schema(origin, "single-value markets need scalar values with interest patterns"));
            }
            Market::Matching { items: *items, groups: rounds.clone(), single_value: true }
        }
        MarketSpec::MatroidCut { matroid: spec, cuts } => {
            let m = matroid(spec).map_err(|e| schema(origin, format!("matroid: {e}")))?;
            let cuts = if cuts.is_empty() { CutPolicy::Cospan } else { CutPolicy::Explicit(cuts.clone()) };
            Market::MatroidCut { matroid: Arc::new(m), cuts }
        }
    };
    let info = match file.info {
        InfoSpec::WinnerOnly => InfoPolicy::WinnerOnly,
        InfoSpec::WinnerPrice => InfoPolicy::WinnerPrice,
        InfoSpec::AllBids => InfoPolicy::AllBids,
    };
    let tie = match file.tie {
        TieSpec::LowestIndex => TieRule::LowestIndex,
        TieSpec::UniformRandom => TieRule::UniformRandom,
    };
    let scenario = Scenario::new(file.name.clone(), market, dist, info, tie).map_err(|e| schema(origin, e))?;
    if file.samples == 0 {
        return Err(schema(origin, "samples must be positive"));
    }
    let loaded = Loaded { file, scenario, base };
    if let StrategySpec::PerPlayer(list) = &loaded.file.strategy {
        if list.len() != loaded.scenario.players() {
            return Err(schema(origin, format!("{} strategies listed for {} players", list.len(), loaded.scenario.players())));
        }
    }
    Ok(loaded)
}

fn builtin_strategy(spec: &str, base: &Path, players: usize) -> Result<Vec<Arc<dyn Strategy>>, String> {
    let one: Arc<dyn Strategy> = match spec {
        "appendixA" => Arc::new(TwoItemEquilibrium),
        "myopic-halving" => Arc::new(MyopicHalving),
        "truthful" => Arc::new(Truthful),
        _ => {
            if let Some(t) = spec.strip_prefix("constant:") {
                let bid: f64 = t.trim().parse().map_err(|_| format!("bad constant bid {t:?}"))?;
                if !(bid.is_finite() && bid >= 0.0) {
                    return Err(format!("constant bid {bid} must be finite and non-negative"));
                }
                Arc::new(ConstantBid(bid))
            } else if let Some(path) = spec.strip_prefix("table:") {
                let path = base.join(path);
                let text = fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                let table = TableStrategy::from_csv(&text).map_err(|e| format!("{}: {e}", path.display()))?;
                return Ok(table.into_profile(players));
            } else {
                return Err(format!("unknown strategy {spec:?}"));
            }
        }
    };
    Ok(vec![one; players])
}

impl Loaded {
    /// One strategy per player, each checked against the scenario.
    pub fn strategies(&self) -> Result<Vec<Arc<dyn Strategy>>, Failure> {
        let n = self.scenario.players();
        let err = |e: String| schema(&self.file.name, format!("strategy: {e}"));
        let profile = match &self.file.strategy {
            StrategySpec::Shared(spec) => builtin_strategy(spec, &self.base, n).map_err(err)?,
            StrategySpec::PerPlayer(list) => list
                .iter()
                .enumerate()
                .map(|(i, spec)| builtin_strategy(spec, &self.base, n).map(|mut v| v.swap_remove(i)))
                .collect::<Result<_, _>>()
                .map_err(err)?,
        };
        for (i, s) in profile.iter().enumerate() {
            s.check(&self.scenario).map_err(|e| err(format!("player {i}: {e}")))?;
        }
        Ok(profile)
    }
}
