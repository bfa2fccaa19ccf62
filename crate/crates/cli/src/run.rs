//! Executes one manifest: computes every output in memory, then writes the files.

use std::fmt::Write as _;
use std::path::Path;

use seqauction::analytic::{
    first_round_bid, first_round_bid_derivative, foc_residual, solve_foc_ode, AnalyticError, ClosedFormBid, Role, SecondRound, BID_MAX,
};
use seqauction::engine::{run_auction, EngineError, Market, TRACE_HEADER};
use seqauction::metrics::{
    bluff_deviation_utility, constant_bid_deviation_utility, default_menu, estimate_poa, verify_bne, MetricsError,
};
use seqauction::model::{accounting_residual, RngStream, TypeDistribution};
use seqauction::solver::{best_response_dynamics, epsilon_bne_gap, BeliefTable, DiscreteGame, GridSpec, OffPathRule, SolverError, StrategyTable};

use crate::config::{from_file, Loaded};
use crate::manifest::{write_atomic, Command, RunManifest, MANIFEST_FILE};
use crate::Failure;

/// Own values checked by `verify`, as fractions of the highest prior value.
pub const VERIFY_FRACTIONS: [f64; 3] = [0.2, 0.5, 0.8];

struct Output {
    files: Vec<(&'static str, String)>,
    summary: String,
    /// Set when the run completed but found a violated invariant.
    violation: Option<String>,
}

fn engine_failure(e: EngineError) -> Failure {
    Failure::Numeric(e.to_string())
}

fn metrics_failure(e: MetricsError) -> Failure {
    match e {
        MetricsError::Accounting { .. } => Failure::Invariant(e.to_string()),
        MetricsError::TooFewSamples { .. } | MetricsError::Unsupported(_) | MetricsError::Dist(_) => Failure::Schema(e.to_string()),
        _ => Failure::Numeric(e.to_string()),
    }
}

fn solver_failure(e: SolverError) -> Failure {
    match e {
        SolverError::Unsupported(_) | SolverError::TooLarge { .. } | SolverError::BadRow(_) => Failure::Schema(e.to_string()),
        SolverError::BadHistory(_) => Failure::Numeric(e.to_string()),
    }
}

fn analytic_failure(e: AnalyticError) -> Failure {
    Failure::Numeric(e.to_string())
}

fn loaded(manifest: &RunManifest) -> Result<Loaded, Failure> {
    let file = manifest.scenario.clone().ok_or_else(|| Failure::Schema("this command needs a scenario".into()))?;
    from_file(file, manifest.scenario_source.as_deref().unwrap_or("."))
}

fn simulate(l: &Loaded, seed: u64, n: usize) -> Result<Output, Failure> {
    let strategies = l.strategies()?;
    let rng = RngStream::new(seed);
    let mut csv = format!("{TRACE_HEADER}\n");
    let (mut welfare, mut revenue) = (0.0, 0.0);
    let mut violation = None;
    for s in 0..n {
        let stream = rng.split(s as u64);
        let profile = l.scenario.dist.sample(&stream.split(0));
        let trace = run_auction(&l.scenario, &strategies, &profile, &stream.split(1)).map_err(engine_failure)?;
        let residual = accounting_residual(&trace.profile, &trace.allocation);
        let scale = trace.welfare().abs() + trace.revenue().abs() + trace.utilities.iter().map(|u| u.abs()).sum::<f64>();
        if violation.is_none() && residual.abs() > 4.0 * f64::EPSILON * scale * (trace.utilities.len() + 1) as f64 {
            violation = Some(format!("welfare accounting broken in run {s}: residual {residual:e}"));
        }
        welfare += trace.welfare();
        revenue += trace.revenue();
        trace.write_csv_rows(s, &mut csv);
    }
    let mut summary = String::new();
    let _ = writeln!(summary, "scenario         {}", l.scenario.name);
    let _ = writeln!(summary, "runs             {n}");
    let _ = writeln!(summary, "mean welfare     {:.6}", welfare / n as f64);
    let _ = writeln!(summary, "mean revenue     {:.6}", revenue / n as f64);
    Ok(Output { files: vec![("traces.csv", csv)], summary, violation })
}

fn poa(l: &Loaded, seed: u64, n: usize) -> Result<Output, Failure> {
    let strategies = l.strategies()?;
    let report = estimate_poa(&l.scenario, &strategies, &RngStream::new(seed), n).map_err(metrics_failure)?;
    Ok(Output { files: vec![("poa.csv", report.to_csv())], summary: report.summary(), violation: None })
}

/// Own values checked per player: every value a joint table allows, otherwise
/// [`VERIFY_FRACTIONS`] of the highest prior value.
pub fn verify_values(dist: &TypeDistribution) -> Vec<Vec<f64>> {
    (0..dist.players())
        .map(|i| match dist {
            TypeDistribution::Joint(t) => {
                let mut xs: Vec<f64> = t.outcomes().iter().map(|o| o[i]).collect();
                xs.sort_by(f64::total_cmp);
                xs.dedup();
                xs
            }
            _ => VERIFY_FRACTIONS.iter().map(|f| f * dist.value_range().1).collect(),
        })
        .collect()
}

fn verify(l: &Loaded, seed: u64, n: usize, tol: f64) -> Result<Output, Failure> {
    let strategies = l.strategies()?;
    let own = verify_values(&l.scenario.dist);
    let menu = default_menu(&l.scenario);
    let report = verify_bne(&l.scenario, &strategies, &menu, &own, &RngStream::new(seed), n, tol).map_err(metrics_failure)?;
    let flagged = report.flagged().count();
    let violation = (flagged > 0).then(|| format!("profitable deviation: {flagged} of {} deviations gain more than the tolerance", report.rows.len()));
    Ok(Output { files: vec![("verify.csv", report.to_csv())], summary: report.summary(), violation })
}

fn deviate(l: &Loaded, seed: u64, n: usize, player: usize, value: f64) -> Result<Output, Failure> {
    let strategies = l.strategies()?;
    let rng = RngStream::new(seed);
    let outcome = match l.scenario.market {
        Market::Matching { .. } => {
            let row = l
                .scenario
                .dist
                .row_from_scalar(player, value)
                .ok_or_else(|| Failure::Schema(format!("player {player} has no scalar value to set")))?;
            bluff_deviation_utility(&l.scenario, &strategies, player, &row, &rng, n)
        }
        Market::MatroidCut { .. } => constant_bid_deviation_utility(&l.scenario, &strategies, player, value, &rng, n),
    }
    .map_err(metrics_failure)?;
    let violation = if !outcome.bound_holds(3.0) {
        Some(format!("deviation utility falls below its bound by {:.6}", -outcome.excess_mean))
    } else if outcome.transparency_violations > 0 {
        Some(format!("losing bids changed what others saw in {} runs", outcome.transparency_violations))
    } else {
        None
    };
    Ok(Output { files: vec![("deviation.csv", outcome.to_csv())], summary: outcome.summary(), violation })
}

/// Closed-form and numerically integrated first-round bids, and last-round bids after a
/// range of announced prices.
fn emit_bidfn(points: usize) -> Result<Output, Failure> {
    if points < 2 {
        return Err(Failure::Schema("emit-bidfn needs at least 2 points".into()));
    }
    let fine: Vec<f64> = (1..=1000).map(|k| k as f64 / 1000.0).collect();
    let ode = solve_foc_ode(&fine).map_err(analytic_failure)?;
    let ode_at = |v: f64| -> Option<f64> {
        if v < fine[0] {
            return None;
        }
        let k = ((v * 1000.0).floor() as usize).clamp(1, 999);
        let (a, b) = (fine[k - 1], fine[k]);
        let w = ((v - a) / (b - a)).clamp(0.0, 1.0);
        Some(ode.bids[k - 1] * (1.0 - w) + ode.bids[k] * w)
    };
    let mut first = String::from("value,first_round_bid,derivative,foc_residual,ode_bid\n");
    for k in 0..points {
        let v = k as f64 / (points - 1) as f64;
        let bid = first_round_bid(v).map_err(analytic_failure)?;
        let slope = first_round_bid_derivative(v).map_err(analytic_failure)?;
        let ode_bid = ode_at(v).map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(first, "{v},{bid},{slope},{},{ode_bid}", foc_residual(&ClosedFormBid, v));
    }
    let mut second = String::from("price,support_max,value,weak_bid,strong_bid\n");
    let prices: Vec<f64> = (0..=6).map(|k| 0.05 * k as f64).chain([BID_MAX]).collect();
    for &p in &prices {
        let game = SecondRound::after_price(p).map_err(analytic_failure)?;
        for k in 0..=20 {
            let v = k as f64 / 20.0;
            let weak = game.bid(Role::Weak, v).map(|b| b.to_string()).unwrap_or_default();
            let strong = game.bid(Role::Strong, v).map_err(analytic_failure)?;
            let _ = writeln!(second, "{p},{},{v},{weak},{strong}", game.support_max());
        }
    }
    let mut summary = String::new();
    let _ = writeln!(summary, "points           {points}");
    let _ = writeln!(summary, "b(1)             {:.12}", first_round_bid(1.0).map_err(analytic_failure)?);
    let _ = writeln!(summary, "1 - ln 2         {:.12}", BID_MAX);
    let _ = writeln!(summary, "ODE b(1)         {:.12}", ode.last());
    Ok(Output { files: vec![("bidfn.csv", first), ("second_round.csv", second)], summary, violation: None })
}

fn solve(l: &Loaded, types: usize, bids: usize, sweeps: usize, tol: f64) -> Result<Output, Failure> {
    let strategies = l.strategies()?;
    let spec = GridSpec { types, bids, ..GridSpec::default() };
    let game = DiscreteGame::from_scenario(&l.scenario, spec).map_err(solver_failure)?;
    let mut table = StrategyTable::from_strategies(&game, &strategies).map_err(solver_failure)?;
    let mut dynamics = None;
    if sweeps > 0 {
        let d = best_response_dynamics(&game, table, tol, sweeps);
        dynamics = Some((d.converged, d.sweeps));
        table = d.table;
    }
    let gap = epsilon_bne_gap(&game, &table);
    let beliefs = BeliefTable::build(&game, &table, OffPathRule::default());
    let mut gaps = String::from("player,type,gain\n");
    for (j, row) in gap.per_type.iter().enumerate() {
        for (t, g) in row.iter().enumerate() {
            let _ = writeln!(gaps, "{j},{},{g}", game.types(j)[t]);
        }
    }
    let mut summary = String::new();
    let _ = writeln!(summary, "scenario         {}", l.scenario.name);
    let _ = writeln!(summary, "histories        {}", game.nodes().len());
    let _ = writeln!(summary, "bid grid         {} points", game.bids().len());
    if let Some((converged, n)) = dynamics {
        let _ = writeln!(summary, "best replies     {n} sweeps, converged {converged}");
    }
    let (j, t) = gap.worst;
    let _ = writeln!(summary, "largest gain     {:.6} (player {j}, type {})", gap.gap, game.types(j)[t]);
    Ok(Output {
        files: vec![("strategy_table.csv", table.to_csv(&game)), ("beliefs.csv", beliefs.to_csv(&game)), ("gap.csv", gaps)],
        summary,
        violation: None,
    })
}

/// Writes the manifest, runs the command and writes its outputs into `out`. Returns the
/// summary text; a run that finds a violated invariant still writes its files, then
/// fails with [`Failure::Invariant`].
pub fn run_experiment(manifest: &RunManifest, out: &Path) -> Result<String, Failure> {
    write_atomic(&out.join(MANIFEST_FILE), &manifest.to_json())?;
    let (seed, n, tol) = (manifest.seed, manifest.samples, manifest.tol);
    let output = match &manifest.command {
        Command::Simulate => simulate(&loaded(manifest)?, seed, n)?,
        Command::Poa => poa(&loaded(manifest)?, seed, n)?,
        Command::Verify => verify(&loaded(manifest)?, seed, n, tol)?,
        Command::Deviate { player, value } => deviate(&loaded(manifest)?, seed, n, *player, *value)?,
        Command::EmitBidfn { points } => emit_bidfn(*points)?,
        Command::Solve { types, bids, sweeps } => solve(&loaded(manifest)?, *types, *bids, *sweeps, tol)?,
    };
    for (name, contents) in &output.files {
        write_atomic(&out.join(name), contents)?;
    }
    write_atomic(&out.join("summary.txt"), &output.summary)?;
    match output.violation {
        Some(msg) => Err(Failure::Invariant(format!("{msg}\n{}", output.summary))),
        None => Ok(output.summary),
    }
}
