//! Acceptance suite: runs the eight criteria in order and prints one line per criterion.

use std::fs;
use std::path::Path;
use std::process::{Command as Process, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use seqauction::analytic::{first_round_bid, foc_residual, inefficiency_probability, interim_first_round_utility, solve_foc_ode, ClosedFormBid};
use seqauction::combinat::{
    greedy_max_basis, optimal_assignment, participation_matching, AnyMatroid, GraphicMatroid, Matroid, TransversalMatroid, UniformMatroid,
};
use seqauction::engine::{run_auction, ConstantBid, CutPolicy, InfoPolicy, Market, MyopicHalving, Scenario, Strategy, TieRule, Truthful};
use seqauction::metrics::{
    bluff_deviation_utility, deviation_bid_fit, estimate_poa, losing_rounds_agree, sample_deviation_bid, verify_bne, default_menu,
};
use seqauction::model::{DiscreteTable, Marginal, RngStream, ScalarDist, TypeDistribution};
use seqauction::solver::{
    apply_plan, bayes_update, epsilon_bne_gap, evaluate, DiscreteGame, GridSpec, OffPathRule, Row, StrategyTable,
};
use seqauction_cli::config::{load_scenario, Loaded, BUILTIN};
use seqauction_cli::manifest::{Command, RunManifest, MANIFEST_FILE};
use seqauction_cli::run::{run_experiment, verify_values};

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn builtin(name: &str) -> (Loaded, Vec<Arc<dyn Strategy>>) {
    let loaded = load_scenario(name).expect("shipped scenario loads");
    let strategies = loaded.strategies().expect("shipped strategies load");
    (loaded, strategies)
}

// ---- criterion 1 ----------------------------------------------------------------------

fn closed_form() -> Outcome {
    let endpoint = (first_round_bid(1.0).unwrap() - (1.0 - 2f64.ln())).abs();
    let foc = (1..=1000).map(|k| foc_residual(&ClosedFormBid, k as f64 / 1000.0).abs()).fold(0.0, f64::max);
    let grid: Vec<f64> = (1..=1000).map(|k| k as f64 / 1000.0).collect();
    let ode = solve_foc_ode(&grid).unwrap().sup_distance(|v| first_round_bid(v).unwrap(), 0.01, 1.0);
    check(
        endpoint <= 1e-10 && foc <= 1e-8 && ode <= 1e-6,
        format!("|b(1) - (1 - ln 2)| = {endpoint:.1e}, max FOC residual {foc:.1e}, ODE sup distance {ode:.1e}"),
    )
}

// ---- criterion 2 ----------------------------------------------------------------------

fn first_round_equilibrium() -> Outcome {
    let step = 1.0 / 50.0;
    let grid: Vec<f64> = (1..=50).map(|k| k as f64 * step).collect();
    let mut worst_shortfall = 0.0f64;
    for &v in &grid {
        let utilities: Vec<f64> = grid.iter().map(|&x| interim_first_round_utility(v, x, 1e-9).unwrap()).collect();
        let top = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let near = grid
            .iter()
            .zip(&utilities)
            .filter(|(&x, _)| (x - v).abs() <= step + 1e-12)
            .map(|(_, &u)| u)
            .fold(f64::NEG_INFINITY, f64::max);
        worst_shortfall = worst_shortfall.max(top - near);
    }
    let interim_ok = worst_shortfall <= 4e-9;

    let (l, strategies) = builtin("three-bidder-two-items");
    let menu = default_menu(&l.scenario);
    let own = verify_values(&l.scenario.dist);
    let report = verify_bne(&l.scenario, &strategies, &menu, &own, &RngStream::new(l.file.seed), 100_000, 0.01).unwrap();
    let flagged = report.flagged().count();
    let largest = report.rows.iter().map(|r| r.gain).fold(f64::NEG_INFINITY, f64::max);
    check(
        interim_ok && menu.len() >= 200 && flagged == 0,
        format!(
            "interim maximum within one grid step of truth (shortfall {worst_shortfall:.1e}); {} deviations x {} cells at n = 1e5: {flagged} flagged, largest gain {largest:.4}",
            menu.len(),
            own.iter().map(Vec::len).sum::<usize>()
        ),
    )
}

// ---- criterion 3 ----------------------------------------------------------------------

/// Composite Simpson weights on `[0, 1]` with `intervals` (even) sub-intervals.
fn simpson(intervals: usize) -> Vec<(f64, f64)> {
    let h = 1.0 / intervals as f64;
    (0..=intervals)
        .map(|k| {
            let w = if k == 0 || k == intervals { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            (k as f64 * h, w * h / 3.0)
        })
        .collect()
}

/// Probability that the last item goes to the first-round loser although the bidder who
/// sat out values it more. With winner value `w` and loser value `l = w s`, the sitting-out
/// bidder must lie between `l` and the value that matches the loser's bid,
/// `l / sqrt(1 - s^2 + w^2 s^2)`; the ordered pair `(w, l)` has density 2.
fn misallocation_integral() -> f64 {
    let nodes = simpson(400);
    let mut total = 0.0;
    for &(w, ww) in &nodes {
        for &(s, ws) in &nodes {
            let l = w * s;
            let cross = (l / (1.0 - s * s + w * w * s * s).sqrt()).min(1.0);
            total += ww * ws * 2.0 * w * (cross - l);
        }
    }
    total
}

fn inefficiency() -> Outcome {
    let e = inefficiency_probability(&RngStream::new(20130604), 1_000_000).unwrap();
    let (lo, hi) = e.ci();
    let exact = misallocation_integral();
    check(
        lo > 0.0 && e.contains(exact),
        format!("estimate {:.5} (95% CI {lo:.5} .. {hi:.5}), integral {exact:.5}", e.mean),
    )
}

// ---- criterion 4 ----------------------------------------------------------------------

fn matching_bound() -> Outcome {
    let mut rng = RngStream::new(41);
    let bids: Vec<f64> = (0..1_000_000).map(|_| sample_deviation_bid(0.8, &mut rng)).collect();
    let fit = deviation_bid_fit(&bids, 0.8, 50);

    let mut chain_ok = true;
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for name in ["three-bidder-two-items", "single-value-bipartite"] {
        let (l, strategies) = builtin(name);
        let values = verify_values(&l.scenario.dist);
        for (player, own) in values.iter().enumerate() {
            for &x in own {
                let row = l.scenario.dist.row_from_scalar(player, x).unwrap();
                let out = bluff_deviation_utility(&l.scenario, &strategies, player, &row, &RngStream::new(l.file.seed + 1), 100_000).unwrap();
                chain_ok &= out.bound_holds(3.0);
                worst = worst.min(out.excess_mean / out.excess_stderr.max(f64::MIN_POSITIVE));
                checked += 1;
            }
        }
    }

    let (l, strategies) = builtin("three-bidder-two-items");
    let poa = estimate_poa(&l.scenario, &strategies, &RngStream::new(l.file.seed), 1_000_000).unwrap();
    let ratio = poa.ratio.unwrap_or(f64::NAN);
    let half = poa.half_width().unwrap_or(f64::INFINITY);
    check(
        fit.p_value > 0.01 && chain_ok && ratio > 1.0 && ratio <= 3.16 && half <= 0.02,
        format!(
            "grab-bid fit p = {:.3}; bluff chain on {checked} cells, worst margin {worst:.2} sigma; ratio {ratio:.5} ± {half:.5}",
            fit.p_value
        ),
    )
}

// ---- criterion 5 ----------------------------------------------------------------------

fn random_matroid(rng: &mut RngStream, n: usize) -> AnyMatroid {
    match rng.index(3) {
        0 => {
            let vertices = 2 + rng.index(n);
            let edges = (0..n).map(|_| (rng.index(vertices), rng.index(vertices))).collect();
            AnyMatroid::Graphic(GraphicMatroid::with_vertices(vertices, edges).unwrap())
        }
        1 => {
            let right = 1 + rng.index(n);
            let edges: Vec<(usize, usize)> =
                (0..n).flat_map(|e| (0..right).map(move |r| (e, r))).filter(|_| rng.uniform() < 0.4).collect();
            AnyMatroid::Transversal(TransversalMatroid::new(n, right, &edges).unwrap())
        }
        _ => AnyMatroid::Uniform(UniformMatroid::new(n, rng.index(n + 1)).unwrap()),
    }
}

fn matroid_scenario(m: AnyMatroid, cuts: CutPolicy) -> Scenario {
    let n = m.ground_size();
    let dist = TypeDistribution::uniform_scalars(0.0, 1.0, vec![vec![1.0]; n]).unwrap();
    Scenario::new("random", Market::MatroidCut { matroid: Arc::new(m), cuts }, dist, InfoPolicy::WinnerPrice, TieRule::UniformRandom).unwrap()
}

fn matroid_bound() -> Outcome {
    let (l, strategies) = builtin("triangle-matroid");
    let poa = estimate_poa(&l.scenario, &strategies, &RngStream::new(l.file.seed), 1_000_000).unwrap();
    let ratio = poa.ratio.unwrap_or(f64::NAN);

    let mut rng = RngStream::new(51);
    let mut matched = 0;
    let traces = 10_000;
    for k in 0..traces {
        let n = 1 + rng.index(10);
        let m = random_matroid(&mut rng, n);
        let sc = matroid_scenario(m.clone(), if k % 2 == 0 { CutPolicy::Cospan } else { CutPolicy::Explicit(Vec::new()) });
        let profile: Vec<Arc<dyn Strategy>> = (0..n)
            .map(|_| match rng.index(3) {
                0 => Arc::new(Truthful) as Arc<dyn Strategy>,
                1 => Arc::new(MyopicHalving),
                _ => Arc::new(ConstantBid(rng.uniform())),
            })
            .collect();
        let trace = run_auction(&sc, &profile, &sc.dist.sample(&rng.split(k)), &rng.split(traces + k)).unwrap();
        let weights: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        if participation_matching(&trace.participant_sets(), &greedy_max_basis(&m, &weights)).is_ok() {
            matched += 1;
        }
    }

    let mut pairs = 0;
    let mut equal = 0;
    let mut s = 0u64;
    while pairs < 1000 {
        let stream = RngStream::new(52).split(s);
        s += 1;
        let player = stream.split(0).index(3);
        let values = l.scenario.dist.sample(&stream.split(1));
        let eq = run_auction(&l.scenario, &strategies, &values, &stream.split(2)).unwrap();
        let mut deviating = strategies.clone();
        deviating[player] = Arc::new(ConstantBid(sample_deviation_bid(values.scalar(player), &mut stream.split(3))));
        let dev = run_auction(&l.scenario, &deviating, &values, &stream.split(2)).unwrap();
        if eq.allocation.has_won(player) || dev.allocation.has_won(player) {
            continue;
        }
        pairs += 1;
        let same_public = eq.rounds.len() == dev.rounds.len()
            && eq.rounds.iter().zip(&dev.rounds).all(|(a, b)| a.participants == b.participants && a.winners == b.winners && a.prices == b.prices);
        if same_public && eq.others_bids(player) == dev.others_bids(player) && losing_rounds_agree(&eq, &dev, player) {
            equal += 1;
        }
    }
    check(
        ratio > 1.0 && ratio <= 2.58 && matched == traces && equal == pairs,
        format!("triangle ratio {ratio:.5} ± {:.5}; matchings {matched}/{traces}; transparent pairs {equal}/{pairs}", poa.half_width().unwrap_or(f64::NAN)),
    )
}

// ---- criterion 6 ----------------------------------------------------------------------

fn subset(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask & (1 << b) != 0).collect()
}

fn exhaustive_best_weight(m: &AnyMatroid, weights: &[f64]) -> f64 {
    let n = m.ground_size();
    let indep: Vec<u32> = (0..1u32 << n).filter(|&mask| m.is_independent(&subset(mask))).collect();
    let rank = indep.iter().map(|x| x.count_ones()).max().unwrap_or(0);
    indep
        .iter()
        .filter(|x| x.count_ones() == rank)
        .map(|&x| subset(x).iter().map(|&e| weights[e]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn best_by_permutation(values: &[Vec<f64>]) -> f64 {
    fn go(values: &[Vec<f64>], row: usize, used: &mut [bool]) -> f64 {
        if row == values.len() {
            return 0.0;
        }
        let mut best = go(values, row + 1, used);
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                best = best.max(values[row][c] + go(values, row + 1, used));
                used[c] = false;
            }
        }
        best
    }
    let cols = values[0].len();
    if values.len() <= cols {
        go(values, 0, &mut vec![false; cols])
    } else {
        let transposed: Vec<Vec<f64>> = (0..cols).map(|c| values.iter().map(|r| r[c]).collect()).collect();
        go(&transposed, 0, &mut vec![false; values.len()])
    }
}

fn oracles() -> Outcome {
    let mut rng = RngStream::new(61);
    let mut basis_mismatch = 0;
    for _ in 0..500 {
        let n = 1 + rng.index(12);
        let m = random_matroid(&mut rng, n);
        let weights: Vec<f64> = (0..n).map(|_| rng.index(6) as f64 / 5.0).collect();
        let basis = greedy_max_basis(&m, &weights);
        let total: f64 = basis.iter().map(|&e| weights[e]).sum();
        if !m.is_independent(&basis) || (total - exhaustive_best_weight(&m, &weights)).abs() > 1e-12 {
            basis_mismatch += 1;
        }
    }
    let mut assignment_mismatch = 0;
    for _ in 0..500 {
        let (rows, cols) = (1 + rng.index(8), 1 + rng.index(8));
        let values: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.uniform()).collect()).collect();
        if (optimal_assignment(&values).welfare() - best_by_permutation(&values)).abs() > 1e-12 {
            assignment_mismatch += 1;
        }
    }
    check(
        basis_mismatch == 0 && assignment_mismatch == 0,
        format!("greedy basis mismatches {basis_mismatch}/500, assignment mismatches {assignment_mismatch}/500"),
    )
}

// ---- criterion 7 ----------------------------------------------------------------------

fn small_game(rng: &mut RngStream) -> DiscreteGame {
    let marginals = [vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 1.0]]
        .into_iter()
        .map(|interest| {
            let lo = 0.1 + 0.4 * rng.uniform();
            let hi = lo + 0.1 + 0.4 * rng.uniform();
            let p = 0.2 + 0.6 * rng.uniform();
            Marginal::Scalar { dist: ScalarDist::Discrete(DiscreteTable::new(vec![lo, hi], vec![p, 1.0 - p]).unwrap()), interest }
        })
        .collect();
    let market = Market::Matching { items: 2, groups: vec![vec![0], vec![1]], single_value: true };
    let sc = Scenario::new("small", market, TypeDistribution::independent(marginals).unwrap(), InfoPolicy::WinnerPrice, TieRule::LowestIndex)
        .unwrap();
    DiscreteGame::from_scenario(&sc, GridSpec { types: 2, bids: 3, landmarks: false, history_cap: 10_000 }).unwrap()
}

/// Posterior marginals by enumerating type profiles and every bid vector of every round.
fn brute_posterior(game: &DiscreteGame, table: &StrategyTable, history: &[(usize, usize)]) -> Option<Vec<Vec<f64>>> {
    let players = game.players();
    let nb = game.bids().len();
    let priors: Vec<Vec<f64>> = (0..players).map(|j| game.prior_marginal(j)).collect();
    let mut post: Vec<Vec<f64>> = priors.iter().map(|p| vec![0.0; p.len()]).collect();
    let mut total = 0.0;
    let count: usize = priors.iter().map(Vec::len).product();
    for code in 0..count {
        let mut rest = code;
        let types: Vec<usize> = priors
            .iter()
            .map(|p| {
                let t = rest % p.len();
                rest /= p.len();
                t
            })
            .collect();
        let mut weight: f64 = types.iter().enumerate().map(|(j, &t)| priors[j][t]).product();
        let mut id = 0;
        for &(winner, price) in history {
            let parts = game.node(id).participants.clone();
            let mut p = 0.0;
            for bids in 0..nb.pow(parts.len() as u32) {
                let vector: Vec<usize> = (0..parts.len()).map(|k| bids / nb.pow(k as u32) % nb).collect();
                let top = *vector.iter().max().unwrap();
                let first = parts[vector.iter().position(|&b| b == top).unwrap()];
                if top == price && first == winner {
                    p += parts.iter().zip(&vector).map(|(&j, &b)| table.prob(id, j, types[j], b)).product::<f64>();
                }
            }
            weight *= p;
            let pos = parts.iter().position(|&j| j == winner).unwrap();
            match game.node(id).child(pos, price, nb) {
                Some(next) => id = next,
                None => break,
            }
        }
        total += weight;
        for (j, &t) in types.iter().enumerate() {
            post[j][t] += weight;
        }
    }
    (total > 0.0).then(|| post.into_iter().map(|row| row.into_iter().map(|x| x / total).collect()).collect())
}

fn solver() -> Outcome {
    let (l, strategies) = builtin("three-bidder-two-items");
    let game = DiscreteGame::from_scenario(&l.scenario, GridSpec::default()).unwrap();
    let table = StrategyTable::from_strategies(&game, &strategies).unwrap();
    let report = epsilon_bne_gap(&game, &table);
    let step = 1.0 / (GridSpec::default().bids - 1) as f64;

    let mut replaced_gap = 0.0f64;
    for player in 0..game.players() {
        let mut better = table.clone();
        for t in 0..game.types(player).len() {
            apply_plan(&mut better, &evaluate(&game, &table, player, t));
        }
        let after = epsilon_bne_gap(&game, &better);
        replaced_gap = replaced_gap.max(after.per_type[player].iter().copied().fold(0.0, f64::max));
    }

    let mut rng = RngStream::new(71);
    let mut worst = 0.0f64;
    let mut compared = 0;
    for _ in 0..50 {
        let game = small_game(&mut rng);
        let eps = if rng.uniform() < 0.5 { 0.0 } else { 0.1 * rng.uniform() };
        let table = StrategyTable::from_fn(&game, |_, _, _| {
            let raw: Vec<f64> = (0..3).map(|_| if rng.uniform() < 0.3 { 0.0 } else { rng.uniform() }).collect();
            let s: f64 = raw.iter().sum();
            if s == 0.0 { Row::Pure(0) } else { Row::mixed(raw.iter().map(|x| x / s).collect()).unwrap() }
        })
        .with_epsilon(eps)
        .unwrap();
        for node in game.nodes() {
            let Some(brute) = brute_posterior(&game, &table, &node.history) else { continue };
            let row = bayes_update(&game, &table, &node.history, OffPathRule::RevertToPrior).unwrap();
            for (a, b) in row.marginals.iter().flatten().zip(brute.iter().flatten()) {
                worst = worst.max((a - b).abs());
            }
            compared += 1;
        }
    }
    check(
        report.gap <= 5.0 * step && replaced_gap == 0.0 && worst <= 1e-10,
        format!(
            "gap {:.5} (bound {:.2}); largest gap after best replies {replaced_gap:e}; {compared} posteriors, max error {worst:.1e}",
            report.gap,
            5.0 * step
        ),
    )
}

// ---- criterion 8 ----------------------------------------------------------------------

fn rerun(manifest: &Path, out: &Path) -> i32 {
    Process::new(env!("CARGO_BIN_EXE_seqauction"))
        .args(["rerun", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap()
        .status
        .code()
        .unwrap_or(-1)
}

fn determinism() -> Outcome {
    let mut compared = 0;
    let mut differing = Vec::new();
    let mut jobs: Vec<RunManifest> = Vec::new();
    for (name, _) in BUILTIN {
        let mut file = load_scenario(name).unwrap().file;
        let seed = file.seed;
        for (command, samples) in [
            (Command::Simulate, 2000),
            (Command::Poa, 5000),
            (Command::Verify, 200),
            (Command::Deviate { player: 2, value: 0.8 }, 5000),
            (Command::Solve { types: 11, bids: 11, sweeps: 2 }, 1000),
        ] {
            file.samples = samples;
            jobs.push(RunManifest::new(command, Some(name.to_string()), Some(file.clone()), seed, samples, 0.01));
        }
    }
    jobs.push(RunManifest::new(Command::EmitBidfn { points: 101 }, None, None, 0, 0, 0.0));
    for job in jobs {
        let (first, second) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let _ = run_experiment(&job, first.path());
        let code = rerun(&first.path().join(MANIFEST_FILE), second.path());
        for file in job.command.outputs() {
            compared += 1;
            let (a, b) = (fs::read(first.path().join(file)), fs::read(second.path().join(file)));
            if !matches!((&a, &b), (Ok(x), Ok(y)) if x == y) || code < 0 {
                differing.push(format!("{:?}/{file}", job.command));
            }
        }
    }
    check(differing.is_empty(), format!("{compared} files compared, differing: {differing:?}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("closed-form first-round bid", Duration::from_secs(1), closed_form),
        ("first-round equilibrium and deviation search", Duration::from_secs(300), first_round_equilibrium),
        ("two-round inefficiency", Duration::from_secs(120), inefficiency),
        ("matching-market deviation bound", Duration::from_secs(600), matching_bound),
        ("matroid cut auction bound", Duration::from_secs(600), matroid_bound),
        ("combinatorial oracles", Duration::from_secs(60), oracles),
        ("discretised solver", Duration::from_secs(300), solver),
        ("manifest determinism", Duration::MAX, determinism),
    ];
    let mut failed = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let passed = outcome.passed && elapsed < *limit;
        if !passed {
            failed += 1;
        }
        let budget = if *limit == Duration::MAX { String::new() } else { format!(" of {:.0} s", limit.as_secs_f64()) };
        println!(
            "criterion {} {}: {name}: {} [{:.2} s{budget}]",
            k + 1,
            if passed { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
