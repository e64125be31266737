//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p sdopt-core --test acceptance -- --nocapture` to see them.
//!
//! Tests take a shared lock so their wall-clock limits are measured without
//! competing for the CPU.

mod common;

use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdopt::baseline_lp::{
    greedy_transport, simplex_solve, solve_sdlp, LinearProgram, LpStatus, Row, SdlpOptions, DEFAULT_MAX_PIVOTS,
};
use sdopt::dual::{dual_derivative, dual_value, support_interval, violation_thresholds, DualFunction, Order, ThresholdSet};
use sdopt::metrics::{cvi_exact_k2, evaluate, obj_ratio, EvaluationOptions, EvaluationReport};
use sdopt::problems::{
    portfolio_outcomes, Portfolio, PortfolioSpec, Problem, ReferenceCoupling, Transport, TransportSpec,
};
use common::{oracle, random_lp, Oracle};
use sdopt::scenario::{
    build_gaussian_mixture, random_gaussian_mixture, sample_batch, CovarianceFactor, MixtureMode, RandomMixtureParams,
    RandomSeed, ScenarioBatch, ScenarioSource, STREAM_EVALUATION, STREAM_EVALUATION_REFERENCE, STREAM_GENERATE,
};
use sdopt::solver::{build_duals, constraint_gradients, constraint_surrogate, solve, Solution, SolverConfig, Sources, Temperature};

static SERIAL: Mutex<()> = Mutex::new(());

fn verdict(id: u32, name: &str, ok: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let ok = ok && elapsed < limit;
    let tag = if ok { "PASS" } else { "FAIL" };
    println!(
        "{tag} criterion {id} ({name}): {detail} [{:.1}s of {:.0}s]",
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    );
    assert!(ok, "criterion {id} failed: {detail}");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_thresholds(r: &mut ChaCha8Rng, order: Order) -> ThresholdSet {
    let n = r.random_range(0..20);
    ThresholdSet::new(order, (0..n).map(|_| r.random_range(-5.0..5.0)).collect())
}

#[test]
fn criterion_1_dual_feasibility() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut r = rng(1);
    let mut failures = 0;
    for case in 0..1000 {
        let order = if case % 2 == 0 { Order::First } else { Order::Second };
        let tau = r.random_range(0.01..2.0);
        let u = DualFunction::new(random_thresholds(&mut r, order), tau).unwrap();
        let grid: Vec<f64> = (0..1000).map(|i| -6.0 + 12.0 * i as f64 / 999.0).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| dual_value(&u, x)).collect();
        if vals.windows(2).any(|w| w[1] < w[0]) {
            failures += 1;
            continue;
        }
        if order == Order::Second {
            let concave = (0..998).all(|i| vals[i + 1] >= 0.5 * (vals[i] + vals[i + 2]) - 1e-12);
            let far = (0..100).all(|_| {
                let (a, b) = (r.random_range(-6.0..6.0), r.random_range(-6.0..6.0));
                dual_value(&u, 0.5 * (a + b)) >= 0.5 * (dual_value(&u, a) + dual_value(&u, b)) - 1e-12
            });
            if !(concave && far) {
                failures += 1;
            }
        }
    }
    verdict(
        1,
        "dual feasibility",
        failures == 0,
        start.elapsed(),
        Duration::from_secs(10),
        &format!("{failures} of 1000 random duals broke monotonicity or concavity"),
    );
}

/// Relative error of a finite-difference estimate, with exact zeros required to match.
fn rel_err(fd: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        if fd.abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (fd - exact).abs() / exact.abs()
    }
}

fn gradient_pairs(problem: &dyn Problem, order: Order, r: &mut ChaCha8Rng, mut draw: impl FnMut(&mut ChaCha8Rng) -> (ScenarioBatch, Option<ScenarioBatch>)) -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < 100 && attempts < 10_000 {
        attempts += 1;
        let raw: Vec<f64> = (0..problem.decision_dim()).map(|_| r.random::<f64>()).collect();
        let z = problem.project(&raw);
        let (batch, reference) = draw(r);
        let temperature = if order == Order::First { Temperature::Fixed(r.random_range(0.2..2.0)) } else { Temperature::Auto };
        let duals = build_duals(problem, &z, &batch, reference.as_ref(), temperature).unwrap();
        if duals.iter().all(|d| d.thresholds().is_empty()) {
            continue;
        }
        let h = 1e-5;
        let batch = if order == Order::Second {
            // Rows whose outcome sits within reach of a kink are left out of the comparison.
            let outcomes: Vec<Vec<f64>> =
                (0..problem.constraints().len()).map(|j| problem.outcomes(j, &z, &batch).unwrap()).collect();
            let smooth: Vec<Vec<f64>> = batch
                .rows()
                .enumerate()
                .filter(|(i, row)| {
                    let reach = (2.0 * h * row.iter().map(|v| v.abs()).sum::<f64>()).max(1e-6);
                    outcomes.iter().zip(&duals).all(|(g, u)| {
                        u.thresholds().as_slice().iter().all(|eta| (g[*i] - eta).abs() > reach)
                    })
                })
                .map(|(_, row)| row.to_vec())
                .collect();
            if smooth.is_empty() {
                continue;
            }
            ScenarioBatch::from_rows(&smooth).unwrap()
        } else {
            batch
        };
        let terms = constraint_gradients(problem, &z, &batch, &duals, 1.0).unwrap();
        let mut grad = vec![0.0; z.len()];
        for t in &terms {
            grad.iter_mut().zip(t).for_each(|(g, v)| *g += v);
        }
        let norm = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut err: f64 = 0.0;
        for k in 0..z.len() {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[k] += h;
            zm[k] -= h;
            let fd = (constraint_surrogate(problem, &zp, &batch, &duals, 1.0).unwrap()
                - constraint_surrogate(problem, &zm, &batch, &duals, 1.0).unwrap())
                / (2.0 * h);
            err = err.max((fd - grad[k]).abs() / norm.max(f64::MIN_POSITIVE));
        }
        worst = worst.max(err);
        accepted += 1;
    }
    (worst, accepted)
}

#[test]
fn criterion_2_gradients() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut r = rng(2);

    // Scalar dual derivatives.
    let mut scalar_worst: f64 = 0.0;
    for case in 0..2000 {
        let order = if case % 2 == 0 { Order::First } else { Order::Second };
        let set = random_thresholds(&mut r, order);
        if set.is_empty() {
            continue;
        }
        let tau = r.random_range(0.05..2.0);
        let u = DualFunction::new(set.clone(), tau).unwrap();
        let eta = set.as_slice()[r.random_range(0..set.len())];
        let (x, h) = match order {
            Order::First => (eta + tau * r.random_range(-3.0..3.0), 1e-5 * tau),
            Order::Second => (r.random_range(-6.0..6.0), 1e-5),
        };
        if order == Order::Second && set.as_slice().iter().any(|e| (x - e).abs() <= 1e-6f64.max(2.0 * h)) {
            continue;
        }
        let fd = (dual_value(&u, x + h) - dual_value(&u, x - h)) / (2.0 * h);
        scalar_worst = scalar_worst.max(rel_err(fd, dual_derivative(&u, x)));
    }

    // Assembled constraint terms against the frozen-dual surrogate.
    let mut family_worst: f64 = 0.0;
    let mut accepted = Vec::new();
    for order in [Order::First, Order::Second] {
        let portfolio = Portfolio::new(PortfolioSpec::new(4).unwrap(), order, ReferenceCoupling::Coupled);
        let (w, n) = gradient_pairs(&portfolio, order, &mut r, |r| {
            let n = r.random_range(4..32);
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
            (ScenarioBatch::from_rows(&rows).unwrap(), None)
        });
        family_worst = family_worst.max(w);
        accepted.push(n);

        let costs: Vec<f64> = (0..6).map(|_| r.random_range(0.1..2.0)).collect();
        let transport = Transport::new(TransportSpec::new(3, 2, costs).unwrap(), order);
        let (w, n) = gradient_pairs(&transport, order, &mut r, |r| {
            let n = r.random_range(4..32);
            let demand: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| r.random_range(0.0..10.0)).collect()).collect();
            let supply: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| r.random_range(0.0..15.0)).collect()).collect();
            (ScenarioBatch::from_rows(&demand).unwrap(), Some(ScenarioBatch::from_rows(&supply).unwrap()))
        });
        family_worst = family_worst.max(w);
        accepted.push(n);
    }
    let ok = scalar_worst < 1e-5 && family_worst < 1e-5 && accepted.iter().all(|&n| n == 100);
    verdict(
        2,
        "gradients",
        ok,
        start.elapsed(),
        Duration::from_secs(30),
        &format!("worst relative error: dual {scalar_worst:.2e}, assembled {family_worst:.2e}; pairs per family/order {accepted:?}"),
    );
}

/// Dominance check in exact integer arithmetic on a 10⁴-point grid plus every
/// sample point. Samples are quarter-integers, passed as multiples of 1/4.
fn grid_violations(order: Order, dominant: &[i64], dominated: &[i64]) -> usize {
    const STEPS: i64 = 9999;
    let lo = dominant.iter().chain(dominated).min().unwrap() - 2;
    let hi = dominant.iter().chain(dominated).max().unwrap() + 2;
    // Everything is scaled by STEPS so grid points become integers.
    let grid = (0..=STEPS).map(|i| lo * STEPS + (hi - lo) * i);
    let samples = dominant.iter().chain(dominated).map(|v| v * STEPS);
    grid.chain(samples)
        .filter(|&eta| exact_violated(order, dominant, dominated, eta, STEPS))
        .count()
}

fn exact_violated(order: Order, dominant: &[i64], dominated: &[i64], eta: i64, scale: i64) -> bool {
    let h = |s: &[i64]| -> i128 {
        match order {
            Order::First => s.iter().filter(|&&x| eta >= x * scale).count() as i128,
            Order::Second => s.iter().map(|&x| (eta - x * scale).max(0) as i128).sum(),
        }
    };
    h(dominant) * dominated.len() as i128 > h(dominated) * dominant.len() as i128
}

#[test]
fn criterion_3_violation_oracle() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut r = rng(3);
    let mut mismatches = 0;
    let mut nonempty = 0;
    for _ in 0..500 {
        let side = |r: &mut ChaCha8Rng| -> Vec<i64> {
            let n = r.random_range(1..=8);
            (0..n).map(|_| r.random_range(-8..=8)).collect()
        };
        let (xq, yq) = (side(&mut r), side(&mut r));
        let (x, y): (Vec<f64>, Vec<f64>) = (
            xq.iter().map(|&v| v as f64 / 4.0).collect(),
            yq.iter().map(|&v| v as f64 / 4.0).collect(),
        );
        for order in [Order::First, Order::Second] {
            let set = violation_thresholds(order, &x, &y);
            let grid = grid_violations(order, &xq, &yq);
            if set.is_empty() != (grid == 0) {
                mismatches += 1;
            }
            if !set.is_empty() {
                nonempty += 1;
                // Thresholds are quarter-integers; confirm each one exactly.
                if set.as_slice().iter().any(|&eta| !exact_violated(order, &xq, &yq, (eta * 4.0) as i64, 1)) {
                    mismatches += 1;
                }
            }
        }
    }
    verdict(
        3,
        "violation-set oracle",
        mismatches == 0,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("{mismatches} disagreements over 1000 checks ({nonempty} nonempty sets)"),
    );
}

#[test]
fn criterion_4_lp_oracle() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut r = rng(4);
    let mut mismatches = Vec::new();
    let mut counts = [0usize; 3];
    for case in 0..200 {
        let (c, le, eq) = random_lp(&mut r);
        let mut lp = LinearProgram::new(c.clone());
        for (a, b) in &le {
            lp.add_le(Row::dense(a, *b));
        }
        for (a, b) in &eq {
            lp.add_eq(Row::dense(a, *b));
        }
        let got = simplex_solve(&lp, DEFAULT_MAX_PIVOTS).unwrap();
        let want = oracle(&c, &le, &eq);
        let agree = match (&want, got.status) {
            (Oracle::Infeasible, LpStatus::Infeasible) => {
                counts[0] += 1;
                true
            }
            (Oracle::Unbounded, LpStatus::Unbounded) => {
                counts[1] += 1;
                true
            }
            (Oracle::Optimal(v), LpStatus::Optimal) => {
                counts[2] += 1;
                let x = got.x.as_ref().unwrap();
                (got.value.unwrap() - v).abs() <= 1e-8 && lp.max_violation(x) < 1e-8
            }
            _ => false,
        };
        if !agree {
            mismatches.push(format!("case {case}: oracle {want:?}, simplex {:?} {:?}", got.status, got.value));
        }
    }
    verdict(
        4,
        "LP oracle equivalence",
        mismatches.is_empty(),
        start.elapsed(),
        Duration::from_secs(30),
        &format!(
            "{} disagreements over 200 LPs (infeasible {}, unbounded {}, optimal {}) {:?}",
            mismatches.len(),
            counts[0],
            counts[1],
            counts[2],
            mismatches.first()
        ),
    );
}

/// A random `m`-scenario batch for a `d`-asset market.
fn random_market(d: usize, m: usize, seed: u64) -> ScenarioBatch {
    let mix = random_gaussian_mixture(&RandomMixtureParams::new(d), RandomSeed(seed)).unwrap();
    sample_batch(&ScenarioSource::GaussianMixture(mix), m, &mut RandomSeed(seed).stream(STREAM_GENERATE)).unwrap()
}

#[test]
fn criterion_5_sdlp_guarantee() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut infeasible = 0;
    let mut blended = 0;
    for case in 0..20u64 {
        let d = 2 + (case as usize % 4);
        let m = [16, 32, 64][case as usize % 3];
        let batch = random_market(d, m, 500 + case);
        let spec = PortfolioSpec::new(d).unwrap();
        let y = portfolio_outcomes(&spec, spec.reference_weights(), &batch).unwrap();
        let options = SdlpOptions {
            anchor: Some(spec.reference_weights().to_vec()),
            ..SdlpOptions::default()
        };
        let sol = solve_sdlp(&batch, &y, &options).unwrap();
        let exact = sol.z.as_ref().is_some_and(|z| {
            let w = portfolio_outcomes(&spec, z, &batch).unwrap();
            violation_thresholds(Order::Second, &w, &y).is_empty()
        });
        if !exact || sol.status != LpStatus::Optimal {
            infeasible += 1;
        }
        if sol.anchor_blend > 0.0 {
            blended += 1;
        }
    }
    verdict(
        5,
        "SDLP guarantee",
        infeasible == 0,
        start.elapsed(),
        Duration::from_secs(120),
        &format!("{infeasible} of 20 solutions violated dominance; {blended} needed blending toward the reference"),
    );
}

/// Five correlated assets with yearly-scale returns, 64 scenarios.
fn fixed_market() -> ScenarioBatch {
    let means = vec![0.05, 0.08, 0.10, 0.12, 0.15];
    let sd = [0.05, 0.10, 0.15, 0.22, 0.30];
    let rho = 0.3;
    let cov = |i: usize, j: usize| sd[i] * sd[j] * if i == j { 1.0 } else { rho };
    let mut l = vec![vec![0.0f64; 5]; 5];
    for i in 0..5 {
        for j in 0..=i {
            let s = cov(i, j) - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = if i == j { s.sqrt() } else { s / l[j][j] };
        }
    }
    let mode = MixtureMode {
        weight: 1.0,
        mean: means,
        factor: CovarianceFactor::from_rows(&l).unwrap(),
    };
    let mix = build_gaussian_mixture(vec![mode]).unwrap();
    sample_batch(&ScenarioSource::GaussianMixture(mix), 64, &mut RandomSeed(2024).stream(STREAM_GENERATE)).unwrap()
}

struct Market {
    batch: ScenarioBatch,
    spec: PortfolioSpec,
    reference: Vec<f64>,
    optimum: f64,
}

fn fixed_market_with_optimum() -> Market {
    let batch = fixed_market();
    let spec = PortfolioSpec::new(5).unwrap();
    let reference = portfolio_outcomes(&spec, spec.reference_weights(), &batch).unwrap();
    let options = SdlpOptions {
        anchor: Some(spec.reference_weights().to_vec()),
        ..SdlpOptions::default()
    };
    let sol = solve_sdlp(&batch, &reference, &options).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    Market {
        optimum: sol.objective.unwrap(),
        batch,
        spec,
        reference,
    }
}

/// Pinned settings for the fixed 5-asset market.
fn market_config(iterations: usize, seed: u64) -> SolverConfig {
    SolverConfig {
        penalty_weight: 20.0,
        seed,
        init_jitter: 0.2,
        trace_every: 100,
        ..SolverConfig::new(iterations, 64, 1.0)
    }
}

fn run_market(market: &Market, iterations: usize, seed: u64) -> (Solution, f64, f64) {
    let problem = Portfolio::new(market.spec.clone(), Order::Second, ReferenceCoupling::Coupled);
    let source = ScenarioSource::CsvBacked(market.batch.clone());
    let (sol, _) = solve(&problem, &market_config(iterations, seed), &Sources::new(&source)).unwrap();
    let w = portfolio_outcomes(&market.spec, &sol.z_averaged, &market.batch).unwrap();
    let objective = w.iter().sum::<f64>() / w.len() as f64;
    let interval = support_interval(w.iter().chain(&market.reference), 0.0).unwrap();
    let cvi2 = cvi_exact_k2(&w, &market.reference, &interval).unwrap();
    (sol, objective, cvi2)
}

#[test]
fn criterion_6_end_to_end_optimality() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let market = fixed_market_with_optimum();
    let mut passing = 0;
    let mut rows = Vec::new();
    for seed in 1..=5 {
        let (_, objective, cvi2) = run_market(&market, 10_000, seed);
        let ratio = obj_ratio(objective, market.optimum).unwrap();
        if ratio <= 0.02 && cvi2 <= 0.01 {
            passing += 1;
        }
        rows.push(format!("seed {seed}: ratio {ratio:.4} cvi2 {cvi2:.4}"));
    }
    verdict(
        6,
        "end-to-end optimality",
        passing >= 4,
        start.elapsed(),
        Duration::from_secs(300),
        &format!("{passing}/5 seeds within 2% and CVI@2 <= 1% of optimum {:.5} ({})", market.optimum, rows.join("; ")),
    );
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn criterion_7_convergence_trend() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let market = fixed_market_with_optimum();
    let medians: Vec<f64> = [100, 1_000, 10_000]
        .iter()
        .map(|&t| {
            let gaps = (1..=5)
                .map(|seed| obj_ratio(run_market(&market, t, seed).1, market.optimum).unwrap())
                .collect();
            median(gaps)
        })
        .collect();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    verdict(
        7,
        "convergence trend",
        decreasing,
        start.elapsed(),
        Duration::from_secs(600),
        &format!("median gap at T = 1e2, 1e3, 1e4: {medians:.5?}"),
    );
}

struct Network {
    problem: Transport,
    demand: ScenarioSource,
    supply: ScenarioSource,
}

/// Ten regions and five warehouses at random sites; supplies cover 1.2× expected demand.
fn fixed_network() -> Network {
    let demand = random_gaussian_mixture(&RandomMixtureParams::new(10), RandomSeed(31)).unwrap();
    let raw_supply = random_gaussian_mixture(&RandomMixtureParams::new(5), RandomSeed(32)).unwrap();
    let scale = 1.2 * demand.mean().iter().sum::<f64>() / raw_supply.mean().iter().sum::<f64>();
    let modes = raw_supply
        .modes()
        .iter()
        .map(|m| MixtureMode {
            weight: m.weight,
            mean: m.mean.iter().map(|v| v * scale).collect(),
            factor: m.factor.clone(),
        })
        .collect();
    let supply = build_gaussian_mixture(modes).unwrap();
    let mut sites = RandomSeed(33).stream(STREAM_GENERATE);
    let points: Vec<(f64, f64)> = (0..15).map(|_| (sites.rng().random(), sites.rng().random())).collect();
    let mut costs = Vec::new();
    for region in &points[..10] {
        for warehouse in &points[10..] {
            costs.push(((region.0 - warehouse.0).powi(2) + (region.1 - warehouse.1).powi(2)).sqrt());
        }
    }
    Network {
        problem: Transport::new(TransportSpec::new(10, 5, costs).unwrap(), Order::Second),
        demand: ScenarioSource::GaussianMixture(demand),
        supply: ScenarioSource::GaussianMixture(supply),
    }
}

fn mean_cvi2(r: &EvaluationReport) -> f64 {
    r.constraints.iter().map(|c| c.cvi2).sum::<f64>() / r.constraints.len() as f64
}

fn network_config(seed: u64) -> SolverConfig {
    SolverConfig {
        penalty_weight: 5.0,
        seed,
        trace_every: 100,
        ..SolverConfig::new(10_000, 64, 1.0)
    }
}

#[test]
fn criterion_8_transport_sanity() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let net = fixed_network();
    let held_out = sample_batch(&net.demand, 2000, &mut RandomSeed(1).stream(STREAM_EVALUATION)).unwrap();
    let held_supply = sample_batch(&net.supply, 2000, &mut RandomSeed(1).stream(STREAM_EVALUATION_REFERENCE)).unwrap();
    let options = EvaluationOptions::default();
    let greedy = evaluate(&net.problem, &greedy_transport(net.problem.spec()), &held_out, Some(&held_supply), &options).unwrap();
    let (sol, _) = solve(&net.problem, &network_config(1), &Sources::with_reference(&net.demand, &net.supply)).unwrap();
    let ours = evaluate(&net.problem, &sol.z_averaged, &held_out, Some(&held_supply), &options).unwrap();
    let ok = mean_cvi2(&ours) <= mean_cvi2(&greedy) && ours.objective >= greedy.objective;
    verdict(
        8,
        "transport sanity",
        ok,
        start.elapsed(),
        Duration::from_secs(300),
        &format!(
            "solver cost {:.3}, CVI@2 {:.4}; greedy cost {:.3}, CVI@2 {:.4}",
            ours.objective,
            mean_cvi2(&ours),
            greedy.objective,
            mean_cvi2(&greedy)
        ),
    );
}

#[test]
fn criterion_9_determinism() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let render = || -> String {
        let market = fixed_market_with_optimum();
        let net = fixed_network();
        let problem = Portfolio::new(market.spec.clone(), Order::Second, ReferenceCoupling::Coupled);
        let source = ScenarioSource::CsvBacked(market.batch.clone());
        let mut out = format!("{:?}\n", market.optimum);
        for seed in [1, 2] {
            let (mut sol, trace) = solve(&problem, &market_config(2_000, seed), &Sources::new(&source)).unwrap();
            sol.wall_clock_secs = 0.0;
            out += &format!("{}\n{}\n", serde_json::to_string(&sol).unwrap(), serde_json::to_string(&trace).unwrap());
            let mut cfg = network_config(seed);
            cfg.iterations = 2_000;
            let (mut sol, trace) = solve(&net.problem, &cfg, &Sources::with_reference(&net.demand, &net.supply)).unwrap();
            sol.wall_clock_secs = 0.0;
            out += &format!("{}\n{}\n", serde_json::to_string(&sol).unwrap(), serde_json::to_string(&trace).unwrap());
        }
        out
    };
    let (first, second) = (render(), render());
    verdict(
        9,
        "determinism",
        first == second,
        start.elapsed(),
        Duration::from_secs(300),
        &format!("two renders of {} bytes {}", first.len(), if first == second { "match" } else { "differ" }),
    );
}
