//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use mqsim::cable::{build_cable, in_flight, CableParams, ReducedCableParams, EXITED, INJECTED, THROUGHPUT};
use mqsim::capacity::{
    average_rate, myopic_intensity, optimize_policy, rate_term, steady_state, sweep_alpha_min, ActionGrid,
    SignalingBounds, SignalingPolicy, SolveOptions,
};
use mqsim::electron::{build_isolated_cell, fit_parameters, predict_atp, CellParams, EnvironmentProfile, FitOptions};
use mqsim::engine::{
    ensemble_mean, simulate, simulate_observed, ssa_step, stationary_distribution, time_average_occupancy, Capacity,
    Effect, EngineError, Generator, ReactionNetwork, RunLength, SimObserver, SimOptions, StateSchema, StateVector,
};
use mqsim::profile::TimeUnit;
use mqsim::quorum::{
    activation_time, build_colony_network, fit_logistic, logistic, simulate_colony, ColonyModel, QuorumParams,
    Representation,
};
use mqsim::rng;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn capacity_sweep() -> Verdict {
    let b = SignalingBounds::new(0.1, 1.0).map_err(|e| e.to_string())?;
    let grid = ActionGrid::with_myopic(&b, 201);
    let values = [0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.95];
    let rows = sweep_alpha_min(&values, 1000, &b, &grid, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let dominates = rows.iter().all(|r| r.rate_opt >= r.rate_mp);
    let increasing = rows
        .windows(2)
        .all(|w| w[1].rate_opt > w[0].rate_opt && w[1].rate_mp > w[0].rate_mp);
    let (first, last) = (rows[0].gap_pct, rows[rows.len() - 1].gap_pct);
    let gap_ok = first >= 4.0 && first >= 3.0 * last;
    check(
        dominates && increasing && gap_ok,
        format!(
            "opt>=mp {dominates}, increasing {increasing}, gap {first:.4}% at 0.05 vs {last:.2e}% at 0.95 (need >= 4% and 3x)"
        ),
    )
}

fn myopic_closed_form() -> Verdict {
    let mut r = rng::seeded(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let lo = r.random_range(0.01..1.0);
        let hi = lo * r.random_range(1.5..20.0);
        let b = SignalingBounds::new(lo, hi).map_err(|e| e.to_string())?;
        let steps = ((hi - lo) / 1e-5).floor() as usize;
        let (mut best, mut best_rate) = (lo, f64::NEG_INFINITY);
        for k in 0..=steps {
            let x = lo + k as f64 * 1e-5;
            let v = rate_term(x, 1.0, &b);
            if v > best_rate {
                best = x;
                best_rate = v;
            }
        }
        worst = worst.max((best - myopic_intensity(&b)).abs());
    }
    check(worst <= 1e-4, format!("max |grid argmax - closed form| = {worst:.2e}"))
}

fn exhaustive_optimum() -> Verdict {
    let b = SignalingBounds::new(0.1, 1.0).map_err(|e| e.to_string())?;
    let grid = ActionGrid::uniform(&b, 5);
    let xs = grid.values().to_vec();
    let mut report = Vec::new();
    let mut ok = true;
    for alpha_min in [0.05, 0.5, 0.9] {
        let p = ReducedCableParams::linear(3, alpha_min).map_err(|e| e.to_string())?;
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for code in 0..xs.len().pow(4) {
            let lambda_bar: Vec<f64> = (0..4).map(|i| xs[code / xs.len().pow(i) % xs.len()]).collect();
            let rate = average_rate(
                &SignalingPolicy {
                    lambda_bar: lambda_bar.clone(),
                },
                &p,
                &b,
            )
            .map_err(|e| e.to_string())?;
            if rate > best.0 {
                best = (rate, lambda_bar);
            }
        }
        let opt = optimize_policy(&p, &b, &grid, &SolveOptions::default()).map_err(|e| e.to_string())?;
        let same = opt.policy.lambda_bar == best.1 && (opt.rate - best.0).abs() <= 1e-12;
        ok &= same;
        report.push(format!(
            "alpha_min {alpha_min}: |diff| {:.1e}",
            (opt.rate - best.0).abs()
        ));
    }
    check(ok, format!("625 policies each; {}", report.join(", ")))
}

fn product_form() -> Verdict {
    let mut r = rng::seeded(4);
    let (mut max_abs, mut max_rel): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let e = r.random_range(1..=200usize);
        let lo = r.random_range(0.05..1.0);
        let b = SignalingBounds::new(lo, lo * r.random_range(1.5..10.0)).map_err(|e| e.to_string())?;
        let p = ReducedCableParams::linear(e, r.random_range(0.0..1.0)).map_err(|e| e.to_string())?;
        let pol = SignalingPolicy {
            lambda_bar: (0..=e).map(|_| r.random_range(b.lambda_min..b.lambda_max)).collect(),
        };
        let up: Vec<f64> = (0..e).map(|k| p.alpha[k] * pol.lambda_bar[k]).collect();
        let lu = stationary_distribution(&Generator::birth_death(&up, &p.mu[1..]).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let pf = steady_state(&pol, &p).map_err(|e| e.to_string())?;
        for (x, y) in lu.iter().zip(&pf) {
            max_abs = max_abs.max((x - y).abs());
        }
        for k in 0..e {
            let (l, rr) = (pf[k] * up[k], pf[k + 1] * p.mu[k + 1]);
            if l.max(rr) > 0.0 {
                max_rel = max_rel.max((l - rr).abs() / l.max(rr));
            }
        }
    }
    check(
        max_abs <= 1e-9 && max_rel <= 1e-12,
        format!("50 instances: max |product - nullspace| {max_abs:.1e}, detailed balance {max_rel:.1e}"),
    )
}

fn engine_statistics() -> Verdict {
    let (k, lam, mu) = (10i64, 0.8, 1.0);
    let mut schema = StateSchema::new();
    let x = schema.push("x", Capacity::Bounded(k));
    let queue = ReactionNetwork::builder(schema)
        .channel(
            "arrival",
            move |s, _| if s[x] < k { lam } else { 0.0 },
            Effect::Delta(vec![(x, 1)]),
        )
        .channel(
            "service",
            move |s, _| if s[x] > 0 { mu } else { 0.0 },
            Effect::Delta(vec![(x, -1)]),
        )
        .build()
        .map_err(|e| e.to_string())?;
    let occ = time_average_occupancy(
        &queue,
        &StateVector(vec![0]),
        RunLength::Events(100_000),
        &mut rng::seeded(5),
        11,
        |s| s[0] as usize,
    )
    .map_err(|e| e.to_string())?;
    let rho: f64 = lam / mu;
    let z: f64 = (0..=k).map(|i| rho.powi(i as i32)).sum();
    let tv: f64 = 0.5
        * (0..=k as usize)
            .map(|i| (occ[i] - rho.powi(i as i32) / z).abs())
            .sum::<f64>();

    let single = ReactionNetwork::builder(StateSchema::new())
        .channel("tick", |_, _| 2.0, Effect::Delta(vec![]))
        .build()
        .map_err(|e| e.to_string())?;
    let mut r = rng::seeded(6);
    let mut s = StateVector(vec![]);
    let mut total = 0.0;
    for _ in 0..100_000 {
        total += ssa_step(&single, &mut s, 0.0, &mut r).map_err(|e| e.to_string())?.dt;
    }
    let mean_dt = total / 1e5;

    let pair = ReactionNetwork::builder(StateSchema::new())
        .channel("one", |_, _| 3.0, Effect::Delta(vec![]))
        .channel("two", |_, _| 1.0, Effect::Delta(vec![]))
        .build()
        .map_err(|e| e.to_string())?;
    let mut hits = 0;
    for _ in 0..100_000 {
        if ssa_step(&pair, &mut s, 0.0, &mut r).map_err(|e| e.to_string())?.channel == Some(0) {
            hits += 1;
        }
    }
    let freq = hits as f64 / 1e5;
    check(
        tv <= 0.02 && (mean_dt - 0.5).abs() <= 0.02 && (freq - 0.75).abs() <= 0.01,
        format!("M/M/1/K TV {tv:.4}, mean holding {mean_dt:.4}, selection {freq:.4}"),
    )
}

fn staircase_env() -> EnvironmentProfile {
    EnvironmentProfile::stepped_donor(TimeUnit::Seconds, 80.0, 1300.0, 30.0, 12)
}

fn cme_vs_ssa() -> Verdict {
    let cell = CellParams::default();
    let env = staircase_env();
    let net = build_isolated_cell(&cell, &env).map_err(|e| e.to_string())?;
    let stats = ensemble_mean(
        &net,
        &net.schema().zero(),
        1500.0,
        10.0,
        10_000,
        6,
        &SimOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let exact = predict_atp(&cell, &env, (0, 0), &stats.times, 1.0).map_err(|e| e.to_string())?;
    let mut worst_z: f64 = 0.0;
    for (k, &e) in exact.iter().enumerate() {
        let se = stats.standard_error(k, 1);
        let diff = (stats.mean[k][1] - e).abs();
        let z = if se > 0.0 {
            diff / se
        } else if diff <= 1e-9 {
            0.0
        } else {
            f64::INFINITY
        };
        worst_z = worst_z.max(z);
    }
    let at = |t: f64| exact[stats.times.iter().position(|&s| (s - t).abs() < 1e-9).unwrap()];
    let rises = at(300.0) > at(80.0);
    let after: Vec<f64> = stats
        .times
        .iter()
        .zip(&exact)
        .filter(|(t, _)| **t >= 1300.0)
        .map(|(_, &e)| e)
        .collect();
    let worst_rise = after.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    check(
        worst_z <= 3.0 && rises && worst_rise <= 1e-9,
        format!(
            "max |z| {worst_z:.2} over {} samples; E[n] {:.3} at 80 s -> {:.3} at 300 s; largest rise after exhaustion {worst_rise:.4} (E[n] {:.3} at 1300 s -> {:.3} at 1500 s)",
            exact.len(),
            at(80.0),
            at(300.0),
            at(1300.0),
            at(1500.0)
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn activation_pairs(quanta: f64) -> Result<Vec<(f64, f64)>, String> {
    let with_quanta = |p: QuorumParams| ColonyModel::new(QuorumParams { quanta, ..p }, vec![]);
    let closed = with_quanta(QuorumParams::reference_closed()).map_err(|e| e.to_string())?;
    let open = with_quanta(QuorumParams::reference_open()).map_err(|e| e.to_string())?;
    let first = |m: &ColonyModel, seed: u64| -> Result<f64, String> {
        let tr = simulate_colony(
            m,
            Representation::Aggregate,
            24.0,
            1.0 / 6.0,
            seed,
            &SimOptions::default(),
            true,
        )
        .map_err(|e| e.to_string())?;
        Ok(activation_time(&tr, m).unwrap_or(f64::INFINITY))
    };
    (0..20u64)
        .into_par_iter()
        .map(|seed| Ok((first(&closed, seed)?, first(&open, seed)?)))
        .collect()
}

fn activation_ordering() -> Verdict {
    let mut ok = true;
    let mut report = Vec::new();
    for quanta in [1.0, 100.0] {
        let start = Instant::now();
        let pairs = activation_pairs(quanta)?;
        let earlier = pairs.iter().filter(|(c, o)| o < c).count();
        let mc = median(pairs.iter().map(|p| p.0).collect());
        let mo = median(pairs.iter().map(|p| p.1).collect());
        let pass = earlier >= 18 && (6.0..=10.0).contains(&mc) && (4.0..=8.0).contains(&mo);
        ok &= pass;
        report.push(format!(
            "quanta {quanta}: open earlier {earlier}/20, median closed {mc:.2} h, open {mo:.2} h ({:.1}s)",
            start.elapsed().as_secs_f64()
        ));
    }
    check(ok, report.join("; "))
}

struct LedgerCheck {
    events: u64,
    broken: u64,
}

impl SimObserver<StateVector> for LedgerCheck {
    fn on_event(&mut self, _t: f64, _channel: usize, s: &StateVector) -> Result<(), EngineError> {
        self.events += 1;
        if s[6] != s[1] + s[3] + s[7] + s[8] {
            self.broken += 1;
        }
        Ok(())
    }
}

fn quorum_ledger() -> Verdict {
    let model = ColonyModel::new(QuorumParams::reference_closed(), vec![]).map_err(|e| e.to_string())?;
    let net = build_colony_network(&model).map_err(|e| e.to_string())?;
    let names = net.schema().names();
    let expect = [
        "N",
        "A",
        "R_tot",
        "C_tot",
        "S_tot",
        "V_expr",
        "produced_A",
        "lost_A",
        "degraded_C",
    ];
    if names[..9] != expect {
        return Err(format!("unexpected columns {names:?}"));
    }
    let init = net.schema().state(&[("N", 1)]).map_err(|e| e.to_string())?;
    let mut obs = LedgerCheck { events: 0, broken: 0 };
    let opts = SimOptions { event_cap: 12_000_000 };
    let tr = simulate_observed(&net, &init, 12.0, 1.0 / 6.0, &mut rng::seeded(8), &opts, &mut obs)
        .map_err(|e| e.to_string())?;
    check(
        obs.events >= 10_000_000 && obs.broken == 0,
        format!(
            "{} events to t = {:.2} h, {} violations",
            obs.events,
            tr.times.last().unwrap(),
            obs.broken
        ),
    )
}

fn lumpability() -> Verdict {
    let model = ColonyModel::new(
        QuorumParams {
            beta: 1.8,
            ..QuorumParams::reference_closed()
        },
        vec![],
    )
    .map_err(|e| e.to_string())?;
    let finals = |repr: Representation, offset: u64| -> Result<Vec<Vec<f64>>, String> {
        (0..1000u64)
            .into_par_iter()
            .map(|r| {
                let tr = simulate_colony(&model, repr, 2.0, 0.5, offset + r, &SimOptions::default(), false)
                    .map_err(|e| e.to_string())?;
                Ok(tr.last()[..5].iter().map(|&v| v as f64).collect())
            })
            .collect()
    };
    let agg = finals(Representation::Aggregate, 0)?;
    let per = finals(Representation::PerCell, 0)?;
    let moments = |rows: &[Vec<f64>], c: usize| {
        let n = rows.len() as f64;
        let m = rows.iter().map(|r| r[c]).sum::<f64>() / n;
        let v = rows.iter().map(|r| (r[c] - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v / n)
    };
    let mut worst: f64 = 0.0;
    let mut report = Vec::new();
    for (c, name) in ["N", "A", "R_tot", "C_tot", "S_tot"].iter().enumerate() {
        let (ma, va) = moments(&agg, c);
        let (mp, vp) = moments(&per, c);
        let se = (va + vp).sqrt();
        let z = if se > 0.0 {
            (ma - mp).abs() / se
        } else if ma == mp {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z);
        report.push(format!("{name} {ma:.1}/{mp:.1}"));
    }
    check(
        worst <= 3.0,
        format!("max |z| {worst:.2}; aggregate/per-cell means {}", report.join(", ")),
    )
}

struct CableLedger<'a> {
    net: &'a ReactionNetwork,
    cols: [usize; 3],
    broken: u64,
}

impl SimObserver<StateVector> for CableLedger<'_> {
    fn on_event(&mut self, _t: f64, _channel: usize, s: &StateVector) -> Result<(), EngineError> {
        if s[self.cols[0]] != in_flight(self.net, s) + s[self.cols[1]] + s[self.cols[2]] {
            self.broken += 1;
        }
        Ok(())
    }
}

fn cable_conservation() -> Verdict {
    let cell = CellParams {
        rho: 0.05,
        zeta: 0.02,
        beta: 0.01,
        m_ch: 5,
        n_axp: 5,
        n_e: 1,
    };
    let mut p = CableParams::uniform(
        4,
        cell.clone(),
        EnvironmentProfile::constant(TimeUnit::Seconds, 0.0, 1.0),
        4,
        0.3,
        0.3,
    );
    p.profiles[0] = staircase_env();
    let net = build_cable(&p).map_err(|e| e.to_string())?;
    let cols = [INJECTED, EXITED, THROUGHPUT].map(|n| net.schema().index(n).unwrap());
    let (mut broken, mut events, mut thr) = (0u64, 0u64, 0i64);
    for seed in 0..50 {
        let mut obs = CableLedger {
            net: &net,
            cols,
            broken: 0,
        };
        let tr = simulate_observed(
            &net,
            &net.schema().zero(),
            1500.0,
            10.0,
            &mut rng::seeded(seed),
            &SimOptions::default(),
            &mut obs,
        )
        .map_err(|e| e.to_string())?;
        broken += obs.broken
            + tr.samples
                .iter()
                .filter(|s| s[cols[0]] != in_flight(&net, s) + s[cols[1]] + s[cols[2]])
                .count() as u64;
        events += tr.meta.events;
        thr += tr.last()[cols[2]];
    }

    let env = staircase_env();
    let one =
        build_cable(&CableParams::uniform(1, cell.clone(), env.clone(), 4, 0.0, 0.0)).map_err(|e| e.to_string())?;
    let iso = build_isolated_cell(&cell, &env).map_err(|e| e.to_string())?;
    let mut mismatches = 0;
    for t in [0.0, 100.0, 700.0, 1400.0] {
        for m in 0..=cell.m_ch {
            for n in 0..=cell.n_axp {
                for name in ["carrier_arrival", "atp_synthesis", "atp_consumption"] {
                    if iso.rate(name, &[m, n], t) != one.rate(&format!("cell1.{name}"), &[m, n, 0, 0, 0, 0], t) {
                        mismatches += 1;
                    }
                }
                for extra in ["atp_synthesis_relay", "membrane_synthesis", "membrane_synthesis_relay"] {
                    if one.rate(&format!("cell1.{extra}"), &[m, n, 0, 0, 0, 0], t) != Some(0.0) {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    let a = simulate(
        &one,
        &one.schema().zero(),
        1500.0,
        10.0,
        &mut rng::seeded(3),
        &SimOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let b = simulate(
        &iso,
        &iso.schema().zero(),
        1500.0,
        10.0,
        &mut rng::seeded(3),
        &SimOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let same_path = a.samples.iter().zip(&b.samples).all(|(x, y)| x[..2] == y[..]);
    check(
        broken == 0 && mismatches == 0 && same_path,
        format!(
            "N=4: {events} events over 50 seeds, {thr} electrons delivered, {broken} violations; N=1: {mismatches} rate mismatches, same path {same_path}"
        ),
    )
}

fn fits() -> Verdict {
    let truth = CellParams {
        rho: 0.02,
        zeta: 0.015,
        beta: 0.006,
        ..CellParams::default()
    };
    let env = staircase_env();
    let times: Vec<f64> = (0..=150).map(|k| k as f64 * 10.0).collect();
    let atp = predict_atp(&truth, &env, (0, 0), &times, 1.0).map_err(|e| e.to_string())?;
    let observed: Vec<(f64, f64)> = times.iter().copied().zip(atp).collect();
    let fit =
        fit_parameters(&observed, &env, &CellParams::default(), &FitOptions::default()).map_err(|e| e.to_string())?;
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    let cell_err = [
        rel(fit.params.rho, truth.rho),
        rel(fit.params.zeta, truth.zeta),
        rel(fit.params.beta, truth.beta),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let series: Vec<(f64, f64)> = (0..=24)
        .map(|h| (h as f64, logistic(h as f64, 0.65, 8e8, 1e6)))
        .collect();
    let g = fit_logistic(&series).map_err(|e| e.to_string())?;
    let growth_err = rel(g.rho_max, 0.65).max(rel(g.capacity, 8e8));
    check(
        cell_err <= 0.05 && growth_err <= 0.01,
        format!(
            "cell fit max rel error {cell_err:.2e} ({} iterations); logistic max rel error {growth_err:.2e}",
            fit.iterations
        ),
    )
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mqsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "`mqsim {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn reproducibility() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = configs_dir();
    let cfg = |name: &str| configs.join(name).to_string_lossy().into_owned();

    let cell_text = std::fs::read_to_string(configs.join("cell.cfg")).map_err(|e| e.to_string())?;
    let env = staircase_env();
    let times: Vec<f64> = (0..=30).map(|k| k as f64 * 50.0).collect();
    let atp = predict_atp(
        &CellParams {
            rho: 0.02,
            ..CellParams::default()
        },
        &env,
        (0, 0),
        &times,
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let mut csv = String::from("t,atp\n");
    for (t, a) in times.iter().zip(&atp) {
        csv += &format!("{t},{a}\n");
    }
    std::fs::write(dir.path().join("observed.csv"), csv).map_err(|e| e.to_string())?;
    let fit_cfg = dir.path().join("fit.cfg");
    std::fs::write(
        &fit_cfg,
        format!("{cell_text}\n[fit]\nobserved = \"observed.csv\"\nmax_iter = 60\n"),
    )
    .map_err(|e| e.to_string())?;
    let fit_cfg = fit_cfg.to_string_lossy().into_owned();

    let jobs: Vec<(&str, Vec<String>)> = vec![
        (
            "cell_simulate",
            vec!["cell".into(), "simulate".into(), "--config".into(), cfg("cell.cfg")],
        ),
        (
            "cell_fit",
            vec!["cell".into(), "fit".into(), "--config".into(), fit_cfg],
        ),
        (
            "cable_simulate",
            vec!["cable".into(), "simulate".into(), "--config".into(), cfg("cable.cfg")],
        ),
        (
            "reduced_simulate",
            vec![
                "reduced".into(),
                "simulate".into(),
                "--config".into(),
                cfg("reduced.cfg"),
            ],
        ),
        (
            "capacity_solve",
            vec!["capacity".into(), "solve".into(), "--config".into(), cfg("figure6.cfg")],
        ),
        (
            "capacity_sweep",
            vec!["capacity".into(), "sweep".into(), "--config".into(), cfg("figure6.cfg")],
        ),
        (
            "quorum_simulate",
            vec![
                "quorum".into(),
                "simulate".into(),
                "--config".into(),
                cfg("paper-open.cfg"),
                "--runs".into(),
                "3".into(),
            ],
        ),
        (
            "quorum_fit_growth",
            vec![
                "quorum".into(),
                "fit-growth".into(),
                "--config".into(),
                cfg("growth.cfg"),
            ],
        ),
    ];
    let mut identical = 0;
    let mut failures = Vec::new();
    for (name, mut args) in jobs {
        let out = format!("{name}.csv");
        args.extend(["--out".to_string(), out.clone()]);
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        // a fit that stops early still writes its output
        if let Err(e) = run_cli(dir.path(), &argv) {
            if !dir.path().join(&out).exists() {
                failures.push(e);
                continue;
            }
        }
        let first = std::fs::read(dir.path().join(&out)).map_err(|e| e.to_string())?;
        let manifest = format!("{out}.manifest.json");
        let replayed = format!("{name}.replay.csv");
        let _ = run_cli(dir.path(), &["replay", &manifest, "--out", &replayed]);
        match std::fs::read(dir.path().join(&replayed)) {
            Ok(second) if second == first => identical += 1,
            Ok(_) => failures.push(format!("{name}: replay differs")),
            Err(e) => failures.push(format!("{name}: no replay output ({e})")),
        }
    }
    check(
        failures.is_empty(),
        format!(
            "{identical}/8 subcommands byte-identical on replay{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!("; {}", failures.join("; "))
            }
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 12] = [
        ("capacity sweep shape", capacity_sweep),
        ("myopic closed form", myopic_closed_form),
        ("optimizer exactness", exhaustive_optimum),
        ("product-form steady state", product_form),
        ("engine statistics", engine_statistics),
        ("master equation vs simulation", cme_vs_ssa),
        ("activation ordering and timing", activation_ordering),
        ("quorum ledger", quorum_ledger),
        ("lumpability", lumpability),
        ("cable conservation", cable_conservation),
        ("fit self-consistency", fits),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}  {name}: {detail} [{secs:.1}s]", k + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
