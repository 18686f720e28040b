//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uavnet::assignment::assign_from_matrix;
use uavnet::backup::{build_backup_list, BackupWeights};
use uavnet::channel::{a2g_distance, a2g_gain, a2g_snr, v2v_large_scale};
use uavnet::chselect::{select_ch, select_ch_vmasc, Criteria, ResidualModel, Thresholds};
use uavnet::domain::{AirPoint, Cam, RoadPoint};
use uavnet::engine::Trace;
use uavnet::experiment::{run_batch, ExperimentSpec, SweepVar};
use uavnet::metrics::{
    aggregate, lambda_r, lambda_s, paired_difference, robustness_likelihood, run_metrics, LikelihoodParams,
};
use uavnet::mobility::{avg_speed, residual_path};
use uavnet::{seed_plan, BackupScoring, Direction, PathOrientation, Scheme, SimConfig, UavId, VehicleId};

const ORACLE_REL_TOL: f64 = 1e-9;
const ALGO_INSTANCES: usize = 1000;
const PAIRED_RUNS: usize = 200;
const SWEEP_RUNS: usize = 100;
const SEED_BASE: u64 = 42;
const REFERENCE_LIKELIHOOD: f64 = 0.83;
const REFERENCE_TOL: f64 = 0.15;
const MIN_WIN_FRACTION: f64 = 0.80;
const WORKERS: usize = 8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel_close(got: f64, want: f64) -> bool {
    (got - want).abs() <= ORACLE_REL_TOL * want.abs()
}

fn c1_formula_oracles() -> Outcome {
    let noise = 3.981e-15;
    let h3: VecDeque<f64> = [10.0, 12.0, 14.0].into();
    let h4: VecDeque<f64> = [10.0, 12.0, 14.0, 16.0].into();
    let p = LikelihoodParams::DEFAULT;
    let ls1 = -0.232_354_013_292_350_1;
    let cases: Vec<(&str, f64, f64)> = vec![
        ("a2g_distance overhead", a2g_distance(&AirPoint::new(500.0, 0.0, 100.0), &RoadPoint::new(500.0, 0.0)), 100.0),
        ("a2g_distance offset", a2g_distance(&AirPoint::new(0.0, 0.0, 100.0), &RoadPoint::new(300.0, 400.0)), 509.901_951_359_278_5),
        ("a2g_gain d=1", a2g_gain(1.0, 1e-5).unwrap(), 1e-5),
        ("a2g_gain d=100", a2g_gain(100.0, 1e-5).unwrap(), 1e-9),
        ("a2g_snr", a2g_snr(true, 1.0, 1e-9, noise).unwrap(), 251_193.167_545_842_8),
        ("v2v_large_scale d=1", v2v_large_scale(1.0, 1.0, 1e-5, 3.7).unwrap(), 1e-5),
        ("v2v_large_scale d=10", v2v_large_scale(10.0, 1.0, 1e-5, 3.0).unwrap(), 1e-8),
        ("avg_speed [10,12,14]", avg_speed(&h3, 3).unwrap(), 12.0),
        ("avg_speed [10,12,14,16]", avg_speed(&h4, 3).unwrap(), 14.0),
        ("residual_path v=0", residual_path(500.0, 0.0, 70.0), 1000.0),
        ("residual_path v=10", residual_path(500.0, 10.0, 70.0), 300.0),
        ("residual_path v=15", residual_path(500.0, 15.0, 70.0), -50.0),
        ("lambda_r R=0", lambda_r(0.0, 0.5).unwrap(), 0.5),
        ("lambda_r R=1", lambda_r(1.0, 0.5).unwrap(), 1.193_147_180_559_945_4),
        ("lambda_r rate=1", lambda_r(0.0, 1.0).unwrap(), 1.0),
        ("lambda_s S=1", lambda_s(1.0, 1.0, 0.1).unwrap(), ls1),
        ("lambda_s S=0.5", lambda_s(0.5, 1.0, 0.1).unwrap(), 1.017_645_986_707_65),
        ("likelihood R=0 S=1", robustness_likelihood(0.0, 1.0, &p).unwrap(), 0.812_972_175_348_935_2),
        ("likelihood R=1 S=0.5", robustness_likelihood(1.0, 0.5, &p).unwrap(), 0.325_319_760_130_115_1),
    ];
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (name, got, want) in &cases {
        worst = worst.max((got - want).abs() / want.abs());
        if !rel_close(*got, *want) {
            bad.push(format!("{name}: got {got:e}, want {want:e}"));
        }
    }
    let zero_snr = a2g_snr(false, 1.0, 1e-9, noise).unwrap() == 0.0;
    if !zero_snr {
        bad.push("a2g_snr unassigned is not 0".into());
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!("{} values, worst rel err {worst:.1e} (tol {ORACLE_REL_TOL:e}) {}", cases.len() + 1, bad.join("; ")),
    }
}

fn random_cams(rng: &mut ChaCha8Rng, n: usize) -> Vec<Cam<f64>> {
    (0..n)
        .map(|i| {
            let avg = f64::from(rng.random_range(20..100u32)) / 4.0;
            let dir = if rng.random_bool(0.5) { Direction::Forward } else { Direction::Backward };
            Cam {
                vehicle_id: VehicleId(i as u32 * 3 + 1),
                cluster_id: None,
                is_ch: false,
                pos: RoadPoint::new(rng.random_range(0.0..1000.0), 0.0),
                dir,
                speed: avg,
                avg_speed: avg,
                neighbors: (0..rng.random_range(0..6u32)).map(|k| VehicleId(1000 + k)).collect(),
            }
        })
        .collect()
}

fn c2_algorithm_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED_BASE);
    let mut failures = Vec::new();
    for inst in 0..ALGO_INSTANCES {
        // assignment
        let i = rng.random_range(1..=50usize);
        let j = rng.random_range(1..=5usize);
        let rows: Vec<Vec<f64>> =
            (0..i).map(|_| (0..j).map(|_| f64::from(rng.random_range(0..12u32))).collect()).collect();
        let ids: Vec<VehicleId> = (0..i as u32).map(VehicleId).collect();
        let uavs: Vec<UavId> = (0..j as u32).map(UavId).collect();
        let a = assign_from_matrix(&ids, &uavs, &rows).unwrap();
        for (v, row) in rows.iter().enumerate() {
            let best = (0..j).fold(0, |b, k| if row[k] > row[b] { k } else { b });
            if a.uav_of(ids[v]) != Some(uavs[best]) {
                failures.push(format!("assign #{inst}"));
                break;
            }
        }

        let n = rng.random_range(1..=20usize);
        let cams = random_cams(&mut rng, n);
        let v_cl = cams.iter().map(|c| c.avg_speed).sum::<f64>() / n as f64;

        // proposed, every candidate passing
        let model = ResidualModel::Printed { r_u: 500.0, horizon: 0.0 };
        let d = select_ch(&cams, v_cl, &model, &Thresholds { eps_d: 0.0, eps_n: 0 });
        let mut best = &cams[0];
        for c in &cams[1..] {
            let (gc, gb) = ((c.avg_speed - v_cl).abs(), (best.avg_speed - v_cl).abs());
            if gc < gb || (gc == gb && c.vehicle_id < best.vehicle_id) {
                best = c;
            }
        }
        if d.chosen != Some(best.vehicle_id) || d.degraded {
            failures.push(format!("select_ch #{inst}"));
        }

        // VMaSC
        let vel = |c: &Cam<f64>| c.dir.sign::<f64>() * c.avg_speed;
        let mut vbest = (f64::INFINITY, VehicleId(u32::MAX));
        for x in &cams {
            let total: f64 = cams.iter().filter(|y| y.vehicle_id != x.vehicle_id).map(|y| (vel(x) - vel(y)).abs()).sum();
            let score = if n > 1 { total / (n - 1) as f64 } else { 0.0 };
            if score < vbest.0 || (score == vbest.0 && x.vehicle_id < vbest.1) {
                vbest = (score, x.vehicle_id);
            }
        }
        if select_ch_vmasc(&cams).unwrap() != vbest.1 {
            failures.push(format!("vmasc #{inst}"));
        }

        // backup list, one criterion at a time
        let cand: Vec<Criteria<f64>> = cams
            .iter()
            .map(|c| Criteria {
                vehicle: c.vehicle_id,
                v_d: (c.avg_speed - v_cl).abs(),
                residual: f64::from(rng.random_range(0..20u32)) * 50.0 - 100.0,
                neighbors: c.neighbor_count(),
            })
            .collect();
        let single = [
            (BackupWeights { speed: 1.0, neighbors: 0.0, path: 0.0 }, 0),
            (BackupWeights { speed: 0.0, neighbors: 1.0, path: 0.0 }, 1),
            (BackupWeights { speed: 0.0, neighbors: 0.0, path: 1.0 }, 2),
        ];
        for (w, which) in single {
            let list = build_backup_list(&cand, &w, BackupScoring::Rank, PathOrientation::LargerIsBetter);
            let mut oracle = cand.clone();
            oracle.sort_by(|a, b| {
                let ord = match which {
                    0 => a.v_d.partial_cmp(&b.v_d).unwrap(),
                    1 => b.neighbors.cmp(&a.neighbors),
                    _ => b.residual.partial_cmp(&a.residual).unwrap(),
                };
                ord.then(a.vehicle.cmp(&b.vehicle))
            });
            let got: Vec<VehicleId> = list.vehicles().collect();
            let want: Vec<VehicleId> = oracle.iter().map(|c| c.vehicle).collect();
            if got != want {
                failures.push(format!("backup[{which}] #{inst}"));
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("{ALGO_INSTANCES} instances x 6 checks, {} mismatches {}", failures.len(), failures.iter().take(5).cloned().collect::<Vec<_>>().join(" ")),
    }
}

struct Paired {
    traces: Vec<Trace<f64>>,
    clusters: f64,
}

fn paired_runs() -> Paired {
    let cfg = SimConfig::default().validate().unwrap();
    let traces = run_batch(&cfg, &seed_plan(SEED_BASE, PAIRED_RUNS, &Scheme::ALL), WORKERS);
    Paired { traces, clusters: cfg.num_uavs as f64 }
}

fn c3_likelihood_ordering(p: &Paired) -> Outcome {
    let agg = aggregate(&p.traces, &LikelihoodParams::DEFAULT).unwrap();
    let l = |s| agg.scheme(s).unwrap().likelihood;
    let (lp, lv, lr) = (l(Scheme::Proposed), l(Scheme::Vmasc), l(Scheme::Random));
    let ordered = lp > lv && lv > lr;
    let near = (lp - REFERENCE_LIKELIHOOD).abs() <= REFERENCE_TOL;
    Outcome {
        pass: ordered && near,
        detail: format!(
            "L proposed {lp:.4} vmasc {lv:.4} random {lr:.4}; ordering {}; |proposed - {REFERENCE_LIKELIHOOD}| = {:.4} (tol {REFERENCE_TOL}) {}",
            if ordered { "ok" } else { "violated" },
            (lp - REFERENCE_LIKELIHOOD).abs(),
            if near { "ok" } else { "exceeded" },
        ),
    }
}

fn per_run<F: Fn(&Trace<f64>) -> Option<f64>>(p: &Paired, s: Scheme, f: F) -> Vec<(usize, f64)> {
    p.traces.iter().filter(|t| t.scheme == s).filter_map(|t| f(t).map(|x| (t.run, x))).collect()
}

fn c4_reselections(p: &Paired) -> Outcome {
    let per_cluster = |s| per_run(p, s, |t| Some(run_metrics(t).total as f64 / p.clusters));
    let prop = per_cluster(Scheme::Proposed);
    let mut pass = true;
    let mut parts = Vec::new();
    for other in [Scheme::Vmasc, Scheme::Random] {
        let d = paired_difference(&prop, &per_cluster(other)).unwrap();
        let ok = d.n >= 100 && d.mean < 0.0 && -d.mean > d.half_width;
        pass &= ok;
        parts.push(format!("proposed - {other} = {:+.4} +/- {:.4} (n={}) {}", d.mean, d.half_width, d.n, if ok { "ok" } else { "not significant" }));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn c5_snr(p: &Paired) -> Outcome {
    let agg = aggregate(&p.traces, &LikelihoodParams::DEFAULT).unwrap();
    let snr = |s| per_run(p, s, |t| run_metrics(t).mean_snr);
    let prop = snr(Scheme::Proposed);
    let sp = agg.scheme(Scheme::Proposed).unwrap().normalized_snr;
    let mut pass = true;
    let mut parts = vec![format!("normalized S proposed {sp:.4}")];
    for other in [Scheme::Vmasc, Scheme::Random] {
        let so = agg.scheme(other).unwrap().normalized_snr;
        let d = paired_difference(&prop, &snr(other)).unwrap();
        // lower 95% bound of the paired difference must not be negative
        let ok = sp >= so && d.n >= 100 && d.mean - d.half_width >= 0.0;
        pass &= ok;
        parts.push(format!(
            "{other} {so:.4}, paired diff {:+.3e} +/- {:.3e} (n={}) {}",
            d.mean,
            d.half_width,
            d.n,
            if ok { "ok" } else { "not established" }
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn c6_cumulative(p: &Paired) -> Outcome {
    let monotone = p.traces.iter().all(|t| run_metrics(t).cumulative.windows(2).all(|w| w[0].1 <= w[1].1));
    let finals = |s| per_run(p, s, |t| run_metrics(t).cumulative.last().map(|x| x.1 as f64));
    let (fp, fv, fr) = (finals(Scheme::Proposed), finals(Scheme::Vmasc), finals(Scheme::Random));
    let wins = fp.iter().zip(&fv).zip(&fr).filter(|((a, b), c)| a.1 <= b.1 && a.1 <= c.1).count();
    let frac = wins as f64 / fp.len() as f64;
    Outcome {
        pass: monotone && frac >= MIN_WIN_FRACTION,
        detail: format!(
            "monotone in all {} runs: {}; proposed minimal in {wins}/{} runs = {:.3} (need >= {MIN_WIN_FRACTION})",
            p.traces.len(),
            monotone,
            fp.len(),
            frac
        ),
    }
}

fn c7_vehicle_sweep() -> Outcome {
    let values: Vec<String> = [5, 10, 15, 20, 25, 30, 35].iter().map(|n: &i32| n.to_string()).collect();
    let spec = ExperimentSpec {
        base: SimConfig::default(),
        schemes: vec![Scheme::Proposed],
        sweep: SweepVar::Vehicles,
        values: values.clone(),
        runs: SWEEP_RUNS,
        seed_base: SEED_BASE,
        workers: WORKERS,
    };
    let points = spec.execute().unwrap();
    let means: Vec<f64> = points
        .iter()
        .map(|pt| pt.traces.iter().map(|t| run_metrics(t).total as f64).sum::<f64>() / pt.traces.len() as f64)
        .collect();
    let m = |i: usize| means[values.iter().position(|v| v == &i.to_string()).unwrap()];
    let rising = means[..5].windows(2).all(|w| w[1] > w[0]);
    let late = ((m(35) - m(25)) / m(25)).abs();
    let mid = ((m(25) - m(15)) / m(15)).abs();
    Outcome {
        pass: rising && late < mid,
        detail: format!(
            "means {}; rising 5..25: {rising}; rel change 25->35 {late:.3} vs 15->25 {mid:.3}",
            values.iter().zip(&means).map(|(v, m)| format!("I={v}:{m:.2}")).collect::<Vec<_>>().join(" ")
        ),
    }
}

fn c8_determinism() -> Outcome {
    let cfg = SimConfig::default().validate().unwrap();
    let plan = seed_plan(SEED_BASE, 20, &Scheme::ALL);
    let text = |w: usize| run_batch(&cfg, &plan, w).iter().map(|t| t.to_text()).collect::<Vec<_>>();
    let one = text(1);
    let again = text(1);
    let eight = text(8);
    let same = one == again && one == eight;
    Outcome { pass: same, detail: format!("{} traces; repeat identical and 1 vs 8 workers identical: {same}", one.len()) }
}

fn report(n: usize, name: &str, started: Instant, out: Outcome, budget: Duration) -> bool {
    let took = started.elapsed();
    let in_time = took <= budget;
    let pass = out.pass && in_time;
    println!(
        "criterion {n} [{}] {name}: {} ({:.2}s, budget {}s{})",
        if pass { "PASS" } else { "FAIL" },
        out.detail.trim_end(),
        took.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { ", over budget" }
    );
    pass
}

fn main() {
    let mut all = true;
    let t = Instant::now();
    all &= report(1, "formula oracles", t, c1_formula_oracles(), Duration::from_secs(1));
    let t = Instant::now();
    all &= report(2, "algorithm equivalence", t, c2_algorithm_equivalence(), Duration::from_secs(30));

    let t = Instant::now();
    let paired = paired_runs();
    all &= report(3, "likelihood ordering", t, c3_likelihood_ordering(&paired), Duration::from_secs(120));
    let t = Instant::now();
    all &= report(4, "re-selections per cluster", t, c4_reselections(&paired), Duration::from_secs(120));
    let t = Instant::now();
    all &= report(5, "CH-member SNR", t, c5_snr(&paired), Duration::from_secs(120));
    let t = Instant::now();
    all &= report(6, "cumulative re-selections", t, c6_cumulative(&paired), Duration::from_secs(120));
    let t = Instant::now();
    all &= report(7, "vehicle sweep shape", t, c7_vehicle_sweep(), Duration::from_secs(300));
    let t = Instant::now();
    all &= report(8, "determinism", t, c8_determinism(), Duration::from_secs(120));

    if !all {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
