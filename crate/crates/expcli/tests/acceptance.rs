//! Acceptance checks, one line per criterion.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p morl-exp --test acceptance -- 1 4`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use morl_core::env::{Action, RewardVector, HORIZON};
use morl_core::morl::*;
use morl_core::neural::{loss_and_gradient, Activation, Mlp, MlpArchitecture};
use morl_core::oracle::{compute_deviations, dominates, enumerate_schedules, front_membership, pareto_front};
use morl_core::seed::derive_seed;
use morl_core::sim::*;
use morl_exp::cli::main_with_args;
use morl_exp::config::ExperimentConfig;
use morl_exp::experiment::{run_experiment, MANIFEST_FILE};
use morl_exp::runlog::{is_baseline_log, read_logs};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scratch_dir() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| tempfile::tempdir().expect("temp dir")).path()
}

fn cli(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("morl-exp").chain(args.iter().copied()))
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

// 1 -------------------------------------------------------------------------

fn pareto_oracle() -> Check {
    let out = scratch_dir().join("pareto");
    let start = Instant::now();
    let code = cli(&["pareto", "--friction", "0.028", "--out", out.to_str().unwrap()]);
    let elapsed = start.elapsed();
    ensure(code == 0, || format!("pareto exited with {code}"))?;
    ensure(elapsed < Duration::from_secs(5), || format!("pareto took {elapsed:?}"))?;

    let mut reader = csv::Reader::from_path(out.join("pareto.csv")).map_err(|e| e.to_string())?;
    let rows: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    ensure(rows.len() == 16807, || format!("{} csv rows", rows.len()))?;
    let csv_front = rows.iter().filter(|r| &r[7] == "true").count();
    let svg = std::fs::read_to_string(out.join("pareto.svg")).map_err(|e| e.to_string())?;
    let highlighted = svg.matches(r#"class="front""#).count();
    ensure(highlighted == csv_front, || format!("{highlighted} highlighted markers vs {csv_front} front rows"))?;

    let outcomes = enumerate_schedules(0.028, &SurrogateParams::default()).map_err(|e| e.to_string())?;
    let front = pareto_front(&outcomes);
    let membership = front_membership(&outcomes);
    ensure(membership.iter().filter(|&&b| b).count() == csv_front, || "front size differs from csv".into())?;
    let dominated_front = front
        .iter()
        .filter(|f| outcomes.iter().any(|o| dominates(&o.reward, &f.reward)))
        .count();
    ensure(dominated_front == 0, || format!("{dominated_front} dominated front members"))?;
    let undominated_rest = outcomes
        .iter()
        .zip(&membership)
        .filter(|(o, &m)| !m && !outcomes.iter().any(|p| dominates(&p.reward, &o.reward)))
        .count();
    ensure(undominated_rest == 0, || format!("{undominated_rest} non-front outcomes not dominated"))?;
    Ok(format!("16807 schedules in {elapsed:.2?}, {} on the front, exhaustive check clean", front.len()))
}

// 2 -------------------------------------------------------------------------

fn scalarization_exactness() -> Check {
    let w = |a: f64, b: f64| WeightVector::new(a, b).unwrap();
    let cases = [
        (scalarize_harmonic([5.0, 5.0], &w(3.0, 7.0)), 5.0),
        (scalarize_harmonic([5.0, 5.0], &w(9.0, 1.0)), 5.0),
        (scalarize_harmonic([2.0, 8.0], &w(5.0, 5.0)), 3.2),
        (scalarize_harmonic([10.0, 10.0], &w(9.0, 1.0)), 10.0),
        (scalarize_arithmetic([2.0, 8.0], &w(5.0, 5.0)), 5.0),
        (scalarize_arithmetic([2.0, 8.0], &w(9.0, 1.0)), 2.6),
    ];
    for (got, want) in cases {
        ensure((got - want).abs() <= 1e-12, || format!("{got} != {want}"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100_000 {
        let r = [rng.random_range(1e-3..10.0), rng.random_range(1e-3..10.0)];
        let wv = w(rng.random_range(1e-3..10.0), rng.random_range(1e-3..10.0));
        let (am, hm) = (scalarize_arithmetic(r, &wv), scalarize_harmonic(r, &wv));
        ensure(am >= hm * (1.0 - 1e-12), || format!("AM {am} < HM {hm} at {r:?}"))?;
    }

    for _ in 0..1000 {
        let nets = (0..HORIZON)
            .map(|t| {
                let arch = architecture_for(t, 2);
                let params = (0..arch.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
                Some(Mlp::from_params(arch, params).unwrap())
            })
            .collect();
        let q = QNetSet::from_nets(nets, 2, 1);
        let t = rng.random_range(0..HORIZON);
        let s = StateFeatures::from_raw(t, (0..StateFeatures::dim(t)).map(|_| rng.random()).collect()).unwrap();
        let wv = w(rng.random_range(0.1..10.0), rng.random_range(0.1..10.0));
        let c = rng.random_range(0.01..100.0);
        for f in [Scalarization::Harmonic, Scalarization::Arithmetic] {
            let (a, b) = (goal_policy(&q, &s, &wv, f), goal_policy(&q, &s, &wv.scaled(c).unwrap(), f));
            ensure(a == b, || format!("goal policy changed under weight scale {c}: {a:?} vs {b:?}"))?;
        }
    }
    Ok("unit examples exact, AM >= HM on 1e5 vectors, scale invariance on 1e3 networks".into())
}

// 3 -------------------------------------------------------------------------

fn gradient_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let depth = rng.random_range(0..=3);
        let mut arch = MlpArchitecture::new(
            rng.random_range(1..=20),
            (0..depth).map(|_| rng.random_range(1..=50)).collect(),
            rng.random_range(1..=2),
        );
        if rng.random_bool(0.25) {
            arch.hidden_activation = Activation::Logistic;
        }
        let mut p: Vec<f64> = (0..arch.param_count()).map(|_| rng.random_range(-0.5..0.5)).collect();
        let n = rng.random_range(1..=20);
        let x = Array2::from_shape_fn((n, arch.input_dim), |_| rng.random_range(-1.0..1.0));
        let y = Array2::from_shape_fn((n, arch.output_dim), |_| rng.random_range(0.0..10.0));
        let mut grad = vec![0.0; p.len()];
        loss_and_gradient(&arch, &p, x.view(), y.view(), &mut grad);
        let mut scratch = vec![0.0; p.len()];
        for k in 0..p.len() {
            let orig = p[k];
            p[k] = orig + h;
            let up = loss_and_gradient(&arch, &p, x.view(), y.view(), &mut scratch);
            p[k] = orig - h;
            let down = loss_and_gradient(&arch, &p, x.view(), y.view(), &mut scratch);
            p[k] = orig;
            let numeric = (up - down) / (2.0 * h);
            let scale = grad[k].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((grad[k] - numeric).abs() / scale);
        }
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.2e} over 50 cases"))
}

// 4 -------------------------------------------------------------------------

fn random_net<R: Rng>(t: usize, rng: &mut R) -> Mlp {
    let arch = architecture_for(t, 2);
    let params = (0..arch.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Mlp::from_params(arch, params).unwrap()
}

fn random_state<R: Rng>(t: usize, rng: &mut R) -> StateFeatures {
    StateFeatures::from_raw(t, (0..StateFeatures::dim(t)).map(|_| rng.random()).collect()).unwrap()
}

fn update_rule_algebra() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    // Fixed point: an old network that already predicts R + γ·bootstrap.
    let arch = MlpArchitecture::new(StateFeatures::input_dim(4), vec![1], 2);
    let mut params = vec![0.0; arch.param_count()];
    let n = params.len();
    params[n - 2..].copy_from_slice(&[5.0, 8.0]);
    let old = Mlp::from_params(arch, params).unwrap();
    let mut m = SampleMemory::new();
    m.push(SampleTuple {
        t: 4,
        s: random_state(4, &mut rng),
        a: Action::new(3).unwrap(),
        s_next: None,
        reward: RewardVector::new(5.0, 8.0),
    });
    for alpha in [0.05, 0.3, 0.7, 1.0] {
        let ctx = TargetContext {
            old: Some(&old),
            next: None,
            update: UpdateConfig { alpha, gamma: 1.0 },
            reward: RewardTarget::Vector,
        };
        let off = build_targets_off_policy(&m, 4, &ctx);
        let mut prng = ChaCha8Rng::seed_from_u64(0);
        let mut policy = ExplorativePolicy {
            weights: WeightVector::new(5.0, 5.0).unwrap(),
            scalarization: Scalarization::Harmonic,
            epsilon: 0.3,
            rng: &mut prng,
        };
        let on = build_targets_on_policy(&m, 4, &ctx, &mut policy);
        ensure(off.targets.row(0).to_vec() == vec![5.0, 8.0], || format!("off fixed point {:?}", off.targets))?;
        ensure(on == off, || "rules differ at the terminal step".into())?;
    }

    let mut cases = 0;
    let mut terminal_checks = 0;
    while cases < 10_000 {
        let t = rng.random_range(0..HORIZON);
        let terminal = t + 1 == HORIZON;
        let mut m = SampleMemory::new();
        for _ in 0..50 {
            m.push(SampleTuple {
                t,
                s: random_state(t, &mut rng),
                a: Action::uniform(&mut rng),
                s_next: (!terminal).then(|| random_state(t + 1, &mut rng)),
                reward: if terminal {
                    RewardVector::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0))
                } else {
                    RewardVector::ZERO
                },
            });
        }
        let old = random_net(t, &mut rng);
        let next = (!terminal).then(|| random_net(t + 1, &mut rng));
        let ctx = TargetContext {
            old: Some(&old),
            next: next.as_ref(),
            update: UpdateConfig {
                alpha: rng.random_range(0.01..=1.0),
                gamma: rng.random_range(0.5..=1.0),
            },
            reward: RewardTarget::Vector,
        };
        let mut policy = ExplorativePolicy {
            weights: WeightVector::from_thickness_level(rng.random_range(1..=9)).unwrap(),
            scalarization: Scalarization::Harmonic,
            epsilon: rng.random(),
            rng: &mut rng,
        };
        let on = build_targets_on_policy(&m, t, &ctx, &mut policy);
        let off = build_targets_off_policy(&m, t, &ctx);
        if terminal {
            ensure(on == off, || "terminal targets differ".into())?;
            terminal_checks += 1;
        }
        let violations = on.targets.iter().zip(off.targets.iter()).filter(|(o, f)| f < o).count();
        ensure(violations == 0, || format!("{violations} components with off < on at t={t}"))?;
        cases += m.len_at(t);
    }
    Ok(format!("fixed point exact; off >= on on {cases} tuples; {terminal_checks} terminal batches identical"))
}

// 5, 6, 7: learning runs -----------------------------------------------------

struct RunSet {
    sequences: Vec<Vec<EpisodeLog>>,
    baselines: Vec<Vec<EpisodeLog>>,
    elapsed: Duration,
}

fn run_set(name: &str, toml: &str) -> Result<RunSet, String> {
    let cfg = ExperimentConfig::from_toml(toml).map_err(|e| format!("{e:#}"))?;
    let out = scratch_dir().join(name);
    let start = Instant::now();
    run_experiment(&cfg, &out).map_err(|e| format!("{e:#}"))?;
    let elapsed = start.elapsed();
    let mut set = RunSet {
        sequences: Vec::new(),
        baselines: Vec::new(),
        elapsed,
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&out)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    for p in paths {
        let logs = read_logs(&p).map_err(|e| format!("{e:#}"))?;
        if is_baseline_log(&p) {
            set.baselines.push(logs);
        } else {
            set.sequences.push(logs);
        }
    }
    Ok(set)
}

const SINGLE_TASK: &str = "experiment.seeds = 10\nexperiment.base_seed = 500\nexperiment.sequence_length = 1\nexperiment.baseline = false\n";

fn single_task_runs(rule: &'static str) -> &'static Result<RunSet, String> {
    static OFF: OnceLock<Result<RunSet, String>> = OnceLock::new();
    static ON: OnceLock<Result<RunSet, String>> = OnceLock::new();
    let cell = if rule == "off" { &OFF } else { &ON };
    cell.get_or_init(|| run_set(&format!("single_{rule}"), &format!("{SINGLE_TASK}experiment.update_rule = \"{rule}\"\n")))
}

fn sequence_runs(rule: &'static str) -> &'static Result<RunSet, String> {
    static OFF: OnceLock<Result<RunSet, String>> = OnceLock::new();
    static ON: OnceLock<Result<RunSet, String>> = OnceLock::new();
    let cell = if rule == "off" { &OFF } else { &ON };
    // The baseline does not depend on the update rule; it is run once.
    let baseline = rule == "off";
    cell.get_or_init(|| {
        run_set(
            &format!("sequence_{rule}"),
            &format!("experiment.seeds = 20\nexperiment.update_rule = \"{rule}\"\nexperiment.baseline = {baseline}\n"),
        )
    })
}

/// Mean deviation per decision step over the selected episodes.
fn deviation_by_step(runs: &[Vec<EpisodeLog>], keep: impl Fn(&EpisodeLog) -> bool) -> Result<[f64; HORIZON], String> {
    let mut sums = [0.0; HORIZON];
    let mut counts = [0usize; HORIZON];
    for logs in runs {
        let selected: Vec<EpisodeLog> = logs.iter().filter(|l| keep(l)).cloned().collect();
        for r in compute_deviations(&selected).map_err(|e| e.to_string())? {
            sums[r.t] += r.deviation;
            counts[r.t] += 1;
        }
    }
    Ok(std::array::from_fn(|t| sums[t] / counts[t] as f64))
}

fn fmt_steps(v: &[f64; HORIZON]) -> String {
    v.iter().map(|x| format!("{x:+.3}")).collect::<Vec<_>>().join(" ")
}

fn off_policy_bias() -> Check {
    let off = single_task_runs("off").as_ref().map_err(Clone::clone)?;
    let on = single_task_runs("on").as_ref().map_err(Clone::clone)?;
    let total = off.elapsed + on.elapsed;
    let late = |l: &EpisodeLog| l.episode_index >= 500;
    let off_dev = deviation_by_step(&off.sequences, late)?;
    let on_dev = deviation_by_step(&on.sequences, late)?;
    let on_mean = mean(on_dev.iter().copied());
    let detail = format!(
        "{} off runs t0..t4 [{}], {} on runs [{}] mean {on_mean:+.3}, {total:.0?}",
        off.sequences.len(),
        fmt_steps(&off_dev),
        on.sequences.len(),
        fmt_steps(&on_dev)
    );
    ensure(off.sequences.len() >= 10 && on.sequences.len() >= 10, || format!("too few runs: {detail}"))?;
    ensure(off_dev[0] > 0.0, || format!("off-policy deviation at t=0 not positive: {detail}"))?;
    ensure(off_dev.windows(2).all(|p| p[0] >= p[1]), || format!("off-policy deviation increases with t: {detail}"))?;
    ensure(on_mean.abs() <= 0.5, || format!("on-policy deviation biased: {detail}"))?;
    ensure(total <= Duration::from_secs(15 * 60), || format!("too slow: {detail}"))?;
    Ok(detail)
}

/// Mean scalarized reward per (task position, 250-episode bucket).
fn bucket_means(runs: &[Vec<EpisodeLog>]) -> BTreeMap<(usize, usize), f64> {
    let mut acc: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for l in runs.iter().flatten() {
        let e = acc.entry((l.task_index, l.episode_index / 250)).or_default();
        e.0 += l.scalarized_reward;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Expected harmonic-mean reward of the best schedule per friction, against
/// that of the schedule maximizing the arithmetic mean, averaged over the
/// protocol weights and sampled frictions.
fn oracle_scalarization_gap() -> (f64, f64) {
    let p = SurrogateParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(6, &[0]));
    let frictions: Vec<f64> = (0..100).map(|_| sample_friction(&mut rng, &p)).collect();
    let (mut best_h, mut h_at_am) = (0.0, 0.0);
    for &mu in &frictions {
        let outcomes = enumerate_schedules(mu, &p).unwrap();
        for k in 1..=9 {
            let w = WeightVector::from_thickness_level(k).unwrap();
            let score = |f: Scalarization, o: &morl_core::oracle::ScheduleOutcome| f.reward(&o.reward, &w);
            best_h += outcomes.iter().map(|o| score(Scalarization::Harmonic, o)).fold(0.0, f64::max);
            let am = outcomes
                .iter()
                .max_by(|a, b| score(Scalarization::Arithmetic, a).total_cmp(&score(Scalarization::Arithmetic, b)))
                .unwrap();
            h_at_am += score(Scalarization::Harmonic, am);
        }
    }
    let n = (frictions.len() * 9) as f64;
    (best_h / n, h_at_am / n)
}

fn transfer_effect() -> Check {
    let off = sequence_runs("off").as_ref().map_err(Clone::clone)?;
    let on = sequence_runs("on").as_ref().map_err(Clone::clone)?;
    let total = off.elapsed + on.elapsed;
    let baseline = bucket_means(&off.baselines);
    let base_late = mean(off.baselines.iter().flatten().filter(|l| l.episode_index >= 750).map(|l| l.scalarized_reward));
    let mut details = Vec::new();
    let mut failures = Vec::new();
    for (rule, set) in [("off", off), ("on", on)] {
        let m = bucket_means(&set.sequences);
        let a0 = m[&(0, 0)];
        let mut line = format!("{rule}: n={} first a {a0:.3}", set.sequences.len());
        for (pos, name) in [(2usize, 'c'), (3, 'd')] {
            let first = m[&(pos, 0)];
            let last = m[&(pos, 3)];
            line.push_str(&format!(" {name} {first:.3}/{last:.3}"));
            if first - a0 <= 0.0 {
                failures.push(format!("{rule} {name}: episodes 0-250 mean {first:.3} not above a {a0:.3}"));
            }
            if (last - base_late).abs() > 0.5 {
                failures.push(format!(
                    "{rule} {name}: episodes 750-1000 mean {last:.3} vs baseline {base_late:.3}"
                ));
            }
        }
        details.push(line);
        if set.sequences.len() < 20 {
            failures.push(format!("{rule}: only {} sequences", set.sequences.len()));
        }
    }
    let detail = format!(
        "{}; baseline buckets {:.3}/{:.3}/{:.3}/{:.3}; {total:.0?}",
        details.join("; "),
        baseline.get(&(0, 0)).copied().unwrap_or(f64::NAN),
        baseline.get(&(0, 1)).copied().unwrap_or(f64::NAN),
        baseline.get(&(0, 2)).copied().unwrap_or(f64::NAN),
        base_late,
    );
    if total > Duration::from_secs(3600) {
        failures.push("runtime above one hour".into());
    }
    if failures.is_empty() {
        Ok(detail)
    } else {
        let (best_h, h_at_am) = oracle_scalarization_gap();
        Err(format!(
            "{}; {detail}; oracle: best schedule H {best_h:.3}, H of arithmetic-mean-optimal schedule {h_at_am:.3}",
            failures.join("; ")
        ))
    }
}

fn cold_start_underestimation() -> Check {
    let mut runs = 0;
    let mut worst = f64::NEG_INFINITY;
    let early = |l: &EpisodeLog| l.episode_index < 50;
    let mut groups: Vec<Vec<Vec<EpisodeLog>>> = Vec::new();
    for rule in ["off", "on"] {
        let single = single_task_runs(rule).as_ref().map_err(Clone::clone)?;
        groups.push(single.sequences.clone());
        let seq = sequence_runs(rule).as_ref().map_err(Clone::clone)?;
        groups.push(
            seq.sequences
                .iter()
                .map(|l| l.iter().filter(|e| e.task_index == 0).cloned().collect())
                .collect(),
        );
    }
    for group in &groups {
        for run in group {
            let dev = deviation_by_step(std::slice::from_ref(run), early)?;
            let max = dev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(max);
            runs += 1;
            ensure(max <= 0.0, || format!("run with early deviations [{}]", fmt_steps(&dev)))?;
        }
    }
    Ok(format!("{runs} runs (single tasks and first positions), largest early mean deviation {worst:+.3}"))
}

// 8 -------------------------------------------------------------------------

fn statistical_calibration() -> Check {
    let p = SurrogateParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let draws: Vec<f64> = (0..100_000).map(|_| sample_friction(&mut rng, &p)).collect();
    let expected = p.friction_scale * FRICTION_BETA_ALPHA / (FRICTION_BETA_ALPHA + FRICTION_BETA_BETA);
    let m = mean(draws.iter().copied());
    ensure((m - expected).abs() <= 0.002, || format!("friction mean {m} vs {expected}"))?;

    let a = Action::new(4).unwrap();
    let s = simulate_step(&LatentProcessState::initial(0.03, &p), a, &p);
    let raw = observe_raw(&s, Some(a), &p).as_array();
    let noisy: Vec<[f64; 3]> = (0..10_000).map(|_| observe(&s, Some(a), &p, &mut rng).as_array()).collect();
    let mut ratios = [0.0; 3];
    for i in 0..3 {
        let res: Vec<f64> = noisy.iter().map(|o| o[i] - raw[i]).collect();
        let mu = mean(res.iter().copied());
        let sd = (res.iter().map(|r| (r - mu).powi(2)).sum::<f64>() / (res.len() - 1) as f64).sqrt();
        ratios[i] = sd / p.noise_sigmas[i];
        ensure((ratios[i] - 1.0).abs() <= 0.1, || format!("observable {i}: sigma ratio {}", ratios[i]))?;
    }
    Ok(format!(
        "friction mean {m:.5} (closed form {expected:.5}); sigma ratios {:.3} {:.3} {:.3}",
        ratios[0], ratios[1], ratios[2]
    ))
}

// 9 -------------------------------------------------------------------------

fn csv_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> Check {
    let root = scratch_dir().join("determinism");
    std::fs::create_dir_all(&root).map_err(|e| e.to_string())?;
    let config = root.join("config.toml");
    std::fs::write(
        &config,
        "experiment.seeds = 3\nexperiment.sequence_length = 2\ntask.episodes = 150\nexperiment.update_rule = \"on\"\n",
    )
    .map_err(|e| e.to_string())?;
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    let first = root.join("first");
    let again = root.join("again");
    ensure(cli(&["run", "--config", &s(&config), "--out", &s(&first)]) == 0, || "first run failed".into())?;
    let manifest = first.join(MANIFEST_FILE);
    ensure(cli(&["run", "--config", &s(&manifest), "--out", &s(&again)]) == 0, || "manifest rerun failed".into())?;
    let (a, b) = (csv_bytes(&first), csv_bytes(&again));
    ensure(a.len() == 6 && a == b, || format!("{} vs {} logs, or differing bytes", a.len(), b.len()))?;

    let mut checked = a.len();
    for cmd in ["aggregate", "deviations"] {
        let (x, y) = (root.join(format!("{cmd}_1")), root.join(format!("{cmd}_2")));
        for out in [&x, &y] {
            let glob = format!("{}/*.csv", first.display());
            ensure(cli(&[cmd, &glob, "--out", &s(out)]) == 0, || format!("{cmd} failed"))?;
        }
        let (cx, cy) = (csv_bytes(&x), csv_bytes(&y));
        ensure(!cx.is_empty() && cx == cy, || format!("{cmd} outputs differ"))?;
        checked += cx.len();
    }
    let (x, y) = (root.join("pareto_1"), root.join("pareto_2"));
    for out in [&x, &y] {
        ensure(cli(&["pareto", "--config", &s(&manifest), "--out", &s(out)]) == 0, || "pareto failed".into())?;
    }
    ensure(csv_bytes(&x) == csv_bytes(&y), || "pareto outputs differ".into())?;
    checked += 1;
    Ok(format!("{checked} csv files byte-identical across reruns"))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Check); 9] = [
        (1, "Pareto oracle", pareto_oracle),
        (2, "Scalarization exactness", scalarization_exactness),
        (3, "Gradient correctness", gradient_correctness),
        (4, "Update-rule algebra", update_rule_algebra),
        (5, "Off-policy bias", off_policy_bias),
        (6, "Transfer effect", transfer_effect),
        (7, "Cold-start underestimation", cold_start_underestimation),
        (8, "Statistical calibration", statistical_calibration),
        (9, "Determinism", determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id} {name}: PASS ({detail}) [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} {name}: FAIL ({detail}) [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
