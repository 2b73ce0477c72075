//! Exit-gate checks. Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qdc_core::analytic::{classify, steady_sz};
use qdc_core::collision::{
    collision_step, evolve_to_steady, CollisionChannel, CollisionSettings, ReservoirPhase,
};
use qdc_core::linalg::{herm_expm, DensityMatrix, PSD_TOL, TRACE_TOL};
use qdc_core::model::{bloch_density, BlochAngles, ClassifierConfig, ReservoirSpec};
use qdc_core::trainer::{
    actual_value, cost_at, finite_diff_grad, gd_train, gradient, params_of, TrainOutcome,
    TrainSettings, TrainStatus, TrainableParam,
};

// tolerances
const FIG1_TOL: f64 = 1e-3;
const FIG1_ENDPOINT_TOL: f64 = 1e-6;
const FIG1_SECONDS: f64 = 30.0;
const ORACLE_TOL: f64 = 1e-3;
const ORACLE_CONFIGS: usize = 50;
const GRAD_DRAWS: usize = 100;
const GRAD_REL_TOL: f64 = 1e-6;
const GRAD_ABS_FLOOR: f64 = 1e-12;
const GRAD_SECONDS: f64 = 5.0;
const TRAIN_TARGET_TOL: f64 = 1e-4;
const FIG4B_COST_RANGE: (f64, f64) = (1e-6, 1e-4);
const RESCALE_TOL: f64 = 1e-3;
const TAU: f64 = 3.0;
const R: f64 = 0.36;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} {id:<6} {detail}", if ok { "PASS" } else { "FAIL" });
    }

    fn info(&self, id: &str, detail: String) {
        println!("INFO {id:<6} {detail}");
    }
}

fn res(theta: f64, phi: f64, g: f64) -> ReservoirSpec {
    ReservoirSpec::new(BlochAngles::new(theta, phi).unwrap(), g).unwrap()
}

fn cfg(reservoirs: Vec<ReservoirSpec>) -> ClassifierConfig {
    ClassifierConfig::with_plus_target(reservoirs, TAU, R).unwrap()
}

fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

fn random_pair(rng: &mut ChaCha8Rng, g_lo: f64, g_hi: f64) -> ClassifierConfig {
    let mut one = || {
        let theta = PI * open_unit(rng);
        let phi = rng.random_range(0.0..2.0 * PI);
        let g = rng.random_range(g_lo..=g_hi);
        res(theta, phi, g)
    };
    let a = one();
    let b = one();
    cfg(vec![a, b])
}

fn deg(x: f64) -> f64 {
    x.to_radians()
}

fn fig2a() -> ClassifierConfig {
    cfg(vec![
        res(0.95f64.acos(), 0.0, 0.001),
        res((-0.15f64).acos(), 0.0, 0.06),
    ])
}

fn fig2b(g: f64) -> ClassifierConfig {
    cfg(vec![res(deg(170.0), 0.0, g), res(deg(160.0), 0.0, g)])
}

fn fig4b() -> ClassifierConfig {
    cfg(vec![
        res(deg(60.0), deg(350.0), 0.01),
        res(deg(60.0), deg(340.0), 0.01),
    ])
}

fn oracle_settings() -> CollisionSettings {
    CollisionSettings {
        max_collisions: 20_000_000,
        ..CollisionSettings::default()
    }
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

fn fig1(report: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_qdc"))
        .args(["fig1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    let secs = start.elapsed().as_secs_f64();
    if !out.status.success() {
        report.line("AC1", false, format!("qdc fig1 exited {:?}", out.status.code()));
        return;
    }
    let rows = read_csv(&dir.path().join("fig1.csv"));
    let num = |s: &str| s.parse::<f64>().unwrap();
    let sim: Vec<f64> = rows.iter().map(|r| num(&r[1])).collect();
    let max_dev = rows
        .iter()
        .map(|r| (num(&r[1]) - num(&r[2])).abs())
        .fold(0.0, f64::max);
    let first = sim.first().copied().unwrap_or(f64::NAN);
    let last = sim.last().copied().unwrap_or(f64::NAN);
    let endpoints = (first - 1.0).abs() <= FIG1_ENDPOINT_TOL && (last + 1.0).abs() <= FIG1_ENDPOINT_TOL;
    let monotone = sim.windows(2).all(|w| w[1] < w[0]);
    let converged = rows.iter().all(|r| r[4] == "true");
    let ok = rows.len() == 21 && max_dev <= FIG1_TOL && endpoints && monotone && converged && secs < FIG1_SECONDS;
    report.line(
        "AC1",
        ok,
        format!(
            "coupling sweep: {} points, max |sim - closed form| = {max_dev:.2e} (tol {FIG1_TOL:.0e}), \
             endpoints {first:.9} / {last:.9}, monotone={monotone}, converged={converged}, {secs:.1} s (< {FIG1_SECONDS} s)",
            rows.len()
        ),
    );
}

fn oracle_sweep(phase: ReservoirPhase) -> (usize, f64, usize, Vec<(f64, f64)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let settings = CollisionSettings {
        phase,
        ..oracle_settings()
    };
    let mut within = 0;
    let mut worst = 0.0f64;
    let mut stalled = 0;
    let mut samples = Vec::new();
    for _ in 0..ORACLE_CONFIGS {
        let c = random_pair(&mut rng, 0.001, 0.05);
        let analytic = steady_sz(c.reservoirs()).unwrap();
        let run = evolve_to_steady(&c, &settings).unwrap();
        if !run.converged {
            stalled += 1;
        }
        let dev = (run.sz() - analytic).abs();
        worst = worst.max(dev);
        if dev <= ORACLE_TOL && run.converged {
            within += 1;
        }
        samples.push((analytic, run.sz()));
    }
    (within, worst, stalled, samples)
}

fn oracle_equivalence(report: &mut Report) {
    let start = Instant::now();
    let (within, worst, stalled, samples) = oracle_sweep(ReservoirPhase::Locked);
    report.line(
        "AC2",
        within == ORACLE_CONFIGS,
        format!(
            "simulated vs closed-form steady <sz>, phase-locked units: {within}/{ORACLE_CONFIGS} within {ORACLE_TOL:.0e}, \
             worst deviation {worst:.3e}, {stalled} not converged, {:.1} s",
            start.elapsed().as_secs_f64()
        ),
    );
    for (a, s) in samples.iter().take(3) {
        report.info("AC2", format!("  closed form {a:+.6}  simulated {s:+.6}"));
    }
    let (within, worst, stalled, _) = oracle_sweep(ReservoirPhase::Averaged);
    report.info(
        "AC2",
        format!(
            "same draws with phase-averaged units: {within}/{ORACLE_CONFIGS} within {ORACLE_TOL:.0e}, \
             worst deviation {worst:.3e}, {stalled} not converged"
        ),
    );
}

fn gradients(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = Instant::now();
    let mut worst = [0.0f64; 3];
    let mut failures = [0usize; 3];
    let families = [TrainableParam::CouplingG, TrainableParam::Theta, TrainableParam::Phi];
    for (k, &param) in families.iter().enumerate() {
        for _ in 0..GRAD_DRAWS {
            let mut one = || {
                let theta = PI * open_unit(&mut rng);
                let phi = rng.random_range(0.0..2.0 * PI);
                let g = rng.random_range(1e-3..=0.1);
                res(theta, phi, g)
            };
            let c = cfg(vec![one(), one()]);
            let desired = rng.random_range(-1.0..=1.0);
            let analytic = gradient(&c, param, desired).unwrap();
            let x = params_of(&c, param);
            let fd = finite_diff_grad(|v| cost_at(&c, param, desired, v).unwrap(), &x, param.fd_step());
            for (a, f) in analytic.iter().zip(&fd) {
                let err = (a - f).abs();
                let ok = err <= GRAD_ABS_FLOOR || err < GRAD_REL_TOL * f.abs();
                if !ok {
                    failures[k] += 1;
                }
                if err > GRAD_ABS_FLOOR {
                    worst[k] = worst[k].max(err / f.abs());
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report.line(
        "AC3",
        failures.iter().all(|&n| n == 0) && secs < GRAD_SECONDS,
        format!(
            "gradients vs central differences, {GRAD_DRAWS} draws per family: worst relative error \
             g {:.1e}, theta {:.1e}, phi {:.1e} (tol {GRAD_REL_TOL:.0e}), failures {:?}, {secs:.2} s (< {GRAD_SECONDS} s)",
            worst[0], worst[1], worst[2], failures
        ),
    );
}

fn train(c: &ClassifierConfig, param: TrainableParam, eta: f64, desired: f64) -> TrainOutcome {
    gd_train(c, param, &TrainSettings::new(eta, desired)).unwrap()
}

fn describe(o: &TrainOutcome) -> String {
    let last = o.last();
    format!(
        "status {}, {} episodes, final actual {:+.3e}, monotone {}",
        o.status.as_str(),
        last.episode,
        last.actual,
        o.is_monotone()
    )
}

fn training(report: &mut Report) {
    let a = train(&fig2a(), TrainableParam::CouplingG, 2.8e-5, 0.4);
    let ok = a.status == TrainStatus::Converged
        && a.is_monotone()
        && (a.last().actual - 0.4).abs() <= TRAIN_TARGET_TOL;
    report.line("AC4", ok, format!("coupling training toward 0.4: {}", describe(&a)));

    let mut details = Vec::new();
    let mut ok = true;
    for g in [0.05, 0.03] {
        let o = train(&fig2b(g), TrainableParam::Theta, 0.5, 0.0);
        ok &= o.status == TrainStatus::Converged && o.is_monotone() && o.last().actual.abs() <= TRAIN_TARGET_TOL;
        details.push(format!("g={g}: {}", describe(&o)));
    }
    report.line("AC5", ok, format!("polar-angle training toward 0: {}", details.join("; ")));

    let o = train(&fig4b(), TrainableParam::Phi, 500.0, 0.0);
    let c0 = o.records[0].cost;
    let ok = o.status == TrainStatus::Converged && (FIG4B_COST_RANGE.0..=FIG4B_COST_RANGE.1).contains(&c0);
    report.line(
        "AC6",
        ok,
        format!(
            "azimuthal training toward <sy>=0: initial cost {c0:.3e} (range [{:.0e}, {:.0e}]), {}",
            FIG4B_COST_RANGE.0,
            FIG4B_COST_RANGE.1,
            describe(&o)
        ),
    );
}

fn overshoot(report: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("overshoot.cfg");
    std::fs::write(
        &cfg_path,
        "tau = 3\nr = 0.36\nreservoir.1.sz = 0.95\nreservoir.1.g = 0.001\nreservoir.2.sz = -0.15\n\
         reservoir.2.g = 0.06\ntrain.param = g\ntrain.eta = 2.5e-2\ntrain.desired = 0.4\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qdc"))
        .args(["train", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    let summary: serde_json::Value = match std::fs::read(dir.path().join("train_g_summary.json")) {
        Ok(bytes) => serde_json::from_slice(&bytes).unwrap(),
        Err(e) => {
            report.line("AC7", false, format!("no summary ({e}), exit {:?}", out.status.code()));
            return;
        }
    };
    let run = &summary["runs"][0];
    let increases = run["cost_increases"].as_u64().unwrap_or(0);
    let ok = out.status.success() && increases >= 1 && run["overshoot"] == true;
    report.line(
        "AC7",
        ok,
        format!(
            "large learning rate: {increases} cost increase(s), overshoot flag {}, status {}",
            run["overshoot"], run["status"]
        ),
    );
}

fn state_space_per_step(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_trace = 0.0f64;
    let mut worst_eig = 0.0f64;
    let mut steps = 0;
    for n_res in [1usize, 2, 3] {
        for _ in 0..5 {
            let reservoirs: Vec<_> = (0..n_res)
                .map(|_| {
                    res(
                        PI * open_unit(&mut rng),
                        rng.random_range(0.0..2.0 * PI),
                        rng.random_range(0.001..=0.1),
                    )
                })
                .collect();
            let c = cfg(reservoirs);
            let h = qdc_core::collision::build_hamiltonian(&c).unwrap();
            let u = herm_expm(&h, c.tau()).unwrap();
            let mut rho = c.target_init().clone();
            for _ in 0..500 {
                rho = collision_step(&rho, &c, &u).unwrap();
                steps += 1;
                let tr = rho.matrix().trace();
                worst_trace = worst_trace.max((tr.re - 1.0).abs()).max(tr.im.abs());
                worst_eig = worst_eig.min(rho.min_eigenvalue());
            }
        }
    }
    report.line(
        "AC8.1",
        worst_trace <= TRACE_TOL && worst_eig >= -PSD_TOL,
        format!(
            "state space per collision: {steps} steps, max |Tr-1| {worst_trace:.1e}, min eigenvalue {worst_eig:.1e}"
        ),
    );
}

fn init_independence(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let settings = oracle_settings();
    let ground = bloch_density(BlochAngles::new(PI, 0.0).unwrap());
    let mut worst = 0.0f64;
    let mut all_converged = true;
    for _ in 0..10 {
        let c = random_pair(&mut rng, 0.005, 0.05);
        let from_plus = evolve_to_steady(&c, &settings).unwrap();
        let from_ground = evolve_to_steady(&c.with_target(ground.clone()).unwrap(), &settings).unwrap();
        all_converged &= from_plus.converged && from_ground.converged;
        worst = worst.max((from_plus.sz() - from_ground.sz()).abs());
    }
    let bound = 10.0 * settings.steady_tol;
    report.line(
        "AC8.2",
        all_converged && worst <= bound,
        format!("steady <sz> from |+> vs |g>: worst difference {worst:.1e} (bound {bound:.0e}) over 10 configs"),
    );
}

fn rescaling(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut analytic_exact = true;
    for _ in 0..200 {
        let c = random_pair(&mut rng, 0.001, 0.05);
        let base = steady_sz(c.reservoirs()).unwrap();
        for factor in [0.5, 2.0, 0.25, 4.0] {
            let scaled: Vec<f64> = c.couplings().iter().map(|g| g * factor).collect();
            let s = steady_sz(c.with_couplings(&scaled).unwrap().reservoirs()).unwrap();
            analytic_exact &= s == base && classify(s) == classify(base);
        }
    }
    report.line(
        "AC8.3",
        analytic_exact,
        "closed-form <sz> and label unchanged under coupling rescaling by 0.25, 0.5, 2, 4 (200 configs, exact)".into(),
    );

    let settings = oracle_settings();
    let mut worst = 0.0f64;
    let mut labels_kept = true;
    for _ in 0..10 {
        let c = random_pair(&mut rng, 0.005, 0.05);
        let base = evolve_to_steady(&c, &settings).unwrap().sz();
        for factor in [0.5, 2.0] {
            let scaled: Vec<f64> = c.couplings().iter().map(|g| g * factor).collect();
            let s = evolve_to_steady(&c.with_couplings(&scaled).unwrap(), &settings).unwrap().sz();
            worst = worst.max((s - base).abs());
            labels_kept &= classify(s) == classify(base);
        }
    }
    report.line(
        "AC8.4",
        worst <= RESCALE_TOL && labels_kept,
        format!(
            "simulated <sz> under coupling rescaling by 0.5 and 2, phase-locked units: worst change {worst:.3e} \
             (tol {RESCALE_TOL:.0e}), labels kept {labels_kept}"
        ),
    );
}

fn convex_bounds(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut ok = true;
    for n in 1..=4 {
        for _ in 0..250 {
            let reservoirs: Vec<_> = (0..n)
                .map(|_| res(rng.random_range(0.0..=PI), 0.0, rng.random_range(0.0..=0.1)))
                .collect();
            let Ok(sz) = steady_sz(&reservoirs) else { continue };
            let zs = reservoirs.iter().map(|r| r.bloch.theta().cos());
            let lo = zs.clone().fold(f64::INFINITY, f64::min);
            let hi = zs.fold(f64::NEG_INFINITY, f64::max);
            ok &= sz >= lo - 1e-15 && sz <= hi + 1e-15;
        }
    }
    report.line("AC8.5", ok, "closed-form <sz> within [min cos theta, max cos theta], 1000 draws, 1-4 reservoirs".into());
}

fn zero_residual(report: &mut Report) {
    let mut ok = true;
    for (c, param) in [
        (fig2a(), TrainableParam::CouplingG),
        (fig2b(0.05), TrainableParam::Theta),
        (fig4b(), TrainableParam::Phi),
    ] {
        let desired = actual_value(&c, param).unwrap();
        ok &= gradient(&c, param, desired).unwrap().iter().all(|&g| g == 0.0);
        let mut s = TrainSettings::new(1e3, desired);
        s.max_episodes = 3;
        let o = gd_train(&c, param, &s).unwrap();
        ok &= o.status == TrainStatus::Converged
            && o.records.iter().all(|r| r.params == params_of(&c, param));
    }
    report.line("AC8.6", ok, "zero residual: gradient exactly 0 and parameters untouched for g, theta, phi".into());
}

fn rate_ordering(report: &mut Report) {
    let mut ok = true;
    let mut details = Vec::new();
    for (name, c, param, eta, desired) in [
        ("g", fig2a(), TrainableParam::CouplingG, 2.8e-5, 0.4),
        ("theta", fig2b(0.05), TrainableParam::Theta, 0.5, 0.0),
        ("phi", fig4b(), TrainableParam::Phi, 500.0, 0.0),
    ] {
        let full = train(&c, param, eta, desired);
        let half = train(&c, param, eta / 2.0, desired);
        ok &= full.is_monotone() && half.episodes_used() >= full.episodes_used();
        details.push(format!("{name} {}->{}", full.episodes_used(), half.episodes_used()));
    }
    report.line(
        "AC8.7",
        ok,
        format!("halving the learning rate never converges faster (episodes {})", details.join(", ")),
    );
}

trait EpisodesUsed {
    fn episodes_used(&self) -> usize;
}

impl EpisodesUsed for TrainOutcome {
    fn episodes_used(&self) -> usize {
        self.last().episode
    }
}

fn fixed_point_crosscheck(report: &Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let settings = oracle_settings();
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let c = random_pair(&mut rng, 0.001, 0.05);
        let run = evolve_to_steady(&c, &settings).unwrap();
        let exact: DensityMatrix = CollisionChannel::new(&c, &settings).unwrap().fixed_point().unwrap();
        let exact_sz = exact.matrix().get(0, 0).re - exact.matrix().get(1, 1).re;
        worst = worst.max((run.sz() - exact_sz).abs());
    }
    report.info(
        "AC2",
        format!("iterated steady <sz> vs direct fixed-point solve of the same channel: worst {worst:.1e}"),
    );
}

fn main() {
    let mut report = Report { failed: 0 };
    fig1(&mut report);
    oracle_equivalence(&mut report);
    fixed_point_crosscheck(&report);
    gradients(&mut report);
    training(&mut report);
    overshoot(&mut report);
    state_space_per_step(&mut report);
    init_independence(&mut report);
    rescaling(&mut report);
    convex_bounds(&mut report);
    zero_residual(&mut report);
    rate_ordering(&mut report);
    if report.failed > 0 {
        println!("acceptance: {} criterion line(s) failed", report.failed);
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
