//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails, including by exceeding its time budget.

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use hetnet_lb::assoc::{brute_force_log_utility, DEFAULT_MAX_SEARCH};
use hetnet_lb::cli::LoadedConfig;
use hetnet_lb::error::Error;
use hetnet_lb::fixtures::{self, SingleUser};
use hetnet_lb::loadopt::{log_utility, solve_binary, RateMatrix, SolverParams};
use hetnet_lb::mc::{
    default_bias_grid, default_eta_grid, MonteCarlo, Objective, Policy, TrendMode,
};
use hetnet_lb::netgen::{derive_seed, generate_realization, NetworkRealization};
use hetnet_lb::scenario::{BlankingConfig, BlankingVariant, ScenarioConfig};
use hetnet_lb::stats::ks_distance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R: usize = 200;
const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Shared results so A6 reuses the A5 ensemble.
#[derive(Default)]
struct Shared {
    load_aware_pct5: Option<f64>,
    median_optimal_bias: Option<f64>,
}

fn main() {
    let mut shared = Shared::default();
    type Check = fn(&mut Shared) -> Outcome;
    let checks: [(&str, &str, u64, Check); 10] = [
        ("A1", "oracle equivalence", 30, a1),
        ("A2", "in-band optimal bias", 300, a2),
        ("A3", "blanking optimum", 900, a3),
        ("A4", "out-of-band optimal bias", 300, a4),
        ("A5", "load-aware gains", 600, a5),
        ("A6", "range expansion near-optimality", 300, a6),
        ("A7", "SIR invariance", 180, a7),
        ("A8", "rate monotonicity under densification", 300, a8),
        ("A9", "density trends", 600, a9),
        ("A10", "determinism and exact identities", 60, a10),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in checks {
        let start = Instant::now();
        let o = check(&mut shared);
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{id} {} {name}: {} [{:.1} s of {budget} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn mc() -> MonteCarlo {
    MonteCarlo::new(R, SEED)
}

fn a1(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let (mut worst_shortfall, mut worst_dual) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut bad = 0;
    for _ in 0..200 {
        let users = rng.random_range(1..=12usize);
        let bss = rng.random_range(1..=3usize);
        let rows: Vec<Vec<f64>> = (0..users)
            .map(|_| {
                let mut row: Vec<f64> = (0..bss)
                    .map(|_| {
                        if rng.random_bool(0.15) {
                            0.0
                        } else {
                            10f64.powf(rng.random_range(4.0..7.5))
                        }
                    })
                    .collect();
                if row.iter().all(|&r| r == 0.0) {
                    row[rng.random_range(0..bss)] = 1e6;
                }
                row
            })
            .collect();
        let rates = RateMatrix::from_dense(&rows).unwrap();
        let (_, oracle) = brute_force_log_utility(&rates, DEFAULT_MAX_SEARCH).unwrap();
        let (binary, state) = solve_binary(&rates, &SolverParams::default()).unwrap();
        let primal = log_utility(&binary, &rates).unwrap();
        let shortfall = (oracle - primal) / oracle.abs();
        let dual_excess = state.best_dual - oracle;
        worst_shortfall = worst_shortfall.max(shortfall);
        worst_dual = worst_dual.min(dual_excess);
        if shortfall > 0.05 || dual_excess < -1e-6 {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!(
            "200 instances, {bad} violations; largest rounding shortfall {:.3}% (want <= 5%), smallest dual bound minus optimum {worst_dual:.3e} (want >= -1e-6)",
            100.0 * worst_shortfall
        ),
    )
}

fn a2(shared: &mut Shared) -> Outcome {
    let r = mc()
        .sweep_bias(
            &ScenarioConfig::reference(),
            &default_bias_grid(),
            Objective::Pct50,
        )
        .unwrap();
    let b = r.best().bias_db;
    shared.median_optimal_bias = Some(b);
    outcome(
        (3.0..=12.0).contains(&b),
        format!("median-optimal bias {b} dB, want [3, 12]"),
    )
}

fn a3(_: &mut Shared) -> Outcome {
    let etas = default_eta_grid();
    let r = mc()
        .sweep_blanking(
            &ScenarioConfig::reference(),
            &default_bias_grid(),
            &etas,
            BlankingVariant::ReOnlyInBlank,
            Objective::Pct50,
        )
        .unwrap();
    let best = r.best();
    let curve: Vec<(f64, f64)> = r
        .per_eta_best
        .iter()
        .filter(|p| (0.1 - 1e-9..=0.7 + 1e-9).contains(&p.eta))
        .map(|p| (p.eta, p.bias_db))
        .collect();
    let rising = curve.windows(2).all(|w| w[1].1 >= w[0].1 - 1.0);
    let pass = (13.0..=22.0).contains(&best.bias_db) && (0.35..=0.65).contains(&best.eta) && rising;
    let curve_text: Vec<String> = curve.iter().map(|(e, b)| format!("{e}:{b}")).collect();
    outcome(
        pass,
        format!(
            "joint optimum bias {} dB (want [13, 22]), eta {} (want [0.35, 0.65]); per-eta bias {} ({})",
            best.bias_db,
            best.eta,
            curve_text.join(" "),
            if rising { "non-decreasing" } else { "not non-decreasing" }
        ),
    )
}

fn a4(_: &mut Shared) -> Outcome {
    let r = mc()
        .sweep_bias(
            &ScenarioConfig::out_of_band(),
            &default_bias_grid(),
            Objective::Pct5,
        )
        .unwrap();
    let b = r.best().bias_db;
    outcome(
        (17.0..=28.0).contains(&b),
        format!("cell-edge-optimal bias {b} dB, want [17, 28]"),
    )
}

fn a5(shared: &mut Shared) -> Outcome {
    let s = ScenarioConfig::reference();
    let mc = mc();
    let la = mc.run_ensemble(&s, Policy::LoadAware).unwrap().stats;
    let mp = mc.run_ensemble(&s, Policy::MaxPower).unwrap().stats;
    let p = |st: &hetnet_lb::stats::RateStats, q| st.percentile(q).unwrap();
    shared.load_aware_pct5 = Some(p(&la, 5.0));
    let edge = p(&la, 5.0) / p(&mp, 5.0);
    let median = p(&la, 50.0) / p(&mp, 50.0);
    outcome(
        edge >= 2.0 && median >= 1.4,
        format!(
            "5th percentile ratio {edge:.3} (want >= 2.0), median ratio {median:.3} (want >= 1.4)"
        ),
    )
}

fn a6(shared: &mut Shared) -> Outcome {
    let Some(la) = shared.load_aware_pct5 else {
        return outcome(false, "needs the A5 ensemble".into());
    };
    let s = ScenarioConfig::reference();
    let r = mc()
        .sweep_bias(&s, &default_bias_grid(), Objective::Pct5)
        .unwrap();
    let best = r.best();
    let ratio = best.value / la;
    let at_median = shared
        .median_optimal_bias
        .and_then(|b| r.points.iter().find(|p| p.bias_db == b))
        .map(|p| {
            format!(
                "; at the median-optimal bias {} dB the ratio is {:.3}",
                p.bias_db,
                p.value / la
            )
        })
        .unwrap_or_default();
    outcome(
        ratio >= 0.8,
        format!(
            "best range expansion ({} dB) reaches {ratio:.3} of load-aware 5th percentile (want >= 0.8){at_median}",
            best.bias_db
        ),
    )
}

fn a7(_: &mut Shared) -> Outcome {
    let mut two = ScenarioConfig::reference();
    for b in &mut two.bands {
        b.noise_mw = 0.0;
    }
    let mut one = two.clone();
    one.tiers.retain(|t| t.is_macro);
    let mc = MonteCarlo::new(100, SEED);
    let a = mc.sinr_samples(&one, Policy::MaxSinr).unwrap();
    let b = mc.sinr_samples(&two, Policy::MaxSinr).unwrap();
    let d = ks_distance(&a, &b).unwrap();
    outcome(
        d <= 0.05,
        format!(
            "KS distance {d:.4} between {} and {} SIR samples (want <= 0.05)",
            a.len(),
            b.len()
        ),
    )
}

fn a8(_: &mut Shared) -> Outcome {
    let base = ScenarioConfig::reference();
    let dense = base.with_density_ratio(
        2.0 * base
            .tiers
            .iter()
            .filter(|t| !t.is_macro)
            .map(|t| t.density)
            .sum::<f64>()
            / base.macro_density(),
    );
    let qs = [5.0, 50.0, 95.0];
    let mut diffs = vec![Vec::new(); qs.len()];
    for seed in 1..=5 {
        let mc = MonteCarlo::new(50, seed);
        let lo = mc.run_ensemble(&base, Policy::MaxSinr).unwrap().stats;
        let hi = mc.run_ensemble(&dense, Policy::MaxSinr).unwrap().stats;
        for (k, &q) in qs.iter().enumerate() {
            diffs[k].push(hi.percentile(q).unwrap() - lo.percentile(q).unwrap());
        }
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, &q) in qs.iter().enumerate() {
        let n = diffs[k].len() as f64;
        let mean = diffs[k].iter().sum::<f64>() / n;
        let sd = (diffs[k].iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let se = sd / n.sqrt();
        pass &= mean >= -2.0 * se;
        parts.push(format!("p{q}: mean change {mean:+.4e} bit/s, SE {se:.2e}"));
    }
    outcome(
        pass,
        format!("doubling small-cell density, 5 seeds; {}", parts.join("; ")),
    )
}

fn a9(_: &mut Shared) -> Outcome {
    let mc = mc();
    let grid = default_bias_grid();
    let etas = default_eta_grid();
    let oob = mc
        .density_trend(
            &ScenarioConfig::out_of_band(),
            &[3.0, 10.0],
            TrendMode::OutOfBand,
            Objective::Pct5,
            &grid,
            &etas,
        )
        .unwrap();
    let inb = mc
        .density_trend(
            &ScenarioConfig::reference(),
            &[3.0, 10.0],
            TrendMode::InBand,
            Objective::Pct50,
            &grid,
            &etas,
        )
        .unwrap();
    let (o3, o10) = (oob[0].best.bias_db, oob[1].best.bias_db);
    let (i3, i10) = (inb[0].best.bias_db, inb[1].best.bias_db);
    let pass = o10 <= o3 && (i10 - i3).abs() <= 1.0 + 3.0;
    outcome(
        pass,
        format!("out-of-band optimal bias {o3} -> {o10} dB (want non-increasing); in-band {i3} -> {i10} dB (want within 4 dB)"),
    )
}

fn a10(_: &mut Shared) -> Outcome {
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };
    let read =
        |name: &str| fs::read_to_string(fixtures::default_dir().join(name)).unwrap_or_default();

    // fixtures
    let rendered = fixtures::render().unwrap();
    check(
        rendered.iter().all(|(name, text)| read(name) == *text),
        "fixture regeneration",
    );
    let instances =
        fixtures::parse_instances(&read(fixtures::ORACLE_INSTANCES)).unwrap_or_default();
    let expected = fixtures::parse_expected(&read(fixtures::ORACLE_EXPECTED)).unwrap_or_default();
    check(
        !expected.is_empty() && instances.len() == expected.len(),
        "oracle fixture count",
    );
    check(
        expected
            .first()
            .is_some_and(|e| (e.objective - 2.7726).abs() < 1e-4),
        "3x2 oracle objective",
    );
    for (rows, e) in instances.iter().zip(&expected) {
        let rates = RateMatrix::from_dense(rows).unwrap();
        let (a, v) = brute_force_log_utility(&rates, DEFAULT_MAX_SEARCH).unwrap();
        check(
            a.serving == e.serving && (v - e.objective).abs() <= 1e-5 * e.objective.abs().max(1.0),
            "oracle fixture",
        );
    }
    let empty = LoadedConfig::parse(&read(fixtures::EMPTY_TIER)).unwrap();
    check(
        generate_realization(&empty.scenario, derive_seed(SEED, 0))
            == Err(Error::DegenerateScenario(100)),
        "empty tier",
    );
    let single = LoadedConfig::parse(&read(fixtures::SINGLE_USER)).unwrap();
    let layout = NetworkRealization::from_csv(&read(fixtures::SINGLE_USER_LAYOUT), 10.0).unwrap();
    let sweep = MonteCarlo::new(1, SEED)
        .with_layout(layout)
        .sweep_bias(&single.scenario, &SingleUser::bias_grid(), Objective::Pct50)
        .unwrap();
    let committed: Vec<f64> = read(fixtures::SINGLE_USER_SWEEP)
        .lines()
        .skip(1)
        .filter_map(|l| l.rsplit(',').next()?.parse().ok())
        .collect();
    check(
        committed.len() == sweep.points.len()
            && sweep
                .points
                .iter()
                .zip(&committed)
                .all(|(p, w)| (p.value - w).abs() <= 1e-5 * w),
        "single-user sweep",
    );

    // repeated CLI runs
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ref.cfg");
    fs::write(&cfg, ScenarioConfig::reference().to_config_string()).unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_hetnet-lb"))
            .args([
                "run",
                "--seed",
                "7",
                "--realizations",
                "2",
                "--policy",
                "max-power,biased",
            ])
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false);
        (
            status,
            fs::read(out.join("samples.csv")).unwrap_or_default(),
        )
    };
    let (a, b) = (run("a"), run("b"));
    check(
        a.0 && b.0 && !a.1.is_empty() && a.1 == b.1,
        "byte-identical CLI runs",
    );

    // exact identities on the reference scenario
    let mc = MonteCarlo::new(3, SEED);
    let s = ScenarioConfig::reference().with_small_cell_bias_db(12.0);
    let rates = |s: &ScenarioConfig, p| -> Vec<f64> {
        mc.run_ensemble(s, p)
            .unwrap()
            .samples
            .iter()
            .map(|x| x.rate_bps)
            .collect()
    };
    let off = rates(&s, Policy::Biased);
    for variant in [
        BlankingVariant::ReOnlyInBlank,
        BlankingVariant::AllSubframes,
    ] {
        check(
            off == rates(
                &s.with_blanking(BlankingConfig { eta: 0.0, variant }),
                Policy::Biased,
            ),
            "eta = 0 equals blanking off",
        );
    }
    let zero = ScenarioConfig::reference().with_small_cell_bias_db(0.0);
    check(
        rates(&zero, Policy::Biased) == rates(&zero, Policy::MaxPower),
        "0 dB bias equals max power",
    );

    let pass = failures.is_empty();
    outcome(
        pass,
        if pass {
            format!(
                "{} fixture instances, CLI reruns identical, eta = 0 and 0 dB identities exact",
                expected.len()
            )
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}
