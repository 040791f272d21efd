use std::fs;

use hetnet_lb::assoc::{brute_force_log_utility, DEFAULT_MAX_SEARCH};
use hetnet_lb::cli::LoadedConfig;
use hetnet_lb::error::Error;
use hetnet_lb::fixtures::{self, SingleUser};
use hetnet_lb::loadopt::{log_utility, solve_binary, RateMatrix, SolverParams};
use hetnet_lb::mc::{MonteCarlo, Objective};
use hetnet_lb::netgen::{derive_seed, generate_realization, NetworkRealization};

fn read(name: &str) -> String {
    fs::read_to_string(fixtures::default_dir().join(name)).unwrap()
}

#[test]
fn regeneration_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let written = fixtures::generate(dir.path()).unwrap();
    assert_eq!(written.len(), 7);
    for path in written {
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        assert_eq!(
            fs::read(&path).unwrap(),
            read(&name).into_bytes(),
            "{name} differs"
        );
    }
}

#[test]
fn oracle_fixtures_hold() {
    let instances = fixtures::parse_instances(&read(fixtures::ORACLE_INSTANCES)).unwrap();
    let expected = fixtures::parse_expected(&read(fixtures::ORACLE_EXPECTED)).unwrap();
    assert_eq!(instances.len(), expected.len());
    assert!((expected[0].objective - 2.7726).abs() < 1e-4);
    assert_eq!(expected[0].serving, vec![0, 0, 1]);
    for (rows, e) in instances.iter().zip(&expected) {
        let rates = RateMatrix::from_dense(rows).unwrap();
        let (a, v) = brute_force_log_utility(&rates, DEFAULT_MAX_SEARCH).unwrap();
        assert_eq!(a.serving, e.serving, "instance {}", e.instance);
        assert!((v - e.objective).abs() <= 1e-5 * e.objective.abs().max(1.0));

        let (binary, state) = solve_binary(&rates, &SolverParams::default()).unwrap();
        let primal = log_utility(&binary, &rates).unwrap();
        assert!((primal - state.best_primal).abs() <= 1e-9 * primal.abs().max(1.0));
        assert!(primal >= v - 0.05 * v.abs(), "instance {}", e.instance);
        assert!(state.best_dual >= v - 1e-6, "instance {}", e.instance);
    }
}

#[test]
fn empty_tier_is_degenerate() {
    let cfg = LoadedConfig::parse(&read(fixtures::EMPTY_TIER)).unwrap();
    for r in 0..3 {
        assert_eq!(
            generate_realization(&cfg.scenario, derive_seed(1, r)),
            Err(Error::DegenerateScenario(100))
        );
    }
}

#[test]
fn single_user_sweep_is_a_step() {
    let cfg = LoadedConfig::parse(&read(fixtures::SINGLE_USER)).unwrap();
    let layout = NetworkRealization::from_csv(&read(fixtures::SINGLE_USER_LAYOUT), 10.0).unwrap();
    let switch: f64 = read(fixtures::SINGLE_USER_SWITCH)
        .lines()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(switch, 5.5);

    let mc = MonteCarlo::new(1, 0).with_layout(layout);
    let r = mc
        .sweep_bias(&cfg.scenario, &SingleUser::bias_grid(), Objective::Pct50)
        .unwrap();
    let committed: Vec<f64> = read(fixtures::SINGLE_USER_SWEEP)
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(committed.len(), r.points.len());
    for (p, want) in r.points.iter().zip(&committed) {
        assert!((p.value - want).abs() <= 1e-5 * want, "bias {}", p.bias_db);
    }
    let first_pico = r
        .points
        .iter()
        .position(|p| p.value != r.points[0].value)
        .unwrap();
    assert_eq!(r.points[first_pico].bias_db, 6.0);
    assert!(r.points[first_pico..]
        .iter()
        .all(|p| p.value == r.points[first_pico].value));
}
