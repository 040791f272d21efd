//! `hetnet-lb` command line.
//!
//! Every subcommand writes CSV files into `--out` and prints one summary
//! line per experiment. Exit status is 0 on success, 2 for bad arguments or
//! configuration, 3 for failures during a run.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RawConfig;
use crate::error::{Error, Result};
use crate::loadopt::SolverParams;
use crate::mc::{
    default_bias_grid, default_eta_grid, Ensemble, MonteCarlo, Objective, Policy, SweepResult,
    TrendMode,
};
use crate::output::{
    fmt_num, summary_csv, sweep_csv, write_samples, SampleContext, SummaryRow, SAMPLES_HEADER,
};
use crate::scenario::{BlankingVariant, ScenarioConfig};

pub const DEFAULT_REALIZATIONS: usize = 50;
pub const WORKERS_ENV: &str = "HETNET_LB_WORKERS";
pub const PRESETS: [&str; 5] = ["fig2", "fig3", "fig5", "fig6", "table1"];

#[derive(Debug, Parser)]
#[command(
    name = "hetnet-lb",
    version,
    about = "Load balancing simulator for heterogeneous cellular networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pooled per-user rates of one or more association policies.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Comma-separated: max-power, max-sinr, biased, load-aware.
        #[arg(long, default_value = "biased", value_delimiter = ',', value_parser = parse_policy)]
        policy: Vec<Policy>,
    },
    /// Objective versus small-cell bias.
    SweepBias {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, default_value = "pct50", value_parser = parse_objective)]
        objective: Objective,
        /// `start:stop:step` or a comma-separated list, in dB.
        #[arg(long, value_parser = grid_arg)]
        biases: Option<Grid>,
    },
    /// Objective over the (bias, blanking fraction) grid.
    SweepBlanking {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, default_value = "pct50", value_parser = parse_objective)]
        objective: Objective,
        #[arg(long, default_value = "re-only-in-blank", value_parser = parse_variant)]
        variant: BlankingVariant,
        #[arg(long, value_parser = grid_arg)]
        biases: Option<Grid>,
        #[arg(long, value_parser = grid_arg)]
        etas: Option<Grid>,
    },
    /// Optimal bias as the small-cell to macro density ratio varies.
    Trend {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: ScenarioArg,
        /// in-band, in-band-blank or out-of-band.
        #[arg(long, value_parser = parse_mode)]
        mode: TrendMode,
        #[arg(long, value_parser = grid_arg)]
        ratios: Grid,
        #[arg(long, default_value = "pct50", value_parser = parse_objective)]
        objective: Objective,
        #[arg(long, value_parser = grid_arg)]
        biases: Option<Grid>,
        #[arg(long, value_parser = grid_arg)]
        etas: Option<Grid>,
    },
    /// Built-in experiments: fig2, fig3, fig5, fig6, table1.
    Preset {
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    realizations: Option<usize>,
    /// Falls back to HETNET_LB_WORKERS, then to one thread per core.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct ScenarioArg {
    /// Scenario file; the built-in reference scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_objective(s: &str) -> std::result::Result<Objective, String> {
    Objective::from_name(s).ok_or_else(|| format!("expected pct5, pct50 or mean-log, got `{s}`"))
}

fn parse_policy(s: &str) -> std::result::Result<Policy, String> {
    Policy::from_name(s.trim()).ok_or_else(|| format!("unknown policy `{s}`"))
}

fn parse_variant(s: &str) -> std::result::Result<BlankingVariant, String> {
    BlankingVariant::from_name(s).ok_or_else(|| format!("unknown blanking variant `{s}`"))
}

fn parse_mode(s: &str) -> std::result::Result<TrendMode, String> {
    TrendMode::from_name(s)
        .ok_or_else(|| format!("expected in-band, in-band-blank or out-of-band, got `{s}`"))
}

#[derive(Debug, Clone)]
struct Grid(Vec<f64>);

fn grid_arg(s: &str) -> std::result::Result<Grid, String> {
    parse_grid(s).map(Grid)
}

fn grid_or(g: Option<Grid>, default: fn() -> Vec<f64>) -> Vec<f64> {
    g.map_or_else(default, |g| g.0)
}

/// `start:stop:step` (inclusive) or `a,b,c`.
pub fn parse_grid(s: &str) -> std::result::Result<Vec<f64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad number `{t}`"))
    };
    let grid = if let Some((a, rest)) = s.split_once(':') {
        let (b, step) = rest.split_once(':').ok_or("expected start:stop:step")?;
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if !(step > 0.0 && b >= a) {
            return Err("grid needs start <= stop and a positive step".into());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| a + i as f64 * step)
            .map(round_grid)
            .collect()
    } else {
        s.split(',')
            .map(num)
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
        return Err("empty or non-finite grid".into());
    }
    Ok(grid)
}

// keeps 0.1-step grids at their decimal values
fn round_grid(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                2
            } else {
                3
            }
        }
    }
}

/// Scenario plus the run settings read from `[solver]` and `[mc]`.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub scenario: ScenarioConfig,
    pub solver: SolverParams,
    pub realizations: Option<usize>,
    pub workers: Option<usize>,
    pub candidates_per_tier: Option<Option<usize>>,
}

impl LoadedConfig {
    pub fn builtin(scenario: ScenarioConfig) -> Self {
        LoadedConfig {
            scenario,
            solver: SolverParams::default(),
            realizations: None,
            workers: None,
            candidates_per_tier: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw = RawConfig::parse(text)?;
        const SECTIONS: [&str; 7] = [
            "region", "band", "tier", "users", "blanking", "solver", "mc",
        ];
        if let Some(s) = raw
            .sections()
            .iter()
            .find(|s| !SECTIONS.contains(&s.name.as_str()))
        {
            return Err(Error::UnknownKey(s.name.clone()));
        }
        let scenario = ScenarioConfig::from_raw(&raw)?;
        let mut solver = SolverParams::default();
        if let Some(s) = raw.section("solver") {
            s.check_keys(&["step0", "max_iters", "gap_tol"])?;
            solver.step0 = s.number("step0")?.unwrap_or(solver.step0);
            solver.max_iters = s
                .integer("max_iters")?
                .map_or(solver.max_iters, |v| v as usize);
            solver.gap_tol = s.number("gap_tol")?.unwrap_or(solver.gap_tol);
            solver.check()?;
        }
        let mut cfg = LoadedConfig {
            solver,
            ..LoadedConfig::builtin(scenario)
        };
        if let Some(s) = raw.section("mc") {
            s.check_keys(&["realizations", "workers", "candidates_per_tier"])?;
            cfg.realizations = s.integer("realizations")?.map(|v| v as usize);
            cfg.workers = s.integer("workers")?.map(|v| v as usize);
            cfg.candidates_per_tier = match s.get("candidates_per_tier") {
                None => None,
                Some("all") => Some(None),
                Some(_) => Some(s.integer("candidates_per_tier")?.map(|v| v as usize)),
            };
        }
        Ok(cfg)
    }

    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::builtin(ScenarioConfig::reference())),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::InvalidValue {
                    key: "config".into(),
                    msg: format!("{}: {e}", p.display()),
                })?;
                Self::parse(&text)
            }
        }
    }
}

fn runner(common: &Common, cfg: &LoadedConfig) -> Result<MonteCarlo> {
    let workers = match common.workers {
        Some(w) => Some(w),
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| Error::InvalidValue {
                key: WORKERS_ENV.into(),
                msg: format!("expected a thread count, got `{v}`"),
            })?),
            Err(_) => cfg.workers,
        },
    };
    let realizations = common
        .realizations
        .or(cfg.realizations)
        .unwrap_or(DEFAULT_REALIZATIONS);
    if realizations == 0 {
        return Err(Error::OutOfRange("realizations".into()));
    }
    let mut mc = MonteCarlo::new(realizations, common.seed)
        .with_workers(workers.unwrap_or(0))
        .with_solver(cfg.solver);
    if let Some(c) = cfg.candidates_per_tier {
        mc.candidates_per_tier = c;
    }
    Ok(mc)
}

struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
        })
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            common,
            scenario,
            policy,
        } => {
            let cfg = LoadedConfig::load(scenario.config.as_deref())?;
            let mc = runner(&common, &cfg)?;
            let out = Outputs::new(&common.out)?;
            run_policies(&mc, &cfg.scenario, &policy, "run", &out)
        }
        Command::SweepBias {
            common,
            scenario,
            objective,
            biases,
        } => {
            let cfg = LoadedConfig::load(scenario.config.as_deref())?;
            let mc = runner(&common, &cfg)?;
            let out = Outputs::new(&common.out)?;
            let grid = grid_or(biases, default_bias_grid);
            let r = mc.sweep_bias(&cfg.scenario, &grid, objective)?;
            out.write("sweep.csv", &sweep_csv(&r))?;
            out.write(
                "summary.csv",
                &summary_csv(&sweep_rows("sweep-bias", objective, &r)),
            )?;
            print_best("sweep-bias", objective, &r);
            Ok(())
        }
        Command::SweepBlanking {
            common,
            scenario,
            objective,
            variant,
            biases,
            etas,
        } => {
            let cfg = LoadedConfig::load(scenario.config.as_deref())?;
            let mc = runner(&common, &cfg)?;
            let out = Outputs::new(&common.out)?;
            let r = mc.sweep_blanking(
                &cfg.scenario,
                &grid_or(biases, default_bias_grid),
                &grid_or(etas, default_eta_grid),
                variant,
                objective,
            )?;
            write_blanking(&out, "", "sweep-blanking", objective, &r)?;
            out.write(
                "summary.csv",
                &summary_csv(&sweep_rows("sweep-blanking", objective, &r)),
            )?;
            Ok(())
        }
        Command::Trend {
            common,
            scenario,
            mode,
            ratios,
            objective,
            biases,
            etas,
        } => {
            let cfg = LoadedConfig::load(scenario.config.as_deref())?;
            let mc = runner(&common, &cfg)?;
            let out = Outputs::new(&common.out)?;
            let biases = grid_or(biases, default_bias_grid);
            let etas = grid_or(etas, default_eta_grid);
            let mut trend = String::from(TREND_HEADER);
            let mut rows = Vec::new();
            trend_rows(
                &mc,
                &cfg.scenario,
                mode,
                &ratios.0,
                objective,
                &biases,
                &etas,
                "trend",
                &mut trend,
                &mut rows,
            )?;
            out.write("trend.csv", &trend)?;
            out.write("summary.csv", &summary_csv(&rows))?;
            Ok(())
        }
        Command::Preset { name, common } => {
            if !PRESETS.contains(&name.as_str()) {
                return Err(Error::InvalidValue {
                    key: "preset".into(),
                    msg: format!(
                        "unknown preset `{name}`; expected one of {}",
                        PRESETS.join(", ")
                    ),
                });
            }
            let mc = runner(&common, &LoadedConfig::builtin(ScenarioConfig::reference()))?;
            let out = Outputs::new(&common.out)?;
            preset(&name, &mc, &out)
        }
    }
}

const TREND_HEADER: &str = "variant,ratio,bias_db,eta,objective_value\n";

fn policy_bias_db(policy: Policy, scenario: &ScenarioConfig) -> f64 {
    if policy == Policy::Biased {
        scenario.small_cell_bias_db()
    } else {
        0.0
    }
}

fn ensemble_rows(
    experiment: &str,
    policy: Policy,
    scenario: &ScenarioConfig,
    e: &Ensemble,
) -> Result<Vec<SummaryRow>> {
    [Objective::Pct5, Objective::Pct50, Objective::MeanLog]
        .into_iter()
        .map(|o| {
            Ok(SummaryRow {
                experiment: experiment.to_string(),
                policy: policy.name().to_string(),
                bias_db: policy_bias_db(policy, scenario),
                eta: scenario.blanking.effective_eta(),
                objective_kind: o.name().to_string(),
                objective_value: o.evaluate(&e.stats)?,
                is_argmax: false,
            })
        })
        .collect()
}

fn run_policies(
    mc: &MonteCarlo,
    scenario: &ScenarioConfig,
    policies: &[Policy],
    experiment: &str,
    out: &Outputs,
) -> Result<()> {
    let mut samples = format!("{SAMPLES_HEADER}\n");
    let mut rows = Vec::new();
    for &p in policies {
        let e = mc.run_ensemble(scenario, p)?;
        let ctx = SampleContext {
            policy: p.name(),
            bias_db: policy_bias_db(p, scenario),
            eta: scenario.blanking.effective_eta(),
            variant: scenario.blanking.variant.name(),
        };
        write_samples(&mut samples, ctx, &e.samples);
        let r = ensemble_rows(experiment, p, scenario, &e)?;
        println!(
            "{experiment} {}: pct5 {} pct50 {} mean-log {} over {} users",
            p.name(),
            fmt_num(r[0].objective_value),
            fmt_num(r[1].objective_value),
            fmt_num(r[2].objective_value),
            e.samples.len()
        );
        rows.extend(r);
    }
    out.write("samples.csv", &samples)?;
    out.write("summary.csv", &summary_csv(&rows))
}

fn sweep_rows(experiment: &str, objective: Objective, r: &SweepResult) -> Vec<SummaryRow> {
    r.points
        .iter()
        .enumerate()
        .map(|(i, p)| SummaryRow {
            experiment: experiment.to_string(),
            policy: Policy::Biased.name().to_string(),
            bias_db: p.bias_db,
            eta: p.eta,
            objective_kind: objective.name().to_string(),
            objective_value: p.value,
            is_argmax: i == r.argmax,
        })
        .collect()
}

fn best_row(experiment: &str, objective: Objective, r: &SweepResult) -> SummaryRow {
    sweep_rows(experiment, objective, r).swap_remove(r.argmax)
}

fn print_best(experiment: &str, objective: Objective, r: &SweepResult) {
    let b = r.best();
    println!(
        "{experiment}: max {} {} at bias {} dB, eta {} ({} samples per point)",
        objective.name(),
        fmt_num(b.value),
        fmt_num(b.bias_db),
        fmt_num(b.eta),
        r.samples_per_point
    );
}

/// Writes `<prefix>sweep.csv` and `<prefix>per_eta.csv`.
fn write_blanking(
    out: &Outputs,
    prefix: &str,
    experiment: &str,
    objective: Objective,
    r: &SweepResult,
) -> Result<()> {
    out.write(&format!("{prefix}sweep.csv"), &sweep_csv(r))?;
    let per_eta = SweepResult {
        points: r.per_eta_best.clone(),
        argmax: 0,
        samples_per_point: r.samples_per_point,
        per_eta_best: Vec::new(),
    };
    out.write(&format!("{prefix}per_eta.csv"), &sweep_csv(&per_eta))?;
    print_best(experiment, objective, r);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn trend_rows(
    mc: &MonteCarlo,
    scenario: &ScenarioConfig,
    mode: TrendMode,
    ratios: &[f64],
    objective: Objective,
    biases: &[f64],
    etas: &[f64],
    experiment: &str,
    trend: &mut String,
    rows: &mut Vec<SummaryRow>,
) -> Result<()> {
    let points = mc.density_trend(scenario, ratios, mode, objective, biases, etas)?;
    let variant = match mode {
        TrendMode::InBandBlank => match scenario.blanking.variant {
            BlankingVariant::Off => BlankingVariant::ReOnlyInBlank,
            v => v,
        },
        _ => BlankingVariant::Off,
    };
    for t in points {
        let b = t.best;
        trend.push_str(&format!(
            "{},{},{},{},{}\n",
            variant.name(),
            fmt_num(t.ratio),
            fmt_num(b.bias_db),
            fmt_num(b.eta),
            fmt_num(b.value)
        ));
        let name = format!("{experiment}-{}-ratio-{}", mode.name(), fmt_num(t.ratio));
        print_best(&name, objective, &t.sweep);
        rows.push(best_row(&name, objective, &t.sweep));
    }
    Ok(())
}

fn preset(name: &str, mc: &MonteCarlo, out: &Outputs) -> Result<()> {
    let reference = ScenarioConfig::reference();
    let biases = default_bias_grid();
    let etas = default_eta_grid();
    match name {
        "fig2" => {
            // range expansion at the bias that maximizes the cell-edge rate
            let sweep = mc.sweep_bias(&reference, &biases, Objective::Pct5)?;
            let cre = reference.with_small_cell_bias_db(sweep.best().bias_db);
            run_policies(
                mc,
                &cre,
                &[
                    Policy::MaxPower,
                    Policy::MaxSinr,
                    Policy::Biased,
                    Policy::LoadAware,
                ],
                "fig2",
                out,
            )
        }
        "fig3" => {
            let mut rows = Vec::new();
            for ratio in [2.0, 5.0, 10.0] {
                let s = ScenarioConfig::out_of_band().with_density_ratio(ratio);
                let r = mc.sweep_bias(&s, &biases, Objective::Pct5)?;
                let experiment = format!("fig3-ratio-{}", fmt_num(ratio));
                out.write(
                    &format!("sweep_ratio_{}.csv", fmt_num(ratio)),
                    &sweep_csv(&r),
                )?;
                print_best(&experiment, Objective::Pct5, &r);
                rows.extend(sweep_rows(&experiment, Objective::Pct5, &r));
            }
            out.write("summary.csv", &summary_csv(&rows))
        }
        "fig5" => {
            let r = mc.sweep_blanking(
                &reference,
                &biases,
                &etas,
                BlankingVariant::ReOnlyInBlank,
                Objective::Pct50,
            )?;
            write_blanking(out, "", "fig5", Objective::Pct50, &r)?;
            out.write(
                "summary.csv",
                &summary_csv(&sweep_rows("fig5", Objective::Pct50, &r)),
            )
        }
        "fig6" => {
            let mut trend = String::from(TREND_HEADER);
            let mut rows = Vec::new();
            for variant in [
                BlankingVariant::AllSubframes,
                BlankingVariant::ReOnlyInBlank,
            ] {
                let s =
                    reference.with_blanking(crate::scenario::BlankingConfig { eta: 0.0, variant });
                let experiment = format!("fig6-{}", variant.name());
                trend_rows(
                    mc,
                    &s,
                    TrendMode::InBandBlank,
                    &[2.0, 5.0, 10.0, 20.0],
                    Objective::Pct50,
                    &biases,
                    &etas,
                    &experiment,
                    &mut trend,
                    &mut rows,
                )?;
            }
            out.write("trend.csv", &trend)?;
            out.write("summary.csv", &summary_csv(&rows))
        }
        "table1" => {
            let in_band = mc.sweep_bias(&reference, &biases, Objective::Pct50)?;
            let blank = mc.sweep_blanking(
                &reference,
                &biases,
                &etas,
                BlankingVariant::ReOnlyInBlank,
                Objective::Pct50,
            )?;
            let oob = mc.sweep_bias(&ScenarioConfig::out_of_band(), &biases, Objective::Pct5)?;
            let mut rows = Vec::new();
            for (experiment, objective, r) in [
                ("in-band", Objective::Pct50, &in_band),
                ("in-band+blank", Objective::Pct50, &blank),
                ("out-of-band", Objective::Pct5, &oob),
            ] {
                print_best(experiment, objective, r);
                rows.push(best_row(experiment, objective, r));
            }
            out.write("summary.csv", &summary_csv(&rows))
        }
        _ => unreachable!("preset names are checked before dispatch"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:2:1").unwrap(), vec![0.0, 1.0, 2.0]);
        assert_eq!(parse_grid("0:0.3:0.1").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert_eq!(parse_grid("3,10").unwrap(), vec![3.0, 10.0]);
        assert!(parse_grid("2:1:1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn config_sections_are_checked() {
        let base = ScenarioConfig::reference().to_config_string();
        let cfg = LoadedConfig::parse(&format!(
            "{base}\n[solver]\nmax_iters = 10\n[mc]\nrealizations = 3\ncandidates_per_tier = all\n"
        ))
        .unwrap();
        assert_eq!(cfg.solver.max_iters, 10);
        assert_eq!(cfg.realizations, Some(3));
        assert_eq!(cfg.candidates_per_tier, Some(None));
        let e = LoadedConfig::parse(&format!("{base}\n[solvr]\n")).unwrap_err();
        assert_eq!(e, Error::UnknownKey("solvr".into()));
        let e = LoadedConfig::parse(&format!("{base}\n[mc]\nseeds = 2\n")).unwrap_err();
        assert_eq!(e, Error::UnknownKey("mc.seeds".into()));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main(["hetnet-lb", "preset", "fig9"]), 2);
        assert_eq!(main(["hetnet-lb", "bogus"]), 2);
        assert_eq!(main(["hetnet-lb", "--help"]), 0);
        assert_eq!(
            main(["hetnet-lb", "run", "--config", "/nonexistent/file"]),
            2
        );
    }
}
