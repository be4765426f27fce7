//! The `delegate` command line: presets, solving, sweeps and verification.
//!
//! Every command writes to `--out` when given and to standard output
//! otherwise. Exit status is 0 on success, 1 on invalid input and 2 when a
//! verification fails.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use delegation::agent::{CostKind, CostModel, CostSpec};
use delegation::bias::{optimal_bias, BIAS_CSV_HEADER};
use delegation::config::{BiasSpec, SettingSpec};
use delegation::high_point::high_point_demo_with_grid;
use delegation::model::{check_assumptions, DecisionSetting, DEFAULT_CHECK_GRID};
use delegation::numeric::{fmt_sig, range_inclusive};
use delegation::optimizer::{regime_csv, regime_map, solve, RegimeRow, DEFAULT_GRID};
use delegation::oracle::{default_grid, verify_characterization, DEFAULT_M, MAX_GRID};
use delegation::principal::evaluate;
use delegation::sets::DelegationSet;
use delegation::suites;

/// Status for invalid input or a failed computation.
pub const EXIT_INVALID: i32 = 1;
/// Status for a verification that ran and failed.
pub const EXIT_VERIFY: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] delegation::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "delegate",
    version,
    about = "Optimal delegation with costly information acquisition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Points per dimension of the optimizer's grid search.
    #[arg(long = "grid-size", global = true, default_value_t = DEFAULT_GRID)]
    grid_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
struct SettingArgs {
    /// Named setting: uqc (uniform states, quadratic loss, constant bias)
    /// or uqc-generic.
    #[arg(long, default_value = "uqc")]
    preset: String,
    /// Constant bias; overrides the bias of a --setting file.
    #[arg(long)]
    beta: Option<f64>,
    /// Setting JSON file.
    #[arg(long)]
    setting: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct CostArgs {
    /// Exponential cost parameter.
    #[arg(long)]
    kappa: Option<f64>,
    /// Cost JSON file.
    #[arg(long)]
    cost: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal delegation set.
    Solve {
        #[command(flatten)]
        setting: SettingArgs,
        #[command(flatten)]
        cost: CostArgs,
    },
    /// Payoffs for an explicit delegation set.
    Eval {
        #[command(flatten)]
        setting: SettingArgs,
        #[command(flatten)]
        cost: CostArgs,
        /// Delegation set JSON file.
        #[arg(long)]
        set: PathBuf,
    },
    /// Check the model assumptions; exits 1 if any fails.
    CheckAssumptions {
        #[command(flatten)]
        setting: SettingArgs,
    },
    /// Optimal form on a grid of biases and cost parameters.
    RegimeMap {
        /// Bias range lo:hi:step, a list a,b,c, or one value.
        #[arg(long)]
        beta: String,
        /// Cost range lo:hi:step, a list, or one value.
        #[arg(long)]
        kappa: String,
    },
    /// Principal's value as a function of the bias.
    BiasCurve {
        #[arg(long)]
        kappa: String,
        #[arg(long, default_value = "0:0.1:0.005")]
        beta: String,
    },
    /// Compare the optimizer with exhaustive search on a decision grid.
    Oracle {
        #[command(flatten)]
        setting: SettingArgs,
        #[command(flatten)]
        cost: CostArgs,
        /// Grid points.
        #[arg(long, default_value_t = DEFAULT_M)]
        m: usize,
    },
    /// Build a cost under which high-point delegation is optimal.
    HighPointDemo {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Run property suites.
    Verify {
        /// Suite name or all.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit status.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                return EXIT_INVALID;
            }
            let _ = write!(stdout, "{text}");
            return 0;
        }
    };
    let result = match cli.common.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(CliError::Usage(e.to_string())),
        },
        None => dispatch(&cli),
    };
    let delivered = result.and_then(|out| match &cli.common.out {
        Some(path) => fs::write(path, &out.text)
            .map(|_| out.status)
            .map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            }),
        None => {
            let _ = stdout.write_all(out.text.as_bytes());
            Ok(out.status)
        }
    });
    match delivered {
        Ok(status) => status,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INVALID
        }
    }
}

struct Output {
    text: String,
    status: i32,
}

fn dispatch(cli: &Cli) -> CliResult<Output> {
    let common = &cli.common;
    let grid = common.grid_size;
    if grid < 2 {
        return Err(CliError::Usage("--grid-size must be at least 2".into()));
    }
    let json_default = |fmt: Option<Format>| fmt.unwrap_or(Format::Json);
    match &cli.command {
        Command::Solve { setting, cost } => {
            let (spec, s) = load_setting(setting)?;
            let c = load_cost(cost)?;
            let r = solve(&s, &c, grid)?;
            let text = match json_default(common.format) {
                Format::Json => json(&r),
                Format::Csv => {
                    let (y0, y1, y2) = r.parameters();
                    let row = RegimeRow {
                        beta: constant_bias(&spec),
                        kappa: kappa_of(&c),
                        form: r.form,
                        y0,
                        y1,
                        y2_or_ybar: y2,
                        u_total: r.evaluation.u_total,
                        effort: r.evaluation.agent.effort,
                        u_p0: r.evaluation.u_p0,
                    };
                    regime_csv(&[row])
                }
            };
            Ok(ok(text))
        }
        Command::Eval { setting, cost, set } => {
            let (_, s) = load_setting(setting)?;
            let c = load_cost(cost)?;
            let d: DelegationSet = read_json(set)?;
            let ev = evaluate(&s, &c, &d);
            let text = match json_default(common.format) {
                Format::Json => json(&ev),
                Format::Csv => {
                    let v = [
                        ev.u_p0,
                        ev.u_p1,
                        ev.delta_p,
                        ev.agent.uninformed_payoff,
                        ev.agent.informed_payoff,
                        ev.agent.info_gain,
                        ev.agent.effort,
                        ev.u_total,
                        ev.agent.uninformed_decision,
                    ];
                    let cells: Vec<String> = v.iter().map(|x| fmt_sig(*x, 10)).collect();
                    format!(
                        "u_P0,u_P1,delta_P,u_A0,u_A1,delta_A,effort,U_P,uninformed_decision\n{}\n",
                        cells.join(",")
                    )
                }
            };
            Ok(ok(text))
        }
        Command::CheckAssumptions { setting } => {
            let (_, s) = load_setting(setting)?;
            let report = check_assumptions(&s, DEFAULT_CHECK_GRID)?;
            let text = match json_default(common.format) {
                Format::Json => json(&report),
                Format::Csv => {
                    let mut t = String::from("name,passed,worst_state,worst_margin\n");
                    for c in &report.checks {
                        t.push_str(&format!(
                            "{},{},{},{}\n",
                            c.name,
                            c.passed,
                            c.worst_state.map_or(String::new(), |x| fmt_sig(x, 10)),
                            fmt_sig(c.worst_margin, 10)
                        ));
                    }
                    t
                }
            };
            let status = if report.all_passed() { 0 } else { EXIT_INVALID };
            Ok(Output { text, status })
        }
        Command::RegimeMap { beta, kappa } => {
            let betas = parse_range(beta, "--beta")?;
            let kappas = parse_range(kappa, "--kappa")?;
            let rows = regime_map(&betas, &kappas, grid)?;
            let text = match common.format.unwrap_or(Format::Csv) {
                Format::Csv => regime_csv(&rows),
                Format::Json => json(&rows),
            };
            Ok(ok(text))
        }
        Command::BiasCurve { kappa, beta } => {
            let kappas = parse_range(kappa, "--kappa")?;
            let betas = parse_range(beta, "--beta")?;
            let curves = kappas
                .iter()
                .map(|&k| optimal_bias(k, &betas, grid))
                .collect::<Result<Vec<_>, _>>()?;
            let text = match common.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut t = format!("{BIAS_CSV_HEADER}\n");
                    for c in &curves {
                        for row in c.csv_rows() {
                            t.push_str(&row);
                            t.push('\n');
                        }
                    }
                    t
                }
                Format::Json => json(&curves.iter().map(|c| c.summary()).collect::<Vec<_>>()),
            };
            Ok(ok(text))
        }
        Command::Oracle { setting, cost, m } => {
            if *m == 0 || *m > MAX_GRID {
                return Err(CliError::Usage(format!("--m must lie in 1..={MAX_GRID}")));
            }
            let (_, s) = load_setting(setting)?;
            let c = load_cost(cost)?;
            let report = verify_characterization(&s, &c, &default_grid(&s, *m))?;
            let status = if report.passed { 0 } else { EXIT_VERIFY };
            Ok(Output {
                text: json(&report),
                status,
            })
        }
        Command::HighPointDemo { beta, eps } => {
            let report = high_point_demo_with_grid(*beta, *eps, grid)?;
            let status = if report.success { 0 } else { EXIT_VERIFY };
            Ok(Output {
                text: json(&report),
                status,
            })
        }
        Command::Verify { suite } => {
            let mut checks = Vec::new();
            for s in suites::select(suite)? {
                checks.extend(s.run()?);
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            let text = match common.format {
                Some(Format::Json) => json(&checks),
                _ => {
                    let mut t: String = checks.iter().map(|c| format!("{c}\n")).collect();
                    t.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
                    t
                }
            };
            Ok(Output {
                text,
                status: if failed == 0 { 0 } else { EXIT_VERIFY },
            })
        }
    }
}

fn ok(text: String) -> Output {
    Output { text, status: 0 }
}

fn load_setting(args: &SettingArgs) -> CliResult<(SettingSpec, DecisionSetting)> {
    let spec = match (&args.setting, args.beta) {
        (Some(path), beta) => {
            let spec: SettingSpec = read_json(path)?;
            match beta {
                Some(b) => spec.with_beta(b),
                None => spec,
            }
        }
        (None, Some(b)) => SettingSpec::preset(&args.preset, b)?,
        (None, None) => return Err(CliError::Usage("give --beta or --setting".into())),
    };
    let setting = spec.build()?;
    Ok((spec, setting))
}

fn load_cost(args: &CostArgs) -> CliResult<CostModel> {
    let spec = match (&args.cost, args.kappa) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give either --kappa or --cost, not both".into(),
            ))
        }
        (Some(path), None) => read_json::<CostSpec>(path)?,
        (None, Some(kappa)) => CostSpec::Szalay { kappa },
        (None, None) => return Err(CliError::Usage("give --kappa or --cost".into())),
    };
    Ok(CostModel::from_spec(&spec)?)
}

fn constant_bias(spec: &SettingSpec) -> f64 {
    match spec.bias {
        BiasSpec::Constant { beta } => beta,
        BiasSpec::Affine { .. } => f64::NAN,
    }
}

fn kappa_of(cost: &CostModel) -> f64 {
    match cost.kind() {
        CostKind::SzalayExponential { kappa } => kappa,
        _ => f64::NAN,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// `lo:hi:step`, a comma-separated list, or a single number.
pub fn parse_range(text: &str, flag: &str) -> CliResult<Vec<f64>> {
    let num = |s: &str| -> CliResult<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::Usage(format!("{flag}: '{s}' is not a number")))
    };
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [lo, hi, step] = parts[..] else {
            return Err(CliError::Usage(format!(
                "{flag}: expected lo:hi:step, got '{text}'"
            )));
        };
        let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
        if step.is_nan() || step <= 0.0 || hi < lo {
            return Err(CliError::Usage(format!(
                "{flag}: need step > 0 and hi >= lo"
            )));
        }
        // Snap to the step's decimal grid so 0.1 + 0.2 prints as 0.3.
        range_inclusive(lo, hi, step)
            .into_iter()
            .map(|x| fmt_sig(x, 12).parse().unwrap_or(x))
            .collect()
    } else {
        text.split(',').map(num).collect::<CliResult<Vec<f64>>>()?
    };
    if values.is_empty() {
        return Err(CliError::Usage(format!("{flag}: empty grid")));
    }
    Ok(values)
}

/// Pretty JSON with every float rounded to 10 significant digits.
fn json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("output types serialize");
    let mut text = serde_json::to_string_pretty(&round(v)).expect("values serialize");
    text.push('\n');
    text
}

fn round(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let r: f64 = fmt_sig(x, 10).parse().unwrap_or(x);
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round(v))).collect()),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(
            parse_range("0.1:0.3:0.1", "--beta").unwrap(),
            vec![0.1, 0.2, 0.3]
        );
        assert_eq!(parse_range("0.1,0.25", "--beta").unwrap(), vec![0.1, 0.25]);
        assert_eq!(parse_range("0.05", "--beta").unwrap(), vec![0.05]);
        assert!(parse_range("0.3:0.1:0.1", "--beta").is_err());
        assert!(parse_range("0.1:0.2", "--beta").is_err());
        assert!(parse_range("a", "--beta").is_err());
    }

    #[test]
    fn rounding_keeps_ten_digits() {
        let v = round(serde_json::json!({"x": 0.123456789012345, "n": 3, "a": [1.0e-20]}));
        assert_eq!(v["x"].as_f64().unwrap(), 0.1234567890);
        assert_eq!(v["n"].as_i64().unwrap(), 3);
        assert_eq!(v["a"][0].as_f64().unwrap(), 1.0e-20);
    }
}
