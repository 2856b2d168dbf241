//! The `wordfiber` command line.
//!
//! Every run writes a metadata header (version, effective configuration,
//! seed) ahead of the report: `# key=value` comment lines for CSV, a
//! `metadata` object for JSON. Exit codes: 0 success, 1 I/O failure,
//! 2 usage or input error, 3 budget refusal.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Budget, Error};
use crate::families::{scan_family, Family, ScanConfig, VerdictRule, SCAN_CSV_HEADER};
use crate::groups::{FiniteGroup, GroupBackend};
use crate::prob::{
    check_coset_identity, exact_distribution, generation_bound, generation_probability,
    monte_carlo, DISTRIBUTION_CSV_HEADER, ESTIMATE_CSV_HEADER,
};
use crate::tower::{randomly_free_experiment, TowerSpec, FREENESS_CSV_HEADER};
use crate::words::{count_reduced, enumerate_reduced, Word};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

const SUBCOMMANDS: [&str; 7] = ["dist", "mc", "scan", "coset", "free", "genprob", "words"];

#[derive(Debug, Parser)]
#[command(
    name = "wordfiber",
    version,
    about = "Word-map fiber probabilities on finite groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Common {
    /// Base seed for every random stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Element-operation budget for exhaustive work (integer or e.g. 1e9).
    #[arg(long, default_value = "1e9", value_parser = parse_budget)]
    budget: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread cap; output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// File of `key = value` lines using flag names; flags given on the
    /// command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact fiber distribution of a word map.
    Dist {
        #[arg(long)]
        group: String,
        #[arg(long)]
        word: String,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo estimate of one fiber probability.
    Mc {
        #[arg(long)]
        group: String,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Target element in element text form; the identity by default.
        #[arg(long)]
        target: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Scan a group family and classify the trend of P(w).
    Scan {
        /// One of D, S, A, SL2, PSL2.
        #[arg(long)]
        family: String,
        /// Comma-separated values and inclusive ranges, e.g. `3..7,11`.
        #[arg(long)]
        params: String,
        #[arg(long)]
        word: String,
        /// Trials for members beyond the budget.
        #[arg(long, default_value_t = 100_000)]
        mc_trials: u64,
        #[arg(long, default_value_t = VerdictRule::default().floor)]
        floor: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Check whether a word vanishes on a product of cosets.
    Coset {
        #[arg(long)]
        group: String,
        /// Comma-separated subgroup generators; empty for the trivial subgroup.
        #[arg(long, default_value = "")]
        subgroup_gens: String,
        /// Comma-separated coset representatives, one per variable.
        #[arg(long)]
        reps: String,
        #[arg(long)]
        word: String,
        #[command(flatten)]
        common: Common,
    },
    /// Freeness certificates for random tuples in the SL2(Z/p^k) tower.
    Free {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 5)]
        levels: u32,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        #[arg(long, default_value_t = 500)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Probability that n random vectors span (Z/p)^r, with the n-step bound.
    Genprob {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Enumerate reduced words or inspect one word.
    Words {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        max_len: usize,
        #[arg(long)]
        count_only: bool,
        /// Print the canonical form, length, rank and inverse of this word.
        #[arg(long)]
        word: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Dist { common, .. }
            | Command::Mc { common, .. }
            | Command::Scan { common, .. }
            | Command::Coset { common, .. }
            | Command::Free { common, .. }
            | Command::Genprob { common, .. }
            | Command::Words { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Dist { .. } => "dist",
            Command::Mc { .. } => "mc",
            Command::Scan { .. } => "scan",
            Command::Coset { .. } => "coset",
            Command::Free { .. } => "free",
            Command::Genprob { .. } => "genprob",
            Command::Words { .. } => "words",
        }
    }
}

fn parse_budget(text: &str) -> Result<u64, String> {
    let value = match text.parse::<u64>() {
        Ok(v) => v,
        Err(_) => {
            let f: f64 = text.parse().map_err(|_| format!("not a number: {text}"))?;
            if !(f.is_finite() && f >= 1.0 && f.fract() == 0.0 && f <= u64::MAX as f64) {
                return Err(format!("budget must be a positive integer, got {text}"));
            }
            f as u64
        }
    };
    if value == 0 {
        return Err("budget must be positive".into());
    }
    Ok(value)
}

fn parse_params(text: &str) -> Result<Vec<u64>, Error> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let num = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::Invalid(format!("bad parameter {s:?}")))
        };
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(Error::Invalid(format!("empty range {part}")));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    Ok(out)
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Folds `key = value` lines from `--config` into `argv` for keys not
/// already given as flags.
fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let args: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let path = args.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            args.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut argv = argv;
    let has_flag = |args: &[String], key: &str| {
        let flag = format!("--{key}");
        args.iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key = value", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "command" {
            if !args
                .iter()
                .skip(1)
                .any(|a| SUBCOMMANDS.contains(&a.as_str()))
            {
                argv.insert(1.min(argv.len()), value.into());
            }
            continue;
        }
        if key == "config" || has_flag(&args, key) {
            continue;
        }
        match value {
            "true" => argv.push(format!("--{key}").into()),
            "false" => {}
            _ => argv.push(format!("--{key}={value}").into()),
        }
    }
    Ok(argv)
}

/// A rendered report: metadata plus body in both formats.
struct Report {
    config: Vec<(&'static str, String)>,
    csv: Vec<String>,
    json: serde_json::Value,
}

fn render(command: &str, common: &Common, report: Report) -> String {
    let mut config = report.config;
    config.push(("budget", common.budget.to_string()));
    match common.format {
        Format::Csv => {
            let mut out = format!(
                "# wordfiber version={}\n# command={command}\n",
                env!("CARGO_PKG_VERSION")
            );
            for (k, v) in &config {
                out.push_str(&format!("# {k}={v}\n"));
            }
            out.push_str(&format!("# seed={}\n", common.seed));
            for line in report.csv {
                out.push_str(&line);
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let config: serde_json::Map<String, serde_json::Value> = config
                .into_iter()
                .map(|(k, v)| (k.to_string(), serde_json::Value::String(v)))
                .collect();
            let doc = json!({
                "metadata": {
                    "version": env!("CARGO_PKG_VERSION"),
                    "command": command,
                    "config": config,
                    "seed": common.seed,
                },
                "report": report.json,
            });
            let mut s = serde_json::to_string_pretty(&doc).unwrap();
            s.push('\n');
            s
        }
    }
}

fn execute(command: &Command) -> Result<Report, Error> {
    let budget = Budget(command.common().budget);
    let seed = command.common().seed;
    match command {
        Command::Dist { group, word, .. } => {
            let w = Word::parse(word)?;
            let g = FiniteGroup::from_spec(group, budget)?;
            let d = exact_distribution(&g, &w, budget)?;
            let mut csv = vec![DISTRIBUTION_CSV_HEADER.to_string()];
            csv.extend(d.csv_rows());
            Ok(Report {
                config: vec![("group", g.backend().to_string()), ("word", w.to_text())],
                csv,
                json: d.to_json(),
            })
        }
        Command::Mc {
            group,
            word,
            trials,
            target,
            ..
        } => {
            let w = Word::parse(word)?;
            let g = GroupBackend::parse(group)?;
            let target = target.as_deref().map(|t| g.parse_element(t)).transpose()?;
            let r = monte_carlo(&g, &w, target.as_ref(), *trials, seed)?;
            Ok(Report {
                config: vec![
                    ("group", g.to_string()),
                    ("word", w.to_text()),
                    ("trials", trials.to_string()),
                    ("target", r.target.clone()),
                ],
                csv: vec![ESTIMATE_CSV_HEADER.to_string(), r.csv_row()],
                json: serde_json::to_value(&r).unwrap(),
            })
        }
        Command::Scan {
            family,
            params,
            word,
            mc_trials,
            floor,
            ..
        } => {
            let fam = Family::parse(family)?;
            let params = parse_params(params)?;
            let w = Word::parse(word)?;
            let config = ScanConfig {
                budget,
                mc_trials: *mc_trials,
                seed,
                rule: VerdictRule {
                    floor: *floor,
                    ..VerdictRule::default()
                },
            };
            let r = scan_family(fam, &params, &w, &config)?;
            let mut csv = vec![SCAN_CSV_HEADER.to_string()];
            csv.extend(r.csv_rows());
            for (p, e) in &r.errors {
                csv.push(format!("# member_error param={p}: {e}"));
            }
            csv.push(r.csv_footer());
            Ok(Report {
                config: vec![
                    ("family", fam.to_string()),
                    (
                        "params",
                        params
                            .iter()
                            .map(u64::to_string)
                            .collect::<Vec<_>>()
                            .join(";"),
                    ),
                    ("word", w.to_text()),
                    ("mc_trials", mc_trials.to_string()),
                ],
                csv,
                json: r.to_json(),
            })
        }
        Command::Coset {
            group,
            subgroup_gens,
            reps,
            word,
            ..
        } => {
            let w = Word::parse(word)?;
            let g = FiniteGroup::from_spec(group, budget)?;
            let gens = split_list(subgroup_gens)
                .map(|t| g.parse_element(t))
                .collect::<Result<Vec<_>, _>>()?;
            let reps = split_list(reps)
                .map(|t| g.parse_element(t))
                .collect::<Result<Vec<_>, _>>()?;
            let cosets = g.subgroup_closure(&gens, budget)?;
            let check = check_coset_identity(&g, &cosets, &reps, &w, budget)?;
            let fmt = |xs: &[u32]| {
                xs.iter()
                    .map(|&x| g.format(x))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let witness = check.witness.as_deref().map(fmt).unwrap_or_default();
            Ok(Report {
                config: vec![
                    ("group", g.backend().to_string()),
                    ("subgroup_gens", fmt(&gens)),
                    ("reps", fmt(&reps)),
                    ("word", w.to_text()),
                ],
                csv: vec![
                    "group,word,subgroup_order,index,reps,holds,witness".to_string(),
                    format!(
                        "{},{},{},{},{},{},{}",
                        g.backend(),
                        w.to_text(),
                        cosets.subgroup_order(),
                        cosets.index(),
                        fmt(&reps),
                        check.holds,
                        witness
                    ),
                ],
                json: json!({
                    "group": g.backend().to_string(),
                    "word": w.to_text(),
                    "subgroup_order": cosets.subgroup_order(),
                    "index": cosets.index(),
                    "reps": reps.iter().map(|&x| g.format(x)).collect::<Vec<_>>(),
                    "holds": check.holds,
                    "witness": check.witness.map(|t| t.iter().map(|&x| g.format(x)).collect::<Vec<_>>()),
                }),
            })
        }
        Command::Free {
            p,
            levels,
            rank,
            max_len,
            trials,
            ..
        } => {
            let spec = TowerSpec::new(*p, *levels, *rank)?;
            let e = randomly_free_experiment(spec, *max_len, *trials, seed, budget)?;
            let mut csv = vec![FREENESS_CSV_HEADER.to_string()];
            csv.extend(e.csv_rows());
            for (k, (c, f)) in e.pass_counts().iter().zip(e.pass_fractions()).enumerate() {
                csv.push(format!("# level={} passes={c} pass_fraction={f}", k + 1));
            }
            Ok(Report {
                config: vec![
                    ("p", p.to_string()),
                    ("levels", levels.to_string()),
                    ("rank", rank.to_string()),
                    ("max_len", max_len.to_string()),
                    ("trials", trials.to_string()),
                    (
                        "certified_scope",
                        format!("words of length <= {max_len} in {rank} generators; levels 1..={levels}"),
                    ),
                ],
                csv,
                json: e.to_json(),
            })
        }
        Command::Genprob { p, n, r, .. } => {
            let prob = generation_probability(*p, *n, *r)?;
            let bound = generation_bound(*p, *n)?;
            let holds = prob >= bound;
            Ok(Report {
                config: vec![
                    ("p", p.to_string()),
                    ("n", n.to_string()),
                    ("r", r.to_string()),
                ],
                csv: vec![
                    "p,n,r,probability,bound,bound_holds".to_string(),
                    format!("{p},{n},{r},{prob},{bound},{holds}"),
                ],
                json: json!({
                    "p": p, "n": n, "r": r,
                    "probability": prob.to_string(),
                    "bound": bound.to_string(),
                    "bound_holds": holds,
                }),
            })
        }
        Command::Words {
            n,
            max_len,
            count_only,
            word,
            ..
        } => {
            if let Some(text) = word {
                let w = Word::parse(text)?;
                return Ok(Report {
                    config: vec![("word", w.to_text())],
                    csv: vec![
                        "word,length,rank,inverse".to_string(),
                        format!(
                            "{},{},{},{}",
                            w.to_text(),
                            w.len(),
                            w.rank(),
                            w.invert().to_text()
                        ),
                    ],
                    json: json!({
                        "word": w.to_text(),
                        "length": w.len(),
                        "rank": w.rank(),
                        "inverse": w.invert().to_text(),
                    }),
                });
            }
            if *n == 0 {
                return Err(Error::Invalid("n must be at least 1".into()));
            }
            let config = vec![
                ("n", n.to_string()),
                ("max_len", max_len.to_string()),
                ("count_only", count_only.to_string()),
            ];
            let count = count_reduced(*n, *max_len);
            if *count_only {
                return Ok(Report {
                    config,
                    csv: vec!["count".to_string(), count.to_string()],
                    json: json!({ "count": count.to_string() }),
                });
            }
            Budget(command.common().budget).check_u128(count.saturating_mul(*max_len as u128))?;
            let words: Vec<Word> = enumerate_reduced(*n, *max_len).collect();
            let mut csv = vec!["index,word,length".to_string()];
            csv.extend(
                words
                    .iter()
                    .enumerate()
                    .map(|(i, w)| format!("{i},{},{}", w.to_text(), w.len())),
            );
            Ok(Report {
                config,
                csv,
                json: json!({
                    "count": count.to_string(),
                    "words": words.iter().map(Word::to_text).collect::<Vec<_>>(),
                }),
            })
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::Parse { .. } | Error::Invalid(_) => EXIT_USAGE,
    }
}

/// Runs the command line with explicit output streams; returns the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let common = cli.command.common();
    let outcome = match common.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| execute(&cli.command)),
            Err(e) => {
                let _ = writeln!(stderr, "error: cannot start {t} threads: {e}");
                return EXIT_IO;
            }
        },
        None => execute(&cli.command),
    };
    let report = match outcome {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
    };
    let text = render(cli.command.name(), common, report);
    let written = match &common.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| format!("cannot write output: {e}")),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_IO
        }
    }
}

/// Runs the command line against the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    run_with(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_values() {
        assert_eq!(parse_budget("1e9"), Ok(1_000_000_000));
        assert_eq!(parse_budget("12345"), Ok(12345));
        assert!(parse_budget("0").is_err());
        assert!(parse_budget("1.5").is_err());
        assert!(parse_budget("-3").is_err());
    }

    #[test]
    fn param_lists() {
        assert_eq!(parse_params("3..5,11").unwrap(), vec![3, 4, 5, 11]);
        assert_eq!(parse_params(" 7 ").unwrap(), vec![7]);
        assert!(parse_params("5..3").is_err());
        assert!(parse_params("x").is_err());
    }
}
