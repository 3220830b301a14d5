//! Batch front end: growth-bound tables, verification suites, and
//! Tamagawa-corrected deltas, driven by a JSON config.
//!
//! Exit codes: 0 success, 2 schema error, 3 hypothesis violation,
//! 4 verification failure, 5 precision exhaustion.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use cyclogrowth::error::Error as CoreError;
use cyclogrowth::growth::{
    sha_growth_bound, tamagawa_defect, tamagawa_growth_delta, CharacterInvariants, GrowthParams,
};
use cyclogrowth::valuation::Rat;
use cyclogrowth::verify;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "cyclogrowth", version, about = "Growth-bound tables and verification suites")]
struct Cli {
    /// JSON config file (see the repository README for the schema)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Working p-adic precision override (digits); values below the
    /// calibrated per-prime default are rejected
    #[arg(long = "precision-N", global = true)]
    precision_n: Option<u32>,
    /// Series truncation override; values below the calibrated minimum are
    /// rejected
    #[arg(long = "trunc-M", global = true)]
    trunc_m: Option<usize>,
    /// Seed for the randomized suites
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker count; cells are sharded deterministically, output order is
    /// independent of this value
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit the per-level growth-bound table for every configured character
    Bound,
    /// Run one verification suite (or "all")
    Verify {
        /// mellin, logmatrix, evaluate-h, kobayashi, newton, twist, modesty, all
        suite: String,
    },
    /// Emit Tamagawa defect and corrected-delta columns from supplied b_n data
    Tamagawa,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn schema(msg: impl Into<String>) -> Self {
        Failure { code: 2, message: msg.into() }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::HypothesisViolated(_) => 3,
            CoreError::PrecisionExhausted(_) => 5,
            CoreError::InvalidParameter(_) => 2,
            _ => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema_version: u32,
    params: ParamsConfig,
    #[serde(default)]
    characters: Vec<CharacterConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsConfig {
    p: u64,
    k: u32,
    j: u32,
    /// "num/den" or "num"
    v: String,
    #[serde(default = "one")]
    e: u32,
    #[serde(default = "one")]
    d: u32,
    #[serde(default = "one")]
    r: u32,
    n_min: u32,
    n_max: u32,
}

fn one() -> u32 {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CharacterConfig {
    eta_index: u32,
    #[serde(default)]
    mu1: u32,
    #[serde(default)]
    mu2: u32,
    #[serde(default)]
    lambda1: u32,
    #[serde(default)]
    lambda2: u32,
    #[serde(default)]
    kappa1: u32,
    #[serde(default)]
    kappa2: u32,
    #[serde(default)]
    r_inf: u32,
    #[serde(default)]
    mu0: Option<u32>,
    #[serde(default)]
    lambda0: Option<u32>,
    /// (level, valuation) pairs for the Tamagawa table
    #[serde(default)]
    b_n: Option<Vec<(u32, i64)>>,
}

fn parse_rat(field: &str, s: &str) -> Result<Rat, Failure> {
    let parse = |t: &str| {
        t.trim()
            .parse::<i64>()
            .map_err(|_| Failure::schema(format!("{field}: {t:?} is not an integer")))
    };
    match s.split_once('/') {
        Some((a, b)) => {
            let den = parse(b)?;
            if den == 0 {
                return Err(Failure::schema(format!("{field}: zero denominator")));
            }
            Ok(Rat::new(parse(a)?, den))
        }
        None => Ok(Rat::from_integer(parse(s)?)),
    }
}

fn rat_str(r: Rat) -> String {
    if *r.denom() == 1 {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn load_config(cli: &Cli) -> Result<(GrowthParams, Vec<CharacterInvariants>), Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::schema("--config is required for this subcommand"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::schema(format!("cannot read {}: {e}", path.display())))?;
    let cfg: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| Failure::schema(format!("config parse error: {e}")))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(Failure::schema(format!(
            "schema_version: expected {SCHEMA_VERSION}, got {}",
            cfg.schema_version
        )));
    }
    let v = parse_rat("params.v", &cfg.params.v)?;
    let params = GrowthParams::new(
        cfg.params.p,
        cfg.params.k,
        cfg.params.j,
        v,
        cfg.params.e,
        cfg.params.d,
        cfg.params.r,
        cfg.params.n_min,
        cfg.params.n_max,
    )?;
    if let Some(n) = cli.precision_n {
        if n < verify::default_prec(params.p) {
            return Err(Failure {
                code: 5,
                message: format!(
                    "--precision-N {n} is below the calibrated minimum {} for p = {}",
                    verify::default_prec(params.p),
                    params.p
                ),
            });
        }
    }
    if let Some(m) = cli.trunc_m {
        if m < 8 {
            return Err(Failure { code: 5, message: format!("--trunc-M {m} is below the minimum 8") });
        }
    }
    let mut characters = Vec::new();
    for c in cfg.characters {
        let inv = CharacterInvariants {
            eta_index: c.eta_index,
            mu1: c.mu1,
            mu2: c.mu2,
            lambda1: c.lambda1,
            lambda2: c.lambda2,
            kappa1: c.kappa1,
            kappa2: c.kappa2,
            r_inf: c.r_inf,
            mu0: c.mu0,
            lambda0: c.lambda0,
            b_n: c.b_n,
        };
        inv.validate(&params)?;
        characters.push(inv);
    }
    characters.sort_by_key(|c| c.eta_index);
    Ok((params, characters))
}

#[derive(Serialize)]
struct BoundRow {
    n: u32,
    eta: u32,
    tau: u8,
    q_star: String,
    nabla: String,
    kappa: u32,
    r_inf: String,
    bound_delta_s: String,
    cumulative_bound: String,
}

fn cmd_bound(params: &GrowthParams, characters: &[CharacterInvariants]) -> Result<Vec<BoundRow>, Failure> {
    let mut rows = Vec::new();
    for n in params.n_min..=params.n_max {
        for inv in characters {
            let mut cumulative = Rat::from_integer(0);
            for m in params.n_min..=n {
                cumulative += sha_growth_bound(m, inv, params)?.total;
            }
            let b = sha_growth_bound(n, inv, params)?;
            rows.push(BoundRow {
                n,
                eta: inv.eta_index,
                tau: b.tau,
                q_star: rat_str(b.q_star),
                nabla: rat_str(b.nabla),
                kappa: b.kappa,
                r_inf: rat_str(b.r_inf_term),
                bound_delta_s: rat_str(b.total),
                cumulative_bound: rat_str(cumulative),
            });
        }
    }
    Ok(rows)
}

#[derive(Serialize)]
struct TamagawaRow {
    eta: u32,
    n: u32,
    b_n: String,
    b_next: String,
    defect: String,
    t_delta: String,
    note: String,
}

fn cmd_tamagawa(
    params: &GrowthParams,
    characters: &[CharacterInvariants],
) -> Result<Vec<TamagawaRow>, Failure> {
    let mut rows = Vec::new();
    for inv in characters {
        let data = match &inv.b_n {
            Some(d) => {
                let mut d = d.clone();
                d.sort_by_key(|&(n, _)| n);
                d
            }
            None => continue,
        };
        for n in params.n_min..params.n_max {
            let here = data.iter().find(|&&(m, _)| m == n);
            let next = data.iter().find(|&&(m, _)| m == n + 1);
            let delta = tamagawa_growth_delta(n, inv, params)?;
            match (here, next) {
                (Some(&(_, b)), Some(&(_, bn))) => {
                    let defect = tamagawa_defect(n, b, bn, params)?;
                    rows.push(TamagawaRow {
                        eta: inv.eta_index,
                        n,
                        b_n: b.to_string(),
                        b_next: bn.to_string(),
                        defect: defect.to_string(),
                        t_delta: rat_str(delta),
                        note: if defect < 0 {
                            "warning: negative defect, inconsistent b_n input".into()
                        } else {
                            String::new()
                        },
                    });
                }
                _ => rows.push(TamagawaRow {
                    eta: inv.eta_index,
                    n,
                    b_n: here.map_or_else(String::new, |&(_, b)| b.to_string()),
                    b_next: next.map_or_else(String::new, |&(_, b)| b.to_string()),
                    defect: String::new(),
                    t_delta: rat_str(delta),
                    note: "skipped: missing consecutive b_n".into(),
                }),
            }
        }
    }
    Ok(rows)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn emit<T: Serialize>(cli: &Cli, header: &[&str], rows: &[T]) -> Result<(), Failure> {
    let mut out = String::new();
    match cli.format {
        Format::Jsonl => {
            for r in rows {
                out.push_str(&serde_json::to_string(r).expect("serializable row"));
                out.push('\n');
            }
        }
        Format::Csv => {
            out.push_str(&header.join(","));
            out.push_str("\r\n");
            for r in rows {
                let v = serde_json::to_value(r).expect("serializable row");
                let obj = v.as_object().expect("row object");
                let fields: Vec<String> = header
                    .iter()
                    .map(|h| match obj.get(*h) {
                        Some(serde_json::Value::String(s)) => csv_field(s),
                        Some(serde_json::Value::Null) | None => String::new(),
                        Some(other) => other.to_string(),
                    })
                    .collect();
                out.push_str(&fields.join(","));
                out.push_str("\r\n");
            }
        }
    }
    match &cli.out {
        Some(path) => fs::write(path, out)
            .map_err(|e| Failure { code: 4, message: format!("cannot write output: {e}") })?,
        None => {
            std::io::stdout()
                .write_all(out.as_bytes())
                .map_err(|e| Failure { code: 4, message: e.to_string() })?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.cmd {
        Cmd::Bound => {
            let (params, characters) = load_config(cli)?;
            let rows = cmd_bound(&params, &characters)?;
            emit(
                cli,
                &["n", "eta", "tau", "q_star", "nabla", "kappa", "r_inf", "bound_delta_s", "cumulative_bound"],
                &rows,
            )
        }
        Cmd::Tamagawa => {
            let (params, characters) = load_config(cli)?;
            let rows = cmd_tamagawa(&params, &characters)?;
            emit(cli, &["eta", "n", "b_n", "b_next", "defect", "t_delta", "note"], &rows)
        }
        Cmd::Verify { suite } => {
            let seed = cli.seed.unwrap_or(verify::DEFAULT_SEED);
            let names: Vec<&str> = if suite == "all" {
                verify::SUITES.to_vec()
            } else {
                vec![suite.as_str()]
            };
            let mut reports = Vec::new();
            for name in names {
                reports.extend(verify::run_suite(name, seed)?);
            }
            let failed = reports.iter().filter(|r| !r.pass).count();
            emit(cli, &["suite", "case", "pass", "details", "guard"], &reports)?;
            if failed > 0 {
                return Err(Failure {
                    code: 4,
                    message: format!("{failed} of {} cases failed", reports.len()),
                });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
