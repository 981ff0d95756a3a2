mod suites;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gwcrc_core::exactfield::{Cyc, CycNum};
use gwcrc_core::frobenius::FrobeniusData;
use gwcrc_core::graphsum::{assemble_potential, required_kmax, Generators};
use gwcrc_core::hypergeom::{i_function_cnzn, i_function_kp, l_series, mirror_map};
use gwcrc_core::rmatrix::{
    ladder_table, qrr_cnzn, qrr_kp, qrr_to_json, solve_flatness_with, symplectic_residual, Normalization,
};
use gwcrc_core::{Error, Rational, Target};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "gwcrc", version, about = "Exact GW potentials of KP^{n-1} and [C^n/Z_n] and their crepant resolution check")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit one of the series I, L, C, K, X, A or the mirror map.
    Series(SeriesArgs),
    /// Dump the ladder rows of P̃, the QRR diagonal and the symplectic residual.
    Rmatrix(RmatrixArgs),
    /// Assemble F_{g,m} over decorated stable graphs.
    Potential(PotentialArgs),
    /// Run a verification suite; exit 0 iff every check passes.
    Verify(VerifyArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TargetArg {
    Kp,
    Cnzn,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Kp => Target::KP,
            TargetArg::Cnzn => Target::CnZn,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum What {
    I,
    L,
    C,
    K,
    X,
    A,
    Mirror,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Lemmas,
    Flatness,
    Appendix,
    Lgmirror,
    Crc,
    All,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, value_enum, default_value = "kp")]
    target: TargetArg,
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    json: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct SeriesArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "l")]
    what: What,
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long, default_value_t = 8)]
    order: i64,
}

#[derive(Args, Debug)]
struct RmatrixArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 4)]
    kmax: usize,
    /// q- or x-order of the series solve; defaults to kmax·n + 5.
    #[arg(long)]
    order: Option<i64>,
    #[arg(long, default_value_t = 6)]
    zorder: usize,
}

#[derive(Args, Debug)]
struct PotentialArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    g: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    insertions: Option<Vec<usize>>,
    #[arg(long, default_value_t = 8)]
    order: i64,
    /// Extra levels of P̃ beyond what (g, m) needs.
    #[arg(long, default_value_t = 0)]
    kmax: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    #[arg(long)]
    g: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    insertions: Option<Vec<usize>>,
    /// "minus-one", or k for ζ_{2n}^k.
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    order: Option<i64>,
    #[arg(long)]
    zorder: Option<usize>,
    #[arg(long)]
    kmax: Option<usize>,
}

enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidRho
            | Error::InvalidArgument(_)
            | Error::UnstableRange { .. }
            | Error::UnstableInput { .. }
            | Error::IndexOutOfRange(_)
            | Error::ConductorOutOfRange(_) => Failure::Usage(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn check_n(n: usize) -> CliResult<()> {
    if !(3..=12).contains(&n) {
        return Err(Failure::Usage(format!("--n must lie in 3..=12, got {n}")));
    }
    Ok(())
}

fn check_order(order: i64) -> CliResult<()> {
    if !(1..=200).contains(&order) {
        return Err(Failure::Usage(format!("order must lie in 1..=200, got {order}")));
    }
    Ok(())
}

fn parse_rho(n: usize, sel: Option<&str>) -> CliResult<CycNum> {
    let cyc = Cyc::for_n(n);
    let rho = match sel {
        None if n % 2 == 1 => cyc.int(-1),
        None => cyc.root(2 * n as u32, 1),
        Some("minus-one") => cyc.int(-1),
        Some(s) => {
            let k: i64 = s.parse().map_err(|_| Failure::Usage(format!("--rho expects minus-one or an integer, got {s}")))?;
            cyc.root(2 * n as u32, k)
        }
    };
    gwcrc_core::rmatrix::check_rho(n, &rho)?;
    Ok(rho)
}

fn insertions_for(m: Option<usize>, ins: Option<Vec<usize>>, n: usize) -> CliResult<Vec<usize>> {
    let ins = match (m, ins) {
        (Some(m), Some(v)) if v.len() != m => {
            return Err(Failure::Usage(format!("--m {m} disagrees with {} insertions", v.len())))
        }
        (_, Some(v)) => v,
        (Some(m), None) => vec![1 % n; m],
        (None, None) => vec![],
    };
    if let Some(c) = ins.iter().find(|&&c| c >= n) {
        return Err(Failure::Usage(format!("insertion {c} is not in 0..{n}")));
    }
    Ok(ins)
}

fn cmd_series(a: &SeriesArgs) -> CliResult<Value> {
    let (t, n, order) = (Target::from(a.common.target), a.common.n, a.order);
    check_n(n)?;
    check_order(order)?;
    let pick = |v: &[gwcrc_core::QSeries<Rational>], what: &str| -> CliResult<Value> {
        v.get(a.index)
            .map(|s| s.truncate(order).to_json())
            .ok_or_else(|| Failure::Usage(format!("{what} index {} out of range 0..{}", a.index, v.len())))
    };
    let series = match a.what {
        What::L => l_series::<Rational>(t, n, order).to_json(),
        What::Mirror => {
            if t != Target::KP {
                return Err(Failure::Usage("the mirror map is defined for --target kp".into()));
            }
            mirror_map::<Rational>(n, order).to_json()
        }
        What::I => match t {
            Target::KP => {
                let comps = i_function_kp::<Rational>(n, order, a.index.max(n)).components;
                let c = comps.get(a.index).ok_or_else(|| Failure::Usage(format!("I index {} out of range", a.index)))?;
                Value::Array(c.parts().iter().map(|p| p.to_json()).collect())
            }
            Target::CnZn => {
                let comps = i_function_cnzn::<Rational>(n, order, a.index.max(n)).components;
                comps.get(a.index).map(|s| s.to_json()).ok_or_else(|| Failure::Usage(format!("I index {} out of range", a.index)))?
            }
        },
        What::C | What::K | What::X | What::A => {
            let f = FrobeniusData::<Rational>::new(t, n, order)?;
            match a.what {
                What::C => pick(&f.c, "C")?,
                What::K => pick(&f.k, "K")?,
                What::X => pick(&f.x, "X")?,
                _ => pick(&f.a, "A")?,
            }
        }
    };
    Ok(json!({
        "command": "series",
        "target": t.name(),
        "n": n,
        "what": format!("{:?}", a.what),
        "index": a.index,
        "order": order,
        "series": series,
    }))
}

fn cmd_rmatrix(a: &RmatrixArgs) -> CliResult<Value> {
    let (t, n, kmax) = (Target::from(a.common.target), a.common.n, a.kmax);
    check_n(n)?;
    let order = a.order.unwrap_or((kmax * n + 5) as i64);
    check_order(order)?;
    let frob = FrobeniusData::<CycNum>::new(t, n, order + kmax as i64 + 2)?;
    let pt = solve_flatness_with(&frob, kmax, order, Normalization::True, None)?;
    let ladder = ladder_table(t, n, kmax, Normalization::True)?;
    let rows: Vec<Value> = ladder
        .polys
        .iter()
        .enumerate()
        .map(|(k, row)| {
            json!({
                "k": k,
                "row0": row.iter().map(|p| json!({"display": p.to_string(), "poly": p.to_json()})).collect::<Vec<_>>(),
            })
        })
        .collect();
    let qrr = match t {
        Target::KP => qrr_kp(n, a.zorder),
        Target::CnZn => qrr_cnzn(n, a.zorder),
    };
    let symplectic = match symplectic_residual(&pt, &frob, a.zorder.min(kmax))? {
        None => "0".to_string(),
        Some(e) => format!("nonzero at z^{e}"),
    };
    Ok(json!({
        "command": "rmatrix",
        "target": t.name(),
        "n": n,
        "kmax": kmax,
        "order": order,
        "zorder": a.zorder,
        "rows": rows,
        "qrr": qrr_to_json(&qrr),
        "residuals": {"symplectic": symplectic},
    }))
}

fn cmd_potential(a: &PotentialArgs) -> CliResult<Value> {
    let (t, n) = (Target::from(a.common.target), a.common.n);
    check_n(n)?;
    check_order(a.order)?;
    let ins = insertions_for(a.m, a.insertions.clone(), n)?;
    if 2 * a.g as i64 - 2 + ins.len() as i64 <= 0 {
        return Err(Error::UnstableRange { g: a.g, m: ins.len() }.into());
    }
    let kmax = required_kmax(a.g, ins.len()) + a.kmax;
    let gen = Generators::new(t, n, kmax, a.order)?;
    let pot = assemble_potential(&gen, a.g, &ins)?;
    let mut out = pot.to_json();
    out["command"] = json!("potential");
    out["target"] = json!(t.name());
    Ok(out)
}

fn emit(common: &Common, v: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Internal(e.to_string()))? + "\n";
    match &common.json {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Internal(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("GWCRC_THREADS") {
        let k: usize = v.parse().map_err(|_| Failure::Usage(format!("GWCRC_THREADS must be a positive integer, got {v}")))?;
        if k == 0 {
            return Err(Failure::Usage("GWCRC_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| Failure::Internal(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<bool> {
    configure_threads()?;
    match &cli.command {
        Command::Series(a) => emit(&a.common, &cmd_series(a)?).map(|_| true),
        Command::Rmatrix(a) => emit(&a.common, &cmd_rmatrix(a)?).map(|_| true),
        Command::Potential(a) => emit(&a.common, &cmd_potential(a)?).map(|_| true),
        Command::Verify(a) => {
            check_n(a.common.n)?;
            let report = suites::run(a, Target::from(a.common.target))?;
            let ok = report["passed"].as_bool().unwrap_or(false);
            emit(&a.common, &report)?;
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}
