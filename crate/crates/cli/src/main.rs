//! `chenc`: command-line frontend for the Chen's-constant pipeline.
//!
//! Subcommands: `buchstab {eval, table, compare}`, `wu {psi1, psi2, i1,
//! i2}`, `chen {solve, refine, interp}`, `goldbach {count, comet, c0,
//! theta}`. Exit codes: 0 ok, 1 numeric failure, 2 usage error.

use chen_core::buchstab::{build_spline, ode_reference, BuchstabSpline};
use chen_core::cache::{cache_key, PsiCache};
use chen_core::chen::{
    interpolation_experiment, refine_experiment, solve_grid, BSource, ChenCtx, GridKind,
};
use chen_core::goldbach::{
    comet_records, d_count, sieve, theta, twin_prime_constant, CometFilter,
};
use chen_core::quadrature::QuadratureConfig;
use chen_core::wu::{wu_rows, I20Weight, PsiKind, WuCtx, WuOptions, WuParams};
use chen_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "chenc", version, about = "Numerical upper bound for Chen's constant")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    #[command(flatten)]
    run: RunConfig,
}

/// Global numeric configuration shared by all subcommands.
#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// Taylor spline degree for the Buchstab function.
    #[arg(long, global = true, default_value_t = 20)]
    spline_degree: usize,

    /// Number of spline intervals (polynomials cover [2, k+1]).
    #[arg(long, global = true, default_value_t = 10)]
    spline_intervals: usize,

    /// Absolute tolerance of 1-D quadrature.
    #[arg(long, global = true, default_value_t = 1e-8)]
    abs_tol: f64,

    /// Relative tolerance of multi-dimensional quadrature.
    #[arg(long, global = true, default_value_t = 1e-4)]
    rel_tol: f64,

    /// Sample count for quasi-Monte-Carlo integration (dimensions >= 4).
    #[arg(long, global = true, default_value_t = 2_000_000)]
    mc_samples: usize,

    /// Upper index of the I_2 sum in Psi_2 (21, or 19 for comparison).
    #[arg(long, global = true, default_value_t = 21)]
    i2_upper: usize,

    /// Weight convention for I_2,20.
    #[arg(long, global = true, value_enum, default_value_t = I20WeightArg::Printed)]
    i20_weight: I20WeightArg,

    /// Directory for the persistent Psi row cache.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum I20WeightArg {
    /// 1/(t u v^2 x), as displayed.
    Printed,
    /// 1/(t u v w^2 x), squaring the omega divisor.
    WSquared,
}

#[derive(Subcommand)]
enum Cmd {
    /// Buchstab function evaluation and tables.
    Buchstab {
        #[command(subcommand)]
        cmd: BuchstabCmd,
    },
    /// Wu's integrals and bound functions.
    Wu {
        #[command(subcommand)]
        cmd: WuCmd,
    },
    /// The linear system and Chen's constant.
    Chen {
        #[command(subcommand)]
        cmd: ChenCmd,
    },
    /// Goldbach decomposition counts and comet datasets.
    Goldbach {
        #[command(subcommand)]
        cmd: GoldbachCmd,
    },
}

#[derive(Subcommand)]
enum BuchstabCmd {
    /// Evaluate the spline at one point.
    Eval {
        #[arg(long)]
        u: f64,
    },
    /// CSV table with columns u,omega_spline,omega_ode,abs_diff.
    Table {
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
    },
    /// Maximum spline/ODE deviation over a range.
    Compare {
        #[arg(long, default_value_t = 1.0)]
        from: f64,
        #[arg(long, default_value_t = 10.0)]
        to: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
}

#[derive(Subcommand)]
enum WuCmd {
    /// Psi_1(s, s').
    Psi1 {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        sp: f64,
    },
    /// Psi_2 for a published row or explicit parameters.
    Psi2 {
        #[arg(long, conflicts_with_all = ["s", "sp", "k1", "k2", "k3"])]
        row: Option<usize>,
        #[arg(long, requires_all = ["sp", "k1", "k2", "k3"])]
        s: Option<f64>,
        #[arg(long)]
        sp: Option<f64>,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
        #[arg(long)]
        k3: Option<f64>,
    },
    /// I_1 at a given phi, or its maximum over phi when omitted.
    I1 {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        sp: f64,
        #[arg(long)]
        phi: Option<f64>,
    },
    /// I_2,i at a given phi, or its maximum over phi when omitted.
    I2 {
        #[arg(long)]
        i: usize,
        #[arg(long, conflicts_with_all = ["s", "sp", "k1", "k2", "k3"])]
        row: Option<usize>,
        #[arg(long, requires_all = ["sp", "k1", "k2", "k3"])]
        s: Option<f64>,
        #[arg(long)]
        sp: Option<f64>,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
        #[arg(long)]
        k3: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
    },
}

#[derive(Subcommand)]
enum ChenCmd {
    /// Solve (I - A) X = B on a grid and report C*.
    Solve {
        /// nine | forty | fourhundred | custom:N
        #[arg(long, default_value = "nine")]
        grid: String,
        /// computed | wu-published
        #[arg(long, default_value = "computed")]
        b_source: String,
        /// Dump A, B and X as CSV files with this path prefix.
        #[arg(long)]
        dump_system: Option<PathBuf>,
    },
    /// Solve a sequence of grids and report the refinement trend.
    Refine {
        /// Comma-separated grid names.
        #[arg(long, default_value = "nine,forty")]
        grids: String,
    },
    /// Interpolation experiment on the published table.
    Interp {
        #[arg(long)]
        intervals: usize,
    },
}

#[derive(Subcommand)]
enum GoldbachCmd {
    /// D(N): the number of prime decompositions of an even N.
    Count {
        #[arg(long)]
        n: usize,
    },
    /// Comet dataset CSV with columns N,D,two_theta,color_class.
    Comet {
        #[arg(long)]
        max: usize,
        /// Restrict to N = 12p for prime p.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Truncated twin-prime constant.
    C0 {
        #[arg(long, default_value_t = 1_000_000)]
        limit: usize,
    },
    /// Theta(N) = C_N N / log^2 N.
    Theta {
        #[arg(long)]
        n: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.run.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("chenc: failed to configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chenc: {e}");
            match e {
                Error::Domain(_) | Error::ConstraintViolation(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

struct Output {
    target: Option<PathBuf>,
    buffer: Vec<u8>,
}

impl Output {
    fn new(target: Option<PathBuf>) -> Self {
        Output {
            target,
            buffer: Vec::new(),
        }
    }

    fn finish(self) -> Result<(), Error> {
        match self.target {
            Some(path) => std::fs::write(path, self.buffer).map_err(Error::from),
            None => {
                std::io::stdout()
                    .write_all(&self.buffer)
                    .map_err(Error::from)?;
                Ok(())
            }
        }
    }
}

impl Write for Output {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.buffer.write(buf)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let rc = &cli.run;
    let mut out = Output::new(rc.out.clone());
    match &cli.cmd {
        Cmd::Buchstab { cmd } => run_buchstab(cmd, rc, &mut out)?,
        Cmd::Wu { cmd } => run_wu(cmd, rc, &mut out)?,
        Cmd::Chen { cmd } => run_chen(cmd, rc, &mut out)?,
        Cmd::Goldbach { cmd } => run_goldbach(cmd, rc, &mut out)?,
    }
    out.finish()
}

fn quad_config(rc: &RunConfig) -> QuadratureConfig {
    QuadratureConfig {
        abs_tol: rc.abs_tol,
        rel_tol: rc.rel_tol,
        mc_samples: rc.mc_samples,
        ..QuadratureConfig::default()
    }
}

fn wu_options(rc: &RunConfig) -> Result<WuOptions, Error> {
    if rc.i2_upper != 21 && rc.i2_upper != 19 {
        return Err(Error::domain(format!(
            "--i2-upper must be 21 or 19, got {}",
            rc.i2_upper
        )));
    }
    Ok(WuOptions {
        i2_upper: rc.i2_upper,
        i20_weight: match rc.i20_weight {
            I20WeightArg::Printed => I20Weight::AsPrinted,
            I20WeightArg::WSquared => I20Weight::WSquared,
        },
    })
}

fn spline(rc: &RunConfig) -> Result<BuchstabSpline, Error> {
    build_spline(rc.spline_degree, rc.spline_intervals)
}

fn wu_ctx(rc: &RunConfig) -> Result<WuCtx, Error> {
    WuCtx::new(spline(rc)?, quad_config(rc), wu_options(rc)?)
}

fn open_cache(rc: &RunConfig) -> Result<Option<PsiCache>, Error> {
    match &rc.cache_dir {
        None => Ok(None),
        Some(dir) => {
            let key = cache_key(
                rc.spline_degree,
                rc.spline_intervals,
                &quad_config(rc),
                &wu_options(rc)?,
            );
            PsiCache::open(dir, &key).map(Some)
        }
    }
}

fn run_buchstab(cmd: &BuchstabCmd, rc: &RunConfig, out: &mut Output) -> Result<(), Error> {
    match cmd {
        BuchstabCmd::Eval { u } => {
            let value = spline(rc)?.eval(*u)?;
            writeln!(out, "{value}")?;
        }
        BuchstabCmd::Table { from, to, step } => {
            let (from, to, step) = (*from, *to, *step);
            if !(step > 0.0 && from <= to && from >= 1.0) {
                return Err(Error::domain(
                    "table needs 1 <= from <= to and step > 0".to_string(),
                ));
            }
            let spline = spline(rc)?;
            let ode = ode_reference(to.max(2.0) + 0.01, 1e-9)?;
            writeln!(out, "u,omega_spline,omega_ode,abs_diff")?;
            let n = ((to - from) / step).round() as usize;
            for k in 0..=n {
                let u = (from + k as f64 * step).min(to);
                let s = spline.eval(u)?;
                let o = ode.eval(u)?;
                writeln!(out, "{u},{s},{o},{}", (s - o).abs())?;
            }
        }
        BuchstabCmd::Compare { from, to, step } => {
            let spline = spline(rc)?;
            let ode = ode_reference(to.max(2.0) + 0.01, 1e-9)?;
            let mut worst = (0.0f64, *from);
            let n = ((to - from) / step).round() as usize;
            for k in 0..=n {
                let u = (from + k as f64 * step).min(*to);
                let diff = (spline.eval(u)? - ode.eval(u)?).abs();
                if diff > worst.0 {
                    worst = (diff, u);
                }
            }
            writeln!(
                out,
                "max |spline - ode| = {:.6e} at u = {} (error bound {:.6e})",
                worst.0,
                worst.1,
                spline.error_bound()
            )?;
        }
    }
    Ok(())
}

fn published_row(index: usize) -> Result<WuParams, Error> {
    wu_rows()
        .get(index.wrapping_sub(1))
        .map(|r| r.params)
        .ok_or_else(|| Error::domain(format!("row must lie in 1..=9, got {index}")))
}

fn psi2_params(
    row: &Option<usize>,
    s: &Option<f64>,
    sp: &Option<f64>,
    k1: &Option<f64>,
    k2: &Option<f64>,
    k3: &Option<f64>,
) -> Result<WuParams, Error> {
    match (row, s) {
        (Some(i), _) => {
            let p = published_row(*i)?;
            if p.ks.is_none() {
                return Err(Error::domain(format!(
                    "row {i} is a Psi_1 row; pass explicit k parameters"
                )));
            }
            Ok(p)
        }
        (None, Some(s)) => Ok(WuParams::psi2(
            *s,
            sp.unwrap(),
            k1.unwrap(),
            k2.unwrap(),
            k3.unwrap(),
        )),
        (None, None) => Err(Error::domain(
            "pass either --row or the full parameter tuple".to_string(),
        )),
    }
}

fn run_wu(cmd: &WuCmd, rc: &RunConfig, out: &mut Output) -> Result<(), Error> {
    let ctx = wu_ctx(rc)?;
    let cache = open_cache(rc)?;
    match cmd {
        WuCmd::Psi1 { s, sp } => {
            let params = WuParams::psi1(*s, *sp);
            if let Some(hit) = cache
                .as_ref()
                .and_then(|c| c.get(PsiKind::Psi1, &params, 0))
            {
                writeln!(out, "{}", hit.psi_value)?;
                return Ok(());
            }
            let eval = ctx.psi1_eval(*s, *sp)?;
            if let Some(c) = &cache {
                c.put(
                    &chen_core::wu::PsiRow {
                        index: 0,
                        s_i: *s,
                        params,
                        kind: PsiKind::Psi1,
                        phi_low: eval.phi_low,
                        phi_max: eval.phi_max,
                        psi_value: eval.value,
                    },
                    &[],
                )?;
            }
            writeln!(out, "{}", eval.value)?;
        }
        WuCmd::Psi2 {
            row,
            s,
            sp,
            k1,
            k2,
            k3,
        } => {
            let params = psi2_params(row, s, sp, k1, k2, k3)?;
            if let Some(hit) = cache
                .as_ref()
                .and_then(|c| c.get(PsiKind::Psi2, &params, 0))
            {
                writeln!(out, "{}", hit.psi_value)?;
                return Ok(());
            }
            let eval = ctx.psi2_eval(&params)?;
            if let Some(c) = &cache {
                c.put(
                    &chen_core::wu::PsiRow {
                        index: 0,
                        s_i: params.s,
                        params,
                        kind: PsiKind::Psi2,
                        phi_low: eval.phi_low,
                        phi_max: eval.phi_max,
                        psi_value: eval.value,
                    },
                    &eval.details,
                )?;
            }
            writeln!(out, "{}", eval.value)?;
        }
        WuCmd::I1 { s, sp, phi } => match phi {
            Some(phi) => writeln!(out, "{}", ctx.i1(*phi, *s, *sp)?)?,
            None => {
                let m = ctx.i1_max(*s, *sp)?;
                writeln!(out, "phi_max = {}, value = {}", m.phi_max, m.value)?;
            }
        },
        WuCmd::I2 {
            i,
            row,
            s,
            sp,
            k1,
            k2,
            k3,
            phi,
        } => {
            let params = psi2_params(row, s, sp, k1, k2, k3)?;
            match phi {
                Some(phi) => writeln!(out, "{}", ctx.i2(*i, *phi, &params)?)?,
                None => {
                    let m = ctx.i2_max(*i, &params)?;
                    writeln!(
                        out,
                        "phi_low = {}, phi_max = {}, value = {}",
                        m.phi_low, m.phi_max, m.value
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn parse_grid(name: &str) -> Result<GridKind, Error> {
    match name {
        "nine" => Ok(GridKind::Nine),
        "forty" => Ok(GridKind::Forty),
        "fourhundred" => Ok(GridKind::FourHundred),
        other => match other.strip_prefix("custom:") {
            Some(n) => n
                .parse::<usize>()
                .map(GridKind::Custom)
                .map_err(|_| Error::domain(format!("bad custom grid size: {n:?}"))),
            None => Err(Error::domain(format!(
                "unknown grid {other:?}; expected nine|forty|fourhundred|custom:N"
            ))),
        },
    }
}

fn run_chen(cmd: &ChenCmd, rc: &RunConfig, out: &mut Output) -> Result<(), Error> {
    let wu = wu_ctx(rc)?;
    let cache = open_cache(rc)?;
    let ctx = ChenCtx::new(&wu, cache.as_ref());
    match cmd {
        ChenCmd::Solve {
            grid,
            b_source,
            dump_system,
        } => {
            let kind = parse_grid(grid)?;
            let source = match b_source.as_str() {
                "computed" => BSource::Computed,
                "wu-published" => BSource::WuPublished,
                other => {
                    return Err(Error::domain(format!(
                        "unknown b-source {other:?}; expected computed|wu-published"
                    )))
                }
            };
            let (report, system) = solve_grid(&ctx, kind, source)?;
            if let Some(prefix) = dump_system {
                dump_csv(prefix, &system)?;
            }
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&report).expect("report serialises")
            )?;
        }
        ChenCmd::Refine { grids } => {
            let kinds: Result<Vec<GridKind>, Error> =
                grids.split(',').map(|g| parse_grid(g.trim())).collect();
            let reports = refine_experiment(&ctx, &kinds?)?;
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&reports).expect("report serialises")
            )?;
        }
        ChenCmd::Interp { intervals } => {
            let report = interpolation_experiment(&ctx, *intervals)?;
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&report).expect("report serialises")
            )?;
        }
    }
    Ok(())
}

fn dump_csv(prefix: &std::path::Path, system: &chen_core::chen::ChenSystem) -> Result<(), Error> {
    let stem = prefix.to_string_lossy();
    let n = system.b.len();
    let mut a = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| system.a[(i, j)].to_string()).collect();
        a.push_str(&row.join(","));
        a.push('\n');
    }
    std::fs::write(format!("{stem}.a.csv"), a)?;
    let b: String = system.b.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(format!("{stem}.b.csv"), b)?;
    let x: String = system.x.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(format!("{stem}.x.csv"), x)?;
    Ok(())
}

fn run_goldbach(cmd: &GoldbachCmd, rc: &RunConfig, out: &mut Output) -> Result<(), Error> {
    let _ = rc;
    match cmd {
        GoldbachCmd::Count { n } => {
            let pt = sieve((*n).max(4))?;
            writeln!(out, "{}", d_count(*n, &pt)?)?;
        }
        GoldbachCmd::Comet { max, filter } => {
            let filter = match filter.as_deref() {
                None => CometFilter::All,
                Some("12p") => CometFilter::MultiplesOf12P,
                Some(other) => {
                    return Err(Error::domain(format!(
                        "unknown filter {other:?}; expected 12p"
                    )))
                }
            };
            let pt = sieve((*max).max(4))?;
            let c0 = twin_prime_constant(1_000_000)?;
            writeln!(out, "N,D,two_theta,color_class")?;
            for r in comet_records(*max, filter, &pt, c0)? {
                writeln!(out, "{},{},{},{}", r.n, r.d, r.two_theta, r.color_class)?;
            }
        }
        GoldbachCmd::C0 { limit } => {
            writeln!(out, "{}", twin_prime_constant(*limit)?)?;
        }
        GoldbachCmd::Theta { n } => {
            let c0 = twin_prime_constant(1_000_000)?;
            writeln!(out, "{}", theta(*n, c0)?)?;
        }
    }
    Ok(())
}
