mod table;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use vpt_core::benderwu::{self, BWSeries, BenderWuError};
use vpt_core::diagnostics::{self, DiagnosticsError};
use vpt_core::evaluate::{self, EvaluateError, TABLE2_G4, TABLE2_NMAX};
use vpt_core::exec::Execution;
use vpt_core::numerics::{NumericsError, PrecisionContext, Real};
use vpt_core::oracle::{self, OracleError, RitzConfig};
use vpt_core::strongcoupling::{FrequencySchedule, StrongCouplingEngine, StrongCouplingError};
use vpt_core::vptcore::{self, VptError};

use table::{Cell, Format, Table};

#[derive(Debug, Parser)]
#[command(
    name = "vpt",
    version,
    about = "Variational perturbation theory for the anharmonic oscillator"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Significant digits printed for real numbers.
    #[arg(long, default_value_t = 25, global = true)]
    digits: u32,
    /// Working precision in decimal digits.
    #[arg(long, default_value_t = 300, global = true)]
    working_digits: u32,
    /// Directory holding Bender-Wu coefficient caches.
    #[arg(long, env = "VPT_CACHE_DIR", default_value = "cache", global = true)]
    cache_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact Bender-Wu coefficients e_0..e_L (cached).
    Bw {
        #[arg(long, default_value_t = 251)]
        order: usize,
    },
    /// Strong-coupling coefficients alpha_0..alpha_nmax at truncation order N.
    Alpha {
        #[arg(long, default_value_t = 251)]
        order: usize,
        #[arg(long, default_value_t = 22)]
        nmax: usize,
    },
    /// Ground-state energies on a (g/4, n_max) grid with rigorous bounds.
    Table2 {
        #[arg(long, value_delimiter = ',', default_values_t = TABLE2_G4.map(String::from))]
        g4: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = TABLE2_NMAX)]
        nmax: Vec<usize>,
        #[arg(long, default_value_t = 251)]
        order: usize,
    },
    /// Residuals (alpha_n)_N - alpha_n over a range of N.
    Converge {
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = diagnostics::DEFAULT_N_MIN)]
        from: usize,
        #[arg(long, default_value_t = 251)]
        to: usize,
        /// Order of the reference extraction.
        #[arg(long, default_value_t = 251)]
        order: usize,
    },
    /// Fit of the residual envelope to exp(-k0 - k1 N^(1/3)).
    Fit {
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = diagnostics::DEFAULT_N_MIN)]
        nmin: usize,
        #[arg(long, default_value_t = 251)]
        to: usize,
        #[arg(long, default_value_t = 251)]
        order: usize,
        /// Dominance radius of envelope points (1 = plain local maxima).
        #[arg(long, default_value_t = diagnostics::DEFAULT_DOMINANCE_RADIUS)]
        radius: usize,
    },
    /// Rayleigh-Ritz ground-state energy in a harmonic-oscillator basis.
    Oracle {
        #[arg(long)]
        g4: String,
        #[arg(long, default_value = "1")]
        omega: String,
        /// Basis sizes (number of even states), ascending.
        #[arg(long, value_delimiter = ',', default_values_t = vec![64usize])]
        basis: Vec<usize>,
        /// Basis frequency; defaults to the Gaussian-optimal one.
        #[arg(long)]
        basis_frequency: Option<String>,
    },
    /// Strong-coupling energy at one point.
    Energy {
        #[arg(long)]
        g4: String,
        #[arg(long, default_value = "1")]
        omega: String,
        #[arg(long, default_value_t = 22)]
        nmax: usize,
        #[arg(long, default_value_t = 251)]
        order: usize,
    },
    /// Variational energy W_N(g, Omega).
    Wn {
        #[arg(long)]
        g: String,
        #[arg(long, default_value = "1")]
        omega: String,
        #[arg(long = "N", alias = "order")]
        order: usize,
        /// Trial frequency (defaults to omega).
        #[arg(long, conflicts_with = "optimize")]
        trial: Option<String>,
        /// Use the optimal trial frequency Omega_N.
        #[arg(long)]
        optimize: bool,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<BenderWuError> for CliError {
    fn from(e: BenderWuError) -> Self {
        match e {
            BenderWuError::Io(source) => CliError::io("cache", source),
            other => CliError::Domain(other.to_string()),
        }
    }
}

macro_rules! domain_error {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Domain(e.to_string())
            }
        })*
    };
}

domain_error!(
    StrongCouplingError,
    VptError,
    EvaluateError,
    DiagnosticsError,
    OracleError,
    NumericsError
);

struct Context {
    precision: PrecisionContext,
    cache_dir: PathBuf,
}

impl Context {
    fn working(&self) -> u32 {
        self.precision.working_digits()
    }

    fn sig(&self, v: &Real) -> Cell {
        Cell::num(v.format_sig(self.precision.output_digits()))
    }

    fn real(&self, name: &str, s: &str) -> Result<Real, CliError> {
        self.precision
            .parse(s)
            .map_err(|e| CliError::Usage(format!("--{name}: {e}")))
    }

    /// Coefficients through `order`, loaded from the smallest sufficient cache
    /// or generated and cached.
    fn series(&self, order: usize) -> Result<BWSeries, CliError> {
        if let Some(path) = find_cache(&self.cache_dir, order)? {
            return Ok(benderwu::load_cache(&path)?.truncated(order)?);
        }
        let series = benderwu::generate(order);
        let path = self.cache_dir.join(cache_file_name(order));
        benderwu::save_cache(&series, &path).map_err(|e| match e {
            BenderWuError::Io(source) => CliError::io(format!("writing {}", path.display()), source),
            other => other.into(),
        })?;
        Ok(series)
    }

    fn engine(&self, order: usize) -> Result<StrongCouplingEngine, CliError> {
        if order == 0 {
            return Err(CliError::Usage("--order must be at least 1".into()));
        }
        Ok(StrongCouplingEngine::new(&self.series(order)?, order, self.working())?)
    }
}

fn cache_file_name(order: usize) -> String {
    format!("bw-{order}.cache")
}

fn find_cache(dir: &Path, order: usize) -> Result<Option<PathBuf>, CliError> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(CliError::io(format!("reading {}", dir.display()), e)),
    };
    let mut best: Option<(usize, PathBuf)> = None;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(format!("reading {}", dir.display()), e))?;
        let name = entry.file_name();
        let Some(m) = name
            .to_str()
            .and_then(|n| n.strip_prefix("bw-"))
            .and_then(|n| n.strip_suffix(".cache"))
            .and_then(|n| n.parse::<usize>().ok())
        else {
            continue;
        };
        if m >= order && best.as_ref().is_none_or(|(b, _)| m < *b) {
            best = Some((m, entry.path()));
        }
    }
    Ok(best.map(|(_, p)| p))
}

fn run(cli: Cli) -> Result<String, CliError> {
    let g = &cli.global;
    let precision = PrecisionContext::new(g.working_digits, g.digits).map_err(|e| CliError::Usage(e.to_string()))?;
    let ctx = Context {
        precision,
        cache_dir: g.cache_dir.clone(),
    };
    let table = match cli.command {
        Command::Bw { order } => cmd_bw(&ctx, order)?,
        Command::Alpha { order, nmax } => cmd_alpha(&ctx, order, nmax)?,
        Command::Table2 { g4, nmax, order } => cmd_table2(&ctx, &g4, &nmax, order)?,
        Command::Converge { n, from, to, order } => cmd_converge(&ctx, n, from, to, order)?,
        Command::Fit {
            n,
            nmin,
            to,
            order,
            radius,
        } => cmd_fit(&ctx, n, nmin, to, order, radius)?,
        Command::Oracle {
            g4,
            omega,
            basis,
            basis_frequency,
        } => cmd_oracle(&ctx, &g4, &omega, &basis, basis_frequency.as_deref())?,
        Command::Energy { g4, omega, nmax, order } => cmd_energy(&ctx, &g4, &omega, nmax, order)?,
        Command::Wn {
            g,
            omega,
            order,
            trial,
            optimize,
        } => cmd_wn(&ctx, &g, &omega, order, trial.as_deref(), optimize)?,
    };
    Ok(table.render(g.format))
}

fn cmd_bw(ctx: &Context, order: usize) -> Result<Table, CliError> {
    let series = ctx.series(order)?;
    let mut t = Table::new(&["l", "e_l"]);
    for (l, e) in series.coefficients().iter().enumerate() {
        t.push(vec![Cell::int(l), Cell::text(e.to_string())]);
    }
    Ok(t)
}

fn cmd_alpha(ctx: &Context, order: usize, nmax: usize) -> Result<Table, CliError> {
    let engine = ctx.engine(order)?;
    let alphas = engine.alpha_table(order, nmax, &FrequencySchedule::default(), Execution::default())?;
    let mut t = Table::new(&["n", "alpha_n"]);
    for a in &alphas {
        t.push(vec![Cell::int(a.n), ctx.sig(&a.value)]);
    }
    Ok(t)
}

fn cmd_table2(ctx: &Context, g4: &[String], nmax: &[usize], order: usize) -> Result<Table, CliError> {
    if g4.is_empty() || nmax.is_empty() {
        return Err(CliError::Usage("--g4 and --nmax need at least one value".into()));
    }
    let top = *nmax.iter().max().expect("non-empty");
    let engine = ctx.engine(order)?;
    let alphas = engine.alpha_table(order, top, &FrequencySchedule::default(), Execution::default())?;
    let couplings = g4.iter().map(|s| ctx.real("g4", s)).collect::<Result<Vec<_>, _>>()?;
    let blocks = evaluate::table2(&alphas, &couplings, nmax, Execution::default())?;

    let mut t = Table::new(&["g/4", "n_max", "E_0", "inside", "margin", "matched_digits"]);
    for (label, block) in g4.iter().zip(&blocks) {
        for e in &block.estimates {
            let mut row = vec![Cell::text(label.clone()), Cell::int(e.n_max), ctx.sig(&e.value)];
            match (&block.report, e.n_max == top) {
                (Some(rep), true) => {
                    row.push(Cell::text(if rep.inside { "yes" } else { "no" }));
                    row.push(Cell::num(rep.signed_margin.format_sig(3)));
                    row.push(Cell::int(rep.matched_digits));
                    if !rep.inside {
                        t.note(format!(
                            "note: g/4={label} n_max={} lies outside the bounds (margin {})",
                            e.n_max,
                            rep.signed_margin.format_sig(3)
                        ));
                    }
                }
                _ => row.extend([Cell::Empty, Cell::Empty, Cell::Empty]),
            }
            t.push(row);
        }
        if let Some(b) = &block.bounds {
            let fixture = evaluate::BOUNDS_V1
                .iter()
                .find(|(g, _, _)| ctx.real("g4", g).ok().as_ref() == Some(&block.g_over_4))
                .expect("bounds come from the fixture");
            for (name, v) in [("lb", fixture.1), ("ub", fixture.2)] {
                t.push(vec![
                    Cell::text(label.clone()),
                    Cell::text(name),
                    Cell::num(v),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                ]);
            }
            debug_assert_eq!(b.source, evaluate::BOUNDS_SOURCE);
        }
    }
    Ok(t)
}

fn reference_series(
    ctx: &Context,
    n: usize,
    from: usize,
    to: usize,
    order: usize,
) -> Result<Vec<diagnostics::ConvergenceSample>, CliError> {
    if from == 0 || from > to {
        return Err(CliError::Usage(format!("invalid order range {from}..={to}")));
    }
    let engine = ctx.engine(order.max(to))?;
    let schedule = FrequencySchedule::default();
    let reference = engine.alpha(order, n, &schedule)?.value;
    Ok(diagnostics::convergence_series(
        &engine,
        n,
        from,
        to,
        &reference,
        &schedule,
        Execution::default(),
    )?)
}

fn cmd_converge(ctx: &Context, n: usize, from: usize, to: usize, order: usize) -> Result<Table, CliError> {
    let rows = diagnostics::fig_rows(&reference_series(ctx, n, from, to, order)?)?;
    let mut t = Table::new(&["N", "N_cbrt", "delta", "ln_delta", "sign"]);
    for r in rows {
        t.push(vec![
            Cell::int(r.order),
            ctx.sig(&r.cbrt_order),
            ctx.sig(&r.delta),
            r.ln_delta.as_ref().map_or(Cell::Empty, |v| ctx.sig(v)),
            Cell::int(r.sign),
        ]);
    }
    Ok(t)
}

fn cmd_fit(ctx: &Context, n: usize, nmin: usize, to: usize, order: usize, radius: usize) -> Result<Table, CliError> {
    let samples = reference_series(ctx, n, nmin, to, order)?;
    let env = diagnostics::envelope_with(&samples, radius)?;
    let fit = diagnostics::fit_envelope(&env, nmin)?;
    let mut t = Table::new(&["n", "kappa0", "kappa1", "rms_residual", "points_used", "envelope"]);
    let orders: Vec<String> = env.iter().map(|p| p.order.to_string()).collect();
    t.push(vec![
        Cell::int(n),
        Cell::num(fit.kappa0.format_sig(6)),
        Cell::num(fit.kappa1.format_sig(6)),
        Cell::num(fit.rms_residual.format_sig(3)),
        Cell::int(fit.points_used),
        Cell::text(orders.join(" ")),
    ]);
    Ok(t)
}

fn cmd_oracle(
    ctx: &Context,
    g4: &str,
    omega: &str,
    basis: &[usize],
    basis_frequency: Option<&str>,
) -> Result<Table, CliError> {
    let g = ctx.real("g4", g4)?.mul_int(4);
    let omega = ctx.real("omega", omega)?;
    let freq = match basis_frequency {
        Some(s) => ctx.real("basis-frequency", s)?,
        None => oracle::gaussian_frequency(&g, &omega)?,
    };
    let first = *basis
        .first()
        .ok_or_else(|| CliError::Usage("--basis needs a value".into()))?;
    let config = RitzConfig::new(first, freq, ctx.working()).map_err(|e| CliError::Usage(e.to_string()))?;
    let scan = oracle::ritz_convergence_scan(&g, &omega, basis, &config, Execution::default())?;
    let mut t = Table::new(&["basis_size", "energy"]);
    for p in scan {
        t.push(vec![Cell::int(p.basis_size), ctx.sig(&p.energy)]);
    }
    Ok(t)
}

fn cmd_energy(ctx: &Context, g4: &str, omega: &str, nmax: usize, order: usize) -> Result<Table, CliError> {
    let g4v = ctx.real("g4", g4)?;
    let omega_v = ctx.real("omega", omega)?;
    let engine = ctx.engine(order)?;
    let alphas = engine.alpha_table(order, nmax, &FrequencySchedule::default(), Execution::default())?;
    let e = evaluate::strong_energy(&alphas, &g4v, &omega_v, nmax)?;
    let mut t = Table::new(&["g/4", "omega", "n_max", "E_0"]);
    t.push(vec![
        Cell::text(g4),
        Cell::text(omega),
        Cell::int(nmax),
        ctx.sig(&e.value),
    ]);
    Ok(t)
}

fn cmd_wn(
    ctx: &Context,
    g: &str,
    omega: &str,
    order: usize,
    trial: Option<&str>,
    optimize: bool,
) -> Result<Table, CliError> {
    let gv = ctx.real("g", g)?;
    let omega_v = ctx.real("omega", omega)?;
    let series = ctx.series(order)?;
    let trial_v = if optimize {
        vptcore::optimal_frequency(&series, &gv, &omega_v, order, &ctx.precision)?
    } else {
        match trial {
            Some(s) => ctx.real("trial", s)?,
            None => omega_v.clone(),
        }
    };
    let w = vptcore::variational_energy(&series, &gv, &omega_v, &trial_v, order)?;
    let mut t = Table::new(&["N", "Omega", "W_N"]);
    t.push(vec![Cell::int(order), ctx.sig(&w.trial_omega), ctx.sig(&w.value)]);
    Ok(t)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.global.out.clone();
    let result = run(cli).and_then(|text| match &out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
