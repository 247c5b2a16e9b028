use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use sos_wall::catalog::Catalog;
use sos_wall::coefficients::verify_coefficients;
use sos_wall::dominance::{layering_windows, SeriesBook};
use sos_wall::exec::Exec;
use sos_wall::lattice::{exact_expectations, exact_partition};
use sos_wall::mc::{self, CSV_HEADER};
use sos_wall::phase::{self, chalker_classify, chalker_thresholds, Grid};
use sos_wall::specfile;

/// SOS interface above an attractive wall.
#[derive(Parser)]
#[command(name = "soswall", version)]
struct Cli {
    /// Directory for outputs and catalog caches when no explicit path is given.
    #[arg(long, global = true, env = "SOSWALL_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Run single-threaded.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recompute the published coefficients. Exit code 0 on match, 1 on a
    /// mismatch, 2 when some entry needs a higher order.
    VerifyCoefficients {
        #[arg(long, default_value_t = 8)]
        k: u32,
        #[arg(long, default_value_t = 7)]
        order: u32,
        /// Catalog cache directory (default: OUT_DIR/cache).
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Truncated free energy of a restricted ensemble as a series dump.
    FreeEnergy {
        #[arg(long)]
        h: u32,
        #[arg(long, default_value_t = 8)]
        k: u32,
        #[arg(long, default_value_t = 6)]
        order: u32,
        /// Also evaluate at this `t` (needs `--u`).
        #[arg(long, requires = "u")]
        t: Option<f64>,
        #[arg(long, requires = "t")]
        u: Option<f64>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Layer windows in `u` at fixed `t`.
    Windows {
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 4)]
        nmax: u32,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Chalker's classification on a (beta, K) grid, grids as lo:hi:count.
    Chalker {
        #[arg(long = "J", default_value_t = 1.0)]
        j: f64,
        #[arg(long = "beta-grid", allow_hyphen_values = true)]
        beta_grid: Grid,
        #[arg(long = "K-grid", allow_hyphen_values = true)]
        k_grid: Grid,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Phase-diagram scan from a spec file.
    Scan {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo run from a spec file.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the seed in the spec file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Raw sample dump path.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Exact small-box expectations from a spec file.
    Oracle {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Write to `explicit`, else to `OUT_DIR/name`, else stdout.
fn emit(text: &str, explicit: Option<PathBuf>, out_dir: &Option<PathBuf>, name: &str) -> Result<()> {
    let path = explicit.or_else(|| out_dir.as_ref().map(|d| d.join(name)));
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cache_dir(explicit: Option<PathBuf>, out_dir: &Option<PathBuf>) -> Option<PathBuf> {
    explicit.or_else(|| out_dir.as_ref().map(|d| d.join("cache")))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> Result<u8> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Auto };
    let out_dir = cli.out_dir;
    match cli.command {
        Command::VerifyCoefficients { k, order, cache_dir: cd } => {
            let cd = cache_dir(cd, &out_dir);
            let source = |key| match &cd {
                Some(d) => Catalog::load_or_build(d, key, exec),
                None => Catalog::build(key, exec),
            };
            let report = verify_coefficients(k, order, &source, exec)?;
            print!("{report}");
            return Ok(report.exit_code() as u8);
        }
        Command::FreeEnergy { h, k, order, t, u, cache_dir: cd, output } => {
            let book = SeriesBook::new(k, order, exec);
            let book = match cache_dir(cd, &out_dir) {
                Some(d) => book.with_cache(d),
                None => book,
            };
            let f = book.free_energy(h)?;
            let mut text = f.dump();
            if let (Some(t), Some(u)) = (t, u) {
                writeln!(text, "# f({t}, {u}) = {}", f.eval(t, u))?;
            }
            emit(&text, output, &out_dir, &format!("free-energy-k{k}-h{h}-n{order}.txt"))?;
        }
        Command::Windows { t, epsilon, nmax, output } => {
            let w = layering_windows(t, epsilon, nmax)?;
            let mut text = String::from("n,u_lo,u_hi,gap_below\n");
            for (i, &(n, lo, hi)) in w.iter().enumerate() {
                // Uncovered stretch between this window and the next level up.
                let gap = w.get(i + 1).map(|&(_, _, h2)| (lo - h2).to_string()).unwrap_or_else(|| "-".into());
                writeln!(text, "{n},{lo},{hi},{gap}")?;
            }
            emit(&text, output, &out_dir, "windows.csv")?;
        }
        Command::Chalker { j, beta_grid, k_grid, output } => {
            let mut text = String::from("J,K,beta,beta_inv,u,partial_threshold,complete_threshold,class\n");
            for beta in beta_grid.points() {
                for kk in k_grid.points() {
                    let (pt, ct) = chalker_thresholds(j, beta)?;
                    let class = chalker_classify(j, kk, beta)?;
                    let u = 2.0 * beta * (j - kk);
                    writeln!(text, "{j},{kk},{beta},{},{u},{pt},{ct},{}", 1.0 / beta, class.label())?;
                }
            }
            emit(&text, output, &out_dir, "chalker.csv")?;
        }
        Command::Scan { spec, output } => {
            let run = specfile::scan_spec(&read(&spec)?)?;
            let book = SeriesBook::new(run.scan.k, run.scan.order, exec);
            let book = match cache_dir(run.cache_dir, &out_dir) {
                Some(d) => book.with_cache(d),
                None => book,
            };
            let rows = phase::scan(&run.scan, &book, exec)?;
            emit(&phase::scan_csv(&rows), output.or(run.output), &out_dir, "scan.csv")?;
        }
        Command::Simulate { spec, seed, output, dump } => {
            let mut run = specfile::simulate_spec(&read(&spec)?)?;
            if let Some(s) = seed {
                run.chain.seed = s;
            }
            if cli.sequential {
                run.chain.exec = Exec::Sequential;
            }
            let obs = match dump.or(run.dump) {
                Some(p) => {
                    let file = std::fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?;
                    let mut w = std::io::BufWriter::new(file);
                    let obs = mc::run_chain_with_dump(&run.chain, Some(&mut w))?;
                    std::io::Write::flush(&mut w)?;
                    obs
                }
                None => mc::run_chain(&run.chain)?,
            };
            let text = format!("{CSV_HEADER}\n{}\n", mc::csv_row(&run.chain, &obs));
            emit(&text, output.or(run.output), &out_dir, "simulate.csv")?;
        }
        Command::Oracle { spec, output } => {
            let o = specfile::oracle_spec(&read(&spec)?)?;
            let part = exact_partition(&o.bx, &o.params, &o.settings)?;
            let cap = o.settings.height_cap as usize;
            let n = o.bx.len() as f64;
            let hist = exact_expectations(&o.bx, &o.params, &o.settings, cap + 1, |h| {
                let mut v = vec![0.0; cap + 1];
                for &x in h {
                    v[x as usize] += 1.0 / n;
                }
                v
            })?;
            let mut acc = 0.0;
            let rho: Vec<String> = hist
                .iter()
                .map(|x| {
                    acc += x;
                    acc.to_string()
                })
                .collect();
            let p = &o.params;
            let nb = o.bx.boundary as usize;
            let text = format!(
                "t,u,beta,J,K,n_boundary,width,height,height_cap,log_z,rho0,not_at_n,rho_z\n\
                 {},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                p.t(),
                p.u(),
                p.beta(),
                p.j(),
                p.k(),
                nb,
                o.bx.width,
                o.bx.height,
                cap,
                part.log_z,
                hist[0],
                1.0 - hist.get(nb).copied().unwrap_or(0.0),
                rho.join(";")
            );
            emit(&text, output.or(o.output), &out_dir, "oracle.csv")?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
