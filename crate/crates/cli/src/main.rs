//! `sdw-bound`: spin-density-wave energy bounds from the command line.

mod config;
mod svg;
mod table;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use sdw_core::asymptotics::{eps0, prefactor, scaled_constant};
use sdw_core::fermi_gas::{delta_e_fg_leading, delta_e_fg_quadrature, MIN_QUADRATURE_EPS};
use sdw_core::optimizer::{energy_report, h_influence, optimize_epsilon, ScanRow};
use sdw_core::solver::solve_deformation;
use sdw_core::{constants, Deformation, SdwError};

use config::RunConfig;
use svg::{Axis, Plot, Series, Style};
use table::Table;

#[derive(Parser, Debug)]
#[command(
    name = "sdw-bound",
    version,
    about = "Upper bounds on spin-density-wave energies of the electron gas"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Flat key = value configuration file (default: $SDW_BOUND_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. --set solver.tol=1e-12.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Grid points per decade of the radial coordinate.
    #[arg(long, global = true)]
    points_per_decade: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the model constants.
    Constants,
    /// Solve the amplitude equation for one deformation.
    Solve {
        #[arg(long)]
        rs: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.5)]
        h: f64,
        /// Profile CSV (x, xi, b_sq).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimize the total energy over the deformation size.
    Optimize {
        #[arg(long)]
        rs: f64,
        #[arg(long, default_value_t = 0.5)]
        h: f64,
        /// One-row CSV in the scan schema.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize over a grid of densities and shapes.
    Scan {
        #[arg(long, value_delimiter = ',', required = true)]
        rs_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        h_list: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Energy gain at h = 1/2 relative to h = 0.
    Influence {
        #[arg(long, value_delimiter = ',', required = true)]
        rs_list: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fermi-gas cost of the deformation as a function of h.
    Fg {
        #[arg(long, default_value_t = 4.0)]
        rs: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
        eps_list: Vec<f64>,
        /// Comma list, or start:stop:count.
        #[arg(long, default_value = "0.2:0.8:13")]
        h_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a CSV produced by the other commands as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        /// Overlay CSV with rows label,r_s,value.
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        /// Multiply energy gains by this many superposed waves
        /// (2 for hexagonal up to 12 for bcc).
        #[arg(long)]
        sdw_count: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Profile,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_constants() -> Result<()> {
    let c = constants();
    let mut out = io::stdout().lock();
    writeln!(out, "a_V = {:.6e}", c.a_v)?;
    writeln!(out, "a_K = {:.6e}", c.a_k)?;
    writeln!(out, "a_K/a_V = {:.1} ({:.4})", c.ratio_kv, c.ratio_kv)?;
    writeln!(out, "C = {:.3} ({:.6})", prefactor(), prefactor())?;
    writeln!(
        out,
        "scaled constant = {:.3} ({:.6}, h = 1/2)",
        scaled_constant(0.5),
        scaled_constant(0.5)
    )?;
    Ok(())
}

fn cmd_solve(cfg: &RunConfig, rs: f64, eps: f64, h: f64, out: Option<&Path>) -> Result<()> {
    let def = Deformation::new(rs, eps, h)?;
    let p = &cfg.pipeline;
    let point = solve_deformation(&def, &p.grid, &p.solver, p.volume_scaled)?;
    if let Some(path) = out.or(cfg.output.as_deref()) {
        let mut w = output(Some(path))?;
        point.solution.write_csv(&point.grid, &mut w)?;
        w.flush()?;
    }
    let report = energy_report(&point);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_optimize(cfg: &RunConfig, rs: f64, h: f64, out: Option<&Path>) -> Result<()> {
    let report = optimize_epsilon(rs, h, &cfg.pipeline)?;
    if let Some(path) = out.or(cfg.output.as_deref()) {
        table::write_lines(
            output(Some(path))?,
            table::SCAN_HEADER,
            &[table::report_row(&report, "")],
        )?;
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn check_list(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        bail!("{name} is empty");
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        bail!("{name} contains {v}");
    }
    Ok(())
}

/// Rows are computed a batch at a time and appended to `<out>.partial`,
/// which is renamed once complete; a leftover `.partial` file marks an
/// interrupted run.
fn run_rows<T: Sync>(
    items: &[T],
    header: &str,
    out: Option<&Path>,
    row: impl Fn(&T) -> (String, bool) + Sync,
) -> Result<usize> {
    let batch = rayon::current_num_threads().max(1);
    let mut failures = 0;
    match out {
        Some(path) => {
            let mut partial = path.as_os_str().to_owned();
            partial.push(".partial");
            let partial = PathBuf::from(partial);
            let mut w = BufWriter::new(
                File::create(&partial)
                    .with_context(|| format!("cannot create {}", partial.display()))?,
            );
            writeln!(w, "{header}")?;
            for chunk in items.chunks(batch) {
                let lines: Vec<(String, bool)> = chunk.par_iter().map(&row).collect();
                for (line, ok) in lines {
                    failures += usize::from(!ok);
                    writeln!(w, "{line}")?;
                }
                w.flush()?;
            }
            drop(w);
            fs::rename(&partial, path)?;
        }
        None => {
            let lines: Vec<(String, bool)> = items.par_iter().map(&row).collect();
            failures = lines.iter().filter(|l| !l.1).count();
            let lines: Vec<String> = lines.into_iter().map(|l| l.0).collect();
            table::write_lines(io::stdout().lock(), header, &lines)?;
        }
    }
    Ok(failures)
}

fn cmd_scan(cfg: &RunConfig, rs_list: &[f64], h_list: &[f64], out: Option<&Path>) -> Result<()> {
    check_list("r_s list", rs_list)?;
    check_list("h list", h_list)?;
    let mut pairs: Vec<(f64, f64)> = rs_list
        .iter()
        .flat_map(|&r| h_list.iter().map(move |&h| (r, h)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let failures = run_rows(
        &pairs,
        table::SCAN_HEADER,
        out.or(cfg.output.as_deref()),
        |&(r_s, h)| {
            let row = ScanRow {
                r_s,
                h,
                eps0: eps0(r_s, h),
                scaled_asymptotic: scaled_constant(h),
                result: optimize_epsilon(r_s, h, &cfg.pipeline),
            };
            (table::scan_row(&row), row.result.is_ok())
        },
    )?;
    all_failed(failures, pairs.len())
}

fn all_failed(failures: usize, total: usize) -> Result<()> {
    if failures == total {
        bail!(SdwError::NonConvergence {
            iterations: 0,
            residual: f64::NAN
        })
    }
    if failures > 0 {
        eprintln!("warning: {failures} of {total} rows failed; see the error column");
    }
    Ok(())
}

fn cmd_influence(cfg: &RunConfig, rs_list: &[f64], out: Option<&Path>) -> Result<()> {
    check_list("r_s list", rs_list)?;
    let mut list = rs_list.to_vec();
    list.sort_by(f64::total_cmp);
    let failures = run_rows(
        &list,
        table::INFLUENCE_HEADER,
        out.or(cfg.output.as_deref()),
        |&r_s| {
            let r = h_influence(r_s, &cfg.pipeline);
            (table::influence_row(r_s, &r), r.is_ok())
        },
    )?;
    all_failed(failures, list.len())
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [a, b, n] => {
            let (a, b, n): (f64, f64, usize) =
                (a.trim().parse()?, b.trim().parse()?, n.trim().parse()?);
            if n < 2 {
                bail!("grid '{text}' needs at least two points");
            }
            (0..n)
                .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
                .collect()
        }
        [list] => list
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()?,
        _ => bail!("grid '{text}' is neither a list nor start:stop:count"),
    };
    check_list("h grid", &values)?;
    Ok(values)
}

fn fg_row(cfg: &RunConfig, r_s: f64, eps: f64, h: f64) -> (String, bool) {
    use table::{clean, num};
    if eps == 0.0 {
        return (
            format!(
                "{},{},{},{},{},{},ok",
                num(r_s),
                num(eps),
                num(h),
                num(0.0),
                num(0.0),
                num(0.0)
            ),
            true,
        );
    }
    let def = match Deformation::new(r_s, eps, h) {
        Ok(d) => d,
        Err(e) => {
            return (
                format!(
                    "{},{},{},,,,{}",
                    num(r_s),
                    num(eps),
                    num(h),
                    clean(&e.to_string())
                ),
                false,
            )
        }
    };
    let leading = num(delta_e_fg_leading(&def));
    if eps < MIN_QUADRATURE_EPS {
        return (
            format!(
                "{},{},{},{leading},,,leading order only",
                num(r_s),
                num(eps),
                num(h)
            ),
            true,
        );
    }
    match delta_e_fg_quadrature(&def, &cfg.quad) {
        Ok(d) => (
            format!(
                "{},{},{},{leading},{},{},ok",
                num(r_s),
                num(eps),
                num(h),
                num(d.value),
                num(d.error)
            ),
            true,
        ),
        Err(e) => (
            format!(
                "{},{},{},{leading},,,{}",
                num(r_s),
                num(eps),
                num(h),
                clean(&e.to_string())
            ),
            false,
        ),
    }
}

fn cmd_fg(
    cfg: &RunConfig,
    rs: f64,
    eps_list: &[f64],
    h_grid: &str,
    out: Option<&Path>,
) -> Result<()> {
    check_list("eps list", eps_list)?;
    if !(rs > 0.0) {
        bail!(SdwError::Domain(format!("r_s must be positive, got {rs}")));
    }
    let hs = parse_grid(h_grid)?;
    let points: Vec<(f64, f64)> = eps_list
        .iter()
        .flat_map(|&e| hs.iter().map(move |&h| (e, h)))
        .collect();
    let failures = run_rows(
        &points,
        table::FG_HEADER,
        out.or(cfg.output.as_deref()),
        |&(e, h)| fg_row(cfg, rs, e, h),
    )?;
    if failures > 0 {
        eprintln!(
            "warning: {failures} of {} points flagged; see the status column",
            points.len()
        );
    }
    Ok(())
}

/// Points grouped into series by the value of a label column.
fn grouped(t: &Table, key: usize, x: usize, y: usize, name: &str, scale: f64) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for row in 0..t.rows.len() {
        let (Some(k), Some(xv), Some(yv)) = (t.value(row, key), t.value(row, x), t.value(row, y))
        else {
            continue;
        };
        let label = format!("{name} = {k}");
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((xv, scale * yv)),
            None => series.push(Series {
                label,
                points: vec![(xv, scale * yv)],
                style: Style::Line,
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    series
}

fn build_plot(kind: Kind, t: &Table, sdw_count: u32) -> Result<Plot> {
    let n = f64::from(sdw_count);
    let log = Axis {
        log: true,
        fallback: (0.01, 10.0),
    };
    let rs_label = "r_s".to_string();
    let plot = |title: &str, x_label: String, y_label: &str, x_axis, y_axis, series, guides| Plot {
        title: title.into(),
        x_label,
        y_label: y_label.into(),
        x_axis,
        y_axis,
        series,
        guides,
    };
    Ok(match kind {
        Kind::Fig3 => {
            let c = t.require(&["h", "r_s", "scaled_energy"])?;
            let guide = (
                n * scaled_constant(0.5),
                format!("{:.3}", n * scaled_constant(0.5)),
            );
            plot(
                "Scaled energy gain",
                rs_label,
                "dE r_s^2 / eps^3",
                log,
                Axis {
                    log: false,
                    fallback: (-0.2, 0.0),
                },
                grouped(t, c[0], c[1], c[2], "h", n),
                vec![guide],
            )
        }
        Kind::Fig4 => {
            let c = t.require(&["h", "r_s", "eps_ratio"])?;
            plot(
                "Optimal deformation relative to the asymptotic scale",
                rs_label,
                "eps* / eps0",
                log,
                Axis {
                    log: false,
                    fallback: (0.0, 2.0),
                },
                grouped(t, c[0], c[1], c[2], "h", 1.0),
                vec![(1.0, "1".into())],
            )
        }
        Kind::Fig5 => {
            let c = t.require(&["r_s", "energy_ratio"])?;
            let points = (0..t.rows.len())
                .filter_map(|r| Some((t.value(r, c[0])?, t.value(r, c[1])?)))
                .collect();
            plot(
                "Energy gain at h = 1/2 over h = 0",
                rs_label,
                "dE(h=1/2) / dE(h=0)",
                log,
                Axis {
                    log: true,
                    fallback: (1.0, 1000.0),
                },
                vec![Series {
                    label: "ratio".into(),
                    points,
                    style: Style::Line,
                }],
                vec![(16.0, "16".into())],
            )
        }
        Kind::Fig2 => {
            let c = t.require(&["eps", "h", "delta_e_fg_leading", "delta_e_fg_quadrature"])?;
            let mut series = grouped(t, c[0], c[1], c[3], "eps", 1.0);
            for s in grouped(t, c[0], c[1], c[2], "eps", 1.0) {
                series.push(Series {
                    label: format!("{} (leading order)", s.label),
                    points: s.points,
                    style: Style::Markers,
                });
            }
            plot(
                "Fermi-gas cost of the deformation",
                "h".into(),
                "dE_FG",
                Axis {
                    log: false,
                    fallback: (0.0, 1.0),
                },
                Axis {
                    log: true,
                    fallback: (1e-6, 1e-2),
                },
                series,
                vec![],
            )
        }
        Kind::Profile => {
            let c = t.require(&["x", "xi", "b_sq"])?;
            let column = |k: usize| {
                (0..t.rows.len())
                    .filter_map(|r| Some((t.value(r, c[0])?, t.value(r, k)?)))
                    .collect()
            };
            plot(
                "Amplitude profile",
                "x".into(),
                "xi, b^2",
                Axis {
                    log: true,
                    fallback: (1e-6, 1.0),
                },
                Axis {
                    log: false,
                    fallback: (0.0, 0.5),
                },
                vec![
                    Series {
                        label: "xi".into(),
                        points: column(c[1]),
                        style: Style::Line,
                    },
                    Series {
                        label: "b^2".into(),
                        points: column(c[2]),
                        style: Style::Line,
                    },
                ],
                vec![],
            )
        }
    })
}

fn cmd_plot(
    cfg: &RunConfig,
    input: &Path,
    kind: Kind,
    reference: Option<&Path>,
    sdw_count: Option<u32>,
    out: Option<&Path>,
) -> Result<()> {
    let file = File::open(input).with_context(|| format!("cannot open {}", input.display()))?;
    let t = Table::read(file).with_context(|| format!("cannot parse {}", input.display()))?;
    let count = sdw_count.unwrap_or(cfg.sdw_count);
    if count == 0 {
        bail!("--sdw-count must be at least 1");
    }
    let mut plot = build_plot(kind, &t, count)?;
    if let Some(path) = reference {
        if !matches!(kind, Kind::Fig3 | Kind::Fig4 | Kind::Fig5) {
            bail!("reference overlays need an r_s axis (fig3, fig4 or fig5)");
        }
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        for (label, r_s, value) in table::read_reference(file)? {
            match plot
                .series
                .iter_mut()
                .find(|s| s.label == label && s.style == Style::Markers)
            {
                Some(s) => s.points.push((r_s, value)),
                None => plot.series.push(Series {
                    label,
                    points: vec![(r_s, value)],
                    style: Style::Markers,
                }),
            }
        }
    }
    let mut w = output(out.or(cfg.output.as_deref()))?;
    w.write_all(plot.render().as_bytes())?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.global.config.as_deref(), &cli.global.overrides)?;
    if let Some(t) = cli.global.threads {
        cfg.threads = t;
    }
    if let Some(p) = cli.global.points_per_decade {
        cfg.set("grid.points_per_decade", &p.to_string())?;
    }
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()?;
    }
    match cli.command {
        Command::Constants => cmd_constants(),
        Command::Solve { rs, eps, h, out } => cmd_solve(&cfg, rs, eps, h, out.as_deref()),
        Command::Optimize { rs, h, out } => cmd_optimize(&cfg, rs, h, out.as_deref()),
        Command::Scan {
            rs_list,
            h_list,
            out,
        } => cmd_scan(&cfg, &rs_list, &h_list, out.as_deref()),
        Command::Influence { rs_list, out } => cmd_influence(&cfg, &rs_list, out.as_deref()),
        Command::Fg {
            rs,
            eps_list,
            h_grid,
            out,
        } => cmd_fg(&cfg, rs, &eps_list, &h_grid, out.as_deref()),
        Command::Plot {
            input,
            kind,
            reference,
            sdw_count,
            out,
        } => cmd_plot(
            &cfg,
            &input,
            kind,
            reference.as_deref(),
            sdw_count,
            out.as_deref(),
        ),
    }
}

/// 2 for numerical failures, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|e| {
        e.downcast_ref::<SdwError>()
            .is_some_and(SdwError::is_numerical)
    });
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0.3, 0.5").unwrap(), vec![0.3, 0.5]);
        assert!(parse_grid("0:1:1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("").is_err());
    }

    #[test]
    fn exit_codes() {
        let numerical = anyhow::Error::new(SdwError::NonConvergence {
            iterations: 3,
            residual: 1.0,
        })
        .context("solve");
        assert_eq!(exit_code(&numerical), 2);
        let domain = anyhow::Error::new(SdwError::Domain("eps".into()));
        assert_eq!(exit_code(&domain), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("bad flag")), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn zero_deformation_row() {
        let (line, ok) = fg_row(&RunConfig::default(), 4.0, 0.0, 0.5);
        assert!(ok);
        assert_eq!(
            line.split(',').skip(3).take(3).collect::<Vec<_>>(),
            ["0.00000000000e0"; 3]
        );
    }

    #[test]
    fn plot_schema_checked() {
        let t = Table::read("r_s,value\n1,2\n".as_bytes()).unwrap();
        assert!(build_plot(Kind::Fig3, &t, 1).is_err());
        let t = Table::read(format!("{}\n", table::SCAN_HEADER).as_bytes()).unwrap();
        let svg = build_plot(Kind::Fig3, &t, 1).unwrap().render();
        assert!(svg.contains("-0.115"));
        let svg = build_plot(Kind::Fig3, &t, 2).unwrap().render();
        assert!(svg.contains("-0.230"));
    }
}
