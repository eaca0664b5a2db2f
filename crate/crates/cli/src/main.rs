use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ham_core::diagnostics::{self, ConvergenceReport, DEFAULT_BURN_IN};
use ham_core::expfun::parse_rational;
use ham_core::{golden, problems, reference, residual, HomotopySeries, NormSpec, ReducedProblem, Window};
use rayon::prelude::*;
use rug::Rational;

#[derive(Parser)]
#[command(name = "ham", version, about = "Homotopy analysis series: ratios, residuals, optimal h and reference tables")]
struct Cli {
    /// Working precision in bits for floating evaluation.
    #[arg(long, global = true, env = "HAM_PRECISION", default_value_t = 256)]
    prec: u32,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Successive-term ratios, verdict and error bound per h.
    Ratios {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Comma-separated h values (decimal or p/q).
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long)]
        order: usize,
        /// Add the integrated error against the reference solution.
        #[arg(long)]
        err: bool,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: usize,
    },
    /// Square residual of the partial sum S_M per h.
    Residual {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long)]
        order: usize,
    },
    /// Minimizer of the square residual over an h range.
    OptimalH {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        order: usize,
        /// `a:b`
        #[arg(long, allow_hyphen_values = true)]
        range: String,
    },
    /// D^d S_M(0) as a function of h.
    Hcurve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        order: usize,
        /// `a:b:n`, n+1 evenly spaced points; or a comma list.
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long, default_value_t = 1)]
        derivative: u32,
    },
    /// Ratio verdict and residual over an h grid, with the longest convergent band.
    Scan {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: usize,
    },
    /// Interval of t where the pointwise ratio limit is below one.
    Region {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        /// Order of the series used when no closed form is known.
        #[arg(long, default_value_t = 20)]
        order: usize,
        /// `a:b:n` grid for the numeric search.
        #[arg(long, default_value = "-2:2:80", allow_hyphen_values = true)]
        t_grid: String,
    },
    /// Regenerate a bundled reference table and diff it cell by cell.
    Table {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(golden::NAMES))]
        name: String,
        /// Emit the full ratio sequences (k, rat_k) per h instead of the diff.
        #[arg(long)]
        ratios: bool,
    },
}

#[derive(Args)]
struct ProblemArgs {
    /// Built-in problem id (ex1 … ex6).
    #[arg(long, conflicts_with = "problem_file", required_unless_present = "problem_file")]
    problem: Option<String>,
    /// Problem definition in JSON.
    #[arg(long)]
    problem_file: Option<PathBuf>,
    /// Upper end of the norm window, or `inf`.
    #[arg(long)]
    norm_window: Option<String>,
    /// Upper end of the residual domain, or `inf`.
    #[arg(long)]
    residual_window: Option<String>,
}

impl ProblemArgs {
    fn load(&self) -> Result<Arc<ReducedProblem>> {
        let mut p = match (&self.problem, &self.problem_file) {
            (Some(id), _) => problems::get(id)?.problem.as_ref().clone(),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            (None, None) => bail!("one of --problem or --problem-file is required"),
        };
        if let Some(w) = &self.norm_window {
            let derivative = p.norm.derivative;
            p = p.with_norm(NormSpec { derivative, window: window(w)? });
        }
        if let Some(w) = &self.residual_window {
            p = p.with_residual_window(window(w)?);
        }
        Ok(Arc::new(p))
    }

    fn id(&self) -> Option<&str> {
        self.problem.as_deref()
    }
}

fn window(s: &str) -> Result<Window> {
    if s == "inf" {
        return Ok(Window::HalfLine);
    }
    let t: f64 = s.parse().with_context(|| format!("bad window '{s}'"))?;
    if !(t > 0.0) {
        bail!("window upper end must be positive, got {t}");
    }
    Ok(Window::Finite(t))
}

fn h_list(s: &str) -> Result<Vec<Rational>> {
    if s.matches(':').count() == 2 {
        let parts: Vec<&str> = s.split(':').collect();
        let (a, b) = (parse_rational(parts[0])?, parse_rational(parts[1])?);
        let n: u32 = parts[2].parse().context("grid point count")?;
        if n == 0 {
            bail!("grid needs at least one step");
        }
        let step = Rational::from(&b - &a) / n;
        return Ok((0..=n).map(|i| Rational::from(&a + Rational::from(&step * i))).collect());
    }
    s.split(',').filter(|x| !x.trim().is_empty()).map(|x| Ok(parse_rational(x)?)).collect()
}

fn range(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(':').context("range must be a:b")?;
    let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
    if !(a < b) {
        bail!("empty range {a}:{b}");
    }
    Ok((a, b))
}

fn nearest(h: &Rational) -> f64 {
    rug::Float::with_val(53, h).to_f64()
}

fn fmt_h(h: &Rational) -> String {
    // exact decimal where the denominator allows it
    let f = nearest(h);
    if parse_rational(&f.to_string()).map(|r| &r == h).unwrap_or(false) {
        f.to_string()
    } else {
        h.to_string()
    }
}

fn check_order(order: usize) -> Result<()> {
    if order < 1 {
        bail!("order must be at least 1");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let prec = cli.prec;
    if prec < 53 {
        bail!("precision must be at least 53 bits");
    }
    ham_core::coeff::set_working_precision(prec);
    let json = cli.format == Format::Json;
    match cli.cmd {
        Cmd::Ratios { problem, h, order, err, burn_in } => {
            check_order(order)?;
            let p = problem.load()?;
            let refr = match (err, problem.id()) {
                (false, _) => None,
                (true, Some(id)) => Some(reference::reference(id, 1e-10)?),
                (true, None) => bail!("--err needs a built-in problem with a reference solution"),
            };
            // rat_M needs u_{M+1}
            let reports: Vec<ConvergenceReport> = h_list(&h)?
                .into_par_iter()
                .map(|h| {
                    let s = HomotopySeries::build(p.clone(), h, order + 1)?;
                    let mut r = ConvergenceReport::build(&s, burn_in, refr.as_ref(), prec)?;
                    r.rows.truncate(order);
                    r.order = order;
                    Ok(r)
                })
                .collect::<Result<_>>()?;
            if json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            } else {
                println!("h,M,rat,bound,err");
                let cell = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
                for r in &reports {
                    let h = fmt_h(&parse_rational(&r.h)?);
                    for row in &r.rows {
                        println!("{h},{},{},{},{}", row.m, cell(row.rat), cell(row.bound), cell(row.err));
                    }
                }
                for r in &reports {
                    eprintln!("h={}: {}", fmt_h(&parse_rational(&r.h)?), verdict_text(&r.verdict));
                }
            }
        }
        // order 0 is allowed here: the residual of u_0 alone
        Cmd::Residual { problem, h, order } => {
            let p = problem.load()?;
            let rows: Vec<(Rational, f64)> = h_list(&h)?
                .into_par_iter()
                .map(|h| Ok((h.clone(), residual::residual(p.clone(), h, order, prec)?)))
                .collect::<Result<_>>()?;
            if json {
                let v: Vec<_> = rows
                    .iter()
                    .map(|(h, r)| serde_json::json!({"h": fmt_h(h), "M": order, "res": r}))
                    .collect();
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else {
                println!("h,M,Res");
                for (h, r) in rows {
                    println!("{},{order},{r:.10e}", fmt_h(&h));
                }
            }
        }
        Cmd::OptimalH { problem, order, range: r } => {
            check_order(order)?;
            let (a, b) = range(&r)?;
            let curve = residual::optimal_h(problem.load()?, order, a, b, prec)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&curve)?);
            } else {
                let o = curve.optimum;
                println!("M,h,Res,stationarity");
                println!("{order},{:.8},{:.10e},{:.3e}", o.h, o.res, o.stationarity);
            }
        }
        Cmd::Hcurve { problem, order, h, derivative } => {
            check_order(order)?;
            let rows = residual::h_curve(problem.load()?, derivative, &h_list(&h)?, order)?;
            if json {
                let v: Vec<_> = rows
                    .iter()
                    .map(|(h, q)| serde_json::json!({"h": fmt_h(h), "value": nearest(q), "exact": q.to_string()}))
                    .collect();
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else {
                println!("h,value");
                for (h, q) in rows {
                    println!("{},{:.12e}", fmt_h(&h), nearest(&q));
                }
            }
        }
        Cmd::Scan { problem, h, order, burn_in } => {
            check_order(order)?;
            let p = problem.load()?;
            let grid = h_list(&h)?;
            let rows: Vec<(f64, f64, diagnostics::Verdict)> = grid
                .into_par_iter()
                .map(|h| {
                    let s = HomotopySeries::build(p.clone(), h.clone(), order)?;
                    let v = diagnostics::series_verdict(&s, burn_in, prec)?;
                    Ok((nearest(&h), residual::residual_of(&s, order, prec)?, v))
                })
                .collect::<Result<_>>()?;
            let scan: Vec<_> = rows.iter().map(|r| (r.0, r.2)).collect();
            let band = residual::convergent_band(&scan).map(|(i, j)| (rows[i].0, rows[j].0));
            if json {
                let v: Vec<_> = rows
                    .iter()
                    .map(|(h, r, v)| serde_json::json!({"h": h, "res": r, "verdict": v}))
                    .collect();
                println!("{}", serde_json::to_string_pretty(&serde_json::json!({"rows": v, "band": band}))?);
            } else {
                print!("{}", residual::scan_csv(&rows));
                match band {
                    Some((a, b)) => eprintln!("convergent band: [{a}, {b}]"),
                    None => eprintln!("no convergent h on this grid"),
                }
            }
        }
        Cmd::Region { problem, h, order, t_grid } => {
            check_order(order)?;
            let hv = h_list(&h)?;
            let [hv] = hv.as_slice() else { bail!("region takes a single h") };
            let closed = problem.id().map(|id| diagnostics::closed_form_region(id, nearest(hv)));
            let (interval, method) = match closed {
                Some(Ok(i)) => (Some(i), "closed_form"),
                _ => {
                    let hs = h_list(&t_grid)?;
                    let grid: Vec<f64> = hs.iter().map(nearest).collect();
                    let s = HomotopySeries::build(problem.load()?, hv.clone(), order)?;
                    (diagnostics::numeric_region(&s, &grid, prec)?, "numeric")
                }
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&serde_json::json!({"interval": interval, "method": method}))?);
            } else {
                println!("lo,hi,method");
                match interval {
                    Some(i) => println!("{},{},{method}", i.lo, i.hi),
                    None => println!(",,{method}"),
                }
            }
        }
        Cmd::Table { name, ratios } => {
            let run = golden::regenerate(&name, prec)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&run)?);
            } else if ratios {
                print!("{}", run.ratios_csv());
            } else {
                print!("{}", run.to_csv());
            }
            let failures = run.failures();
            eprintln!("{name}: {} cells, {failures} outside tolerance", run.cells.len());
            if failures > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn verdict_text(v: &diagnostics::Verdict) -> String {
    use diagnostics::Verdict::*;
    match v {
        Convergent { r } | Divergent { r } => format!("{} (r = {r:.5})", v.label()),
        ConvergedExactly { order } => format!("{} at order {order}", v.label()),
        Inconclusive => v.label().to_string(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
