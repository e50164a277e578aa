use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use sha2::{Digest, Sha256};
use weibull_mle::asymptotics::{comparison_table, HatSource};
use weibull_mle::formats::{self, real, write_rows};
use weibull_mle::moment_match::fit_grid;
use weibull_mle::quantile_eval::build_comparison;
use weibull_mle::regression::{
    anderson_darling_normality, AdTest, fit_model, published_grid, RegressionFit, Surface, SurfaceData,
    SurrogateCoefficients,
};
use weibull_mle::sim::cell_seed;
use weibull_mle::weibull::skewness;
use weibull_mle::{solve_mle, FitError, CellParams, CellSummary, Sample, SimEngine, WeibullParams};

use crate::config::{hex, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ParamSource {
    /// Run the Monte Carlo grid from the configuration
    #[default]
    Simulate,
    /// Use the bundled published 10 × 12 grid
    Published,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Hats {
    /// Each cell's own fitted (a, b, c, d)
    #[default]
    Table,
    /// Surrogate predictions from the published coefficients
    Regression,
}

/// Files written by one command: (name, data rows).
pub type Written = Vec<(String, usize)>;

fn engine(cfg: &RunConfig) -> Result<SimEngine, CliError> {
    let engine = match cfg.workers {
        Some(k) => SimEngine::with_workers(k)?,
        None => SimEngine::default(),
    };
    Ok(engine.tol(cfg.tol))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(CliError::io(path))
}

fn emit<F>(dir: &Path, name: &str, write: F) -> Result<(String, usize), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<usize>,
{
    let mut w = create(dir, name)?;
    let rows = write(&mut w)
        .and_then(|rows| w.flush().map(|_| rows))
        .map_err(CliError::io(dir.join(name)))?;
    Ok((name.to_owned(), rows))
}

fn read_sample(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            CliError::Data(format!("line {}: cannot parse {line:?} as a number", i + 1))
        })?;
        values.push(v);
    }
    Ok(values)
}

pub fn mle(input: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let sample = Sample::new(read_sample(input)?)?;
    let est = solve_mle(&sample, cfg.tol)?;
    println!("delta_hat  {}", est.delta_hat);
    println!("beta_hat   {}", est.beta_hat);
    println!("residual   {:e}", est.h_residual);
    println!("iterations {}", est.iterations);
    Ok(())
}

fn simulate_grid(cfg: &RunConfig) -> Result<Vec<CellSummary>, CliError> {
    Ok(engine(cfg)?.run_grid(&cfg.grid())?)
}

fn print_params(params: &[CellParams]) {
    println!("{:>5} {:>6} {:>9} {:>9} {:>9} {:>9}", "n", "delta", "a", "b", "c", "d");
    for p in params {
        println!(
            "{:>5} {:>6} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
            p.n, p.delta, p.a, p.b, p.c, p.d
        );
    }
}

fn write_simulation(
    cfg: &RunConfig,
    cells: &[CellSummary],
    samples: bool,
) -> Result<(Vec<CellParams>, Written), CliError> {
    let params = fit_grid(cells)?;
    let mut written = vec![
        emit(&cfg.out, "params.csv", |w| formats::write_params(w, &params))?,
        emit(&cfg.out, "summary.csv", |w| formats::write_summaries(w, cells))?,
    ];
    if samples {
        written.push(emit(&cfg.out, "samples.csv", |w| formats::write_samples(w, cells))?);
    }
    Ok((params, written))
}

pub fn simulate(cfg: &RunConfig, samples: bool) -> Result<Written, CliError> {
    let cells = simulate_grid(cfg)?;
    let failures: usize = cells.iter().map(|c| c.failure_count).sum();
    let (params, written) = write_simulation(cfg, &cells, samples)?;
    print_params(&params);
    eprintln!("{} cells, M = {}, redrawn replications: {failures}", cells.len(), cfg.m);
    Ok(written)
}

pub fn repeat(cfg: &RunConfig, runs: usize) -> Result<Written, CliError> {
    let engine = engine(cfg)?;
    let grid = cfg.grid();
    grid.validate()?;
    let mut out = Vec::new();
    for (n, delta) in grid.cells() {
        let d = engine.repeat_runs(n, delta, cfg.m, runs, cell_seed(cfg.seed, n, delta))?;
        println!(
            "n={n:<4} delta={delta:<5} a {:.4} ({:.4})  b {:.4} ({:.4})  c {:.4} ({:.4})  d {:.4} ({:.4})",
            d.a.mean, d.a.sd, d.b.mean, d.b.sd, d.c.mean, d.c.sd, d.d.mean, d.d.sd
        );
        out.push(d);
    }
    Ok(vec![emit(&cfg.out, "dispersion.csv", |w| formats::write_dispersion(w, &out))?])
}

#[derive(Debug, Clone, Default)]
pub struct SurfacePaths {
    pub a: Option<PathBuf>,
    pub b: Option<PathBuf>,
    pub c: Option<PathBuf>,
    pub d: Option<PathBuf>,
}

impl SurfacePaths {
    fn get(&self, s: Surface) -> Option<&Path> {
        match s {
            Surface::A => self.a.as_deref(),
            Surface::B => self.b.as_deref(),
            Surface::C => self.c.as_deref(),
            Surface::D => self.d.as_deref(),
        }
    }
}

fn load_surface(paths: &SurfacePaths, s: Surface) -> Result<SurfaceData, CliError> {
    match paths.get(s) {
        Some(path) => {
            let file = File::open(path).map_err(CliError::io(path))?;
            SurfaceData::from_csv(s, file)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        }
        None => Ok(SurfaceData::published(s)),
    }
}

pub fn regress(cfg: &RunConfig, paths: &SurfacePaths) -> Result<Written, CliError> {
    let mut fits: Vec<RegressionFit> = Vec::new();
    let mut stats = Vec::new();
    println!("{:<5} {:>8} {:>8} {:>8}  coefficients", "model", "R2", "AD", "AD p");
    for s in Surface::ALL {
        let fit = fit_model(&load_surface(paths, s)?, s)?;
        // an exact fit leaves nothing to test; report NaN rather than abort
        let ad = match anderson_darling_normality(&fit.residuals) {
            Ok(ad) => ad,
            Err(FitError::Degenerate) => AdTest {
                a2: f64::NAN,
                statistic: f64::NAN,
                p_value: f64::NAN,
            },
            Err(e) => return Err(e.into()),
        };
        let coef: Vec<String> = fit.coefficients.iter().map(|c| format!("{c:.3}")).collect();
        println!(
            "{:<5} {:>8.3} {:>8.3} {:>8.3}  {}",
            s,
            fit.r_squared,
            ad.statistic,
            ad.p_value,
            coef.join(", ")
        );
        fits.push(fit.clone());
        stats.push((fit, ad));
    }
    Ok(vec![
        emit(&cfg.out, "coefficients.csv", |w| formats::write_coefficients(w, &fits))?,
        emit(&cfg.out, "fit_stats.csv", |w| formats::write_fit_stats(w, &stats))?,
    ])
}

fn write_quantiles(cfg: &RunConfig, cells: &[CellSummary]) -> Result<Written, CliError> {
    let triples = build_comparison(cells, &cfg.p_list, &SurrogateCoefficients::published())?;
    Ok(vec![emit(&cfg.out, "quantiles.csv", |w| formats::write_quantiles(w, &triples))?])
}

pub fn quantiles(cfg: &RunConfig) -> Result<Written, CliError> {
    let cells = simulate_grid(cfg)?;
    write_quantiles(cfg, &cells)
}

fn write_asym(cfg: &RunConfig, params: &[CellParams], hats: Hats) -> Result<Written, CliError> {
    let source = match hats {
        Hats::Table => HatSource::Table,
        Hats::Regression => HatSource::Regression(SurrogateCoefficients::published()),
    };
    let rows = comparison_table(params, source)?;
    println!(
        "{:>5} {:>6} {:>8} {:>8} {:>8} {:>8}",
        "n", "delta", "diff_b1", "diff_v1", "diff_b2", "diff_v2"
    );
    for r in &rows {
        println!(
            "{:>5} {:>6} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            r.n, r.delta, r.abs_diff_b1, r.abs_diff_v1, r.abs_diff_b2, r.abs_diff_v2
        );
    }
    Ok(vec![emit(&cfg.out, "asym.csv", |w| formats::write_comparison(w, &rows))?])
}

pub fn asym(cfg: &RunConfig, source: ParamSource, hats: Hats) -> Result<Written, CliError> {
    let params = match source {
        ParamSource::Simulate => fit_grid(&simulate_grid(cfg)?)?,
        ParamSource::Published => published_grid(),
    };
    write_asym(cfg, &params, hats)
}

/// Shapes for the density curves and the x range they are drawn over.
const PDF_SHAPES: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 3.0, 5.0];
const PDF_X_STEPS: usize = 300;
const PDF_X_MAX: f64 = 3.0;
/// Shape grid for the variance and skewness curves: 0.01 to 10 in steps of 0.01.
const SHAPE_STEPS: usize = 1000;

fn shape_grid() -> impl Iterator<Item = f64> {
    (1..=SHAPE_STEPS).map(|k| k as f64 / 100.0)
}

pub fn curves(cfg: &RunConfig) -> Result<Written, CliError> {
    let mut pdf_rows = Vec::new();
    for delta in PDF_SHAPES {
        let law = WeibullParams::new(delta, 1.0)?;
        for i in 1..=PDF_X_STEPS {
            let x = PDF_X_MAX * i as f64 / PDF_X_STEPS as f64;
            pdf_rows.push(vec![real(delta), real(x), real(law.pdf(x))]);
        }
    }
    let mut var_rows = Vec::new();
    let mut skew_rows = Vec::new();
    for delta in shape_grid() {
        let (_, var) = WeibullParams::new(delta, 1.0)?.mean_var();
        var_rows.push(vec![real(delta), real(var)]);
        if delta >= 0.5 {
            skew_rows.push(vec![real(delta), real(skewness(delta))]);
        }
    }
    Ok(vec![
        emit(&cfg.out, "pdf_curves.csv", |w| write_rows(w, &["delta", "x", "pdf"], pdf_rows))?,
        emit(&cfg.out, "variance_curve.csv", |w| {
            write_rows(w, &["delta", "variance"], var_rows)
        })?,
        emit(&cfg.out, "skewness_curve.csv", |w| {
            write_rows(w, &["delta", "skewness"], skew_rows)
        })?,
    ])
}

pub const MANIFEST: &str = "manifest.csv";

pub fn report(cfg: &RunConfig) -> Result<Written, CliError> {
    let cells = simulate_grid(cfg)?;
    let (params, mut written) = write_simulation(cfg, &cells, false)?;
    written.extend(write_quantiles(cfg, &cells)?);
    written.extend(write_asym(cfg, &params, Hats::Table)?);
    written.extend(regress(cfg, &SurfacePaths::default())?);
    written.extend(curves(cfg)?);

    let canonical = cfg.canonical();
    let config_rows = canonical.lines().count();
    fs::write(cfg.out.join("config.txt"), &canonical).map_err(CliError::io(cfg.out.join("config.txt")))?;
    written.push(("config.txt".into(), config_rows));

    let mut rows = Vec::with_capacity(written.len());
    for (name, count) in &written {
        let path = cfg.out.join(name);
        let bytes = fs::read(&path).map_err(CliError::io(path))?;
        rows.push(vec![name.clone(), count.to_string(), hex(&Sha256::digest(&bytes))]);
    }
    let manifest = emit(&cfg.out, MANIFEST, |w| write_rows(w, &["file", "rows", "sha256"], rows))?;
    println!("config hash {}", cfg.hash());
    written.push(manifest);
    Ok(written)
}
