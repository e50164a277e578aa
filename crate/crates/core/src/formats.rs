//! CSV tables: a header row, comma separators, LF line endings. Reals are
//! written with 17 significant digits so that parsing them back yields the
//! same `f64` bit for bit.

use std::io::{self, Read, Write};

use csv::{ReaderBuilder, Terminator, WriterBuilder};

use crate::asymptotics::ComparisonRow;
use crate::moment_match::CellParams;
use crate::quantile_eval::QuantileTriple;
use crate::regression::{AdTest, RegressionFit};
use crate::sim::{CellSummary, RunDispersion};

pub const SAMPLES_HEADER: [&str; 5] = ["n", "delta", "m", "delta_hat", "beta_ratio"];
pub const SUMMARY_HEADER: [&str; 7] =
    ["n", "delta", "mean_dh", "var_dh", "mean_br", "var_br", "failures"];
pub const PARAMS_HEADER: [&str; 6] = ["n", "delta", "a", "b", "c", "d"];
pub const DISPERSION_HEADER: [&str; 7] = ["n", "delta", "runs", "param", "mean", "sd", "cv"];
pub const COEFFICIENTS_HEADER: [&str; 3] = ["model", "coef_index", "estimate"];
pub const FIT_STATS_HEADER: [&str; 4] = ["model", "r2", "ad_stat", "ad_p"];
pub const COMPARISON_HEADER: [&str; 6] =
    ["n", "delta", "diff_b1", "diff_v1", "diff_b2", "diff_v2"];
pub const QUANTILES_HEADER: [&str; 7] =
    ["target", "n", "delta", "p", "q_hat", "q_tilde", "q_double_hat"];

/// Shortest form that still round-trips: 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `header` and then each row; returns the number of data rows.
pub fn write_rows<W, I>(out: W, header: &[&str], rows: I) -> io::Result<usize>
where
    W: Write,
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header)?;
    let mut count = 0;
    for row in rows {
        w.write_record(&row)?;
        count += 1;
    }
    w.flush()?;
    Ok(count)
}

pub fn write_samples<W: Write>(out: W, cells: &[CellSummary]) -> io::Result<usize> {
    let rows = cells.iter().flat_map(|c| {
        c.delta_hat_samples
            .iter()
            .zip(&c.beta_ratio_samples)
            .enumerate()
            .map(move |(m, (dh, br))| {
                vec![c.n.to_string(), real(c.delta), (m + 1).to_string(), real(*dh), real(*br)]
            })
    });
    write_rows(out, &SAMPLES_HEADER, rows)
}

pub fn write_summaries<W: Write>(out: W, cells: &[CellSummary]) -> io::Result<usize> {
    let rows = cells.iter().map(|c| {
        vec![
            c.n.to_string(),
            real(c.delta),
            real(c.mean_delta_hat),
            real(c.var_delta_hat),
            real(c.mean_beta_ratio),
            real(c.var_beta_ratio),
            c.failure_count.to_string(),
        ]
    });
    write_rows(out, &SUMMARY_HEADER, rows)
}

pub fn write_params<W: Write>(out: W, params: &[CellParams]) -> io::Result<usize> {
    let rows = params.iter().map(|p| {
        vec![p.n.to_string(), real(p.delta), real(p.a), real(p.b), real(p.c), real(p.d)]
    });
    write_rows(out, &PARAMS_HEADER, rows)
}

pub fn write_dispersion<W: Write>(out: W, runs: &[RunDispersion]) -> io::Result<usize> {
    let rows = runs.iter().flat_map(|r| {
        [("a", r.a), ("b", r.b), ("c", r.c), ("d", r.d)]
            .into_iter()
            .map(move |(name, p)| {
                vec![
                    r.n.to_string(),
                    real(r.delta),
                    r.runs.to_string(),
                    name.to_string(),
                    real(p.mean),
                    real(p.sd),
                    real(p.cv),
                ]
            })
    });
    write_rows(out, &DISPERSION_HEADER, rows)
}

pub fn write_coefficients<W: Write>(out: W, fits: &[RegressionFit]) -> io::Result<usize> {
    let rows = fits.iter().flat_map(|f| {
        f.coefficients
            .iter()
            .enumerate()
            .map(move |(i, c)| vec![f.model.to_string(), i.to_string(), real(*c)])
    });
    write_rows(out, &COEFFICIENTS_HEADER, rows)
}

pub fn write_fit_stats<W: Write>(out: W, fits: &[(RegressionFit, AdTest)]) -> io::Result<usize> {
    let rows = fits.iter().map(|(f, ad)| {
        vec![f.model.to_string(), real(f.r_squared), real(ad.statistic), real(ad.p_value)]
    });
    write_rows(out, &FIT_STATS_HEADER, rows)
}

pub fn write_comparison<W: Write>(out: W, rows: &[ComparisonRow]) -> io::Result<usize> {
    let rows = rows.iter().map(|r| {
        vec![
            r.n.to_string(),
            real(r.delta),
            real(r.abs_diff_b1),
            real(r.abs_diff_v1),
            real(r.abs_diff_b2),
            real(r.abs_diff_v2),
        ]
    });
    write_rows(out, &COMPARISON_HEADER, rows)
}

pub fn write_quantiles<W: Write>(out: W, triples: &[QuantileTriple]) -> io::Result<usize> {
    let rows = triples.iter().map(|t| {
        vec![
            t.target.to_string(),
            t.n.to_string(),
            real(t.delta),
            real(t.p),
            real(t.q_hat),
            real(t.q_tilde),
            real(t.q_double_hat),
        ]
    });
    write_rows(out, &QUANTILES_HEADER, rows)
}

/// A parsed table: header plus string fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read<R: Read>(input: R) -> Result<Self, csv::Error> {
        let mut rdr = ReaderBuilder::new().from_reader(input);
        let header = rdr.headers()?.iter().map(str::to_owned).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_owned).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// All values of a column parsed as `f64`.
    pub fn reals(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column(name)?;
        self.rows.iter().map(|r| r.get(i)?.parse().ok()).collect()
    }
}

/// Parses a `n,delta,a,b,c,d` table.
pub fn read_params<R: Read>(input: R) -> Result<Vec<CellParams>, String> {
    let table = Table::read(input).map_err(|e| e.to_string())?;
    if table.header != PARAMS_HEADER {
        return Err(format!("expected header {}", PARAMS_HEADER.join(",")));
    }
    table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let bad = |what| format!("row {}: bad {what}", i + 1);
            let f = |j: usize, what| r[j].parse::<f64>().map_err(|_| bad(what));
            Ok(CellParams {
                n: r[0].parse().map_err(|_| bad("n"))?,
                delta: f(1, "delta")?,
                a: f(2, "a")?,
                b: f(3, "b")?,
                c: f(4, "c")?,
                d: f(5, "d")?,
            })
        })
        .collect()
}
