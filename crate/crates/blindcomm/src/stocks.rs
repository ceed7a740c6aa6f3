//! Real-valued time-series ingestion: price CSV to normalized log-return
//! signals, contiguous block sampling, and a synthetic fixture generator
//! with planted block structure.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::partition::Labeling;
use crate::spectral::{BatchMeta, SignalBatch};

/// A dates-by-assets table of real values with its transform state.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTable {
    pub assets: Vec<String>,
    pub dates: Vec<String>,
    /// `values[row][col]`: rows are dates, columns are assets.
    pub values: Vec<Vec<f64>>,
    pub log_returns_applied: bool,
    pub normalized: bool,
}

impl TimeSeriesTable {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn assets_len(&self) -> usize {
        self.assets.len()
    }
}

/// Parses a price CSV: a header naming a date column plus one column per
/// asset, one row per day. Rows containing any unparseable or empty cell
/// are dropped (missing data) before any transform.
pub fn parse_price_csv(text: &str) -> Result<TimeSeriesTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.len() < 2 {
        return Err(Error::Parse("price CSV needs a date column and at least one asset".into()));
    }
    let assets: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();

    let mut dates = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("row {}: {e}", idx + 2)))?;
        if record.len() != headers.len() {
            return Err(Error::Parse(format!(
                "row {}: {} cells, expected {}",
                idx + 2,
                record.len(),
                headers.len()
            )));
        }
        let parsed: Option<Vec<f64>> = record
            .iter()
            .skip(1)
            .map(|cell| cell.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        match parsed {
            Some(row) => {
                dates.push(record.get(0).unwrap_or("").to_owned());
                values.push(row);
            }
            None => continue, // missing value: drop the whole row
        }
    }
    if values.len() < 2 {
        return Err(Error::Parse("fewer than 2 complete price rows".into()));
    }
    Ok(TimeSeriesTable { assets, dates, values, log_returns_applied: false, normalized: false })
}

/// Daily log-returns `r_t = ln(p_t / p_{t-1})`; errors on non-positive
/// prices. The output has one row fewer than the input.
pub fn log_returns(table: &TimeSeriesTable) -> Result<TimeSeriesTable> {
    if table.log_returns_applied {
        return Err(Error::InvalidParameter("log returns already applied".into()));
    }
    if table.rows() < 2 {
        return Err(Error::Degenerate("need at least 2 rows to difference".into()));
    }
    for (r, row) in table.values.iter().enumerate() {
        if let Some((c, &bad)) = row.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(Error::Degenerate(format!(
                "non-positive price {bad} for asset {:?} at row {}",
                table.assets.get(c).map(String::as_str).unwrap_or("?"),
                r + 1
            )));
        }
    }
    let values: Vec<Vec<f64>> = table
        .values
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(&p1, &p0)| (p1 / p0).ln()).collect())
        .collect();
    Ok(TimeSeriesTable {
        assets: table.assets.clone(),
        dates: table.dates[1..].to_vec(),
        values,
        log_returns_applied: true,
        normalized: false,
    })
}

/// Per-asset normalization to zero mean and unit variance. Zero-variance
/// assets are reported by name.
pub fn normalize_columns(table: &TimeSeriesTable) -> Result<TimeSeriesTable> {
    let rows = table.rows();
    if rows < 2 {
        return Err(Error::Degenerate("need at least 2 rows to normalize".into()));
    }
    let cols = table.assets_len();
    let mut mean = vec![0.0; cols];
    for row in &table.values {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= rows as f64;
    }
    let mut var = vec![0.0; cols];
    for row in &table.values {
        for c in 0..cols {
            let d = row[c] - mean[c];
            var[c] += d * d;
        }
    }
    let mut degenerate = Vec::new();
    for c in 0..cols {
        var[c] /= rows as f64;
        if var[c] <= 0.0 {
            degenerate.push(table.assets[c].clone());
        }
    }
    if !degenerate.is_empty() {
        return Err(Error::Degenerate(format!("zero-variance assets: {}", degenerate.join(", "))));
    }
    let std: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
    let values = table
        .values
        .iter()
        .map(|row| row.iter().enumerate().map(|(c, &v)| (v - mean[c]) / std[c]).collect())
        .collect();
    Ok(TimeSeriesTable {
        assets: table.assets.clone(),
        dates: table.dates.clone(),
        values,
        log_returns_applied: table.log_returns_applied,
        normalized: true,
    })
}

/// Full ingestion: parse, drop incomplete rows, log-returns, normalize.
pub fn ingest_prices(text: &str) -> Result<TimeSeriesTable> {
    normalize_columns(&log_returns(&parse_price_csv(text)?)?)
}

/// A contiguous window of `m` rows viewed as a signal batch (one signal per
/// date). The start index comes from the caller or uniformly from `rng`.
pub fn block_sampler<R: Rng + ?Sized>(
    table: &TimeSeriesTable,
    m: usize,
    start: Option<usize>,
    rng: &mut R,
) -> Result<SignalBatch> {
    let rows = table.rows();
    if m == 0 || m > rows {
        return Err(Error::InvalidParameter(format!("block size {m} out of range 1..={rows}")));
    }
    let start = match start {
        Some(s) => {
            if s + m > rows {
                return Err(Error::InvalidParameter(format!(
                    "block [{s}, {}) exceeds {rows} rows",
                    s + m
                )));
            }
            s
        }
        None => rng.random_range(0..=rows - m),
    };
    let signals = table.values[start..start + m].to_vec();
    Ok(SignalBatch::new(signals)?.with_meta(BatchMeta {
        seed: None,
        excitation: None,
        filter: None,
        graph_process: Some(format!("block[{start}..{})", start + m)),
    }))
}

/// Synthetic price fixture with `k` planted sectors: per-sector factor
/// returns plus idiosyncratic noise, exponentiated into a price path. Used
/// to exercise the ingestion pipeline offline.
pub fn synthetic_price_fixture<R: Rng + ?Sized>(
    assets: usize,
    rows: usize,
    k: usize,
    rng: &mut R,
) -> Result<(String, Labeling)> {
    if assets == 0 || k == 0 || k > assets || rows < 3 {
        return Err(Error::InvalidParameter("fixture needs assets >= k >= 1 and rows >= 3".into()));
    }
    let assignments: Vec<usize> = (0..assets).map(|i| i % k).collect();
    let labeling = Labeling::new(assignments.clone(), k)?;

    let mut csv = String::from("date");
    for a in 0..assets {
        csv.push_str(&format!(",A{a:03}"));
    }
    csv.push('\n');

    let mut prices = vec![100.0f64; assets];
    let (factor_load, noise_load, daily_vol) = (0.8, 0.6, 0.02);
    for t in 0..rows {
        csv.push_str(&format!("2020-{:02}-{:02}", 1 + (t / 28) % 12, 1 + t % 28));
        let factors: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        for a in 0..assets {
            let eps: f64 = StandardNormal.sample(rng);
            let ret = daily_vol * (factor_load * factors[assignments[a]] + noise_load * eps);
            prices[a] *= ret.exp();
            csv.push_str(&format!(",{:.6}", prices[a]));
        }
        csv.push('\n');
    }
    Ok((csv, labeling))
}
