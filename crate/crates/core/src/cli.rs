//! Subcommand bodies for the `stablefit` binary.
//!
//! Each command reads its inputs, calls the library and lays the results out
//! as an [`OutputTable`]. Argument parsing lives in the binary.

use std::fs;
use std::path::Path;

use crate::density::pdf_grid;
use crate::error::{Result, StableError};
use crate::estimator::{empirical_cf, normalize_and_fit, EstimationConfig};
use crate::market::{log_returns, parse_prices, rolling_fit, PriceColumn, PriceSeries};
use crate::output::OutputTable;
use crate::params::StableParams;
use crate::sampler::sample;

/// A table plus non-fatal diagnostics for stderr.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandOutput {
    pub table: OutputTable,
    pub warnings: Vec<String>,
}

/// Contents of an input file: a price table, or a single `value` column of
/// draws as written by `sample`.
#[derive(Debug, Clone, PartialEq)]
pub enum InputData {
    Prices(PriceSeries),
    Values { symbol: String, values: Vec<f64> },
}

impl InputData {
    pub fn symbol(&self) -> &str {
        match self {
            InputData::Prices(p) => &p.symbol,
            InputData::Values { symbol, .. } => symbol,
        }
    }

    /// The series to fit: log-returns for prices, the values themselves otherwise.
    pub fn fit_data(&self) -> Result<Vec<f64>> {
        match self {
            InputData::Prices(p) => Ok(log_returns(p)?.returns),
            InputData::Values { values, .. } => Ok(values.clone()),
        }
    }
}

fn symbol_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Read a price file or a sample file, detected from the header.
pub fn read_input(path: &Path, column: PriceColumn, warnings: &mut Vec<String>) -> Result<InputData> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| StableError::from(e).with_context(name.clone()))?;
    let symbol = symbol_of(path);
    let header = text.lines().next().unwrap_or("").trim().trim_start_matches('\u{feff}');
    if header.is_empty() {
        return Err(StableError::NoData.with_context(name));
    }
    if header.eq_ignore_ascii_case("value") {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                StableError::Parse(format!("{name}: line {}: unparsable value {line:?}", i + 1))
            })?;
            values.push(v);
        }
        if values.is_empty() {
            return Err(StableError::NoData.with_context(name));
        }
        return Ok(InputData::Values { symbol, values });
    }
    let parsed = parse_prices(text.as_bytes(), column, &symbol).map_err(|e| e.with_context(name.clone()))?;
    if parsed.report.skipped_missing > 0 {
        warnings.push(format!(
            "{name}: skipped {} rows with missing prices",
            parsed.report.skipped_missing
        ));
    }
    for msg in &parsed.report.row_errors {
        warnings.push(format!("{name}: skipped {msg}"));
    }
    Ok(InputData::Prices(parsed.series))
}

pub const FIT_COLUMNS: [&str; 10] = [
    "symbol",
    "n",
    "alpha",
    "beta",
    "gamma",
    "delta",
    "alpha_gamma_residual",
    "beta_delta_residual",
    "iterations",
    "flags",
];

/// One row of fitted parameters per input file.
pub fn cmd_fit<P: AsRef<Path>>(inputs: &[P], column: PriceColumn, config: &EstimationConfig) -> Result<CommandOutput> {
    if inputs.is_empty() {
        return Err(StableError::Parse("no input files".into()));
    }
    let mut out = CommandOutput {
        table: OutputTable::new(&FIT_COLUMNS),
        warnings: Vec::new(),
    };
    for path in inputs {
        let path = path.as_ref();
        let input = read_input(path, column, &mut out.warnings)?;
        let data = input.fit_data().map_err(|e| e.with_context(path.display().to_string()))?;
        let fit = normalize_and_fit(&data, config).map_err(|e| e.with_context(path.display().to_string()))?;
        let p = fit.params;
        out.table.push(vec![
            input.symbol().into(),
            data.len().into(),
            p.alpha().into(),
            p.beta().into(),
            p.gamma().into(),
            p.delta().into(),
            fit.alpha_gamma_residual.into(),
            fit.beta_delta_residual.into(),
            fit.iterations.into(),
            fit.flags.label().into(),
        ]);
    }
    Ok(out)
}

/// Rolling `(alpha, beta)` tracks alongside the price on each evaluation day.
pub fn cmd_roll(input: &Path, column: PriceColumn, window: usize, config: &EstimationConfig) -> Result<CommandOutput> {
    let name = input.display().to_string();
    let mut warnings = Vec::new();
    let InputData::Prices(prices) = read_input(input, column, &mut warnings)? else {
        return Err(StableError::Parse(format!("{name}: roll needs a dated price file")));
    };
    let returns = log_returns(&prices).map_err(|e| e.with_context(name.clone()))?;
    let res = rolling_fit(&returns, window, config).map_err(|e| e.with_context(name.clone()))?;
    let mut table = OutputTable::new(&["date", "index", "price", "alpha", "beta", "flags"]);
    for i in 0..res.len() {
        let t = res.indices[i];
        table.push(vec![
            res.dates[i].to_string().into(),
            t.into(),
            // return t ends at price t + 1
            prices.prices[t + 1].into(),
            res.alphas[i].into(),
            res.betas[i].into(),
            res.flags[i].label().into(),
        ]);
    }
    Ok(CommandOutput { table, warnings })
}

/// Stable density and the Gaussian with the same scale and location.
pub fn cmd_pdf(params: &StableParams, x_min: f64, x_max: f64, n_points: usize, tol: f64) -> Result<CommandOutput> {
    let gauss = StableParams::new(2.0, 0.0, params.gamma(), params.delta())?;
    let stable = pdf_grid(params, x_min, x_max, n_points, tol)?;
    let normal = pdf_grid(&gauss, x_min, x_max, n_points, tol)?;
    let mut table = OutputTable::new(&["x", "stable", "gaussian"]);
    for i in 0..stable.len() {
        table.push(vec![
            stable.x_values[i].into(),
            stable.f_values[i].into(),
            normal.f_values[i].into(),
        ]);
    }
    Ok(CommandOutput { table, warnings: Vec::new() })
}

pub fn cmd_sample(params: &StableParams, n: usize, seed: u64) -> Result<CommandOutput> {
    let batch = sample(params, n, seed)?;
    let mut table = OutputTable::new(&["value"]);
    for v in batch.values {
        table.push(vec![v.into()]);
    }
    Ok(CommandOutput { table, warnings: Vec::new() })
}

/// Empirical characteristic function of the standardized data
/// `(x - delta) / gamma` next to the fitted law in the same units.
///
/// The grid is `k_max * j / n_k` for `j = 1..=n_k`.
pub fn cmd_ecf(
    input: &Path,
    column: PriceColumn,
    k_max: f64,
    n_k: usize,
    config: &EstimationConfig,
) -> Result<CommandOutput> {
    if !(k_max > 0.0 && k_max.is_finite()) || n_k == 0 {
        return Err(StableError::InvalidGrid(format!(
            "need k_max > 0 and at least one point, got k_max = {k_max}, n = {n_k}"
        )));
    }
    let name = input.display().to_string();
    let mut warnings = Vec::new();
    let data = read_input(input, column, &mut warnings)?
        .fit_data()
        .map_err(|e| e.with_context(name.clone()))?;
    let fit = normalize_and_fit(&data, config).map_err(|e| e.with_context(name.clone()))?;
    let p = fit.params;
    let standardized: Vec<f64> = data.iter().map(|x| (x - p.delta()) / p.gamma()).collect();
    let fitted = p.affine(1.0 / p.gamma(), -p.delta() / p.gamma())?;
    let k_values: Vec<f64> = (1..=n_k).map(|j| k_max * j as f64 / n_k as f64).collect();
    let ecf = empirical_cf(&standardized, &k_values)?;
    let mut table = OutputTable::new(&["k", "re_empirical", "im_empirical", "re_fit", "im_fit"]);
    for (k, phi) in ecf.k_values.iter().zip(&ecf.phi_values) {
        let model = fitted.char_fn(*k);
        table.push(vec![(*k).into(), phi.re.into(), phi.im.into(), model.re.into(), model.im.into()]);
    }
    Ok(CommandOutput { table, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::pdf_at;
    use crate::output::{Cell, OutputFormat, Precision};
    use crate::params::make_params;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn fit_row_matches_library_call() {
        let dir = tempfile::tempdir().unwrap();
        let p = make_params(1.6, -0.1, 0.01, 0.0).unwrap();
        let body = cmd_sample(&p, 5000, 11).unwrap().table.render(OutputFormat::Csv, Precision::Full);
        let path = write(&dir, "synth.csv", &body);
        let out = cmd_fit(&[&path], PriceColumn::Close, &EstimationConfig::default()).unwrap();
        let direct = normalize_and_fit(&sample(&p, 5000, 11).unwrap().values, &EstimationConfig::default()).unwrap();
        assert_eq!(out.table.rows[0][2], Cell::Num(direct.params.alpha()));
        assert_eq!(out.table.rows[0][3], Cell::Num(direct.params.beta()));
        assert_eq!(out.table.rows[0][0], Cell::Text("synth".into()));
    }

    #[test]
    fn pdf_columns() {
        let c = make_params(1.0, 0.0, 1.0, 0.0).unwrap();
        let out = cmd_pdf(&c, -5.0, 5.0, 11, 1e-8).unwrap().table;
        for row in &out.rows {
            let (Cell::Num(x), Cell::Num(f)) = (&row[0], &row[1]) else { panic!() };
            assert!((f - 1.0 / (std::f64::consts::PI * (1.0 + x * x))).abs() < 1e-8);
        }
        let g = make_params(2.0, 0.0, 1.0, 0.0).unwrap();
        let out = cmd_pdf(&g, -3.0, 3.0, 7, 1e-8).unwrap().table;
        for row in &out.rows {
            assert_eq!(row[1], row[2]);
        }
        let p = make_params(1.5, 0.3, 2.0, 1.0).unwrap();
        let out = cmd_pdf(&p, -1.0, 3.0, 5, 1e-9).unwrap().table;
        let Cell::Num(f) = out.rows[2][1] else { panic!() };
        assert!((f - pdf_at(&p, 1.0, 1e-10).unwrap()).abs() < 2e-9);
    }

    #[test]
    fn empty_and_missing_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write(&dir, "empty.csv", "");
        let err = cmd_fit(&[&empty], PriceColumn::Close, &EstimationConfig::default()).unwrap_err();
        assert!(err.to_string().contains("no data rows"), "{err}");
        let missing = dir.path().join("nope.csv");
        let err = cmd_fit(&[&missing], PriceColumn::Close, &EstimationConfig::default()).unwrap_err();
        assert!(err.to_string().contains("nope.csv"));
        let bad = write(&dir, "bad.csv", "value\n1.0\nx\n");
        let err = cmd_fit(&[&bad], PriceColumn::Close, &EstimationConfig::default()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn roll_window_too_long() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("Date,Open,High,Low,Close,Adj Close,Volume\n");
        let start = chrono::NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        for i in 0..50u64 {
            let d = start + chrono::Days::new(i);
            body += &format!("{d},1,1,1,{},1,0\n", 100.0 + i as f64);
        }
        let path = write(&dir, "short.csv", &body);
        let err = cmd_roll(&path, PriceColumn::Close, 1000, &EstimationConfig::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("1001") && msg.contains("49"), "{msg}");
    }
}
