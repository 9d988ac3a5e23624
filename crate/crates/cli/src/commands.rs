use std::path::Path;

use serde_json::{json, Value};
use syspred::montecarlo::{coverage_experiment, simulate};
use syspred::qr::{fit_lqr_levels, fit_ols, FittedLine};
use syspred::{BandKind, Case, Given};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, Table};

/// A finished command: the CSV body and extra sidecar fields.
pub struct Output {
    pub table: Table,
    pub meta: Value,
}

fn band_header(cfg: &RunConfig) -> Vec<String> {
    cfg.bands
        .iter()
        .flat_map(|b| {
            let (lo, hi) = b.column_names();
            [lo, hi]
        })
        .collect()
}

/// Median, mean and bands over the grid.
pub fn curves(cfg: &RunConfig) -> Result<Output, CliError> {
    let predictor = cfg.predictor()?;
    let points = cfg.curve_points()?;
    let bands = cfg.bands()?;
    let mut table = Table::new(
        ["t", "median", "mean"]
            .map(String::from)
            .into_iter()
            .chain(band_header(cfg)),
    );
    for p in predictor.curves(&points, &bands)? {
        let mut row = vec![num(p.given.last()), num(p.median), num(p.mean)];
        for iv in &p.bands {
            row.push(num(iv.lower));
            row.push(num(iv.upper));
        }
        table.push(row);
    }
    let grid_variable = if cfg.case()? == Case::III { "t2" } else { "t" };
    Ok(Output {
        table,
        meta: json!({ "command": "curves", "case": cfg.case()?.name(), "grid_variable": grid_variable }),
    })
}

/// Quantiles, point predictions and bands at a single conditioning point.
pub fn predict(cfg: &RunConfig) -> Result<Output, CliError> {
    let predictor = cfg.predictor()?;
    let given = cfg.given()?;
    let ws = if cfg.w.is_empty() {
        vec![0.5]
    } else {
        cfg.w.clone()
    };
    if let Some(w) = ws.iter().find(|w| !(**w > 0.0 && **w < 1.0)) {
        return Err(CliError::Usage(format!("w must lie in (0, 1), got {w}")));
    }
    let bands = cfg.bands()?;
    let empty = String::new;
    let mut table = Table::new(["quantity", "level", "value", "lower", "upper"]);
    for &w in &ws {
        let q = predictor.quantile(given, w)?;
        table.push(vec!["quantile".into(), num(w), num(q), empty(), empty()]);
    }
    table.push(vec![
        "median".into(),
        empty(),
        num(predictor.median(given)?),
        empty(),
        empty(),
    ]);
    table.push(vec![
        "mean".into(),
        empty(),
        num(predictor.mean(given)?),
        empty(),
        empty(),
    ]);
    if matches!(predictor.case(), Case::IIa | Case::IIb) {
        table.push(vec![
            "alpha".into(),
            empty(),
            num(predictor.alpha(given.last())?),
            empty(),
            empty(),
        ]);
    }
    for b in bands {
        let iv = predictor.band(given, b)?;
        let kind = match b.kind {
            BandKind::Centered => "centered",
            BandKind::Bottom => "bottom",
        };
        table.push(vec![
            kind.into(),
            num(b.level),
            empty(),
            num(iv.lower),
            num(iv.upper),
        ]);
    }
    let (t1, t2) = match given {
        Given::One(t) => (t, None),
        Given::Two(a, b) => (a, Some(b)),
    };
    Ok(Output {
        table,
        meta: json!({ "command": "predict", "case": predictor.case().name(), "t1": t1, "t2": t2 }),
    })
}

/// Component lifetimes and the implied `t1, [t2,] t`.
pub fn simulate_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let size = cfg
        .size
        .ok_or_else(|| CliError::Config("missing field `size`".into()))?;
    if size == 0 {
        return Err(CliError::Usage("size must be positive".into()));
    }
    let roles = cfg.roles()?;
    let copula = cfg.copula()?;
    let marginal = cfg.marginal()?;
    let s = simulate(&roles, &copula, &marginal, size, cfg.seed, cfg.sampler())?;
    let n = s.components();
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.push("t1".into());
    if s.t2().is_some() {
        header.push("t2".into());
    }
    header.push("t".into());
    let mut table = Table::new(header);
    table.rows.reserve(s.len());
    for r in s.rows() {
        let mut row: Vec<String> = r.x.iter().map(|&x| num(x)).collect();
        row.push(num(r.t1));
        if let Some(t2) = r.t2 {
            row.push(num(t2));
        }
        row.push(num(r.t));
        table.push(row);
    }
    Ok(Output {
        table,
        meta: json!({ "command": "simulate", "size": size }),
    })
}

/// Plug-in coverage of the 50% and 90% centered intervals, one row per `k`.
pub fn coverage(cfg: &RunConfig) -> Result<Output, CliError> {
    let (setup, spec, protocol) = cfg.coverage_setup()?;
    let mut table = Table::new([
        "k",
        "replications",
        "coverage50",
        "se50",
        "coverage90",
        "se90",
    ]);
    for &k in &spec.k {
        let r = coverage_experiment(
            &setup,
            k,
            spec.replications,
            protocol,
            spec.known_mu,
            cfg.seed,
        )?;
        table.push(vec![
            r.k.to_string(),
            r.replications.to_string(),
            num(r.coverage50),
            num(r.se50),
            num(r.coverage90),
            num(r.se90),
        ]);
    }
    let protocol = match protocol {
        syspred::montecarlo::Protocol::Same => json!("same"),
        syspred::montecarlo::Protocol::Fresh { eval_draws } => json!({ "fresh": eval_draws }),
    };
    Ok(Output {
        table,
        meta: json!({ "command": "coverage", "protocol": protocol, "known_mu": spec.known_mu }),
    })
}

/// Reads two numeric columns from a CSV with a header row.
pub fn read_pairs(path: &Path, x_col: &str, y_col: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("{}: no column `{name}`", path.display())))
    };
    let (xi, yi) = (col(x_col)?, col(y_col)?);
    let mut pairs = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64, CliError> {
            let s = rec.get(i).unwrap_or("");
            s.parse().map_err(|_| {
                CliError::Input(format!(
                    "{}: row {}: not a number: {s:?}",
                    path.display(),
                    line + 1
                ))
            })
        };
        pairs.push((parse(xi)?, parse(yi)?));
    }
    Ok(pairs)
}

fn line_row(l: &FittedLine) -> Vec<String> {
    vec![
        l.tau.map(num).unwrap_or_default(),
        num(l.intercept),
        num(l.slope),
        num(l.loss),
    ]
}

/// Quantile lines at each `tau`, then the least-squares line (blank `tau`).
pub fn fitqr(cfg: &RunConfig) -> Result<Output, CliError> {
    let sample = cfg
        .sample
        .as_deref()
        .ok_or_else(|| CliError::Config("missing field `sample`".into()))?;
    if cfg.taus.is_empty() && !cfg.ols {
        return Err(CliError::Usage(
            "nothing to fit: taus is empty and ols is off".into(),
        ));
    }
    let x_col = cfg.x_col.as_deref().unwrap_or("t1");
    let y_col = cfg.y_col.as_deref().unwrap_or("t");
    let pairs = read_pairs(sample, x_col, y_col)?;
    let mut table = Table::new(["tau", "intercept", "slope", "loss"]);
    let mut crossings = Vec::new();
    if !cfg.taus.is_empty() {
        let fits = fit_lqr_levels(&pairs, &cfg.taus)?;
        for l in &fits.lines {
            table.push(line_row(l));
        }
        for &(i, j) in &fits.crossings {
            let tau = |k: usize| fits.lines[k].tau.expect("quantile line");
            crossings.push([tau(i), tau(j)]);
        }
    }
    if cfg.ols {
        table.push(line_row(&fit_ols(&pairs)?));
    }
    Ok(Output {
        table,
        meta: json!({
            "command": "fitqr",
            "x_col": x_col,
            "y_col": y_col,
            "observations": pairs.len(),
            "crossing": !crossings.is_empty(),
            "crossings": crossings,
        }),
    })
}
