use lff::harness::LabelColumn;

/// Parses a label column given as a 0-based index or a header name.
pub fn label_column(s: &str) -> Result<LabelColumn, String> {
    if s.is_empty() {
        return Err("empty label column".into());
    }
    Ok(match s.parse::<usize>() {
        Ok(i) => LabelColumn::Index(i),
        Err(_) => LabelColumn::Name(s.to_string()),
    })
}

/// Parses `"10^a..10^b step s"` (exponents `a, a + s, …, b`) or a
/// comma-separated list of numbers.
pub fn grid(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.contains("..") {
        return log_range(s);
    }
    let values = list(s)?;
    if values.is_empty() {
        return Err("empty grid".into());
    }
    Ok(values)
}

pub fn list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{t}` is not a finite number"))
        })
        .collect()
}

fn log_range(s: &str) -> Result<Vec<f64>, String> {
    let malformed = || format!("grid `{s}` is not of the form \"10^a..10^b step s\"");
    let (range, step) = s.split_once("step").ok_or_else(malformed)?;
    let (lo, hi) = range.split_once("..").ok_or_else(malformed)?;
    let exponent = |t: &str| -> Result<f64, String> {
        t.trim()
            .strip_prefix("10^")
            .and_then(|e| e.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or_else(malformed)
    };
    let (a, b) = (exponent(lo)?, exponent(hi)?);
    let step: f64 = step.trim().parse().map_err(|_| malformed())?;
    if !(step > 0.0) || b < a {
        return Err(format!("grid `{s}` needs a positive step and a <= b"));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(format!("grid `{s}` has too many points"));
    }
    Ok((0..count).map(|i| 10f64.powf(a + i as f64 * step)).collect())
}
