use serde::Serialize;

use crate::engine::EngineError;
use crate::optim::nelder_mead;

/// Logistic population at time `t`.
pub fn logistic(t: f64, rho: f64, capacity: f64, x0: f64) -> f64 {
    capacity / (1.0 + (capacity / x0 - 1.0) * (-rho * t).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticFit {
    pub rho_max: f64,
    pub capacity: f64,
    pub x0: f64,
    /// Root-mean-square relative error over the series.
    pub residual: f64,
    /// Set when the series shows no growth and the fit is a flat line.
    pub low_confidence: bool,
}

fn rms_relative(series: &[(f64, f64)], rho: f64, k: f64, x0: f64) -> f64 {
    let ss: f64 = series
        .iter()
        .map(|&(t, y)| {
            let e = (logistic(t, rho, k, x0) - y) / y;
            e * e
        })
        .sum();
    (ss / series.len() as f64).sqrt()
}

/// Least-squares logistic fit to `(time, population)` pairs, relative error.
pub fn fit_logistic(series: &[(f64, f64)]) -> Result<LogisticFit, EngineError> {
    if series.len() < 4 {
        return Err(EngineError::InvalidArgument(format!(
            "growth fit needs at least 4 points, got {}",
            series.len()
        )));
    }
    if let Some(&(t, y)) = series
        .iter()
        .find(|&&(t, y)| !(t.is_finite() && y.is_finite() && y > 0.0))
    {
        return Err(EngineError::InvalidArgument(format!(
            "growth series must be finite and positive, got ({t}, {y})"
        )));
    }
    let mut pts = series.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let quarter = (pts.len() / 4).max(1);
    let mean = |s: &[(f64, f64)]| s.iter().map(|p| p.1).sum::<f64>() / s.len() as f64;
    let head = mean(&pts[..quarter]);
    let tail = mean(&pts[pts.len() - quarter..]);
    if tail <= head {
        let level = mean(&pts);
        return Ok(LogisticFit {
            rho_max: 0.0,
            capacity: level,
            x0: level,
            residual: rms_relative(&pts, 0.0, level, level),
            low_confidence: true,
        });
    }

    // Shift time so the first point sits at zero, then fit in log space.
    let t0 = pts[0].0;
    let shifted: Vec<(f64, f64)> = pts.iter().map(|&(t, y)| (t - t0, y)).collect();
    let span = shifted.last().unwrap().0.max(f64::MIN_POSITIVE);
    let y_first = shifted[0].1;
    let y_max = shifted.iter().map(|p| p.1).fold(0.0, f64::max);
    let rho_guess = ((tail / head).ln() / span).max(1e-6);
    let objective = |v: &[f64]| {
        let (rho, k, x0) = (v[0].exp(), v[1].exp(), v[2].exp());
        rms_relative(&shifted, rho, k, x0)
    };
    let mut best = nelder_mead(
        objective,
        &[rho_guess.ln(), (1.2 * y_max).ln(), y_first.ln()],
        0.5,
        4000,
        1e-14,
    );
    // One restart from the first minimum tightens the simplex.
    let again = nelder_mead(objective, &best.x, 0.05, 4000, 1e-16);
    if again.value <= best.value {
        best = again;
    }
    let (rho, k, x0_shifted) = (best.x[0].exp(), best.x[1].exp(), best.x[2].exp());
    // Express the initial size at the original time origin.
    let x0 = logistic(-t0, rho, k, x0_shifted);
    Ok(LogisticFit {
        rho_max: rho,
        capacity: k,
        x0,
        residual: best.value,
        low_confidence: false,
    })
}
