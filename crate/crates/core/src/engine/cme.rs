//! Forward master equation `dp/dt = p G(t)` for finite chains.

use super::{EngineError, PiecewiseGenerator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmeOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Largest allowed `|sum(p) - 1|`.
    pub mass_tol: f64,
}

impl Default for CmeOptions {
    fn default() -> Self {
        Self {
            atol: 1e-12,
            rtol: 1e-10,
            mass_tol: 1e-8,
        }
    }
}

/// Expectations of each observable at each output time.
#[derive(Debug, Clone, PartialEq)]
pub struct CmeSeries {
    pub times: Vec<f64>,
    /// `values[k][j]`: observable `j` at `times[k]`.
    pub values: Vec<Vec<f64>>,
    /// Distribution at the last output time.
    pub final_distribution: Vec<f64>,
}

impl CmeSeries {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[j]).collect()
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Stepper {
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    next: Vec<f64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            stage: vec![0.0; n],
            next: vec![0.0; n],
        }
    }

    /// Integrate `p` across `[t0, t1]` with a fixed generator. Returns the
    /// last accepted step size for reuse.
    fn advance(
        &mut self,
        gen: &super::Generator,
        p: &mut Vec<f64>,
        t0: f64,
        t1: f64,
        mut h: f64,
        opts: &CmeOptions,
    ) -> Result<f64, EngineError> {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(h);
        }
        let mut t = t0;
        let rate = gen.max_exit_rate();
        if rate == 0.0 {
            return Ok(h);
        }
        if !(h > 0.0) {
            h = (0.1 / rate).min(span);
        }
        gen.left_mul(p, &mut self.k[0]);
        while t < t1 {
            let last = t + h >= t1 || (t1 - t - h) < 1e-12 * span;
            let step = if last { t1 - t } else { h };
            for s in 1..7 {
                for i in 0..p.len() {
                    let mut acc = 0.0;
                    for (j, a) in A[s][..s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += a * self.k[j][i];
                        }
                    }
                    self.stage[i] = p[i] + step * acc;
                }
                gen.left_mul(&self.stage, &mut self.k[s]);
            }
            // the last stage is the derivative at the 5th-order solution
            let mut err = 0.0f64;
            for i in 0..p.len() {
                let mut hi = 0.0;
                let mut lo = 0.0;
                for s in 0..7 {
                    hi += B5[s] * self.k[s][i];
                    lo += B4[s] * self.k[s][i];
                }
                self.next[i] = p[i] + step * hi;
                let scale = opts.atol + opts.rtol * p[i].abs().max(self.next[i].abs());
                err = err.max((step * (hi - lo)).abs() / scale);
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + step };
                std::mem::swap(p, &mut self.next);
                self.k.swap(0, 6);
                let mass: f64 = p.iter().sum();
                if (mass - 1.0).abs() > opts.mass_tol {
                    return Err(EngineError::MassDrift { t, drift: mass - 1.0 });
                }
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !last {
                    h = step * grow;
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).max(0.2);
                if h < 1e-14 * span.max(1.0) {
                    return Err(EngineError::InvalidArgument(format!("step size underflow at t = {t}")));
                }
            }
        }
        Ok(h)
    }
}

/// Integrate the master equation from `p0` and report `E[f_j]` at each time.
///
/// `observables[j][s]` is the value of observable `j` in state `s`. Output
/// times must be non-decreasing and non-negative. The generator is switched
/// exactly at its piece boundaries.
pub fn cme_expectations(
    gen: &PiecewiseGenerator,
    p0: &[f64],
    observables: &[Vec<f64>],
    times: &[f64],
    opts: &CmeOptions,
) -> Result<CmeSeries, EngineError> {
    let n = gen.len();
    if p0.len() != n || observables.iter().any(|o| o.len() != n) {
        return Err(EngineError::InvalidArgument(format!(
            "distribution and observables must have {n} entries"
        )));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(EngineError::InvalidArgument(
            "output times must be non-negative and sorted".into(),
        ));
    }
    let mass: f64 = p0.iter().sum();
    if p0.iter().any(|&x| x < 0.0) || (mass - 1.0).abs() > opts.mass_tol {
        return Err(EngineError::InvalidArgument(
            "initial distribution must be a probability vector".into(),
        ));
    }
    for (_, g) in gen.pieces() {
        g.validate()?;
    }

    let starts: Vec<f64> = gen.pieces().map(|(s, _)| s).collect();
    let mut p = p0.to_vec();
    let mut stepper = Stepper::new(n);
    let mut t = 0.0;
    let mut h = f64::NAN;
    let mut values = Vec::with_capacity(times.len());
    for &target in times {
        while t < target {
            let piece = starts.partition_point(|&s| s <= t) - 1;
            let end = starts.get(piece + 1).copied().unwrap_or(f64::INFINITY).min(target);
            let g = gen.at(t);
            h = stepper.advance(g, &mut p, t, end, h, opts)?;
            if end < target {
                h = f64::NAN;
            }
            t = end;
        }
        values.push(
            observables
                .iter()
                .map(|f| f.iter().zip(&p).map(|(a, b)| a * b).sum())
                .collect(),
        );
    }
    Ok(CmeSeries {
        times: times.to_vec(),
        values,
        final_distribution: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{stationary_distribution, Generator};

    fn two_state(a: f64, b: f64) -> PiecewiseGenerator {
        PiecewiseGenerator::constant(Generator::from_dense(&[vec![-a, a], vec![b, -b]]).unwrap())
    }

    #[test]
    fn two_state_relaxation_matches_closed_form() {
        let (a, b) = (1.0, 1.0);
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let s = cme_expectations(
            &two_state(a, b),
            &[1.0, 0.0],
            &[vec![1.0, 0.0]],
            &times,
            &CmeOptions::default(),
        )
        .unwrap();
        for (k, &t) in times.iter().enumerate() {
            let p0 = b / (a + b) + a / (a + b) * (-(a + b) * t).exp();
            assert!((s.values[k][0] - p0).abs() < 1e-9, "t={t}");
        }
        let at_one = s
            .values
            .iter()
            .zip(&times)
            .find(|(_, &t)| (t - 0.9).abs() < 1e-12)
            .unwrap()
            .0[0];
        assert!((at_one - 0.5 * (1.0 + (-1.8f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn zero_generator_keeps_distribution() {
        let g = PiecewiseGenerator::constant(Generator::from_dense(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap());
        let s = cme_expectations(&g, &[0.3, 0.7], &[vec![0.0, 1.0]], &[0.0, 5.0], &CmeOptions::default()).unwrap();
        assert_eq!(s.values[1][0], 0.7);
    }

    #[test]
    fn stationary_start_stays_put() {
        let gen = Generator::birth_death(&[2.0, 2.0], &[1.0, 1.0]).unwrap();
        let pi = stationary_distribution(&gen).unwrap();
        let s = cme_expectations(
            &PiecewiseGenerator::constant(gen),
            &pi,
            &[vec![0.0, 1.0, 2.0]],
            &[1.0, 10.0],
            &CmeOptions::default(),
        )
        .unwrap();
        let want = pi[1] + 2.0 * pi[2];
        assert!((s.values[1][0] - want).abs() < 1e-10);
    }

    #[test]
    fn switches_generator_at_breakpoint() {
        // pure decay 0 -> 1 at rate 1 switched on at t = 1
        let off = Generator::from_dense(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let on = Generator::from_dense(&[vec![-1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let g = PiecewiseGenerator::new(vec![0.0, 1.0], vec![off, on]).unwrap();
        let s = cme_expectations(
            &g,
            &[1.0, 0.0],
            &[vec![1.0, 0.0]],
            &[0.5, 1.0, 3.0],
            &CmeOptions::default(),
        )
        .unwrap();
        assert_eq!(s.values[0][0], 1.0);
        assert_eq!(s.values[1][0], 1.0);
        assert!((s.values[2][0] - (-2.0f64).exp()).abs() < 1e-9);
    }
}
