//! Dormand-Prince 5(4) with embedded error control, for complex vectors.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Steps below this fraction of the interval abort the integration.
    pub min_step_fraction: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b_hat
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..y.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`. `observer` sees every accepted
/// step (and the initial point).
pub fn dopri45<F, O>(y0: Vec<C64>, t0: f64, t1: f64, opts: &OdeOptions, mut f: F, mut observer: O) -> Result<(Vec<C64>, OdeStats)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(f64, &[C64]),
{
    let n = y0.len();
    let mut y = y0;
    let mut stats = OdeStats::default();
    observer(t0, &y);
    let span = t1 - t0;
    if span <= 0.0 || n == 0 {
        return Ok((y, stats));
    }
    let min_step = span * opts.min_step_fraction;
    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; 7];
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];

    f(t0, &y, &mut k[0]);
    // Initial step from the derivative scale.
    let d0 = rms(&y, &y, opts);
    let d1 = rms(&k[0], &y, opts);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
    h = h.min(opts.max_step).min(span);
    let mut t = t0;
    let mut last_err = 1e-4f64;

    while t < t1 {
        if t + h > t1 || (t1 - (t + h)) < 1e-12 * span {
            h = t1 - t;
        }
        let (k0, rest) = k.split_at_mut(1);
        let k0 = &k0[0];
        {
            combine(&mut tmp, &y, h, &[(A21, k0)]);
            f(t + C2 * h, &tmp, &mut rest[0]);
            combine(&mut tmp, &y, h, &[(A31, k0), (A32, &rest[0])]);
            f(t + C3 * h, &tmp, &mut rest[1]);
            combine(&mut tmp, &y, h, &[(A41, k0), (A42, &rest[0]), (A43, &rest[1])]);
            f(t + C4 * h, &tmp, &mut rest[2]);
            combine(&mut tmp, &y, h, &[(A51, k0), (A52, &rest[0]), (A53, &rest[1]), (A54, &rest[2])]);
            f(t + C5 * h, &tmp, &mut rest[3]);
            combine(&mut tmp, &y, h, &[(A61, k0), (A62, &rest[0]), (A63, &rest[1]), (A64, &rest[2]), (A65, &rest[3])]);
            f(t + h, &tmp, &mut rest[4]);
            combine(&mut y_new, &y, h, &[(B1, k0), (B3, &rest[1]), (B4, &rest[2]), (B5, &rest[3]), (B6, &rest[4])]);
            f(t + h, &y_new, &mut rest[5]);
        }
        let mut err_sq = 0.0;
        for i in 0..n {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
            let sc = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err_sq += (e.norm() / sc).powi(2);
        }
        let err = (err_sq / n as f64).sqrt();
        if err <= 1.0 || h <= min_step {
            if err > 1.0 {
                return Err(Error::StepUnderflow { t, h, err });
            }
            t = if h == t1 - t { t1 } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            stats.accepted += 1;
            observer(t, &y);
            // PI step-size controller.
            let fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.7 / 5.0) * last_err.powf(0.4 / 5.0) };
            last_err = err.max(1e-4);
            h = (h * fac.clamp(0.2, 5.0)).min(opts.max_step);
        } else {
            stats.rejected += 1;
            let fac = (0.9 * err.powf(-1.0 / 5.0)).clamp(0.2, 1.0);
            h *= fac;
            if h < min_step {
                return Err(Error::StepUnderflow { t, h, err });
            }
        }
    }
    Ok((y, stats))
}

fn rms(v: &[C64], scale: &[C64], opts: &OdeOptions) -> f64 {
    let s: f64 = v
        .iter()
        .zip(scale)
        .map(|(a, y)| (a.norm() / (opts.atol + opts.rtol * y.norm())).powi(2))
        .sum();
    (s / v.len().max(1) as f64).sqrt()
}
