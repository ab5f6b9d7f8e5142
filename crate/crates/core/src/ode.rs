//! Fixed-step classical fourth-order Runge-Kutta over fixed-size real vectors.

/// Advances `y` by one step of size `dt` under `ẏ = f(y)`.
#[inline]
pub fn rk4_step<const N: usize, F>(y: &[f64; N], dt: f64, f: F) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let k1 = f(y);
    let y2 = axpy(y, 0.5 * dt, &k1);
    let k2 = f(&y2);
    let y3 = axpy(y, 0.5 * dt, &k2);
    let k3 = f(&y3);
    let y4 = axpy(y, dt, &k3);
    let k4 = f(&y4);
    let mut out = *y;
    let h6 = dt / 6.0;
    for i in 0..N {
        out[i] += h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

/// Number of whole steps of size `dt` covering `span`, rounded to nearest.
pub(crate) fn step_count(span: f64, dt: f64) -> usize {
    (span / dt).round().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_fourth_order() {
        // x'' = -x, exact x = cos t
        let f = |y: &[f64; 2]| [y[1], -y[0]];
        let err = |dt: f64| {
            let mut y = [1.0, 0.0];
            let n = (1.0 / dt).round() as usize;
            for _ in 0..n {
                y = rk4_step(&y, dt, f);
            }
            (y[0] - 1f64.cos()).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn step_count_rounds() {
        assert_eq!(step_count(0.4, 0.005), 80);
        assert_eq!(step_count(0.0, 0.005), 0);
    }
}
