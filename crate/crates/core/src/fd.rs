//! Central finite differences with one Richardson step.
//!
//! Step size `h = 1e-4 · max(1, |x|)`; the estimate is `(4 D(h/2) − D(h)) / 3`.

pub const REL_STEP: f64 = 1e-4;

pub fn step(x: f64) -> f64 {
    REL_STEP * x.abs().max(1.0)
}

fn shifted(x: &[f64], axis: usize, delta: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[axis] += delta;
    y
}

fn shifted2(x: &[f64], a: usize, da: f64, b: usize, db: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[a] += da;
    y[b] += db;
    y
}

/// Derivative of a scalar function of one variable.
pub fn derivative<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = step(x);
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Second derivative of a scalar function of one variable.
pub fn second_derivative<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = step(x);
    let f0 = f(x);
    let d = |h: f64| (f(x + h) - 2.0 * f0 + f(x - h)) / (h * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Partial derivatives of a vector-valued function along one axis.
pub fn partial_vec<F, E>(f: F, x: &[f64], axis: usize) -> Result<Vec<f64>, E>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, E>,
{
    let h = step(x[axis]);
    let d = |h: f64| -> Result<Vec<f64>, E> {
        let p = f(&shifted(x, axis, h))?;
        let m = f(&shifted(x, axis, -h))?;
        Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let big = d(h)?;
    let small = d(h / 2.0)?;
    Ok(small
        .iter()
        .zip(&big)
        .map(|(s, b)| (4.0 * s - b) / 3.0)
        .collect())
}

/// Second partial derivatives `∂_a ∂_b` of a vector-valued function.
pub fn second_partial_vec<F, E>(f: F, x: &[f64], a: usize, b: usize) -> Result<Vec<f64>, E>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, E>,
{
    if a == b {
        let h = step(x[a]);
        let f0 = f(x)?;
        let d = |h: f64| -> Result<Vec<f64>, E> {
            let p = f(&shifted(x, a, h))?;
            let m = f(&shifted(x, a, -h))?;
            Ok((0..f0.len())
                .map(|i| (p[i] - 2.0 * f0[i] + m[i]) / (h * h))
                .collect())
        };
        let big = d(h)?;
        let small = d(h / 2.0)?;
        return Ok(small
            .iter()
            .zip(&big)
            .map(|(s, b)| (4.0 * s - b) / 3.0)
            .collect());
    }
    let ha = step(x[a]);
    let hb = step(x[b]);
    let d = |ha: f64, hb: f64| -> Result<Vec<f64>, E> {
        let pp = f(&shifted2(x, a, ha, b, hb))?;
        let pm = f(&shifted2(x, a, ha, b, -hb))?;
        let mp = f(&shifted2(x, a, -ha, b, hb))?;
        let mm = f(&shifted2(x, a, -ha, b, -hb))?;
        Ok((0..pp.len())
            .map(|i| (pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * ha * hb))
            .collect())
    };
    let big = d(ha, hb)?;
    let small = d(ha / 2.0, hb / 2.0)?;
    Ok(small
        .iter()
        .zip(&big)
        .map(|(s, b)| (4.0 * s - b) / 3.0)
        .collect())
}

/// Gradient of a scalar function.
pub fn gradient<F, E>(f: F, x: &[f64]) -> Result<Vec<f64>, E>
where
    F: Fn(&[f64]) -> Result<f64, E>,
{
    let g = |y: &[f64]| f(y).map(|v| vec![v]);
    (0..x.len())
        .map(|a| partial_vec(&g, x, a).map(|v| v[0]))
        .collect()
}

/// Hessian of a scalar function.
pub fn hessian<F, E>(f: F, x: &[f64]) -> Result<Vec<Vec<f64>>, E>
where
    F: Fn(&[f64]) -> Result<f64, E>,
{
    let g = |y: &[f64]| f(y).map(|v| vec![v]);
    let n = x.len();
    let mut h = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a..n {
            let v = second_partial_vec(&g, x, a, b)?[0];
            h[a][b] = v;
            h[b][a] = v;
        }
    }
    Ok(h)
}

/// Relative comparison `|a − b| ≤ tol · max(1, scale)`.
pub fn agrees(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * scale.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_exp_sin() {
        let f = |x: f64| x.sin().exp();
        let x = 0.7f64;
        let exact = x.cos() * x.sin().exp();
        assert!((derivative(f, x) - exact).abs() < 1e-10);
        let exact2 = (x.cos().powi(2) - x.sin()) * x.sin().exp();
        assert!((second_derivative(f, x) - exact2).abs() < 1e-7);
    }

    #[test]
    fn mixed_partial_of_product() {
        let f = |x: &[f64]| -> Result<f64, ()> { Ok(x[0] * x[1].sin() + x[0] * x[0] * x[1]) };
        let x = [1.2, 0.4];
        let h = hessian(f, &x).unwrap();
        assert!((h[0][1] - (x[1].cos() + 2.0 * x[0])).abs() < 1e-6);
        assert!((h[0][0] - 2.0 * x[1]).abs() < 1e-6);
        let g = gradient(f, &x).unwrap();
        assert!((g[1] - (x[0] * x[1].cos() + x[0] * x[0])).abs() < 1e-10);
    }

    #[test]
    fn errors_propagate() {
        let f = |_: &[f64]| -> Result<f64, &'static str> { Err("boom") };
        assert_eq!(gradient(f, &[0.0]).unwrap_err(), "boom");
    }
}
