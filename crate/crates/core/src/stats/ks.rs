use crate::error::{Result, ThdError};

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_a(x) - F_b(x)|`,
/// evaluated exactly by sweeping both sorted samples.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(ks_sweep(a, b)?.0)
}

/// Returns `D` together with the sign of `F_a - F_b` where the supremum is
/// first attained (`+1` means `a` is stochastically smaller there).
pub(crate) fn ks_sweep(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(ThdError::InvalidInput("KS statistic needs two non-empty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = 0.0f64;
    let mut sign = 0.0f64;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let diff = i as f64 / n - j as f64 / m;
        if diff.abs() > best {
            best = diff.abs();
            sign = diff.signum();
        }
    }
    Ok((best, sign))
}

/// Asymptotic p-value `Q_KS(sqrt(n m / (n + m)) * D)` of the Kolmogorov
/// distribution, clamped to `[0, 1]`.
pub fn ks_p_value(d: f64, n: usize, m: usize) -> f64 {
    if n == 0 || m == 0 || !(d > 0.0) {
        return 1.0;
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    kolmogorov_q(en * d.min(1.0)).clamp(0.0, 1.0)
}

/// Survival function of the Kolmogorov distribution. The alternating series
/// converges slowly for small arguments, so those use the Jacobi theta dual.
pub(crate) fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let mut sum = 0.0;
        let mut k = 1i32;
        loop {
            let term = y.powi((2 * k - 1).pow(2));
            sum += term;
            if term < 1e-17 * sum || k > 100 {
                break;
            }
            k += 1;
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    } else {
        let x = (-2.0 * lambda * lambda).exp();
        let mut sum = 0.0;
        let mut k = 1i32;
        loop {
            let term = x.powi(k * k);
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 || k > 100 {
                break;
            }
            k += 1;
        }
        2.0 * sum
    }
}
