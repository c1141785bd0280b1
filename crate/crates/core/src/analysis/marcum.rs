//! First-order Marcum Q-function and the frame PAPR tail built on it.

/// `Q_1(a, b)` as a Poisson mixture of central chi-square tails.
///
/// With `x = a^2/2` and `y = b^2/2`,
/// `Q_1 = sum_k Pois(k; x) * P(Pois(y) <= k)`. Terms are accumulated in log
/// space and the loop stops once the remaining Poisson mass of `x` is
/// below `1e-14`, which bounds the truncation error.
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    assert!(
        a >= 0.0 && b >= 0.0,
        "marcum_q1 needs non-negative arguments"
    );
    let x = 0.5 * a * a;
    let y = 0.5 * b * b;
    if y == 0.0 {
        return 1.0;
    }
    if x == 0.0 {
        return (-y).exp();
    }
    let (lnx, lny) = (x.ln(), y.ln());
    let mut lw = -x; // ln Pois(k; x)
    let mut lt = -y; // ln Pois(k; y)
    let mut cdf_y = lt.exp();
    let mut sum = 0.0;
    let mut k = 0u64;
    loop {
        sum += lw.exp() * cdf_y.min(1.0);
        k += 1;
        let kf = k as f64;
        lw += lnx - kf.ln();
        lt += lny - kf.ln();
        cdf_y += lt.exp();
        if kf > x {
            // geometric bound on the remaining Poisson(x) mass
            let ratio = x / (kf + 1.0);
            let tail = lw.exp() / (1.0 - ratio);
            if tail < 1e-14 {
                break;
            }
        }
    }
    sum.min(1.0)
}

/// Probability that a single normalised power sample exceeds `gamma0` when the
/// signal is a constant-envelope component plus complex Gaussian data with
/// pilot-to-data ratio `rho` (linear).
pub fn sample_tail(rho: f64, gamma0: f64) -> f64 {
    marcum_q1((2.0 * rho).sqrt(), (2.0 * gamma0 * (1.0 + rho)).sqrt())
}

/// `P(PAPR > gamma0) ~ 1 - (1 - q)^MN` for `MN` independent samples.
///
/// `gamma0` is linear. Evaluated through `expm1`/`ln_1p` so tiny `q` keeps
/// full relative precision.
pub fn ccdf_analytic(rho: f64, mn: usize, gamma0: f64) -> f64 {
    if gamma0 <= 0.0 {
        return 1.0;
    }
    let q = sample_tail(rho, gamma0);
    if q >= 1.0 {
        return 1.0;
    }
    (-(mn as f64 * (-q).ln_1p()).exp_m1()).clamp(0.0, 1.0)
}
