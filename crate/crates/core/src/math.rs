//! Small numeric helpers shared across modules.

use num_complex::Complex64;

/// `(1 - e^{-z}) / z`, stable for small `|z|`.
///
/// The quadratures integrate exponentials over short segments, where the
/// naive expression loses all significant digits.
pub fn em1_over(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        // 1 - z/2 + z^2/6 - z^3/24
        1.0 + z * (-0.5 + z * (1.0 / 6.0 - z / 24.0))
    } else {
        -f64::exp_m1(-z) / z
    }
}

/// Complex version of [`em1_over`].
pub fn em1_over_c(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        Complex64::new(1.0, 0.0) + z * (z * (z * (-1.0 / 24.0) + 1.0 / 6.0) - 0.5)
    } else {
        (Complex64::new(1.0, 0.0) - (-z).exp()) / z
    }
}

/// Nodes and weights of the 16-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Only the nonnegative nodes are stored; the rule is symmetric.
const GL16_NODES: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL16_WEIGHTS: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

/// 16-point Gauss-Legendre quadrature of `f` over `[a, b]`.
pub fn gauss_legendre_16(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for k in 0..8 {
        let dx = half * GL16_NODES[k];
        sum += GL16_WEIGHTS[k] * (f(mid - dx) + f(mid + dx));
    }
    sum * half
}

/// Least-squares line fit `y = intercept + slope * x`.
///
/// Returns `(slope, intercept, slope standard error)`; the standard error is
/// `NaN` when fewer than three points are supplied.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if xs.len() > 2 {
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - (intercept + slope * x);
                r * r
            })
            .sum();
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, intercept, se)
}

/// Deterministic 64-bit mix used to derive per-replica seeds.
///
/// SplitMix64 finalizer; `replica_seed(s, i) != replica_seed(s, j)` for
/// `i != j` and small perturbations of `s` decorrelate completely.
pub fn replica_seed(master: u64, replica: u64) -> u64 {
    let mut z = master
        .wrapping_add(replica.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn em1_over_matches_naive_away_from_zero() {
        for &z in &[0.5, 1.0, 3.0, -0.7, 10.0] {
            let naive = (1.0 - (-z as f64).exp()) / z;
            assert!((em1_over(z) - naive).abs() < 1e-14);
        }
    }

    #[test]
    fn em1_over_small_argument_series() {
        let z = 1e-9;
        assert!((em1_over(z) - (1.0 - z / 2.0)).abs() < 1e-15);
        assert!((em1_over(0.0) - 1.0).abs() == 0.0);
    }

    #[test]
    fn em1_over_c_agrees_with_real() {
        for &z in &[0.3, 2.0, 1e-7] {
            let c = em1_over_c(Complex64::new(z, 0.0));
            assert!((c.re - em1_over(z)).abs() < 1e-14);
            assert!(c.im.abs() < 1e-16);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // Degree up to 31 is exact for GL16.
        let val = gauss_legendre_16(0.0, 2.0, |x| x.powi(7) - 3.0 * x.powi(2) + 1.0);
        let exact = 2.0f64.powi(8) / 8.0 - 3.0 * 8.0 / 3.0 + 2.0;
        assert!((val - exact).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let (slope, intercept, se) = linear_fit(&xs, &ys);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((intercept - 1.0).abs() < 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn replica_seeds_differ() {
        let a = replica_seed(42, 0);
        let b = replica_seed(42, 1);
        let c = replica_seed(43, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
