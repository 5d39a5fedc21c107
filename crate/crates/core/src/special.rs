//! Spherical Bessel, Neumann and Hankel functions plus Legendre polynomials.
//!
//! Everything downstream sums series of the form
//! `sum_n (2n+1) c_n f_n(kr) P_n(cos gamma)`, so the workhorses here are the
//! array routines that return `f_0..f_n` in one pass:
//!
//! ```text
//! j_n(x) = sqrt(pi/2x) J_{n+1/2}(x)      regular at the origin
//! y_n(x) = sqrt(pi/2x) Y_{n+1/2}(x)      singular at the origin
//! h_n(x) = j_n(x) + i y_n(x)             outgoing for the e^{-iwt} convention
//! ```
//!
//! `j_n` uses Miller's downward recurrence (normalised against the closed
//! forms for `j_0`/`j_1`) whenever `n > x`, because the upward recurrence is
//! unstable there; `y_n` always recurses upward, which is stable. Arguments
//! below `ARG_FLOOR` are rejected: nothing in this crate evaluates radial
//! functions at the origin.

use num_complex::Complex64;

/// Smallest admissible argument for the radial functions.
pub const ARG_FLOOR: f64 = 1e-12;

/// Exact power of two used to rescale the downward recurrence before it
/// overflows; power-of-two scaling keeps the ratios bit-exact.
const RESCALE: f64 = f64::from_bits(0x07B0_0000_0000_0000); // 2^-900
const RESCALE_TRIGGER: f64 = f64::from_bits(0x7830_0000_0000_0000); // 2^900

fn assert_arg(x: f64) {
    assert!(
        x.is_finite() && x >= ARG_FLOOR,
        "radial function argument must be finite and >= {ARG_FLOOR:e}, got {x:e}"
    );
}

/// Spherical Bessel functions `j_0(x) .. j_n_max(x)`.
pub fn spherical_j_array(n_max: usize, x: f64) -> Vec<f64> {
    assert_arg(x);
    let j0 = x.sin() / x;
    if n_max == 0 {
        return vec![j0];
    }
    let j1 = x.sin() / (x * x) - x.cos() / x;
    if (n_max as f64) < x {
        // upward recurrence is stable while n < x
        let mut j = Vec::with_capacity(n_max + 1);
        j.push(j0);
        j.push(j1);
        for n in 1..n_max {
            let next = (2 * n + 1) as f64 / x * j[n] - j[n - 1];
            j.push(next);
        }
        return j;
    }

    // Miller's algorithm: descend from a padded start order with an
    // arbitrary seed; the minimal solution dominates by the time we reach
    // n_max, and the closed forms fix the normalisation.
    let pad = 16 + 2 * ((n_max as f64 + 1.0).sqrt().ceil() as usize);
    let start = n_max + pad;
    let mut out = vec![0.0; n_max + 1];
    let mut f_up = 0.0_f64; // f_{n+1}
    let mut f = 1e-30_f64; // f_n
    let mut n = start;
    loop {
        let f_down = (2 * n + 1) as f64 / x * f - f_up;
        n -= 1;
        f_up = f;
        f = f_down;
        if f.abs() > RESCALE_TRIGGER {
            f *= RESCALE;
            f_up *= RESCALE;
            for v in out[n + 1..].iter_mut() {
                *v *= RESCALE;
            }
        }
        if n <= n_max {
            out[n] = f;
        }
        if n == 0 {
            break;
        }
    }
    // Normalise against whichever of j_0, j_1 is better conditioned here.
    let scale = if out[0].abs() >= out[1].abs() {
        j0 / out[0]
    } else {
        j1 / out[1]
    };
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// Spherical Neumann functions `y_0(x) .. y_n_max(x)`.
///
/// High orders overflow to `-inf` for small arguments; callers treat a
/// non-finite `y_n` as a mode that scatters nothing.
pub fn spherical_y_array(n_max: usize, x: f64) -> Vec<f64> {
    assert_arg(x);
    let y0 = -x.cos() / x;
    if n_max == 0 {
        return vec![y0];
    }
    let y1 = -x.cos() / (x * x) - x.sin() / x;
    let mut y = Vec::with_capacity(n_max + 1);
    y.push(y0);
    y.push(y1);
    for n in 1..n_max {
        let next = (2 * n + 1) as f64 / x * y[n] - y[n - 1];
        y.push(next);
    }
    y
}

/// Spherical Hankel functions of the first kind `h_0(x) .. h_n_max(x)`.
pub fn spherical_h1_array(n_max: usize, x: f64) -> Vec<Complex64> {
    let j = spherical_j_array(n_max, x);
    let y = spherical_y_array(n_max, x);
    j.iter()
        .zip(&y)
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect()
}

/// Spherical Bessel functions of complex argument, `j_0(z) .. j_n_max(z)`.
///
/// Needed for the interior wavenumber of a penetrable sphere with complex
/// refractive index. Always uses the downward recurrence.
pub fn spherical_j_array_complex(n_max: usize, z: Complex64) -> Vec<Complex64> {
    assert!(
        z.is_finite() && z.norm() >= ARG_FLOOR,
        "complex radial argument must be finite with |z| >= {ARG_FLOOR:e}"
    );
    let j0 = z.sin() / z;
    if n_max == 0 {
        return vec![j0];
    }
    let j1 = z.sin() / (z * z) - z.cos() / z;
    let pad = 16 + 2 * ((n_max as f64 + 1.0).sqrt().ceil() as usize);
    let start = n_max + pad.max(z.norm().ceil() as usize);
    let mut out = vec![Complex64::new(0.0, 0.0); n_max + 1];
    let mut f_up = Complex64::new(0.0, 0.0);
    let mut f = Complex64::new(1e-30, 0.0);
    let mut n = start;
    loop {
        let f_down = (2 * n + 1) as f64 / z * f - f_up;
        n -= 1;
        f_up = f;
        f = f_down;
        if f.norm_sqr() > RESCALE_TRIGGER {
            f *= RESCALE;
            f_up *= RESCALE;
            for v in out[n + 1..].iter_mut() {
                *v *= RESCALE;
            }
        }
        if n <= n_max {
            out[n] = f;
        }
        if n == 0 {
            break;
        }
    }
    let scale = if out[0].norm() >= out[1].norm() {
        j0 / out[0]
    } else {
        j1 / out[1]
    };
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// Derivatives with respect to the argument from a value table, via
/// `f_n' = f_{n-1} - (n+1)/x f_n` and `f_0' = -f_1`.
pub fn derivative_table(values: &[f64], x: f64) -> Vec<f64> {
    assert!(values.len() >= 2, "need f_0 and f_1 to differentiate");
    let mut d = Vec::with_capacity(values.len());
    d.push(-values[1]);
    for n in 1..values.len() {
        d.push(values[n - 1] - (n + 1) as f64 / x * values[n]);
    }
    d
}

/// Complex-argument version of [`derivative_table`].
pub fn derivative_table_complex(values: &[Complex64], z: Complex64) -> Vec<Complex64> {
    assert!(values.len() >= 2, "need f_0 and f_1 to differentiate");
    let mut d = Vec::with_capacity(values.len());
    d.push(-values[1]);
    for n in 1..values.len() {
        d.push(values[n - 1] - (n + 1) as f64 / z * values[n]);
    }
    d
}

/// `j_n(x)` for a single order.
pub fn spherical_j(n: usize, x: f64) -> f64 {
    spherical_j_array(n, x)[n]
}

/// `y_n(x)` for a single order.
pub fn spherical_y(n: usize, x: f64) -> f64 {
    spherical_y_array(n, x)[n]
}

/// `h_n^{(1)}(x) = j_n(x) + i y_n(x)` for a single order.
pub fn spherical_h1(n: usize, x: f64) -> Complex64 {
    Complex64::new(spherical_j(n, x), spherical_y(n, x))
}

/// `j_n'(x)` for a single order.
pub fn spherical_j_prime(n: usize, x: f64) -> f64 {
    let j = spherical_j_array(n.max(1), x);
    if n == 0 {
        -j[1]
    } else {
        j[n - 1] - (n + 1) as f64 / x * j[n]
    }
}

/// `y_n'(x)` for a single order.
pub fn spherical_y_prime(n: usize, x: f64) -> f64 {
    let y = spherical_y_array(n.max(1), x);
    if n == 0 {
        -y[1]
    } else {
        y[n - 1] - (n + 1) as f64 / x * y[n]
    }
}

/// `h_n^{(1)'}(x)` for a single order.
pub fn spherical_h1_prime(n: usize, x: f64) -> Complex64 {
    Complex64::new(spherical_j_prime(n, x), spherical_y_prime(n, x))
}

/// Legendre polynomials `P_0(t) .. P_n_max(t)` by the three-term recurrence.
///
/// Accepts a whisker of slack past the endpoints so that dot products of
/// unit vectors can be fed in directly.
pub fn legendre_p_array(n_max: usize, t: f64) -> Vec<f64> {
    assert!(
        (-1.0 - 1e-12..=1.0 + 1e-12).contains(&t),
        "Legendre argument must lie in [-1, 1], got {t}"
    );
    let t = t.clamp(-1.0, 1.0);
    let mut p = Vec::with_capacity(n_max + 1);
    p.push(1.0);
    if n_max == 0 {
        return p;
    }
    p.push(t);
    for n in 1..n_max {
        let next = ((2 * n + 1) as f64 * t * p[n] - n as f64 * p[n - 1]) / (n + 1) as f64;
        p.push(next);
    }
    p
}

/// `P_n(t)` for a single order.
pub fn legendre_p(n: usize, t: f64) -> f64 {
    legendre_p_array(n, t)[n]
}

/// `P_n(t)` together with `P_n'(t)`, used by the Gauss-Legendre node solver.
pub fn legendre_p_and_derivative(n: usize, t: f64) -> (f64, f64) {
    assert!(n >= 1, "derivative form needs n >= 1");
    let p = legendre_p_array(n, t);
    let denom = t * t - 1.0;
    if denom.abs() < 1e-300 {
        // endpoint formula: P_n'(+-1) = (+-1)^{n-1} n(n+1)/2
        let sign = if t > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        return (p[n], sign * (n * (n + 1)) as f64 / 2.0);
    }
    let dp = n as f64 * (t * p[n] - p[n - 1]) / denom;
    (p[n], dp)
}
