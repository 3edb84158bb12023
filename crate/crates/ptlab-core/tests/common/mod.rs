//! Independent numerical oracles shared by the integration tests: fixed-step
//! Simpson quadrature, a Pade scaling-and-squaring matrix exponential, and a
//! Durand-Kerner characteristic-polynomial root finder. None of these touch
//! the library's own evaluation paths.

#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Composite Simpson rule with n subintervals (n rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Simpson rule for complex-valued integrands.
pub fn simpson_c<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, n: usize) -> C64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(a + i as f64 * h) * w;
    }
    acc * (h / 3.0)
}

/// Integral of f over the whole line via the substitution x = c + s tan(theta),
/// which handles slowly decaying tails exactly; f must be smooth on the line.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, center: f64, scale: f64, n: usize) -> f64 {
    let g = |theta: f64| -> f64 {
        let t = theta.tan();
        let x = center + scale * t;
        f(x) * scale * (1.0 + t * t)
    };
    let eps = 1e-9;
    simpson(g, -std::f64::consts::FRAC_PI_2 + eps, std::f64::consts::FRAC_PI_2 - eps, n)
}

fn mat_add(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a + b
}

fn mat_scale(a: &Array2<C64>, s: C64) -> Array2<C64> {
    a.mapv(|z| z * s)
}

fn naive_mul(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let m = b.ncols();
    let k = a.ncols();
    let mut c = Array2::<C64>::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            let mut s = C64::new(0.0, 0.0);
            for l in 0..k {
                s += a[[i, l]] * b[[l, j]];
            }
            c[[i, j]] = s;
        }
    }
    c
}

fn solve_dense(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    // Gaussian elimination with partial pivoting; fine for the tiny systems
    // the oracle needs.
    let n = a.nrows();
    let m = b.ncols();
    let mut aug = Array2::<C64>::zeros((n, n + m));
    for i in 0..n {
        for j in 0..n {
            aug[[i, j]] = a[[i, j]];
        }
        for j in 0..m {
            aug[[i, n + j]] = b[[i, j]];
        }
    }
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if aug[[r, col]].norm() > aug[[piv, col]].norm() {
                piv = r;
            }
        }
        if piv != col {
            for j in 0..n + m {
                let tmp = aug[[col, j]];
                aug[[col, j]] = aug[[piv, j]];
                aug[[piv, j]] = tmp;
            }
        }
        let d = aug[[col, col]];
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = aug[[r, col]] / d;
            for j in col..n + m {
                let v = aug[[col, j]];
                aug[[r, j]] -= factor * v;
            }
        }
    }
    let mut x = Array2::<C64>::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            x[[i, j]] = aug[[i, n + j]] / aug[[i, i]];
        }
    }
    x
}

/// Matrix exponential by 13th-order Pade approximation with scaling and
/// squaring; standard coefficients.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let norm: f64 = a
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let s = if norm > 5.4 {
        (norm / 5.4).log2().ceil() as i32
    } else {
        0
    };
    let a_scaled = mat_scale(a, C64::new((0.5f64).powi(s), 0.0));

    let b: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let ident = Array2::<C64>::eye(n);
    let a2 = naive_mul(&a_scaled, &a_scaled);
    let a4 = naive_mul(&a2, &a2);
    let a6 = naive_mul(&a2, &a4);

    let u_inner1 = mat_add(
        &mat_scale(&a6, C64::new(b[13], 0.0)),
        &mat_add(
            &mat_scale(&a4, C64::new(b[11], 0.0)),
            &mat_scale(&a2, C64::new(b[9], 0.0)),
        ),
    );
    let u_inner2 = mat_add(
        &mat_scale(&a6, C64::new(b[7], 0.0)),
        &mat_add(
            &mat_scale(&a4, C64::new(b[5], 0.0)),
            &mat_add(
                &mat_scale(&a2, C64::new(b[3], 0.0)),
                &mat_scale(&ident, C64::new(b[1], 0.0)),
            ),
        ),
    );
    let u = naive_mul(&a_scaled, &mat_add(&naive_mul(&a6, &u_inner1), &u_inner2));

    let v_inner1 = mat_add(
        &mat_scale(&a6, C64::new(b[12], 0.0)),
        &mat_add(
            &mat_scale(&a4, C64::new(b[10], 0.0)),
            &mat_scale(&a2, C64::new(b[8], 0.0)),
        ),
    );
    let v_inner2 = mat_add(
        &mat_scale(&a6, C64::new(b[6], 0.0)),
        &mat_add(
            &mat_scale(&a4, C64::new(b[4], 0.0)),
            &mat_add(
                &mat_scale(&a2, C64::new(b[2], 0.0)),
                &mat_scale(&ident, C64::new(b[0], 0.0)),
            ),
        ),
    );
    let v = mat_add(&naive_mul(&a6, &v_inner1), &v_inner2);

    let num = mat_add(&v, &u);
    let den = mat_add(&v, &mat_scale(&u, C64::new(-1.0, 0.0)));
    let mut r = solve_dense(&den, &num);
    for _ in 0..s {
        r = naive_mul(&r, &r);
    }
    r
}

/// Characteristic polynomial coefficients by the Faddeev-LeVerrier recursion:
/// p(x) = x^n + c[n-1] x^{n-1} + ... + c[0]. Stable enough for n <= 8.
pub fn char_poly(a: &Array2<C64>) -> Vec<C64> {
    let n = a.nrows();
    let ident = Array2::<C64>::eye(n);
    let mut m = Array2::<C64>::zeros((n, n));
    let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
    coeffs[n] = C64::new(1.0, 0.0);
    let mut cm = C64::new(1.0, 0.0);
    for k in 1..=n {
        m = naive_mul(a, &mat_add(&m, &mat_scale(&ident, cm)));
        let trace: C64 = m.diag().iter().sum();
        cm = -trace / C64::new(k as f64, 0.0);
        coeffs[n - k] = cm;
    }
    coeffs
}

/// All roots of a polynomial (coefficients low-to-high, monic assumed after
/// normalization) by the Durand-Kerner iteration.
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let monic: Vec<C64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |x: C64| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in monic.iter().rev() {
            acc = acc * x + c;
        }
        acc
    };
    let mut roots: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(1.3, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let mut den = C64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-14 {
            break;
        }
    }
    roots
}

/// Deterministic pseudo-random complex unit vector (splitmix-style), for
/// probe vectors that must be the same on every run.
pub fn seeded_unit_vector(n: usize, salt: u64) -> Vec<C64> {
    let mut state = salt.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) as f64) / (2f64.powi(31)) - 1.0
    };
    let v: Vec<C64> = (0..n).map(|_| C64::new(next(), next())).collect();
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Deterministic random Hermitian matrix for small-N oracle tests.
pub fn seeded_hermitian(n: usize, salt: u64) -> Array2<C64> {
    let mut state = salt.wrapping_add(0x6A09_E667_F3BC_C909);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) as f64) / (2f64.powi(31)) - 1.0
    };
    let mut h = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        h[[i, i]] = C64::new(next(), 0.0);
        for j in i + 1..n {
            let z = C64::new(next(), next()) * 0.5;
            h[[i, j]] = z;
            h[[j, i]] = z.conj();
        }
    }
    h
}
