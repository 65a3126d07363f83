//! Adaptive Gauss-Kronrod (7/15) quadrature for scalar and matrix integrands.

use crate::algebra::{dense, Mat};
use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values that can be integrated: a vector space with a norm.
pub trait Integrand: Clone {
    fn zero_like(&self) -> Self;
    fn axpy(&mut self, a: f64, x: &Self);
    fn norm(&self) -> f64;
}

impl Integrand for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for Mat {
    fn zero_like(&self) -> Self {
        Mat::zeros(self.dim())
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        self.scaled_add(dense::c(a, 0.0), x);
    }
    fn norm(&self) -> f64 {
        dense::frobenius(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Quad<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

struct Piece<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

fn kronrod<T: Integrand>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> Piece<T> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut k = fc.zero_like();
    let mut g = fc.zero_like();
    k.axpy(WGK[7], &fc);
    g.axpy(WG[3], &fc);
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        k.axpy(WGK[j], &f1);
        k.axpy(WGK[j], &f2);
        if j % 2 == 1 {
            g.axpy(WG[j / 2], &f1);
            g.axpy(WG[j / 2], &f2);
        }
    }
    let mut diff = k.clone();
    diff.axpy(-1.0, &g);
    let error = diff.norm() * half.abs();
    let mut value = k.zero_like();
    value.axpy(half, &k);
    Piece { a, b, value, error }
}

/// ∫_a^b f with global adaptive bisection.
pub fn integrate<T: Integrand>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<Quad<T>> {
    let mut pieces = vec![kronrod(&f, a, b)];
    loop {
        let mut total = pieces[0].value.zero_like();
        let mut err = 0.0;
        for p in &pieces {
            total.axpy(1.0, &p.value);
            err += p.error;
        }
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= tol || (err.is_finite() && err == 0.0) {
            return Ok(Quad {
                value: total,
                error: err,
                intervals: pieces.len(),
            });
        }
        if pieces.len() >= opts.max_intervals || !err.is_finite() {
            return Err(Error::Quadrature { estimate: err, tol });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let p = pieces.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        pieces.push(kronrod(&f, p.a, m));
        pieces.push(kronrod(&f, m, p.b));
    }
}

/// ∫_0^{t0} f for integrands with an integrable singularity at 0, through
/// t = e^u on u ∈ [ln t0 - depth, ln t0]. The dropped piece [0, t0 e^{-depth}]
/// must be negligible, which holds for logarithmic singularities.
pub fn integrate_from_singular_origin<T: Integrand>(
    f: impl Fn(f64) -> T,
    t0: f64,
    opts: &QuadOptions,
) -> Result<Quad<T>> {
    const DEPTH: f64 = 60.0;
    let hi = t0.ln();
    integrate(
        |u| {
            let t = u.exp();
            let v = f(t);
            let mut out = v.zero_like();
            out.axpy(t, &v);
            out
        },
        hi - DEPTH,
        hi,
        opts,
    )
}
