//! Dense-grid oracle for the two-qubit covariance sup.

#![allow(clippy::needless_range_loop)]

use gibbslab::algebra::dense::c;
use gibbslab::{Mat, C64};

/// Trace norm of a 2×2 matrix: sqrt(‖M‖_F² + 2|det M|).
fn trace_norm_2x2(m: &[[C64; 2]; 2]) -> f64 {
    let fro: f64 = m.iter().flatten().map(|z| z.norm_sqr()).sum();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    (fro + 2.0 * det).sqrt()
}

/// a0·1 + i(a1 X + a2 Y + a3 Z) with a on the 3-sphere in hyperspherical angles.
fn su2(angles: [f64; 3]) -> [[C64; 2]; 2] {
    let [p, t, f] = angles;
    let a0 = p.cos();
    let a1 = p.sin() * t.cos();
    let a2 = p.sin() * t.sin() * f.cos();
    let a3 = p.sin() * t.sin() * f.sin();
    [[c(a0, a3), c(a2, a1)], [c(-a2, a1), c(a0, -a3)]]
}

/// sup over unit-norm A, B on one qubit each of |Tr C (A ⊗ B)|, C = ρ - ρ₁⊗ρ₂.
/// The inner sup over B is exact; A runs over SU(2) (the phase drops out),
/// first on a grid and then by compass search around the best grid points.
pub fn grid_oracle(rho: &Mat) -> f64 {
    let idx = |i: usize, j: usize| 2 * i + j;
    let mut r1 = [[C64::new(0.0, 0.0); 2]; 2];
    let mut r2 = [[C64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for k in 0..2 {
                r1[a][b] += rho[[idx(a, k), idx(b, k)]];
                r2[a][b] += rho[[idx(k, a), idx(k, b)]];
            }
        }
    }
    let cmat =
        |i: usize, j: usize, k: usize, l: usize| rho[[idx(i, j), idx(k, l)]] - r1[i][k] * r2[j][l];
    let value = |ang: [f64; 3]| {
        let u = su2(ang);
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for j in 0..2 {
            for l in 0..2 {
                for i in 0..2 {
                    for k in 0..2 {
                        m[j][l] += cmat(i, j, k, l) * u[k][i];
                    }
                }
            }
        }
        trace_norm_2x2(&m)
    };
    let n = 40;
    let mut pts: Vec<(f64, [f64; 3])> = Vec::new();
    for a in 0..=n {
        for b in 0..=n {
            for f in 0..2 * n {
                let ang = [
                    std::f64::consts::PI * a as f64 / n as f64,
                    std::f64::consts::PI * b as f64 / n as f64,
                    std::f64::consts::PI * f as f64 / n as f64,
                ];
                pts.push((value(ang), ang));
            }
        }
    }
    pts.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut best: f64 = 0.0;
    for &(mut v, mut ang) in pts.iter().take(6) {
        let mut step = std::f64::consts::PI / n as f64;
        while step > 1e-10 {
            let mut moved = false;
            for d in 0..3 {
                for sgn in [1.0, -1.0] {
                    let mut trial = ang;
                    trial[d] += sgn * step;
                    let tv = value(trial);
                    if tv > v {
                        (v, ang, moved) = (tv, trial, true);
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best = best.max(v);
    }
    best
}
