//! Finite-difference reference for `G⁻(η)f`.
//!
//! The fluid below the interface is mapped to `[0,L) × [-Z,0]` by the linear
//! flattening `y = ϱ(x,z) = z + η(x)(1 + z/Z)`, which keeps the bottom flat.
//! The Laplace equation in divergence form becomes
//!
//! ```text
//! A v_xx + 2B v_xz + C v_zz + (B_x + C_z) v_z = 0,
//! A = ϱ_z,  B = -ϱ_x,  C = (1 + ϱ_x²)/ϱ_z
//! ```
//!
//! discretized with second-order central differences and solved by block
//! Thomas elimination in z. The bottom row carries either the exact
//! half-plane condition `v_z = ϱ_z |D| v` (bottomless) or `v_z = 0` (flat wall).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::Geometry;
use crate::spectral::{Field, PeriodicGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("singular block in the finite-difference system at level {0}")]
    Singular(usize),
    #[error("flattening degenerates: min(1 + η/Z) = {0}")]
    Degenerate(f64),
    #[error("resolution too small: nx = {nx}, nz = {nz}")]
    Resolution { nx: usize, nz: usize },
}

/// Points in x and intervals in z.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleResolution {
    pub nx: usize,
    pub nz: usize,
}

fn circulant(n: usize, stencil: &[(isize, f64)]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for &(off, c) in stencil {
            let j = (i as isize + off).rem_euclid(n as isize) as usize;
            m[(i, j)] += c;
        }
    }
    m
}

/// Dense matrix of the Fourier multiplier `|D|` on the grid.
fn abs_d_matrix(grid: &PeriodicGrid) -> DMatrix<f64> {
    let n = grid.n();
    let col: Vec<f64> = (0..n)
        .map(|d| {
            (0..n)
                .map(|s| {
                    let k = grid.wavenumber(s);
                    k.abs() * (k * grid.node(d)).cos()
                })
                .sum::<f64>()
                / n as f64
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| col[(i + n - j) % n])
}

fn diag_times(d: &[f64], m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, &s) in d.iter().enumerate() {
        out.row_mut(i).scale_mut(s);
    }
    out
}

/// `G⁻(η)f` on an `nx`-point grid with `nz` vertical intervals.
pub fn oracle_dn(eta: &Field, f: &Field, geometry: Geometry, res: OracleResolution) -> Result<Field, OracleError> {
    let OracleResolution { nx, nz } = res;
    if nz < 2 || nx < 8 {
        return Err(OracleError::Resolution { nx, nz });
    }
    let eta = eta.resampled(nx).map_err(|_| OracleError::Resolution { nx, nz })?;
    let f = f.resampled(nx).map_err(|_| OracleError::Resolution { nx, nz })?;
    let grid = *eta.grid();
    let depth = match geometry {
        Geometry::Bottomless => grid.length() / (2.0 * std::f64::consts::PI),
        Geometry::Flat { depth } => depth,
    };
    let a: Vec<f64> = eta.values().iter().map(|e| 1.0 + e / depth).collect();
    let min_a = a.iter().copied().fold(f64::INFINITY, f64::min);
    if min_a < 0.1 {
        return Err(OracleError::Degenerate(min_a));
    }
    let eta_x = eta.derivative(1);
    let eta_xx = eta.derivative(2);
    let hx = grid.dx();
    let hz = depth / nz as f64;
    let dxx = circulant(nx, &[(-1, 1.0 / (hx * hx)), (0, -2.0 / (hx * hx)), (1, 1.0 / (hx * hx))]);
    let dx = circulant(nx, &[(-1, -0.5 / hx), (1, 0.5 / hx)]);
    let a_dxx = diag_times(&a, &dxx);

    // coefficient rows at level j (z = -Z + j hz)
    let coeffs = |j: usize| {
        let s = 1.0 + (-depth + j as f64 * hz) / depth;
        let mut b = vec![0.0; nx];
        let mut c = vec![0.0; nx];
        let mut e = vec![0.0; nx];
        for i in 0..nx {
            let rx = eta_x.values()[i] * s;
            b[i] = -rx;
            c[i] = (1.0 + rx * rx) / a[i];
            e[i] = -eta_xx.values()[i] * s + 2.0 * rx * (eta_x.values()[i] / depth) / a[i];
        }
        (b, c, e)
    };

    let mut lower = Vec::with_capacity(nz);
    let mut diag = Vec::with_capacity(nz);
    let mut upper = Vec::with_capacity(nz);
    {
        let (_, c, _) = coeffs(0);
        let mut d0 = a_dxx.clone();
        for i in 0..nx {
            d0[(i, i)] -= 2.0 * c[i] / (hz * hz);
        }
        if geometry == Geometry::Bottomless {
            d0 -= abs_d_matrix(&grid) * (2.0 / hz);
        }
        let mut u0 = DMatrix::zeros(nx, nx);
        for i in 0..nx {
            u0[(i, i)] = 2.0 * c[i] / (hz * hz);
        }
        lower.push(DMatrix::zeros(nx, nx));
        diag.push(d0);
        upper.push(u0);
    }
    for j in 1..nz {
        let (b, c, e) = coeffs(j);
        let bdx = diag_times(&b, &dx) / hz;
        let mut l = -bdx.clone();
        let mut d = a_dxx.clone();
        let mut u = bdx;
        for i in 0..nx {
            l[(i, i)] += c[i] / (hz * hz) - e[i] / (2.0 * hz);
            d[(i, i)] -= 2.0 * c[i] / (hz * hz);
            u[(i, i)] += c[i] / (hz * hz) + e[i] / (2.0 * hz);
        }
        lower.push(l);
        diag.push(d);
        upper.push(u);
    }
    let fv = DVector::from_column_slice(f.values());
    let mut rhs: Vec<DVector<f64>> = vec![DVector::zeros(nx); nz];
    rhs[nz - 1] = -(&upper[nz - 1] * &fv);

    // block Thomas elimination
    let mut c_hat: Vec<DMatrix<f64>> = Vec::with_capacity(nz);
    let mut d_hat: Vec<DVector<f64>> = Vec::with_capacity(nz);
    for j in 0..nz {
        let (m, r) = if j == 0 {
            (diag[0].clone(), rhs[0].clone())
        } else {
            (
                &diag[j] - &lower[j] * &c_hat[j - 1],
                &rhs[j] - &lower[j] * &d_hat[j - 1],
            )
        };
        let lu = m.lu();
        let ch = if j + 1 < nz {
            lu.solve(&upper[j]).ok_or(OracleError::Singular(j))?
        } else {
            DMatrix::zeros(nx, nx)
        };
        let dh = lu.solve(&r).ok_or(OracleError::Singular(j))?;
        c_hat.push(ch);
        d_hat.push(dh);
    }
    let mut v = vec![DVector::zeros(nx); nz];
    v[nz - 1] = d_hat[nz - 1].clone();
    for j in (0..nz - 1).rev() {
        v[j] = &d_hat[j] - &c_hat[j] * &v[j + 1];
    }

    let vx = &dx * &fv;
    let values = (0..nx)
        .map(|i| {
            let vz = (3.0 * fv[i] - 4.0 * v[nz - 1][i] + v[nz - 2][i]) / (2.0 * hz);
            let ex = eta_x.values()[i];
            (1.0 + ex * ex) * vz / a[i] - ex * vx[i]
        })
        .collect();
    Ok(Field::new(grid, values).expect("grid length"))
}

/// Richardson extrapolation `(4 G_{2nx,2nz} - G_{nx,nz}) / 3` on the coarse grid.
pub fn oracle_dn_richardson(eta: &Field, f: &Field, geometry: Geometry, coarse: OracleResolution) -> Result<Field, OracleError> {
    let fine = OracleResolution {
        nx: 2 * coarse.nx,
        nz: 2 * coarse.nz,
    };
    let (gc, gf) = rayon::join(
        || oracle_dn(eta, f, geometry, coarse),
        || oracle_dn(eta, f, geometry, fine),
    );
    let (gc, gf) = (gc?, gf?);
    let values = gc
        .values()
        .iter()
        .enumerate()
        .map(|(j, c)| (4.0 * gf.values()[2 * j] - c) / 3.0)
        .collect();
    Ok(Field::new(*gc.grid(), values).expect("grid length"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(a: &Field, b: &Field) -> f64 {
        (a - b).max_abs()
    }

    #[test]
    fn flat_bottomless_converges_at_second_order() {
        let g = PeriodicGrid::standard(32).unwrap();
        let f = g.sample(f64::cos);
        let e1 = err(&oracle_dn(&g.zeros(), &f, Geometry::Bottomless, OracleResolution { nx: 32, nz: 16 }).unwrap(), &f);
        let e2 = err(
            &oracle_dn(&g.zeros(), &f, Geometry::Bottomless, OracleResolution { nx: 64, nz: 32 })
                .unwrap()
                .resampled(32)
                .unwrap(),
            &f,
        );
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn richardson_on_flat_strip_gains_order() {
        let g = PeriodicGrid::standard(32).unwrap();
        let f = g.sample(f64::cos);
        let exact = f.scaled(1.0f64.tanh());
        let geom = Geometry::Flat { depth: 1.0 };
        let e1 = err(&oracle_dn_richardson(&g.zeros(), &f, geom, OracleResolution { nx: 16, nz: 8 }).unwrap(), &exact.resampled(16).unwrap());
        let e2 = err(&oracle_dn_richardson(&g.zeros(), &f, geom, OracleResolution { nx: 32, nz: 16 }).unwrap(), &exact);
        assert!(e2 < 2e-5);
        // the one-sided flux stencil leaves an O(h³) term after extrapolation
        assert!((e1 / e2).log2() > 2.8, "{e1} {e2}");
    }

    #[test]
    fn abs_d_matrix_matches_multiplier() {
        let g = PeriodicGrid::new(16, 3.0).unwrap();
        let f = g.sample(|x| (2.0 * std::f64::consts::PI * x / 3.0).sin() + 0.2);
        let m = abs_d_matrix(&g);
        let out = m * DVector::from_column_slice(f.values());
        let expected = f.abs_d();
        for i in 0..16 {
            assert!((out[i] - expected.values()[i]).abs() < 1e-12);
        }
    }
}
