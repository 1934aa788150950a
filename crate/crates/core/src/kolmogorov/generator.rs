use crate::error::{invalid, Error, Result};
use crate::grid::Grid1D;
use crate::sde::SdeModel;

use super::DensityField;

/// `(𝓛φ)(x_i) = f φ' + ½ D φ''` with central differences, `D = g²`.
pub fn apply_generator(model: &SdeModel, phi: &[f64], grid: &Grid1D, at: usize) -> Result<f64> {
    model.require_scalar()?;
    check(phi.len(), grid, at)?;
    let x = grid.x(at);
    let dx = grid.dx();
    let d1 = (phi[at + 1] - phi[at - 1]) / (2.0 * dx);
    let d2 = (phi[at + 1] - 2.0 * phi[at] + phi[at - 1]) / (dx * dx);
    Ok(model.f1(x) * d1 + 0.5 * model.d1(x) * d2)
}

/// `(𝓛†ρ)(x_i) = ½ (Dρ)'' - (fρ)'` with central differences.
pub fn apply_adjoint_generator(model: &SdeModel, rho: &DensityField, at: usize) -> Result<f64> {
    model.require_scalar()?;
    let grid = &rho.grid;
    check(rho.values.len(), grid, at)?;
    let dx = grid.dx();
    let (xm, x, xp) = (grid.x(at - 1), grid.x(at), grid.x(at + 1));
    let r = &rho.values;
    let second = (model.d1(xp) * r[at + 1] - 2.0 * model.d1(x) * r[at] + model.d1(xm) * r[at - 1]) / (dx * dx);
    let first = (model.f1(xp) * r[at + 1] - model.f1(xm) * r[at - 1]) / (2.0 * dx);
    Ok(0.5 * second - first)
}

/// Pointwise generator in any dimension, `Σ f_i ∂_iφ + ½ Σ D_ij ∂_i∂_jφ`,
/// with central differences of step `step`.
pub fn apply_generator_nd(model: &SdeModel, phi: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Result<f64> {
    let n = model.dim;
    if x.len() != n {
        return Err(invalid("point has the wrong dimension"));
    }
    let f = model.drift(x);
    let d = model.diffusion_matrix(x);
    let mut y = x.to_vec();
    let phi0 = phi(x);
    let mut total = 0.0;
    for i in 0..n {
        y[i] = x[i] + step;
        let p = phi(&y);
        y[i] = x[i] - step;
        let m = phi(&y);
        y[i] = x[i];
        total += f[i] * (p - m) / (2.0 * step);
        total += 0.5 * d[i * n + i] * (p - 2.0 * phi0 + m) / (step * step);
        for j in (i + 1)..n {
            if d[i * n + j] == 0.0 {
                continue;
            }
            let mut eval = |si: f64, sj: f64| {
                y[i] = x[i] + si * step;
                y[j] = x[j] + sj * step;
                let v = phi(&y);
                y[i] = x[i];
                y[j] = x[j];
                v
            };
            let mixed = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * step * step);
            // off-diagonal pair counted twice in Σ_ij
            total += d[i * n + j] * mixed;
        }
    }
    Ok(total)
}

fn check(len: usize, grid: &Grid1D, at: usize) -> Result<()> {
    if len != grid.n_nodes() {
        return Err(invalid("grid function length does not match the grid"));
    }
    if !grid.is_interior(at) {
        return Err(Error::BoundaryNode(at));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::Potential;

    #[test]
    fn bm_on_square() {
        let g = Grid1D::new(-2.0, 2.0, 40).unwrap();
        let phi = g.sample(|x| x * x);
        let m = SdeModel::brownian(1);
        for i in 1..40 {
            assert!((apply_generator(&m, &phi, &g, i).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(apply_generator(&m, &phi, &g, 0), Err(Error::BoundaryNode(0))));
        assert!(matches!(
            apply_generator(&m, &phi, &g, 40),
            Err(Error::BoundaryNode(40))
        ));
    }

    #[test]
    fn ou_on_square() {
        let g = Grid1D::new(-2.0, 2.0, 40).unwrap();
        let phi = g.sample(|x| x * x);
        let m = SdeModel::ornstein_uhlenbeck();
        for i in 1..40 {
            let x = g.x(i);
            assert!((apply_generator(&m, &phi, &g, i).unwrap() - (1.0 - 2.0 * x * x)).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_generator_matches_symbolic_derivatives() {
        // U = x²/2, f = -x, D = 2: 𝓛 e^{-U} = -x(-x e^{-U}) + (x² - 1) e^{-U} = (2x² - 1) e^{-U}
        let m = SdeModel::gradient(Potential::quadratic(), 1);
        for dx_cells in [100usize, 200] {
            let g = Grid1D::new(-3.0, 3.0, dx_cells).unwrap();
            let phi = g.sample(|x| (-0.5 * x * x).exp());
            let err = (1..dx_cells)
                .map(|i| {
                    let x = g.x(i);
                    let exact = (2.0 * x * x - 1.0) * (-0.5 * x * x).exp();
                    (apply_generator(&m, &phi, &g, i).unwrap() - exact).abs()
                })
                .fold(0.0, f64::max);
            assert!(err < 2.0 * g.dx() * g.dx(), "err {err}");
        }
    }

    #[test]
    fn ou_gaussian_is_annihilated_by_adjoint() {
        let m = SdeModel::ornstein_uhlenbeck();
        for n in [200usize, 400] {
            let g = Grid1D::new(-5.0, 5.0, n).unwrap();
            let rho = DensityField::from_fn(g, |x| (-x * x).exp() / std::f64::consts::PI.sqrt());
            let err = (1..n)
                .map(|i| apply_adjoint_generator(&m, &rho, i).unwrap().abs())
                .fold(0.0, f64::max);
            assert!(err < 2.0 * g.dx() * g.dx(), "n={n} err {err}");
        }
        let g = Grid1D::new(-1.0, 1.0, 10).unwrap();
        let flat = DensityField::from_fn(g, |_| 0.5);
        let bm = SdeModel::brownian(1);
        for i in 1..10 {
            assert_eq!(apply_adjoint_generator(&bm, &flat, i).unwrap(), 0.0);
        }
    }

    #[test]
    fn discrete_duality() {
        // ⟨𝓛φ, ψ⟩ = ⟨φ, 𝓛†ψ⟩ for functions vanishing near the ends.
        let m = SdeModel::scalar("test", |x| -x + 0.3 * x.sin(), |x| 1.0 + 0.2 * x.cos());
        let g = Grid1D::new(-4.0, 4.0, 199).unwrap();
        let bump = |c: f64, s: f64| move |x: f64| (-(x - c) * (x - c) / (2.0 * s * s)).exp();
        let phi = g.sample(bump(0.3, 0.5));
        let psi = DensityField::from_fn(g, bump(-0.2, 0.6));
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for i in 1..199 {
            lhs += apply_generator(&m, &phi, &g, i).unwrap() * psi.values[i];
            rhs += phi[i] * apply_adjoint_generator(&m, &psi, i).unwrap();
        }
        assert!((lhs - rhs).abs() * g.dx() < 10.0 * g.dx() * g.dx(), "{lhs} vs {rhs}");
    }

    #[test]
    fn nd_generator_matches_1d_and_handles_cross_terms() {
        let m = SdeModel::ornstein_uhlenbeck();
        let v = apply_generator_nd(&m, |x| x[0] * x[0], &[0.7], 1e-4).unwrap();
        assert!((v - (1.0 - 2.0 * 0.49)).abs() < 1e-6);
        // correlated noise: g = [[1,0],[1,1]], D = [[1,1],[1,2]]; φ = xy → 𝓛φ = D_12 = 1
        let corr = SdeModel::new(
            "corr",
            2,
            2,
            |_, out| out.fill(0.0),
            |_, out| out.copy_from_slice(&[1.0, 0.0, 1.0, 1.0]),
        )
        .unwrap();
        let v = apply_generator_nd(&corr, |x| x[0] * x[1], &[0.3, -0.4], 1e-3).unwrap();
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }
}
