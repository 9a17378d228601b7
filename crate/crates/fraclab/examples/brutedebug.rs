//! Debug probe for the brute-force correlation route of one stiffness entry.

use fraclab::operator::{normalization_constant, FracOrder};
use fraclab::quad;

fn main() {
    let h = 1.0f64 / 13.0;
    let s = 0.6f64;
    let x0 = h; // node 0 of the n=12 mesh on (0,1)
    let hat = move |x: f64| (1.0 - (x - x0).abs() / h).max(0.0);
    let rho1 = |r: f64| {
        let a: f64 = r.abs();
        if a < 1.0 {
            2.0 / 3.0 - a * a + a * a * a / 2.0
        } else if a < 2.0 {
            (2.0 - a).powi(3) / 6.0
        } else {
            0.0
        }
    };
    {
        let corr = |r: f64| {
            quad::integrate(|x| hat(x) * hat(x + r), -3.0 * h, 1.0 + 3.0 * h, 1e-12).0
        };
        let mut worst = (0.0f64, 0.0f64);
        for k in 0..80 {
            let z = 2.0 * h * (k as f64 + 0.3) / 40.0;
            let d = (corr(z) - h * rho1(z / h)).abs();
            if d > worst.0 {
                worst = (d, z);
            }
        }
        println!("worst |corr - rho| = {:.3e} at z = {:.5} (z/h = {:.3})", worst.0, worst.1, worst.1 / h);
    }
    for inner_tol in [1e-11f64, 1e-13] {
        let corr = |r: f64| {
            quad::integrate(|x| hat(x) * hat(x + r), -3.0 * h, 1.0 + 3.0 * h, inner_tol).0
        };
        let c0 = corr(0.0);
        println!("inner_tol={inner_tol:.0e}: corr(0)={c0:.15} exact={:.15}", 2.0 * h / 3.0);
        let f = |z: f64| (corr(z) + corr(-z) - 2.0 * c0) * z.powf(-1.0 - 2.0 * s);
        for outer_tol in [1e-9f64, 1e-10] {
            let cut = 4.0 * h;
            let (val, err) = quad::integrate(f, 1e-6, cut, outer_tol);
            let total = val - 2.0 * c0 * cut.powf(-2.0 * s) / (2.0 * s);
            let brute = -normalization_constant(FracOrder::new(s).unwrap(), 1) * total;
            println!("  outer_tol={outer_tol:.0e}: val={val:.10} err_est={err:.3e} brute={brute:.10}");
        }
    }
}
