//! Isolate the adaptive integrator on closed-form integrands.

use fraclab::quad;

fn main() {
    let h = 1.0f64 / 13.0;
    let s = 0.6f64;
    let rho1 = |r: f64| {
        let a = r.abs();
        if a < 1.0 {
            2.0 / 3.0 - a * a + a * a * a / 2.0
        } else if a < 2.0 {
            (2.0 - a).powi(3) / 6.0
        } else {
            0.0
        }
    };
    let rho = |r: f64| h * rho1(r / h);
    let f = |z: f64| (2.0 * rho(z) - 2.0 * rho(0.0)) * z.powf(-1.0 - 2.0 * s);
    let (v, e) = quad::integrate(f, 1e-6, 4.0 * h, 1e-10);
    println!("outer [1e-6, 4h] = {v:.10} (err {e:.2e}); scipy reference -4.6528760265");
    // plain power integral with a known antiderivative
    let (p, pe) = quad::integrate(|z: f64| z.powf(-0.2), 1e-6, 0.3, 1e-12);
    let exact = (0.3f64.powf(0.8) - 1e-6f64.powf(0.8)) / 0.8;
    println!("power integral = {p:.12} vs exact {exact:.12} (err est {pe:.2e})");
    // smooth oscillatory
    let (o, oe) = quad::integrate(|z: f64| (40.0 * z).sin(), 0.0, 1.0, 1e-12);
    let oexact = (1.0 - (40.0f64).cos()) / 40.0;
    println!("oscillatory = {o:.12} vs exact {oexact:.12} (err est {oe:.2e})");
}
