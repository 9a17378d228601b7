//! Debug probe for the principal-value oracle pieces.

use fraclab::operator::{pointwise_fraclap, FracOrder};
use fraclab::quad;

fn main() {
    let s = 0.5f64;
    let x = -0.52f64;
    let u = move |y: f64| (1.0 - y * y).max(0.0).powf(s);
    let ux = u(x);
    let reach = (x + 1.0f64).abs().max((x - 1.0f64).abs());
    println!("reach={reach} u(x)={ux}");
    let integrand = move |r: f64| (2.0 * ux - u(x + r) - u(x - r)) * r.powf(-1.0 - 2.0 * s);
    let eps = 1e-2 * reach;
    let (bulk, err) = quad::integrate(integrand, eps, reach, 1e-9);
    println!("bulk[{eps},{reach}] = {bulk} (err {err:.3e})");
    let tail = 2.0 * ux * reach.powf(-2.0 * s) / (2.0 * s);
    println!("tail = {tail}");
    // replicate the ring loop exactly, tracing every iteration
    let mut value = bulk + tail;
    let mut e = eps;
    let ring_decay = (2.0f64).powf(2.0 * s - 2.0);
    for iter in 0..200 {
        let (ring, _) = quad::integrate(integrand, 0.5 * e, e, 1e-9);
        value += ring;
        e *= 0.5;
        let remaining = ring.abs() * ring_decay / (1.0 - ring_decay);
        println!("iter {iter}: eps={e:.3e} ring={ring:.6e} value={value:.9}");
        if remaining <= 0.5e-8 * value.abs().max(1.0) || ring.abs() < 1e-60 {
            break;
        }
    }
    let v = pointwise_fraclap(u, (-1.0, 1.0), x, FracOrder::new(s).unwrap(), 1e-8).unwrap();
    println!("oracle = {v}");
    // direct call with an explicitly non-capturing function
    fn u2(y: f64) -> f64 {
        (1.0 - y * y).max(0.0).sqrt()
    }
    let v2 = pointwise_fraclap(u2, (-1.0, 1.0), -0.52, FracOrder::new(0.5).unwrap(), 1e-8).unwrap();
    println!("oracle fn-ptr = {v2}");
    let v3 = pointwise_fraclap(u2, (-1.0, 1.0), 0.37, FracOrder::new(0.5).unwrap(), 1e-8).unwrap();
    println!("oracle fn-ptr x=0.37 = {v3}");
}
