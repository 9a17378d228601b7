//! Timing probe for assembly + eigensolve at several mesh sizes.

use fraclab::operator::{assemble_operator, FracOrder, IntervalDomain, Mesh};
use fraclab::spectral::SpectralModel;

fn main() {
    for n in [256usize, 512, 1024] {
        let t0 = std::time::Instant::now();
        let domain = IntervalDomain::new(0.0, 1.0).unwrap();
        let mesh = Mesh::uniform(domain, n).unwrap();
        let op = assemble_operator(domain, &mesh, FracOrder::new(0.75).unwrap()).unwrap();
        let t1 = std::time::Instant::now();
        let md = SpectralModel::build(&op, 16, 4).unwrap();
        println!(
            "n={n}: assemble {:?} eigensolve {:?} lam1={:.6}",
            t1 - t0,
            t1.elapsed(),
            md.lambda()[0]
        );
    }
}
