//! Search for theta-block pairs whose weak weight-0 quotient has nonnegative
//! Humbert multiplicities. Usage: `cargo run --release --example case2_search [index]`.

use paramodular::field::{Field, PrimeField, Rat};
use paramodular::jacobi::JacobiFormFragment;
use paramodular::series::QDEN;
use paramodular::theta::{for_each_square_partition, search, ThetaBlock, ThetaQuotient};
use paramodular::weak::v2_quotient;
use std::time::Instant;

const P: u64 = 2147483647;

/// Multiplicities of the Humbert surfaces of discriminant `r^2 - 4nm`.
fn mults(f: &JacobiFormFragment<PrimeField>, fp: &PrimeField) -> Vec<i64> {
    let m = f.index();
    let mut out = Vec::new();
    for n in 0..=(m / 4) {
        for r in 0..=m {
            let d = 4 * n * m - r * r;
            if d >= 0 {
                continue;
            }
            let mut s = 0u64;
            let mut k = 1i64;
            while k * k * (-d) <= m * m {
                s = fp.add(&s, &f.coeff(k * k * n, k * r).unwrap());
                k += 1;
            }
            out.push(fp.lift_symmetric(s));
        }
    }
    out
}

fn main() {
    let m: i64 = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(277);
    let fp = PrimeField::new(P).unwrap();
    let nm = m / 4;
    let t = Instant::now();
    let phis: Vec<ThetaBlock> = search(2, m, 10).unwrap().into_iter().filter(|b| b.min_order() > Rat::zero()).collect();
    println!("{} cusp blocks", phis.len());
    let mut good = Vec::new();
    for phi in &phis {
        let q0 = v2_quotient(fp.clone(), phi, 0).unwrap();
        let c00 = fp.lift_symmetric(q0.coeff(0, 0).unwrap());
        if c00 == -4 {
            let a = v2_quotient(fp.clone(), phi, nm).unwrap();
            good.push((phi.clone(), mults(&a, &fp)));
        }
    }
    println!("{} with c00=-4 in {:?}", good.len(), t.elapsed());
    let mut fs = Vec::new();
    for_each_square_partition(2 * m, 12, 1, |p| fs.push(p.to_vec()));
    println!("{} multisets", fs.len());
    for (i, f) in fs.iter().enumerate() {
        let q = ThetaQuotient::new(-12, f.iter().map(|&d| (d, 1)));
        let s = q.expand(fp.clone(), QDEN * nm).unwrap();
        let b = JacobiFormFragment::from_series(&s, 0, m).unwrap();
        let mb = mults(&b, &fp);
        for (phi, ma) in &good {
            // psi = -A - B
            if ma.iter().zip(&mb).all(|(x, y)| -x - y >= 0) {
                let big = ThetaBlock::new(-18, phi.thetas().iter().chain(f.iter()).copied().collect()).unwrap();
                println!("HIT phi={phi} f={f:?} Theta={big} cusp={}", big.min_order() > Rat::zero());
            }
        }
        if i % 200 == 0 {
            eprintln!("{i}/{} {:?}", fs.len(), t.elapsed());
        }
    }
}
