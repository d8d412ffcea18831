use qot_core::qubit::*;
use qot_core::rng;

fn main() {
    let n = 3usize;
    let sys = QubitSystem::new(n).unwrap();
    for trial in 0..4u64 {
        let mut r = rng::stream(99, trial);
        let x = rng::gue(&mut r, 1 << n);
        let rep = qubit_lipschitz(&x, sys).unwrap();
        print!("TRIAL {trial} RE ");
        for v in x.iter() { print!("{:.17e} ", v.re); }
        print!("IM ");
        for v in x.iter() { print!("{:.17e} ", v.im); }
        println!();
        for (i, b) in rep.per_site.iter().enumerate() {
            println!("  site {i}: lo={:.9} hi={:.9} gap={:.3e}", b.lo, b.hi, b.hi - b.lo);
        }
    }
}
