use qot_core::qubit::*;
use qot_core::rng;

fn main() {
    for n in [2usize, 3, 4] {
        let sys = QubitSystem::new(n).unwrap();
        let mut worst_gap = 0.0f64;
        let t = std::time::Instant::now();
        let trials = 10;
        for trial in 0..trials {
            let mut r = rng::stream(99, trial);
            let x = rng::gue(&mut r, 1 << n);
            let rep = qubit_lipschitz(&x, sys).unwrap();
            worst_gap = worst_gap.max(rep.max_gap());
        }
        println!("n={n}: {:?}/call worst_gap={worst_gap:.2e}", t.elapsed() / trials as u32);
    }
}
