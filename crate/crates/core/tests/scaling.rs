use cvbench_core::KernelMatrix;
use std::time::Instant;

#[test]
#[ignore]
fn build_at_scale() {
    for &(trunc, xi) in &[(512usize, 0.25), (1024, 1.0), (2048, 0.25)] {
        let start = Instant::now();
        let k = KernelMatrix::build(trunc, xi).unwrap();
        let elapsed = start.elapsed();
        let diag_last = k.get(trunc, trunc);
        println!("trunc={trunc} xi={xi}: built in {elapsed:?}, G(M,M)={diag_last:.3e}");
        assert!(diag_last.is_finite() && diag_last >= 0.0);
    }
}
