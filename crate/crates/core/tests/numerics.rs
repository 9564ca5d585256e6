use plc_sbl::numerics::{
    dft_matrix, hermitian_solve, max_abs_diff, norm_sqr, sample_circular_gaussian, ComplexMatrix, Dft, SimRng,
    ToeplitzInverse,
};
use plc_sbl::C;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn dft_matrix_is_unitary_for_powers_of_two() {
    for p in 0..=8 {
        let n = 1usize << p;
        let f = dft_matrix::<f64>(n);
        let prod = f.matmul(&f.adjoint()).unwrap();
        assert!(prod.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-12, "n = {n}");
    }
}

#[test]
fn hermitian_solve_residual() {
    let mut rng = SimRng::new(5);
    for i in 0..100 {
        let n = 1 + i % 24;
        let data = sample_circular_gaussian::<f64>(&mut rng, n * n, 1.0).into_inner();
        let a = ComplexMatrix::from_row_major(n, n, data).unwrap();
        // A Aᴴ + n I is Hermitian with eigenvalues ≥ n
        let h = a.matmul(&a.adjoint()).unwrap().add(&ComplexMatrix::identity(n).scale(n as f64)).unwrap();
        let b = ComplexMatrix::from_row_major(n, 2, sample_circular_gaussian::<f64>(&mut rng, 2 * n, 1.0).into_inner())
            .unwrap();
        let x = hermitian_solve(&h, &b).unwrap();
        assert!(h.matmul(&x).unwrap().max_abs_diff(&b) < 1e-10);
    }
}

#[test]
fn toeplitz_inverse_matches_dense_solve() {
    let mut rng = SimRng::new(6);
    for m in [3, 17, 56] {
        // covariance of a random band: σ² + Σ_j γ_j e^{-2πi jd/n}
        let gamma: Vec<f64> = (0..128).map(|_| rng.gen::<f64>()).collect();
        let col: Vec<C<f64>> = (0..m)
            .map(|d| {
                let mut s = C::new(if d == 0 { 0.1 } else { 0.0 }, 0.0);
                for (j, g) in gamma.iter().enumerate() {
                    s += C::from_polar(*g / 128.0, -std::f64::consts::TAU * (j * d) as f64 / 128.0);
                }
                s
            })
            .collect();
        let dense = ComplexMatrix::from_fn(m, m, |i, j| if i >= j { col[i - j] } else { col[j - i].conj() });
        let b = sample_circular_gaussian::<f64>(&mut rng, m, 1.0).into_inner();
        let bm = ComplexMatrix::from_row_major(m, 1, b.clone()).unwrap();
        let want = hermitian_solve(&dense, &bm).unwrap().column(0);
        let got = ToeplitzInverse::factor(&col).unwrap().solve(&b);
        assert!(max_abs_diff(&got, &want) < 1e-9, "m = {m}");
    }
}

proptest! {
    #[test]
    fn parseval(seed in any::<u64>(), p in 0u32..9) {
        let n = 1usize << p;
        let mut rng = SimRng::new(seed);
        let x = sample_circular_gaussian::<f64>(&mut rng, n, 1.0).into_inner();
        let fx = Dft::<f64>::new(n).forward(&x);
        prop_assert!((norm_sqr(&fx).sqrt() - norm_sqr(&x).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn fft_inverts(seed in any::<u64>(), n in 1usize..200) {
        let mut rng = SimRng::new(seed);
        let x = sample_circular_gaussian::<f64>(&mut rng, n, 1.0).into_inner();
        let d = Dft::<f64>::new(n);
        prop_assert!(max_abs_diff(&d.inverse(&d.forward(&x)), &x) < 1e-10);
    }

    #[test]
    fn seeded_streams_are_pure(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let x = sample_circular_gaussian::<f64>(&mut SimRng::derive(seed, &[a, b]), 16, 2.0);
        let y = sample_circular_gaussian::<f64>(&mut SimRng::derive(seed, &[a, b]), 16, 2.0);
        prop_assert_eq!(x, y);
    }

    #[test]
    fn single_precision_dft_tracks_double(seed in any::<u64>()) {
        let mut rng = SimRng::new(seed);
        let x = sample_circular_gaussian::<f64>(&mut rng, 64, 1.0).into_inner();
        let xf: Vec<C<f32>> = x.iter().map(|v| C::new(v.re as f32, v.im as f32)).collect();
        let a = Dft::<f64>::new(64).forward(&x);
        let b = Dft::<f32>::new(64).forward(&xf);
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p.re - q.re as f64).abs() < 1e-4 && (p.im - q.im as f64).abs() < 1e-4);
        }
    }
}
