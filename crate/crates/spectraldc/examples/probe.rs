//! Scratch probe (deleted before finishing).
use spectraldc::jacobi::jacobi_svd;
use spectraldc::kernels::mul;
use spectraldc::ledger::CostLedger;
use spectraldc::matrix::{Matrix, Norm};
use spectraldc::random::haar_orthogonal;
use spectraldc::randurv::rurv;

fn main() {
    let what = std::env::args().nth(1).unwrap_or_default();
    match what.as_str() {
        "rrr" => rrr_stats(),
        "rrr2" => rrr_check(),
        "svdflops" => svd_flops(),
        "axis" => axis_distances(),
        "conv" => convergence_pair(),
        "time" => timings(),
        "convi" => conv_instrumented(),
        _ => println!("rrr | rrr2 | svdflops | axis | conv"),
    }
}

fn rrr_check() {
    // Recalibrated constants on fresh seeds.
    let n = 64;
    let r = 32;
    let ledger = CostLedger::noop();
    let sig: Vec<f64> = (0..n).map(|i| if i < r { 1.0 } else { 1e-8 }).collect();
    let (mut ok_a, mut ok_b, mut ok_c) = (0, 0, 0);
    let bound_a = 1.0 / (80.0 * ((r * (n - r)) as f64).sqrt());
    let bound_b = 1e-8 * 10.0 * ((r * r * (n - r) * (n - r)) as f64);
    let bound_c = 250.0 * ((r * (n - r)) as f64).sqrt();
    for s in 0..200u64 {
        let p: Matrix<f64> = haar_orthogonal(n, 100000 + 3 * s, &ledger);
        let q: Matrix<f64> = haar_orthogonal(n, 200000 + 7 * s, &ledger);
        let a = mul(&mul(&p, &Matrix::diagonal(&sig)), &q.transpose());
        let f = rurv(&a, 31337 + s, &ledger).unwrap();
        let r11 = f.triangular.block(0..r, 0..r);
        let r12 = f.triangular.block(0..r, r..n);
        let r22 = f.triangular.block(r..n, r..n);
        let (s11, _, _) = jacobi_svd(&r11).unwrap();
        let (s22, _, _) = jacobi_svd(&r22).unwrap();
        let x = spectraldc::kernels::trsm(&r11, &r12, &ledger).unwrap();
        let (sx, _, _) = jacobi_svd(&x).unwrap();
        if s11.last().copied().unwrap() >= bound_a { ok_a += 1; }
        if s22.first().copied().unwrap() <= bound_b { ok_b += 1; }
        if sx.first().copied().unwrap() <= bound_c { ok_c += 1; }
    }
    println!("fresh-seed pass rates: a {ok_a}/200, b {ok_b}/200, c {ok_c}/200");
}

fn axis_distances() {
    use spectraldc::experiment::{generate, Generator};
    for n in [100usize, 300] {
        for seed in 0..12u64 {
            let g = generate(&Generator::NormalRandomSpectrum { n, half_width: 1.5 }, seed).unwrap();
            let d = g.spectrum.iter().map(|z| z.re.abs()).fold(f64::MAX, f64::min);
            println!("n={n} seed={seed}: axis distance {d:.4e}");
        }
    }
}

fn convergence_pair() {
    use spectraldc::experiment::{run_experiment, ExperimentSpec};
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args[2].parse().unwrap();
    let seed: u64 = args[3].parse().unwrap();
    let text = format!("name = \"c\"\nalgorithm = \"rnep\"\ngenerator = \"normal_random_spectrum\"\nn = {n}\nseed = {seed}\nmaxit = 30\n");
    let spec = ExperimentSpec::parse(&text).unwrap();
    let run = run_experiment(&spec).unwrap();
    println!("n={n} seed={seed}: converged_at {:?} final {:.3e}", run.converged_at, run.final_error);
}

fn rrr_stats() {
    // n=64, r=32, sigma_1..r = 1, rest 1e-8; 200 seeds.
    let n = 64;
    let r = 32;
    let ledger = CostLedger::noop();
    let sig: Vec<f64> = (0..n).map(|i| if i < r { 1.0 } else { 1e-8 }).collect();
    let (mut ok_a, mut ok_b, mut ok_c) = (0, 0, 0);
    let bound_a = 1.0 / (10.0 * ((r * (n - r)) as f64).sqrt());
    let bound_b = 1e-8 * 10.0 * ((r * r * (n - r) * (n - r)) as f64);
    let bound_c = 10.0 * ((r * (n - r)) as f64).sqrt();
    let mut min_a = f64::MAX; let mut max_b: f64 = 0.0; let mut max_c: f64 = 0.0;
    let mut all_a: Vec<f64> = vec![]; let mut all_c: Vec<f64> = vec![];
    for seed in 0..200u64 {
        let p: Matrix<f64> = haar_orthogonal(n, 7000 + seed, &ledger);
        let q: Matrix<f64> = haar_orthogonal(n, 9000 + seed, &ledger);
        let a = mul(&mul(&p, &Matrix::diagonal(&sig)), &q.transpose());
        let f = rurv(&a, seed, &ledger).unwrap();
        let r11 = f.triangular.block(0..r, 0..r);
        let r12 = f.triangular.block(0..r, r..n);
        let r22 = f.triangular.block(r..n, r..n);
        let (s11, _, _) = jacobi_svd(&r11).unwrap();
        let smin11 = s11.last().copied().unwrap();
        let (s22, _, _) = jacobi_svd(&r22).unwrap();
        let smax22 = s22.first().copied().unwrap();
        let x = spectraldc::kernels::trsm(&r11, &r12, &ledger).unwrap();
        let (sx, _, _) = jacobi_svd(&x).unwrap();
        let nrm_x = sx.first().copied().unwrap();
        if smin11 >= bound_a { ok_a += 1; }
        if smax22 <= bound_b { ok_b += 1; }
        if nrm_x <= bound_c { ok_c += 1; }
        min_a = min_a.min(smin11); max_b = max_b.max(smax22); max_c = max_c.max(nrm_x);
        all_a.push(smin11); all_c.push(nrm_x);
    }
    all_a.sort_by(f64::total_cmp); all_c.sort_by(f64::total_cmp);
    println!("a: {ok_a}/200 (bound {bound_a:.3e}, min seen {min_a:.3e})");
    println!("   a quantiles (1%,2%,5%,10%): {:.4e} {:.4e} {:.4e} {:.4e}", all_a[2], all_a[4], all_a[10], all_a[20]);
    println!("b: {ok_b}/200 (bound {bound_b:.3e}, max seen {max_b:.3e})");
    println!("c: {ok_c}/200 (bound {bound_c:.3e}, max seen {max_c:.3e})");
    println!("   c quantiles (90%,95%,98%,99%): {:.4e} {:.4e} {:.4e} {:.4e}", all_c[180], all_c[190], all_c[196], all_c[198]);
}

fn svd_flops() {
    for (n, m) in [(96usize, 32usize), (96, 64), (96, 128), (192, 1024)] {
        let mut rng = spectraldc::random::seeded_rng(4);
        use spectraldc::scalar::Scalar;
        let a = Matrix::from_fn(n, n, |_, _| f64::standard_normal(&mut rng));
        let ledger = CostLedger::new(m);
        let r = spectraldc::sbr::sbr_svd(&a, m, false, &ledger).unwrap();
        let _ = r;
        let flops = ledger.totals().flops as f64;
        let target = 8.0 / 3.0 * (n as f64).powi(3);
        let phases = ledger.phase_totals();
        let reduction: u64 = phases.iter().filter(|(k, _)| k.as_str() == "svd_to_band" || k.as_str() == "band_to_bidiag").map(|(_, c)| c.flops).sum();
        println!("n={n} M={m}: total {flops:.4e} reduction {reduction:.4e} target {target:.4e} ratio_total {:.4} ratio_reduction {:.4}", flops / target, reduction as f64 / target);
        for (k, c) in &phases { println!("    {k}: {:.3e}", c.flops as f64); }
        let _ = a.norm(Norm::Fro);
    }
}

fn timings() {
    use std::time::Instant;
    let ledger = CostLedger::new(4096);
    let n = 300;
    let mut rng = spectraldc::random::seeded_rng(1);
    use spectraldc::scalar::Scalar;
    let a = Matrix::from_fn(2 * n, n, |_, _| f64::standard_normal(&mut rng));
    let sq = Matrix::from_fn(n, n, |_, _| f64::standard_normal(&mut rng));

    let t = Instant::now();
    let f = spectraldc::qr::factorize(&a, spectraldc::qr::FactorMode::Qr, &ledger).unwrap();
    println!("factorize 600x300: {:?} (flops so far {:.3e})", t.elapsed(), ledger.totals().flops as f64);
    let t = Instant::now();
    let q = spectraldc::qr::explicit_q(&f, &ledger);
    println!("explicit_q 600: {:?} (flops total {:.3e})", t.elapsed(), ledger.totals().flops as f64);
    let _ = q;
    let t = Instant::now();
    let _ = mul(&sq, &sq);
    println!("matmul 300: {:?}", t.elapsed());
    let t = Instant::now();
    let h: Matrix<f64> = haar_orthogonal(n, 5, &ledger);
    let _ = h;
    println!("haar 300: {:?}", t.elapsed());
    let e = Matrix::from_fn(150, 150, |_, _| f64::standard_normal(&mut rng));
    let t = Instant::now();
    let _ = jacobi_svd(&e).unwrap();
    println!("jacobi_svd 150: {:?}", t.elapsed());
    let t = Instant::now();
    let _ = spectraldc::jacobi::spectral_norm(&sq);
    println!("spectral_norm 300: {:?}", t.elapsed());
    let t = Instant::now();
    let g = spectraldc::randurv::grurv(
        &spectraldc::randurv::ProductSpec::new(vec![
            (sq.clone(), spectraldc::randurv::Exponent::Minus),
            (sq.clone(), spectraldc::randurv::Exponent::Plus),
        ]).unwrap(),
        7,
        &ledger,
    ).unwrap();
    let _ = g;
    println!("grurv k=2 n=300: {:?}", t.elapsed());
}

fn conv_instrumented() {
    use std::time::Instant;
    use spectraldc::experiment::{generate, Generator};
    let n = 300;
    let g = generate(&Generator::NormalRandomSpectrum { n, half_width: 1.5 }, 9).unwrap();
    let a = match g.matrix { spectraldc::io::AnyMatrix::Real(m) => m, _ => unreachable!() };
    let ledger = CostLedger::new(4096);
    let mut a_t = a.clone();
    let mut b_t = a.clone();
    for i in 0..n { a_t[(i, i)] += 1.0; b_t[(i, i)] -= 1.0; }
    let mut cfg = spectraldc::splitdc::StrategyConfig::with_seed(9);
    cfg.maxit = 4; cfg.tau = 0.0;
    let t0 = Instant::now();
    let _ = spectraldc::splitdc::irs_observed(&a_t, &b_t, &cfg, &ledger, |st| {
        let t1 = Instant::now();
        let sum = st.a.add(st.b);
        let prod = spectraldc::randurv::ProductSpec::new(vec![
            (sum, spectraldc::randurv::Exponent::Minus),
            (st.a.clone(), spectraldc::randurv::Exponent::Plus),
        ]).unwrap();
        let q = spectraldc::randurv::grurv(&prod, 1000 + st.iteration as u64, &ledger).unwrap().u;
        let t2 = Instant::now();
        let a_hat = mul(&mul(&q.transpose(), &a), &q);
        let (k, _) = spectraldc::splitdc::split_select(&a_hat, None).unwrap();
        let t3 = Instant::now();
        let e21 = a_hat.block(k..n, 0..k);
        let bw = spectraldc::jacobi::spectral_norm(&e21);
        let t4 = Instant::now();
        println!("iter {}: grurv {:?} hat+select {:?} snorm({}x{}) {:?} bw={bw:.2e}",
            st.iteration, t2 - t1, t3 - t2, n - k, k, t4 - t3);
    });
    println!("4 iterations total: {:?}", t0.elapsed());
}
