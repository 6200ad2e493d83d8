use super::*;

/// Gauss-Jordan inverse with partial pivoting and the log-determinant.
fn dense_inverse(a: &Matrix) -> (Matrix, f64) {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut log_det = 0.0;
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        inv.swap(c, p);
        let piv = m[c][c];
        log_det += piv.abs().ln();
        for j in 0..n {
            m[c][j] /= piv;
            inv[c][j] /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                for j in 0..n {
                    m[r][j] -= f * m[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    (Matrix::from_rows(&inv).unwrap(), log_det)
}

fn dense_kernel(z1: &Matrix, z2: &Matrix, l: f64, s: f64) -> Matrix {
    let mut k = Matrix::zeros(z1.rows(), z2.rows());
    for i in 0..z1.rows() {
        for j in 0..z2.rows() {
            let mut d = 0.0;
            for c in 0..z1.cols() {
                d += (z1[(i, c)] - z2[(j, c)]).powi(2);
            }
            k[(i, j)] = s * (-d / (2.0 * l * l)).exp();
        }
    }
    k
}

fn identity_params(dim: usize, l: f64, s: f64, noise: f64) -> DklParams {
    DklParams {
        mlp: MlpParams {
            layers: vec![crate::num::Layer {
                weight: Matrix::identity(dim),
                bias: vec![0.0; dim],
                activation: Activation::Identity,
            }],
        },
        log_lengthscale: l.ln(),
        log_outputscale: s.ln(),
        log_noise: noise.ln(),
    }
}

fn random_problem(rng: &mut Rng, n: usize, d: usize) -> (Matrix, Vec<f64>) {
    let x = Matrix::from_fn(n, d, |_, _| rng.uniform_range(-2.0, 2.0));
    let y = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    (x, y)
}

#[test]
fn kernel_examples() {
    let z = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
    let k = kernel_matrix(&z, &z, 1.0, 2.5).unwrap();
    assert_eq!(k[(0, 0)], 2.5);
    // distance √2 = l√2 with l = 1
    assert!((k[(0, 1)] - 2.5 * (-1.0f64).exp()).abs() < 1e-15);

    let mut rng = Rng::new(4);
    let a = Matrix::from_fn(4, 3, |_, _| rng.uniform());
    let b = Matrix::from_fn(5, 3, |_, _| rng.uniform());
    let k = kernel_matrix(&a, &b, 0.7, 1.3).unwrap();
    let r = dense_kernel(&a, &b, 0.7, 1.3);
    for (x, y) in k.as_slice().iter().zip(r.as_slice()) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!(kernel_matrix(&a, &Matrix::zeros(2, 2), 1.0, 1.0).is_err());
}

#[test]
fn nll_single_point_closed_form() {
    let (s, noise) = (1.7, 0.3);
    let p = identity_params(2, 1.0, s, noise);
    let x = Matrix::zeros(1, 2);
    let c = 0.5 * LN_2PI;
    let v = nll(&p, &x, &[0.0], &TargetStats::IDENTITY).unwrap();
    assert!((v - (0.5 * (s + noise).ln() + c)).abs() < 1e-7);
    let y0 = 0.8;
    let v = nll(&p, &x, &[y0], &TargetStats::IDENTITY).unwrap();
    let want = 0.5 * y0 * y0 / (s + noise) + 0.5 * (s + noise).ln() + c;
    assert!((v - want).abs() < 1e-7);

    // d/d log σ_n² of the 1x1 expression: σ_n²·(1/(2t) − y0²/(2t²)), t = s + σ_n².
    let (_, g) = nll_grad(&p, &x, &[y0], &TargetStats::IDENTITY).unwrap();
    let t = s + noise;
    let want = noise * (0.5 / t - 0.5 * y0 * y0 / (t * t));
    assert!((g.log_noise - want).abs() < 1e-7);
}

#[test]
fn nll_and_predict_match_dense_oracle() {
    let mut rng = Rng::new(11);
    for _ in 0..30 {
        let n = 2 + rng.below(9);
        let (x, y) = random_problem(&mut rng, n, 2);
        let (l, s, noise) = (rng.uniform_range(0.3, 2.0), rng.uniform_range(0.5, 2.0), rng.uniform_range(0.01, 0.5));
        let p = identity_params(2, l, s, noise);
        let mut k = dense_kernel(&x, &x, l, s);
        for i in 0..n {
            k[(i, i)] += noise;
        }
        let (m, _) = jittered_cholesky(&k).unwrap();
        // The oracle sees the same jitter as the model.
        let jitter = m[(0, 0)].powi(2) - k[(0, 0)];
        for i in 0..n {
            k[(i, i)] += jitter;
        }
        let (kinv, log_det) = dense_inverse(&k);
        let alpha: Vec<f64> = (0..n).map(|i| dot(kinv.row(i), &y)).collect();
        let want = 0.5 * dot(&y, &alpha) + 0.5 * log_det + 0.5 * n as f64 * LN_2PI;
        let got = nll(&p, &x, &y, &TargetStats::IDENTITY).unwrap();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");

        let model = TrainedDkl::condition(p.clone(), &x, &y, TargetStats::IDENTITY).unwrap();
        let (q, _) = random_problem(&mut rng, 3, 2);
        let post = predict(&model, &q).unwrap();
        let ks = dense_kernel(&q, &x, l, s);
        for r in 0..3 {
            let mean = dot(ks.row(r), &alpha);
            let kk: Vec<f64> = (0..n).map(|i| dot(kinv.row(i), ks.row(r))).collect();
            let var = s + noise - dot(ks.row(r), &kk);
            assert!((post.mean[r] - mean).abs() < 1e-9);
            assert!((post.std[r] - var.max(0.0).sqrt()).abs() < 1e-9);
        }
    }
}

fn small_net_params(rng: &mut Rng, input: usize, act: Activation) -> DklParams {
    let cfg = DklConfig {
        hidden: vec![5],
        activation: act,
        ..DklConfig::default()
    };
    let mut p = DklParams::init(input, &cfg, rng);
    p.log_lengthscale = rng.uniform_range(-0.5, 0.5);
    p.log_outputscale = rng.uniform_range(-0.5, 0.5);
    p.log_noise = rng.uniform_range(-3.0, -1.0);
    for layer in &mut p.mlp.layers {
        layer.bias.iter_mut().for_each(|b| *b = rng.uniform_range(-0.3, 0.3));
    }
    p
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = Rng::new(5);
    for case in 0..10 {
        let act = [Activation::Tanh, Activation::Relu][case % 2];
        let (x, y) = random_problem(&mut rng, 8, 4);
        let p = small_net_params(&mut rng, 4, act);
        let (_, g) = nll_grad(&p, &x, &y, &TargetStats::IDENTITY).unwrap();
        let g = g.to_flat();
        let base = p.to_flat();
        let h = 1e-5;
        for (i, gi) in g.iter().enumerate() {
            let mut q = p.clone();
            let mut v = base.clone();
            v[i] += h;
            q.load_flat(&v);
            let up = nll(&q, &x, &y, &TargetStats::IDENTITY).unwrap();
            v[i] -= 2.0 * h;
            q.load_flat(&v);
            let down = nll(&q, &x, &y, &TargetStats::IDENTITY).unwrap();
            let fd = (up - down) / (2.0 * h);
            let err = (fd - gi).abs() / fd.abs().max(gi.abs()).max(1e-2);
            assert!(err < 1e-4, "case {case} param {i}: fd {fd} analytic {gi}");
        }
    }
}

#[test]
fn duplicate_points_keep_finite_gradient() {
    let x = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
    let p = identity_params(2, 1.0, 1.0, 1e-12);
    let (v, g) = nll_grad(&p, &x, &[1.0, 1.0, 0.0], &TargetStats::IDENTITY).unwrap();
    assert!(v.is_finite());
    assert!(g.to_flat().iter().all(|x| x.is_finite()));
}

#[test]
fn degenerate_and_invalid_targets() {
    let x = Matrix::zeros(3, 2);
    assert_eq!(train_dkl(&x, &[2.0; 3], &DklConfig::default()).unwrap_err(), GpError::DegenerateTargets);
    assert_eq!(
        train_dkl(&x, &[1.0, f64::NAN, 0.0], &DklConfig::default()).unwrap_err(),
        GpError::NonFiniteTargets
    );
    assert!(matches!(
        train_dkl(&Matrix::zeros(1, 2), &[1.0], &DklConfig::default()),
        Err(GpError::TooFewPoints { .. })
    ));
}

/// 16 one-hot rows over 8 columns; y depends linearly on three of them.
fn toy_one_hot(rng: &mut Rng) -> (Matrix, Vec<f64>) {
    let x = Matrix::from_fn(16, 8, |_, _| if rng.uniform() < 0.5 { 1.0 } else { 0.0 });
    let y = (0..16).map(|i| 2.0 * x[(i, 0)] - 1.5 * x[(i, 3)] + 0.5 * x[(i, 6)] + 1.0).collect();
    (x, y)
}

#[test]
fn training_fits_smooth_target_and_is_deterministic() {
    let mut rng = Rng::new(2);
    let (x, y) = toy_one_hot(&mut rng);
    let cfg = DklConfig {
        hidden: vec![16],
        epochs: 300,
        lr: 1e-2,
        seed: 9,
        ..DklConfig::default()
    };
    let a = train_dkl(&x, &y, &cfg).unwrap();
    let b = train_dkl(&x, &y, &cfg).unwrap();
    assert_eq!(a.model.params, b.model.params);
    assert_eq!(a.loss_curve, b.loss_curve);
    assert!(a.final_loss <= a.loss_curve[0]);

    let post = predict(&a.model, &x).unwrap();
    let stats = TargetStats::fit(&y).unwrap();
    let rmse = (post.mean.iter().zip(&y).map(|(m, t)| (m - t).powi(2)).sum::<f64>() / 16.0).sqrt();
    assert!(rmse < 0.1 * stats.std, "rmse {rmse}, std {}", stats.std);
}

#[test]
fn pinned_noise_interpolates() {
    let mut rng = Rng::new(8);
    let (x, y) = random_problem(&mut rng, 10, 3);
    let cfg = DklConfig {
        hidden: vec![6],
        epochs: 20,
        fixed_noise: Some(1e-8),
        ..DklConfig::default()
    };
    let out = train_dkl(&x, &y, &cfg).unwrap();
    assert_eq!(out.model.params.noise(), 1e-8f64.ln().exp());
    let post = predict(&out.model, &x).unwrap();
    let sd = out.model.target_stats.std;
    for (m, t) in post.mean.iter().zip(&y) {
        assert!((m - t).abs() < 1e-3 * sd);
    }
}

#[test]
fn far_queries_revert_to_prior() {
    let mut rng = Rng::new(3);
    let (x, y) = random_problem(&mut rng, 6, 2);
    let p = identity_params(2, 0.5, 1.4, 0.1);
    let stats = TargetStats::fit(&y).unwrap();
    let m = TrainedDkl::condition(p, &x, &y, stats).unwrap();
    let far = Matrix::from_rows(&[vec![1e3, -1e3]]).unwrap();
    let post = predict(&m, &far).unwrap();
    assert!((post.mean[0] - stats.mean).abs() < 1e-12);
    assert!((post.std[0] - (1.5f64).sqrt() * stats.std).abs() < 1e-9);
}

#[test]
fn batching_is_neutral() {
    let mut rng = Rng::new(21);
    let (x, y) = random_problem(&mut rng, 20, 4);
    let p = small_net_params(&mut rng, 4, Activation::Tanh);
    let m = TrainedDkl::condition(p, &x, &y, TargetStats::fit(&y).unwrap()).unwrap();
    let (q, _) = random_problem(&mut rng, 300, 4);
    let full = predict(&m, &q).unwrap();
    for bs in [1, 7, 250, 300, 1000] {
        assert_eq!(batch_predict(&m, &q, bs).unwrap(), full, "batch size {bs}");
    }
    assert!(batch_predict(&m, &q, 0).is_err());
}

#[test]
fn latent_grid() {
    let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 2.0], vec![0.5, 1.0]]).unwrap();
    let y = [0.0, 1.0, 2.0];
    let m = TrainedDkl::condition(identity_params(2, 1.0, 1.0, 0.01), &x, &y, TargetStats::fit(&y).unwrap())
        .unwrap();
    let g = latent_grid_predict(&m, 2).unwrap();
    let corners: Vec<(f64, f64)> = g.iter().map(|p| (p.z1, p.z2)).collect();
    assert_eq!(corners, vec![(-0.1, -0.2), (-0.1, 2.2), (1.1, -0.2), (1.1, 2.2)]);
    let g = latent_grid_predict(&m, 25).unwrap();
    let bound = m.prior_variance().sqrt() * m.target_stats.std + 1e-9;
    assert!(g.iter().all(|p| p.std <= bound && p.std >= 0.0));

    let m3 = TrainedDkl::condition(identity_params(3, 1.0, 1.0, 0.01), &Matrix::identity(3), &y, TargetStats::fit(&y).unwrap())
        .unwrap();
    assert_eq!(latent_grid_predict(&m3, 4).unwrap_err(), GpError::LatentDimUnsupported(3));
}
