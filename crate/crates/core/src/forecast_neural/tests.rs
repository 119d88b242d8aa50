use rand::Rng;

use super::*;
use crate::rng::seeded;
use crate::stats::evaluate_metrics;

fn random_dataset(m: usize, l: usize, n: usize, seed: u64) -> WindowedDataset {
    let mut rng = seeded(seed);
    let windows = (0..m * l * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let targets = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    WindowedDataset::new(windows, targets, l, n, None).unwrap()
}

fn small(arch: Arch) -> NetworkConfig {
    NetworkConfig {
        arch,
        hidden_size: 6,
        kernel_count: 3,
        kernel_width: 3,
        l2_lambda: 1e-3,
        seed: 17,
        ..NetworkConfig::default()
    }
}

fn perturbed(cfg: &NetworkConfig, n: usize, l: usize) -> NetworkParams {
    let mut p = init_params(cfg, n, l).unwrap();
    let mut rng = seeded(cfg.seed + 100);
    for v in &mut p.values {
        *v += rng.random_range(-0.3..0.3);
    }
    p
}

const ARCHS: [Arch; 3] = [Arch::Lstm, Arch::Gru, Arch::Cnn];

#[test]
fn init_is_deterministic() {
    for arch in ARCHS {
        let cfg = small(arch);
        assert_eq!(init_params(&cfg, 4, 6).unwrap(), init_params(&cfg, 4, 6).unwrap());
        let other = NetworkConfig { seed: 18, ..cfg.clone() };
        assert_ne!(init_params(&cfg, 4, 6).unwrap(), init_params(&other, 4, 6).unwrap());
    }
}

#[test]
fn init_ranges_and_forget_bias() {
    let cfg = NetworkConfig::with_arch(Arch::Lstm);
    let p = init_params(&cfg, 10, 8).unwrap();
    let lay = p.layout();
    let s_in = 1.0 / 10f64.sqrt();
    let s_rec = 1.0 / 32f64.sqrt();
    assert!(p.values[lay.input.clone()].iter().all(|v| v.abs() <= s_in));
    assert!(p.values[lay.recurrent.clone()].iter().all(|v| v.abs() <= s_rec));
    let b = &p.values[lay.bias.clone()];
    assert!(b[..32].iter().all(|&v| v == 0.0));
    assert!(b[32..64].iter().all(|&v| v == 1.0));
    assert!(b[64..].iter().all(|&v| v == 0.0));
    assert_eq!(p.values[lay.head_b], 0.0);
}

#[test]
fn lstm_has_more_parameters_than_gru() {
    let lstm = init_params(&NetworkConfig::with_arch(Arch::Lstm), 10, 8).unwrap();
    let gru = init_params(&NetworkConfig::with_arch(Arch::Gru), 10, 8).unwrap();
    assert!(lstm.len() > gru.len());
    // 4H(n + H + 1) + H + 1 and 3H(n + H + 1) + H + 1
    assert_eq!(lstm.len(), 4 * 32 * 43 + 33);
    assert_eq!(gru.len(), 3 * 32 * 43 + 33);
}

#[test]
fn head_shapes() {
    let cnn = init_params(&NetworkConfig::with_arch(Arch::Cnn), 10, 8).unwrap();
    assert_eq!(cnn.conv_len(), 4);
    assert_eq!(cnn.head_inputs(), 5 * 4);
    assert_eq!(cnn.layout().head_w.len(), 20);
    let gru = init_params(&NetworkConfig::with_arch(Arch::Gru), 10, 8).unwrap();
    assert_eq!(gru.head_inputs(), 32);
}

#[test]
fn cnn_kernel_must_be_shorter_than_window() {
    let cfg = NetworkConfig::with_arch(Arch::Cnn);
    assert!(init_params(&cfg, 3, 5).is_err());
    assert!(init_params(&cfg, 3, 6).is_ok());
}

#[test]
fn zero_network_predicts_zero() {
    let ds = random_dataset(10, 8, 3, 1);
    for arch in ARCHS {
        let p = NetworkParams::zeros(&NetworkConfig::with_arch(arch), 3, 8).unwrap();
        for w in ds.views() {
            assert_eq!(predict(&p, w).unwrap(), 0.0);
        }
    }
}

#[test]
fn shape_mismatch_rejected() {
    let p = init_params(&small(Arch::Gru), 4, 6).unwrap();
    let ds = random_dataset(2, 6, 3, 1);
    assert!(predict(&p, ds.view(0)).is_err());
    assert!(predict_batch(&p, &ds).is_err());
    assert!(loss_and_grads(&p, &ds, 0.0).is_err());
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Row `r` of a stacked `rows × cols` matrix starting at `off`.
fn mat_row(v: &[f64], off: usize, cols: usize, r: usize) -> &[f64] {
    &v[off + r * cols..off + (r + 1) * cols]
}

fn dotp(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn lstm_matches_unrolled_cell() {
    let (n, l, h) = (3, 5, 4);
    let cfg = NetworkConfig { hidden_size: h, ..small(Arch::Lstm) };
    let p = perturbed(&cfg, n, l);
    let v = &p.values;
    let (w_off, u_off, b_off) = (0, 4 * h * n, 4 * h * n + 4 * h * h);
    let head = b_off + 4 * h;
    let ds = random_dataset(3, l, n, 9);
    for (i, win) in ds.views().enumerate() {
        let mut hs = vec![0.0; h];
        let mut cs = vec![0.0; h];
        for t in 0..l {
            let x = win.step(t);
            let pre = |gate: usize, j: usize| {
                let r = gate * h + j;
                dotp(mat_row(v, w_off, n, r), x) + dotp(mat_row(v, u_off, h, r), &hs) + v[b_off + r]
            };
            let mut hn = vec![0.0; h];
            let mut cn = vec![0.0; h];
            for j in 0..h {
                let ig = sig(pre(0, j));
                let fg = sig(pre(1, j));
                let gg = pre(2, j).tanh();
                let og = sig(pre(3, j));
                cn[j] = fg * cs[j] + ig * gg;
                hn[j] = og * cn[j].tanh();
            }
            hs = hn;
            cs = cn;
        }
        let expected = dotp(&v[head..head + h], &hs) + v[head + h];
        let got = predict(&p, ds.view(i)).unwrap();
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    }
}

#[test]
fn gru_matches_unrolled_cell() {
    let (n, l, h) = (2, 4, 3);
    let cfg = NetworkConfig { hidden_size: h, ..small(Arch::Gru) };
    let p = perturbed(&cfg, n, l);
    let v = &p.values;
    let (w_off, u_off, b_off) = (0, 3 * h * n, 3 * h * n + 3 * h * h);
    let head = b_off + 3 * h;
    let ds = random_dataset(3, l, n, 10);
    for (i, win) in ds.views().enumerate() {
        let mut hs = vec![0.0; h];
        for t in 0..l {
            let x = win.step(t);
            let r: Vec<f64> = (0..h)
                .map(|j| sig(dotp(mat_row(v, w_off, n, j), x) + dotp(mat_row(v, u_off, h, j), &hs) + v[b_off + j]))
                .collect();
            let z: Vec<f64> = (0..h)
                .map(|j| {
                    let k = h + j;
                    sig(dotp(mat_row(v, w_off, n, k), x) + dotp(mat_row(v, u_off, h, k), &hs) + v[b_off + k])
                })
                .collect();
            let rh: Vec<f64> = r.iter().zip(&hs).map(|(a, b)| a * b).collect();
            let cand: Vec<f64> = (0..h)
                .map(|j| {
                    let k = 2 * h + j;
                    (dotp(mat_row(v, w_off, n, k), x) + dotp(mat_row(v, u_off, h, k), &rh) + v[b_off + k]).tanh()
                })
                .collect();
            hs = (0..h).map(|j| (1.0 - z[j]) * hs[j] + z[j] * cand[j]).collect();
        }
        let expected = dotp(&v[head..head + h], &hs) + v[head + h];
        let got = predict(&p, ds.view(i)).unwrap();
        assert!((got - expected).abs() < 1e-10);
    }
}

#[test]
fn cnn_matches_direct_convolution() {
    let (n, l) = (2, 6);
    let cfg = small(Arch::Cnn);
    let p = perturbed(&cfg, n, l);
    let v = &p.values;
    let (kc, kw) = (cfg.kernel_count, cfg.kernel_width);
    let t_out = l - kw + 1;
    let bias_off = kc * kw * n;
    let head = bias_off + kc;
    let ds = random_dataset(4, l, n, 11);
    for (i, win) in ds.views().enumerate() {
        let mut y = v[head + kc * t_out];
        for k in 0..kc {
            for t in 0..t_out {
                let mut a = v[bias_off + k];
                for j in 0..kw {
                    for f in 0..n {
                        a += v[(k * kw + j) * n + f] * win.step(t + j)[f];
                    }
                }
                y += v[head + k * t_out + t] * a.max(0.0);
            }
        }
        assert!((predict(&p, ds.view(i)).unwrap() - y).abs() < 1e-12);
    }
}

#[test]
fn perfect_batch_has_zero_loss_and_gradient() {
    for arch in ARCHS {
        let cfg = small(arch);
        let p = perturbed(&cfg, 4, 6);
        let x = random_dataset(8, 6, 4, 2);
        let preds = predict_batch(&p, &x).unwrap();
        let ds = WindowedDataset::new(x.window_data().to_vec(), preds, 6, 4, None).unwrap();
        let (loss, grads) = loss_and_grads(&p, &ds, 0.0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.iter().all(|&g| g == 0.0));

        // with a penalty the only non-zero gradients are 2λW on the input layer
        let lambda = 0.01;
        let (loss, grads) = loss_and_grads(&p, &ds, lambda).unwrap();
        let reg = p.regularized();
        let penalty: f64 = p.values[reg.clone()].iter().map(|w| w * w).sum();
        assert!((loss - lambda * penalty).abs() < 1e-15);
        for (k, g) in grads.iter().enumerate() {
            let expected = if reg.contains(&k) { 2.0 * lambda * p.values[k] } else { 0.0 };
            assert_eq!(*g, expected, "{arch} coordinate {k}");
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    let ds = random_dataset(5, 6, 4, 3);
    for arch in ARCHS {
        let cfg = small(arch);
        let at_init = grad_check(&cfg, &ds).unwrap();
        assert!(at_init < 1e-4, "{arch}: {at_init}");
        let p = perturbed(&cfg, 4, 6);
        let moved = grad_check_at(&p, &ds, cfg.l2_lambda).unwrap();
        assert!(moved < 1e-4, "{arch} perturbed: {moved}");
    }
}

#[test]
fn adam_first_step() {
    let mut p = [0.5];
    let mut st = AdamState::new(1);
    adam_step(&mut p, &[1.0], &mut st, 1e-3);
    assert_eq!(st.t, 1);
    // m̂ = 1, v̂ = 1, so the step is lr / (1 + ε)
    assert!((0.5 - p[0] - 1e-3).abs() < 1e-10);
}

#[test]
fn adam_zero_gradient_is_stationary() {
    let mut p = [0.3, -2.0];
    let mut st = AdamState::new(2);
    for _ in 0..50 {
        adam_step(&mut p, &[0.0, 0.0], &mut st, 1e-2);
    }
    assert_eq!(p, [0.3, -2.0]);
}

#[test]
fn early_stopping_rule() {
    let mut es = EarlyStopping::new(3);
    let seq = [0.5, 0.4, 0.41, 0.42, 0.43];
    let stops: Vec<bool> = seq.iter().map(|&v| es.observe(v).stop).collect();
    assert_eq!(stops, [false, false, false, false, true]);
    assert_eq!(es.best_epoch(), Some(2));

    // a flat or falling epoch resets the count
    let mut es = EarlyStopping::new(3);
    let seq = [0.5, 0.6, 0.7, 0.7, 0.8, 0.9];
    let stops: Vec<bool> = seq.iter().map(|&v| es.observe(v).stop).collect();
    assert_eq!(stops, [false, false, false, false, false, false]);
    assert_eq!(es.best_epoch(), Some(1));
}

fn constant_dataset(m: usize, value: f64, seed: u64) -> WindowedDataset {
    let x = random_dataset(m, 6, 3, seed);
    WindowedDataset::new(x.window_data().to_vec(), vec![value; m], 6, 3, None).unwrap()
}

#[test]
fn learns_constant_target() {
    let train_ds = constant_dataset(256, 0.3, 4);
    let val = constant_dataset(64, 0.3, 5);
    for arch in ARCHS {
        let cfg = NetworkConfig {
            hidden_size: 8,
            kernel_width: 3,
            learning_rate: 1e-2,
            batch_size: 32,
            ..NetworkConfig::with_arch(arch)
        };
        let out = train(&cfg, &train_ds, &val).unwrap();
        let preds = predict_batch(&out.params, &train_ds).unwrap();
        let mse = evaluate_metrics(train_ds.targets(), &preds).unwrap().mse;
        assert!(mse < 1e-3, "{arch}: {mse}");
        let t = &out.trace;
        assert!(t.best_epoch <= t.stopped_epoch && t.stopped_epoch <= 100);
        assert_eq!(t.train_loss.len(), t.stopped_epoch);
    }
}

#[test]
fn restored_params_reproduce_best_validation_loss() {
    let train_ds = random_dataset(200, 6, 3, 6);
    let val = random_dataset(50, 6, 3, 7);
    let cfg = NetworkConfig {
        hidden_size: 8,
        learning_rate: 3e-2,
        batch_size: 16,
        max_epochs: 60,
        ..NetworkConfig::with_arch(Arch::Gru)
    };
    let out = train(&cfg, &train_ds, &val).unwrap();
    let t = &out.trace;
    let best = t.val_loss.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(t.val_loss[t.best_epoch - 1], best);
    let preds = predict_batch(&out.params, &val).unwrap();
    assert_eq!(evaluate_metrics(val.targets(), &preds).unwrap().mse, best);
    assert_eq!(t.restored, t.best_epoch != t.stopped_epoch);
}

#[test]
fn training_is_deterministic() {
    let train_ds = random_dataset(100, 6, 3, 8);
    let val = random_dataset(20, 6, 3, 9);
    let cfg = NetworkConfig { hidden_size: 4, max_epochs: 5, ..small(Arch::Lstm) };
    let a = train(&cfg, &train_ds, &val).unwrap();
    let b = train(&cfg, &train_ds, &val).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn divergence_reports_trace() {
    let mut train_ds = random_dataset(64, 6, 3, 8);
    train_ds = WindowedDataset::new(
        train_ds.window_data().iter().map(|v| v * 1e300).collect(),
        train_ds.targets().to_vec(),
        6,
        3,
        None,
    )
    .unwrap();
    let val = random_dataset(8, 6, 3, 9);
    let cfg = small(Arch::Cnn);
    match train(&cfg, &train_ds, &val) {
        Err(Error::Diverged { epoch, trace, .. }) => {
            assert_eq!(epoch, 1);
            assert!(trace.train_loss.is_empty());
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn predict_agrees_with_forward_and_batch() {
    let ds = random_dataset(100, 6, 4, 12);
    for arch in ARCHS {
        let p = perturbed(&small(arch), 4, 6);
        let batch = predict_batch(&p, &ds).unwrap();
        for (i, b) in batch.iter().enumerate() {
            let (f, _) = forward(&p, ds.view(i)).unwrap();
            assert_eq!(predict(&p, ds.view(i)).unwrap(), f);
            assert_eq!(*b, f);
        }
    }
}
