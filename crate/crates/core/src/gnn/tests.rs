use ndarray::{array, Array2};
use rand::Rng;

use super::*;
use crate::graph::{normalize, DirectedGraph, NormKind};
use crate::rng;
use crate::Matrix;

fn random(r: &mut rng::Rng, rows: usize, cols: usize) -> Matrix {
    Array2::from_shape_fn((rows, cols), |_| r.random_range(-1.0..1.0))
}

fn random_graph(r: &mut rng::Rng, n: usize, p: f64) -> DirectedGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && r.random_bool(p) {
                edges.push((i, j, 1.0));
            }
        }
    }
    DirectedGraph::from_edges(n, &edges).unwrap()
}

fn dense_adj(g: &DirectedGraph) -> Matrix {
    let n = g.num_nodes();
    let mut a = Array2::zeros((n, n));
    for (u, v, w) in g.edges() {
        a[[u, v]] = w;
    }
    a
}

fn assert_close(a: &Matrix, b: &Matrix, tol: f64) {
    assert_eq!(a.dim(), b.dim());
    for (x, y) in a.iter().zip(b.iter()) {
        assert!((x - y).abs() <= tol * y.abs().max(1.0), "{a:?}\nvs\n{b:?}");
    }
}

/// Neighborhood lists `N(i) ∪ {i}` from a dense adjacency.
fn closed_neighborhoods(a: &Matrix) -> Vec<Vec<usize>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).filter(|&j| j == i || a[[i, j]] != 0.0).collect())
        .collect()
}

fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

// ---- layer oracles ----

#[test]
fn gcn_two_node_edge_is_all_half() {
    let g = DirectedGraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
    let adj = normalize(&g, NormKind::SymmetricGcn);
    let out = layers::gcn_layer(&adj, &Array2::eye(2), &Array2::eye(2)).unwrap();
    assert_close(&out, &Array2::from_elem((2, 2), 0.5), 1e-15);
}

#[test]
fn gcn_identity_operator_is_linear() {
    let g = DirectedGraph::from_edges(3, &[]).unwrap();
    let adj = normalize(&g, NormKind::SymmetricGcn);
    let mut r = rng::rng(1);
    let (h, w) = (random(&mut r, 3, 4), random(&mut r, 4, 2));
    assert_close(&layers::gcn_layer(&adj, &h, &w).unwrap(), &h.dot(&w), 1e-14);
}

#[test]
fn gcn_matches_dense_oracle() {
    let mut r = rng::rng(2);
    for _ in 0..20 {
        let g = random_graph(&mut r, 8, 0.3).symmetrize();
        let a = dense_adj(&g) + Array2::<f64>::eye(8);
        let d: Vec<f64> = a.rows().into_iter().map(|row| 1.0 / row.sum().sqrt()).collect();
        let norm = Array2::from_shape_fn((8, 8), |(i, j)| d[i] * a[[i, j]] * d[j]);
        let (h, w) = (random(&mut r, 8, 5), random(&mut r, 5, 3));
        let out = layers::gcn_layer(&normalize(&g, NormKind::SymmetricGcn), &h, &w).unwrap();
        assert_close(&out, &norm.dot(&h).dot(&w), 1e-10);
    }
}

#[test]
fn gcn_rejects_wrong_operator_kind() {
    let g = DirectedGraph::from_edges(2, &[]).unwrap();
    let adj = normalize(&g, NormKind::RowStochastic);
    assert!(layers::gcn_layer(&adj, &Array2::eye(2), &Array2::eye(2)).is_err());
}

#[test]
fn cheb_order_one_is_linear() {
    let mut r = rng::rng(3);
    let g = random_graph(&mut r, 5, 0.4).symmetrize();
    let adj = normalize(&g, NormKind::ScaledLaplacian);
    let (h, w) = (random(&mut r, 5, 3), random(&mut r, 3, 2));
    assert_close(&layers::cheb_layer(&adj, &h, std::slice::from_ref(&w)).unwrap(), &h.dot(&w), 1e-14);
}

#[test]
fn cheb_order_two_on_edgeless_graph() {
    let g = DirectedGraph::from_edges(4, &[]).unwrap();
    let adj = normalize(&g, NormKind::ScaledLaplacian);
    let mut r = rng::rng(4);
    let (h, w0, w1) = (random(&mut r, 4, 3), random(&mut r, 3, 2), random(&mut r, 3, 2));
    let out = layers::cheb_layer(&adj, &h, &[w0.clone(), w1.clone()]).unwrap();
    assert_close(&out, &(h.dot(&w0) - h.dot(&w1)), 1e-14);
}

/// Dense normalized Laplacian and its largest eigenvalue by a plain dense
/// power iteration.
fn dense_scaled_laplacian(g: &DirectedGraph) -> Matrix {
    let a = dense_adj(g);
    let n = a.nrows();
    let deg: Vec<f64> = a.rows().into_iter().map(|r| r.sum()).collect();
    let l = Array2::from_shape_fn((n, n), |(i, j)| {
        let diag = if i == j && deg[i] > 0.0 { 1.0 } else { 0.0 };
        if deg[i] > 0.0 && deg[j] > 0.0 {
            diag - a[[i, j]] / (deg[i] * deg[j]).sqrt()
        } else {
            diag
        }
    });
    let mut v = Array2::from_shape_fn((n, 1), |(i, _)| 1.0 + i as f64 * 0.37);
    let mut lambda = 0.0;
    for _ in 0..20_000 {
        let w = l.dot(&v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        lambda = (v.t().dot(&w))[[0, 0]] / (v.t().dot(&v))[[0, 0]];
        v = w / norm;
    }
    &l * (2.0 / lambda) - Array2::<f64>::eye(n)
}

#[test]
fn cheb_order_three_matches_dense_recurrence() {
    let mut r = rng::rng(5);
    let mut checked = 0;
    while checked < 10 {
        let g = random_graph(&mut r, 6, 0.5).symmetrize();
        if g.num_edges() == 0 {
            continue;
        }
        checked += 1;
        let lhat = dense_scaled_laplacian(&g);
        let h = random(&mut r, 6, 3);
        let ws: Vec<Matrix> = (0..3).map(|_| random(&mut r, 3, 2)).collect();
        let t0 = h.clone();
        let t1 = lhat.dot(&h);
        let t2 = lhat.dot(&t1) * 2.0 - &t0;
        let expect = t0.dot(&ws[0]) + t1.dot(&ws[1]) + t2.dot(&ws[2]);
        let out = layers::cheb_layer(&normalize(&g, NormKind::ScaledLaplacian), &h, &ws).unwrap();
        assert_close(&out, &expect, 1e-8);
    }
}

#[test]
fn sage_isolated_node_keeps_self_term() {
    let g = DirectedGraph::from_edges(2, &[]).unwrap();
    let mut r = rng::rng(6);
    let (h, ws, wn) = (random(&mut r, 2, 3), random(&mut r, 3, 2), random(&mut r, 3, 2));
    let out = layers::sage_mean_layer(&g, &h, &ws, &wn, None, 0).unwrap();
    assert_close(&out, &h.dot(&ws), 1e-15);
}

#[test]
fn sage_star_with_equal_leaves() {
    let g = DirectedGraph::from_edges(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]).unwrap().symmetrize();
    let mut h = Array2::zeros((4, 2));
    for i in 1..4 {
        h.row_mut(i).assign(&array![0.3, -0.7]);
    }
    h.row_mut(0).assign(&array![1.0, 2.0]);
    let (ws, wn) = (array![[1.0, 0.5], [0.0, 1.0]], array![[2.0, 0.0], [1.0, 1.0]]);
    let out = layers::sage_mean_layer(&g, &h, &ws, &wn, None, 0).unwrap();
    let expect = h.row(0).dot(&ws) + array![0.3, -0.7].dot(&wn);
    for k in 0..2 {
        assert!((out[[0, k]] - expect[k]).abs() < 1e-14);
    }
}

#[test]
fn sage_full_neighborhood_matches_dense_mean() {
    let mut r = rng::rng(7);
    for _ in 0..20 {
        let g = random_graph(&mut r, 8, 0.3);
        let a = dense_adj(&g);
        let (h, ws, wn) = (random(&mut r, 8, 4), random(&mut r, 4, 2), random(&mut r, 4, 2));
        let mut mean = Array2::zeros((8, 4));
        for i in 0..8 {
            let nb: Vec<usize> = (0..8).filter(|&j| a[[i, j]] != 0.0).collect();
            for &j in &nb {
                let row = &h.row(j) / nb.len() as f64;
                mean.row_mut(i).scaled_add(1.0, &row);
            }
        }
        let out = layers::sage_mean_layer(&g, &h, &ws, &wn, None, 0).unwrap();
        assert_close(&out, &(h.dot(&ws) + mean.dot(&wn)), 1e-10);
    }
}

#[test]
fn sage_sampling_is_bounded_and_deterministic() {
    let mut r = rng::rng(8);
    let g = random_graph(&mut r, 30, 0.6);
    let h = Array2::eye(30);
    let (ws, wn) = (Array2::zeros((30, 30)), Array2::eye(30));
    let a = layers::sage_mean_layer(&g, &h, &ws, &wn, Some(5), 11).unwrap();
    let b = layers::sage_mean_layer(&g, &h, &ws, &wn, Some(5), 11).unwrap();
    assert_eq!(a, b);
    for (i, row) in a.outer_iter().enumerate() {
        let picked: Vec<usize> = (0..30).filter(|&j| row[j] != 0.0).collect();
        assert_eq!(picked.len(), g.out_degree(i).min(5));
        assert!(picked.iter().all(|&j| g.has_edge(i, j)));
    }
}

#[test]
fn agnn_isolated_node_is_identity() {
    let g = DirectedGraph::from_edges(3, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
    let h = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.25]];
    let out = layers::agnn_layer(&g, &h, 1.7).unwrap();
    assert_eq!(out.row(2), h.row(2));
}

#[test]
fn agnn_zero_beta_is_neighborhood_mean() {
    let mut r = rng::rng(9);
    let g = random_graph(&mut r, 7, 0.4);
    let a = dense_adj(&g);
    let h = random(&mut r, 7, 3);
    let out = layers::agnn_layer(&g, &h, 0.0).unwrap();
    for (i, nb) in closed_neighborhoods(&a).iter().enumerate() {
        for k in 0..3 {
            let mean = nb.iter().map(|&j| h[[j, k]]).sum::<f64>() / nb.len() as f64;
            assert!((out[[i, k]] - mean).abs() < 1e-14);
        }
    }
}

fn dense_agnn(a: &Matrix, h: &Matrix, beta: f64) -> Matrix {
    let norm = |i: usize| h.row(i).dot(&h.row(i)).sqrt();
    let cos = |i: usize, j: usize| {
        let d = norm(i) * norm(j);
        if d == 0.0 {
            0.0
        } else {
            h.row(i).dot(&h.row(j)) / d
        }
    };
    let mut out = Array2::zeros(h.dim());
    for (i, nb) in closed_neighborhoods(a).iter().enumerate() {
        let p = softmax(&nb.iter().map(|&j| beta * cos(i, j)).collect::<Vec<_>>());
        for (&j, pj) in nb.iter().zip(p) {
            out.row_mut(i).scaled_add(pj, &h.row(j));
        }
    }
    out
}

#[test]
fn agnn_path_matches_dense_softmax() {
    let g = DirectedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap().symmetrize();
    let mut r = rng::rng(10);
    for _ in 0..10 {
        let h = random(&mut r, 3, 4);
        assert_close(&layers::agnn_layer(&g, &h, 1.0).unwrap(), &dense_agnn(&dense_adj(&g), &h, 1.0), 1e-10);
    }
}

#[test]
fn agnn_zero_rows_use_zero_cosine() {
    let g = DirectedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap().symmetrize();
    let h = array![[0.0, 0.0], [1.0, 2.0], [-1.0, 0.5]];
    let out = layers::agnn_layer(&g, &h, 2.0).unwrap();
    assert_close(&out, &dense_agnn(&dense_adj(&g), &h, 2.0), 1e-12);
    assert!(out.iter().all(|x| x.is_finite()));
}

#[test]
fn gat_isolated_node_is_projection() {
    let g = DirectedGraph::from_edges(2, &[]).unwrap();
    let mut r = rng::rng(11);
    let h = random(&mut r, 2, 3);
    let w = random(&mut r, 3, 2);
    let heads = vec![(w.clone(), random(&mut r, 2, 1), random(&mut r, 2, 1))];
    assert_close(&layers::gat_layer(&g, &h, &heads, 0.2).unwrap(), &h.dot(&w), 1e-14);
}

#[test]
fn gat_zero_attention_is_mean_of_projection() {
    let mut r = rng::rng(12);
    let g = random_graph(&mut r, 6, 0.4);
    let h = random(&mut r, 6, 3);
    let w = random(&mut r, 3, 2);
    let heads = vec![(w.clone(), Array2::zeros((2, 1)), Array2::zeros((2, 1)))];
    let out = layers::gat_layer(&g, &h, &heads, 0.2).unwrap();
    let hw = h.dot(&w);
    for (i, nb) in closed_neighborhoods(&dense_adj(&g)).iter().enumerate() {
        for k in 0..2 {
            let mean = nb.iter().map(|&j| hw[[j, k]]).sum::<f64>() / nb.len() as f64;
            assert!((out[[i, k]] - mean).abs() < 1e-14);
        }
    }
}

#[test]
fn gat_two_heads_match_dense_oracle() {
    let mut r = rng::rng(13);
    for _ in 0..20 {
        let g = random_graph(&mut r, 4, 0.5);
        let a = dense_adj(&g);
        let h = random(&mut r, 4, 3);
        let heads: Vec<(Matrix, Matrix, Matrix)> =
            (0..2).map(|_| (random(&mut r, 3, 2), random(&mut r, 2, 1), random(&mut r, 2, 1))).collect();
        let mut expect = Array2::zeros((4, 2));
        for (w, al, ar) in &heads {
            let z = h.dot(w);
            for (i, nb) in closed_neighborhoods(&a).iter().enumerate() {
                let e: Vec<f64> = nb
                    .iter()
                    .map(|&j| {
                        let u = z.row(i).dot(&al.column(0)) + z.row(j).dot(&ar.column(0));
                        if u > 0.0 {
                            u
                        } else {
                            0.2 * u
                        }
                    })
                    .collect();
                for (&j, aij) in nb.iter().zip(softmax(&e)) {
                    expect.row_mut(i).scaled_add(aij / 2.0, &z.row(j));
                }
            }
        }
        assert_close(&layers::gat_layer(&g, &h, &heads, 0.2).unwrap(), &expect, 1e-10);
    }
}

// ---- model ----

fn small_config(variant: Variant, dropout: f64) -> GnnConfig {
    GnnConfig {
        hidden: 4,
        train: TrainConfig { dropout, seed: 3, ..Default::default() },
        ..GnnConfig::new(variant)
    }
}

fn all_variants() -> Vec<Variant> {
    vec![
        Variant::Gcn,
        Variant::Cheb { k: 2 },
        Variant::Cheb { k: 3 },
        Variant::Sage { sample: Some(2) },
        Variant::Agnn { layers: 1 },
        Variant::Agnn { layers: 2 },
        Variant::Gat { heads: 1 },
        Variant::Gat { heads: 2 },
    ]
}

#[test]
fn edgeless_gcn_matches_per_node_oracle() {
    let g = DirectedGraph::from_edges(5, &[]).unwrap();
    let mut r = rng::rng(14);
    let x = random(&mut r, 5, 3);
    let model = GnnModel::new(small_config(Variant::Gcn, 0.0), 3).unwrap();
    let prop = Propagation::new(&g, &model.config.variant);
    let out = model.forward(&prop, &x, Mode::Eval).unwrap();
    let w1 = model.param("conv1.weight").unwrap();
    let w2 = model.param("conv2.weight").unwrap();
    for i in 0..5 {
        let hidden = x.row(i).dot(w1).mapv(|v| v.max(0.0));
        let logits = softmax(&hidden.dot(w2).to_vec());
        for c in 0..2 {
            assert!((out[[i, c]] - logits[c].ln()).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_weights_give_uniform_output() {
    let g = DirectedGraph::from_edges(3, &[(0, 1, 1.0)]).unwrap();
    for v in all_variants() {
        let mut model = GnnModel::new(small_config(v, 0.0), 2).unwrap();
        let zeros: Vec<Matrix> = model.params().iter().map(|(_, m)| Array2::zeros(m.dim())).collect();
        model.set_params(zeros).unwrap();
        let prop = Propagation::new(&g, &v);
        let out = model.forward(&prop, &Array2::ones((3, 2)), Mode::Eval).unwrap();
        assert!(out.iter().all(|x| (x + std::f64::consts::LN_2).abs() < 1e-15), "{v}");
    }
}

#[test]
fn outputs_are_log_distributions_and_dropout_zero_is_pure() {
    let mut r = rng::rng(15);
    let g = random_graph(&mut r, 8, 0.3);
    let x = random(&mut r, 8, 3);
    for v in all_variants() {
        let model = GnnModel::new(small_config(v, 0.0), 3).unwrap();
        let prop = Propagation::new(&g, &v);
        let eval = model.forward(&prop, &x, Mode::Eval).unwrap();
        for row in eval.outer_iter() {
            assert!((row.iter().map(|x| x.exp()).sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert_eq!(eval, model.forward(&prop, &x, Mode::Eval).unwrap());
        if !matches!(v, Variant::Sage { .. }) {
            assert_eq!(eval, model.forward(&prop, &x, Mode::Train { epoch: 4 }).unwrap(), "{v}");
        }
    }
}

#[test]
fn dimension_mismatch_rejected() {
    let g = DirectedGraph::from_edges(3, &[]).unwrap();
    let model = GnnModel::new(small_config(Variant::Gcn, 0.0), 3).unwrap();
    let prop = Propagation::new(&g, &Variant::Gcn);
    assert!(model.forward(&prop, &Array2::zeros((3, 4)), Mode::Eval).is_err());
    assert!(model.forward(&prop, &Array2::zeros((2, 3)), Mode::Eval).is_err());
}

/// Central-difference check of every parameter entry, `rounds` random
/// instances; returns the number of entries compared.
fn fd_check_model(variant: Variant, rounds: usize, seed: u64) -> usize {
    let mut r = rng::rng(seed);
    let mut checks = 0;
    for round in 0..rounds {
        let n = 3 + r.random_range(0..6);
        let g = random_graph(&mut r, n, 0.35);
        let x = random(&mut r, n, 3);
        let labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let mask: Vec<usize> = (0..n).collect();
        let mut cfg = small_config(variant, 0.3);
        cfg.train.seed = round as u64;
        let model = GnnModel::new(cfg, 3).unwrap();
        let prop = Propagation::new(&g, &variant);
        let mode = Mode::Train { epoch: round as u64 };
        let (_, grads) = model.loss_and_grads(&prop, &x, &labels, &mask, mode).unwrap();
        let base: Vec<Matrix> = model.params().iter().map(|(_, m)| m.clone()).collect();
        let h = 1e-5;
        for (p, g) in grads.iter().enumerate() {
            for idx in 0..g.len() {
                let (rr, cc) = (idx / g.ncols(), idx % g.ncols());
                let eval = |delta: f64| {
                    let mut vals = base.clone();
                    vals[p][[rr, cc]] += delta;
                    let mut m = model.clone();
                    m.set_params(vals).unwrap();
                    m.loss(&prop, &x, &labels, &mask, mode).unwrap()
                };
                let fd = (eval(h) - eval(-h)) / (2.0 * h);
                let a = g[[rr, cc]];
                let rel = (fd - a).abs() / fd.abs().max(a.abs()).max(1e-7);
                assert!(rel < 1e-4, "{variant} {}[{rr},{cc}]: fd {fd} vs {a}", model.params()[p].0);
                checks += 1;
            }
        }
    }
    checks
}

#[test]
fn model_gradients_match_finite_differences() {
    for (i, v) in all_variants().into_iter().enumerate() {
        assert!(fd_check_model(v, 4, 100 + i as u64) >= 100);
    }
}

#[test]
fn forward_is_permutation_equivariant() {
    let mut r = rng::rng(16);
    for v in all_variants() {
        let g = random_graph(&mut r, 6, 0.4);
        let x = random(&mut r, 6, 3);
        let mut perm: Vec<usize> = (0..6).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let gp = g.permute(&perm).unwrap();
        let mut xp = Array2::zeros(x.dim());
        for (old, &new) in perm.iter().enumerate() {
            xp.row_mut(new).assign(&x.row(old));
        }
        let model = GnnModel::new(small_config(v, 0.0), 3).unwrap();
        let a = model.forward(&Propagation::new(&g, &v), &x, Mode::Eval).unwrap();
        let b = model.forward(&Propagation::new(&gp, &v), &xp, Mode::Eval).unwrap();
        for (old, &new) in perm.iter().enumerate() {
            for c in 0..2 {
                assert!((a[[old, c]] - b[[new, c]]).abs() < 1e-12, "{v}");
            }
        }
    }
}

#[test]
fn first_adam_step_is_signed_lr() {
    let mut p = [array![[1.0, -2.0, 0.5]]];
    let g = vec![array![[3.0, -0.2, 1e-3]]];
    let mut state = AdamState::new([(1, 3)]);
    adam_step(p.iter_mut(), &g, &mut state, 0.01, 0.0);
    let expect = [1.0 - 0.01, -2.0 + 0.01, 0.5 - 0.01];
    for (x, e) in p[0].iter().zip(expect) {
        assert!((x - e).abs() < 1e-7, "{x} vs {e}");
    }
}

#[test]
fn two_blobs_fit_exactly_on_edgeless_graph() {
    let n = 40;
    let mut r = rng::rng(17);
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let x = Array2::from_shape_fn((n, 2), |(i, k)| {
        let centre = if labels[i] == 1 { 2.0 } else { -2.0 };
        centre * if k == 0 { 1.0 } else { -1.0 } + r.random_range(-0.5..0.5)
    });
    let g = DirectedGraph::from_edges(n, &[]).unwrap();
    for v in all_variants() {
        let model = GnnModel::new(GnnConfig::new(v), 2).unwrap();
        let prop = Propagation::new(&g, &v);
        let mask: Vec<usize> = (0..n).collect();
        let out = train(&model, &prop, &x, &labels, &mask, &[]).unwrap();
        let pred = predict(&out.model, &prop, &x).unwrap();
        assert_eq!(pred.classes, labels, "{v}");
    }
}

#[test]
fn training_is_deterministic_and_keeps_best_validation() {
    let mut r = rng::rng(18);
    let g = random_graph(&mut r, 30, 0.1);
    let x = random(&mut r, 30, 4);
    let labels: Vec<u8> = (0..30).map(|i| u8::from(x[[i, 0]] > 0.0)).collect();
    let train_mask: Vec<usize> = (0..20).collect();
    let val_mask: Vec<usize> = (20..30).collect();
    for v in all_variants() {
        let mut cfg = GnnConfig::new(v);
        cfg.train.epochs = 30;
        let model = GnnModel::new(cfg, 4).unwrap();
        let prop = Propagation::new(&g, &v);
        let a = train(&model, &prop, &x, &labels, &train_mask, &val_mask).unwrap();
        let b = train(&model, &prop, &x, &labels, &train_mask, &val_mask).unwrap();
        assert_eq!(a, b);
        let best = a
            .curve
            .iter()
            .map(|e| e.val_loss.unwrap())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(a.curve[a.best_epoch - 1].val_loss, Some(best));
        let kept = a.model.loss(&prop, &x, &labels, &val_mask, Mode::Eval).unwrap();
        assert!((kept - best).abs() < 1e-12);
    }
}

#[test]
fn overlapping_masks_rejected() {
    let g = DirectedGraph::from_edges(3, &[]).unwrap();
    let model = GnnModel::new(small_config(Variant::Gcn, 0.0), 1).unwrap();
    let prop = Propagation::new(&g, &Variant::Gcn);
    let x = Array2::zeros((3, 1));
    assert!(train(&model, &prop, &x, &[0, 1, 0], &[0, 1], &[1]).is_err());
    assert!(train(&model, &prop, &x, &[0, 1, 0], &[], &[1]).is_err());
}

#[test]
fn checkpoint_round_trip() {
    for v in all_variants() {
        let model = GnnModel::new(small_config(v, 0.2), 5).unwrap();
        let mut buf = Vec::new();
        model.to_checkpoint().write(&mut buf).unwrap();
        let back = GnnModel::from_checkpoint(&crate::container::CheckpointContainer::read(buf.as_slice()).unwrap()).unwrap();
        assert_eq!(back, model);
    }
}

#[test]
fn loss_curve_csv() {
    let curve = vec![
        EpochRecord { epoch: 1, train_loss: 0.5, val_loss: Some(0.25) },
        EpochRecord { epoch: 2, train_loss: 0.125, val_loss: None },
    ];
    let mut buf = Vec::new();
    write_loss_curve(&curve, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "epoch,train_loss,val_loss\n1,0.5,0.25\n2,0.125,\n");
}

#[test]
fn variant_names_round_trip() {
    for name in Variant::NAMES {
        assert_eq!(Variant::from_name(name).unwrap().name(), name);
    }
    assert!(Variant::from_name("arma").is_none());
}
