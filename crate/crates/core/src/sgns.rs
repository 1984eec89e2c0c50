//! Skip-gram with negative sampling: the objective shared by document and
//! node embeddings, plus the alias sampler used for negatives and weighted
//! walk steps.

use rand::Rng;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(sigmoid(x))` without overflow.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss and gradients of one SGNS example.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGrad {
    pub loss: f64,
    pub center: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// `-ln s(c.p) - sum_n ln s(-c.n)` and its gradients with respect to the
/// center vector, the positive output vector and each negative output vector.
pub fn sgns_loss_grad(center: &[f64], positive: &[f64], negatives: &[&[f64]]) -> SgnsGrad {
    let sp = dot(center, positive);
    let gp = sigmoid(sp) - 1.0;
    let mut loss = -log_sigmoid(sp);
    let mut gc: Vec<f64> = positive.iter().map(|&p| gp * p).collect();
    let gpos: Vec<f64> = center.iter().map(|&c| gp * c).collect();
    let mut gneg = Vec::with_capacity(negatives.len());
    for n in negatives {
        let sn = dot(center, n);
        let g = sigmoid(sn);
        loss -= log_sigmoid(-sn);
        for (a, &b) in gc.iter_mut().zip(n.iter()) {
            *a += g * b;
        }
        gneg.push(center.iter().map(|&c| g * c).collect());
    }
    SgnsGrad {
        loss,
        center: gc,
        positive: gpos,
        negatives: gneg,
    }
}

/// One in-place SGD step on a row-major `center` table and `output` table of
/// width `dim`. Negatives equal to the positive index are skipped. Returns the
/// example loss evaluated before the update.
pub fn sgns_step(
    center: &mut [f64],
    output: &mut [f64],
    dim: usize,
    center_row: usize,
    positive: usize,
    negatives: &[usize],
    lr: f64,
) -> f64 {
    let c0 = center_row * dim;
    let mut grad_c = vec![0.0; dim];
    let mut loss = 0.0;
    let targets = std::iter::once((positive, 1.0)).chain(
        negatives
            .iter()
            .filter(|&&n| n != positive)
            .map(|&n| (n, 0.0)),
    );
    for (t, label) in targets {
        let o0 = t * dim;
        let c = &center[c0..c0 + dim];
        let o = &output[o0..o0 + dim];
        let s = dot(c, o);
        loss -= if label > 0.0 { log_sigmoid(s) } else { log_sigmoid(-s) };
        let g = sigmoid(s) - label;
        for k in 0..dim {
            grad_c[k] += g * o[k];
        }
        for k in 0..dim {
            let ck = center[c0 + k];
            output[o0 + k] -= lr * g * ck;
        }
    }
    for k in 0..dim {
        center[c0 + k] -= lr * grad_c[k];
    }
    loss
}

/// SGD step on a single center vector against a read-only output table.
pub fn sgns_step_frozen(
    center: &mut [f64],
    output: &[f64],
    dim: usize,
    positive: usize,
    negatives: &[usize],
    lr: f64,
) -> f64 {
    let mut grad_c = vec![0.0; dim];
    let mut loss = 0.0;
    let targets = std::iter::once((positive, 1.0)).chain(
        negatives
            .iter()
            .filter(|&&n| n != positive)
            .map(|&n| (n, 0.0)),
    );
    for (t, label) in targets {
        let o = &output[t * dim..(t + 1) * dim];
        let s = dot(center, o);
        loss -= if label > 0.0 { log_sigmoid(s) } else { log_sigmoid(-s) };
        let g = sigmoid(s) - label;
        for k in 0..dim {
            grad_c[k] += g * o[k];
        }
    }
    for k in 0..dim {
        center[k] -= lr * grad_c[k];
    }
    loss
}

/// Walker/Vose alias table: O(1) draws from a fixed categorical distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// `weights` must be non-negative with a positive sum.
    pub fn new(weights: &[f64]) -> Option<Self> {
        let n = weights.len();
        let total: f64 = weights.iter().sum();
        if n == 0 || !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return None;
        }
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut prob = vec![1.0; n];
        let mut alias: Vec<usize> = (0..n).collect();
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, &p) in scaled.iter().enumerate() {
            if p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        Some(Self { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.prob.len());
        if rng.random::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }
}

/// Negative-sampling distribution proportional to `count^0.75`.
pub fn unigram_table(counts: &[u64]) -> Option<AliasTable> {
    let w: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    AliasTable::new(&w)
}

/// Learning rate linearly decayed from `start` to `end` over `total` steps.
pub fn decayed_lr(start: f64, end: f64, step: u64, total: u64) -> f64 {
    if total == 0 {
        return start;
    }
    let frac = (step as f64 / total as f64).min(1.0);
    (start - (start - end) * frac).max(end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn sigmoid_stable_at_extremes() {
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        assert!(sigmoid(800.0) == 1.0 && sigmoid(-800.0) >= 0.0);
        assert!(log_sigmoid(-800.0).is_finite());
        assert!((log_sigmoid(2.0) - sigmoid(2.0).ln()).abs() < 1e-14);
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
    }

    #[test]
    fn sgns_gradient_matches_finite_differences() {
        let mut r = rng::rng(5);
        let h = 1e-5;
        for _ in 0..100 {
            let d = 6;
            let v = |r: &mut rng::Rng| -> Vec<f64> { (0..d).map(|_| r.random_range(-1.0..1.0)).collect() };
            let c = v(&mut r);
            let p = v(&mut r);
            let negs: Vec<Vec<f64>> = (0..3).map(|_| v(&mut r)).collect();
            let nr: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
            let g = sgns_loss_grad(&c, &p, &nr);
            let f = |c: &[f64], p: &[f64], n: &[&[f64]]| sgns_loss_grad(c, p, n).loss;
            for k in 0..d {
                let (mut a, mut b) = (c.clone(), c.clone());
                a[k] += h;
                b[k] -= h;
                let fd = (f(&a, &p, &nr) - f(&b, &p, &nr)) / (2.0 * h);
                assert!(rel_err(fd, g.center[k]) < 1e-5);
                let (mut a, mut b) = (p.clone(), p.clone());
                a[k] += h;
                b[k] -= h;
                let fd = (f(&c, &a, &nr) - f(&c, &b, &nr)) / (2.0 * h);
                assert!(rel_err(fd, g.positive[k]) < 1e-5);
            }
        }
    }

    #[test]
    fn sgd_step_applies_gradient() {
        let dim = 3;
        let mut center = vec![0.1, -0.2, 0.3];
        let mut output = vec![0.5, 0.1, -0.1, -0.3, 0.2, 0.4];
        let g = sgns_loss_grad(&center, &output[0..3], &[&output[3..6]]);
        let (c0, o0) = (center.clone(), output.clone());
        let loss = sgns_step(&mut center, &mut output, dim, 0, 0, &[1], 0.1);
        assert!((loss - g.loss).abs() < 1e-15);
        for k in 0..3 {
            assert!((center[k] - (c0[k] - 0.1 * g.center[k])).abs() < 1e-15);
            assert!((output[k] - (o0[k] - 0.1 * g.positive[k])).abs() < 1e-15);
            assert!((output[3 + k] - (o0[3 + k] - 0.1 * g.negatives[0][k])).abs() < 1e-15);
        }
    }

    /// Upper 0.999 quantile of chi-square with 9 degrees of freedom.
    const CHI2_9DF_P001: f64 = 27.877;

    #[test]
    fn alias_table_reproduces_distribution() {
        let w = [1.0, 2.0, 3.0, 4.0, 0.5, 0.5, 6.0, 2.0, 1.0, 10.0];
        let t = AliasTable::new(&w).unwrap();
        let mut r = rng::rng(123);
        let draws = 1_000_000usize;
        let mut counts = [0usize; 10];
        for _ in 0..draws {
            counts[t.sample(&mut r)] += 1;
        }
        let total: f64 = w.iter().sum();
        let chi2: f64 = counts
            .iter()
            .zip(w)
            .map(|(&c, wi)| {
                let e = draws as f64 * wi / total;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < CHI2_9DF_P001, "chi2 = {chi2}");
    }

    #[test]
    fn alias_rejects_degenerate_weights() {
        assert!(AliasTable::new(&[]).is_none());
        assert!(AliasTable::new(&[0.0, 0.0]).is_none());
        assert!(AliasTable::new(&[1.0, -1.0]).is_none());
        let t = AliasTable::new(&[0.0, 3.0]).unwrap();
        let mut r = rng::rng(1);
        assert!((0..100).all(|_| t.sample(&mut r) == 1));
    }

    #[test]
    fn lr_decays_linearly() {
        assert_eq!(decayed_lr(0.025, 0.0001, 0, 100), 0.025);
        assert!((decayed_lr(0.025, 0.0001, 100, 100) - 0.0001).abs() < 1e-15);
    }
}
