use crate::Real;

/// `−log softmax(logits)[target]` with its gradient `softmax − onehot`.
pub fn cross_entropy<T: Real>(logits: &[T], target: usize) -> (T, Vec<T>) {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - m).exp()).collect();
    let total: T = exps.iter().copied().sum();
    let loss = total.ln() + m - logits[target];
    let mut grad: Vec<T> = exps.iter().map(|&e| e / total).collect();
    grad[target] -= T::one();
    (loss, grad)
}

/// Mean cross-entropy over `targets.len()` rows of `classes` logits.
/// The gradient already carries the 1/rows factor.
pub fn cross_entropy_mean<T: Real>(logits: &[T], classes: usize, targets: &[usize]) -> (T, Vec<T>) {
    let rows = targets.len();
    let scale = T::one() / T::lit(rows.max(1) as f64);
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(logits.len());
    for (r, &t) in targets.iter().enumerate() {
        let (l, g) = cross_entropy(&logits[r * classes..(r + 1) * classes], t);
        loss += l;
        grad.extend(g.into_iter().map(|v| v * scale));
    }
    (loss * scale, grad)
}

pub fn argmax<T: Real>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
