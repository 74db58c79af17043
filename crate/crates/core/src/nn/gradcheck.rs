use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Grads, ParamId, ParamStore};

/// Central difference of `f` with respect to one scalar parameter.
pub fn numeric_gradient<F>(store: &mut ParamStore, f: &F, id: ParamId, index: usize, eps: f64) -> f64
where
    F: Fn(&ParamStore, Option<&mut Grads>) -> f64,
{
    let orig = store.get(id).data[index];
    store.get_mut(id).data[index] = orig + eps;
    let plus = f(store, None);
    store.get_mut(id).data[index] = orig - eps;
    let minus = f(store, None);
    store.get_mut(id).data[index] = orig;
    (plus - minus) / (2.0 * eps)
}

/// Max relative error `|a − n| / max(1, |a|, |n|)` between the analytic
/// gradient and central differences over `samples` random coordinates.
/// `f` evaluates the loss and, given a buffer, accumulates its gradient.
pub fn grad_check<F>(store: &mut ParamStore, f: F, samples: usize, eps: f64, seed: u64) -> f64
where
    F: Fn(&ParamStore, Option<&mut Grads>) -> f64,
{
    let mut grads = Grads::zeros_like(store);
    f(store, Some(&mut grads));
    let coords: Vec<(ParamId, usize)> = store.ids().flat_map(|id| (0..store.get(id).len()).map(move |i| (id, i))).collect();
    if coords.is_empty() {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (id, i) = coords[rng.random_range(0..coords.len())];
        let a = grads.get(id)[i];
        let n = numeric_gradient(store, &f, id, i, eps);
        worst = worst.max((a - n).abs() / 1.0f64.max(a.abs()).max(n.abs()));
    }
    worst
}
