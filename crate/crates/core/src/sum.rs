//! Deterministic pairwise (tree) reductions.
//!
//! Every exact expectation in the crate is reduced with a fixed binary tree
//! over the index range. The tree shape depends only on the range length, so
//! the floating-point result is identical at any parallelism degree and
//! across runs. Blocks at the leaves are summed sequentially.

/// Leaf size of the reduction tree. Below this, terms are added left to
/// right; above it, the range is split at the midpoint and the halves are
/// combined. Must stay constant: it is part of the reproducibility contract.
const LEAF: usize = 1024;

/// Ranges at least this large are worth handing to rayon.
const PAR_THRESHOLD: usize = 1 << 14;

/// Pairwise sum of `f(i)` for `i` in `0..len`, parallelized when large.
pub fn pairwise_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    sum_range(0, len, &f, len >= PAR_THRESHOLD)
}

fn sum_range<F>(start: usize, len: usize, f: &F, parallel: bool) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    if len <= LEAF {
        let mut acc = 0.0;
        for i in start..start + len {
            acc += f(i);
        }
        return acc;
    }
    let half = len / 2;
    if parallel {
        let (a, b) = rayon::join(
            || sum_range(start, half, f, true),
            || sum_range(start + half, len - half, f, true),
        );
        a + b
    } else {
        sum_range(start, half, f, false) + sum_range(start + half, len - half, f, false)
    }
}

/// Pairwise sum of vector-valued terms: `fill(i, buf)` writes term `i` into
/// `buf` (length `dim`). Returns the component-wise tree sum.
pub fn pairwise_sum_vec<F>(len: usize, dim: usize, fill: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    sum_range_vec(0, len, dim, &fill, len >= PAR_THRESHOLD)
}

fn sum_range_vec<F>(start: usize, len: usize, dim: usize, fill: &F, parallel: bool) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    if len <= LEAF {
        let mut acc = vec![0.0; dim];
        let mut term = vec![0.0; dim];
        for i in start..start + len {
            fill(i, &mut term);
            for (a, t) in acc.iter_mut().zip(term.iter()) {
                *a += *t;
            }
        }
        return acc;
    }
    let half = len / 2;
    let (mut a, b) = if parallel {
        rayon::join(
            || sum_range_vec(start, half, dim, fill, true),
            || sum_range_vec(start + half, len - half, dim, fill, true),
        )
    } else {
        (
            sum_range_vec(start, half, dim, fill, false),
            sum_range_vec(start + half, len - half, dim, fill, false),
        )
    };
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x += *y;
    }
    a
}

/// Pairwise-combine arbitrary partial results, one per index, in a fixed
/// tree. Used to merge per-trial or per-batch partials deterministically.
pub fn pairwise_map_reduce<T, F, M>(len: usize, map: F, merge: M) -> Option<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
    M: Fn(T, T) -> T + Sync,
{
    fn go<T, F, M>(start: usize, len: usize, map: &F, merge: &M) -> T
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
        M: Fn(T, T) -> T + Sync,
    {
        if len == 1 {
            return map(start);
        }
        let half = len / 2;
        let (a, b) = rayon::join(
            || go(start, half, map, merge),
            || go(start + half, len - half, map, merge),
        );
        merge(a, b)
    }
    if len == 0 {
        None
    } else {
        Some(go(0, len, &map, &merge))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_sequential_on_small_ranges() {
        let v: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let seq: f64 = v.iter().sum();
        let tree = pairwise_sum(v.len(), |i| v[i]);
        assert!((seq - tree).abs() < 1e-12);
    }

    #[test]
    fn independent_of_thread_count() {
        // The tree shape is fixed, so forcing single-threaded execution via a
        // local pool must give bit-identical results.
        let v: Vec<f64> =
            (0..(1u64 << 16)).map(|i| ((i.wrapping_mul(2654435761)) as f64).cos()).collect();
        let wide = pairwise_sum(v.len(), |i| v[i]);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let narrow = pool.install(|| pairwise_sum(v.len(), |i| v[i]));
        assert_eq!(wide.to_bits(), narrow.to_bits());

        let widev = pairwise_sum_vec(v.len(), 3, |i, b| {
            b[0] = v[i];
            b[1] = v[i] * 0.5;
            b[2] = -v[i];
        });
        let narrowv = pool.install(|| {
            pairwise_sum_vec(v.len(), 3, |i, b| {
                b[0] = v[i];
                b[1] = v[i] * 0.5;
                b[2] = -v[i];
            })
        });
        for (a, b) in widev.iter().zip(narrowv.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn map_reduce_on_singleton_and_empty() {
        assert_eq!(pairwise_map_reduce(1, |i| i, |a, b| a + b), Some(0));
        assert_eq!(pairwise_map_reduce::<usize, _, _>(0, |i| i, |a, b| a + b), None);
        assert_eq!(pairwise_map_reduce(10, |i| i, |a, b| a + b), Some(45));
    }
}
