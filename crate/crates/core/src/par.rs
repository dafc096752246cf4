//! Thin switch between rayon and plain iterators.
//!
//! Every helper here must produce output in index order so that results are
//! bit-identical whether or not the `parallel` feature is enabled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Returns `true` when the crate was built with the `parallel` feature.
pub const fn enabled() -> bool {
    cfg!(feature = "parallel")
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Applies `f(chunk_index, chunk)` to consecutive `chunk`-sized pieces of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}

/// Zips two equally long slices chunk-wise and applies `f(chunk_index, dst, src)`.
pub fn for_each_chunk_zip<T, U, F>(dst: &mut [T], src: &[U], chunk: usize, f: F)
where
    T: Send,
    U: Sync,
    F: Fn(usize, &mut [T], &[U]) + Sync + Send,
{
    debug_assert_eq!(dst.len(), src.len());
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        dst.par_chunks_mut(chunk)
            .zip(src.par_chunks(chunk))
            .enumerate()
            .for_each(|(i, (d, s))| f(i, d, s));
    }
    #[cfg(not(feature = "parallel"))]
    {
        dst.chunks_mut(chunk)
            .zip(src.chunks(chunk))
            .enumerate()
            .for_each(|(i, (d, s))| f(i, d, s));
    }
}

/// Sums `f(i)` over `0..n` with integer arithmetic (order independent).
pub fn sum_range<F>(n: usize, f: F) -> u64
where
    F: Fn(usize) -> u64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_range_keeps_order() {
        let v = map_range(1000, |i| i * 3);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i * 3));
    }

    #[test]
    fn chunk_helpers_cover_everything() {
        let mut data = vec![0u32; 1001];
        for_each_chunk_mut(&mut data, 64, |ci, c| {
            for (j, x) in c.iter_mut().enumerate() {
                *x = (ci * 64 + j) as u32;
            }
        });
        assert!(data.iter().enumerate().all(|(i, &x)| x as usize == i));

        let src: Vec<u32> = (0..1001).collect();
        let mut dst = vec![0u32; 1001];
        for_each_chunk_zip(&mut dst, &src, 100, |_, d, s| {
            d.iter_mut().zip(s).for_each(|(a, b)| *a = b + 1)
        });
        assert!(dst.iter().enumerate().all(|(i, &x)| x as usize == i + 1));
        assert_eq!(sum_range(10, |i| i as u64), 45);
    }
}
