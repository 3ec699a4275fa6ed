//! Thin switch between rayon and sequential execution.
//!
//! All data-parallel loops in this crate (seed workers, randomization-test
//! iterations, batch scoring) go through these helpers. With the default
//! `parallel` feature they run on the global rayon pool; without it they
//! degrade to plain sequential iteration with identical results. The
//! explicitly sequential variants stay available either way so the bench
//! suite can compare both paths in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// True when the crate was built with the `parallel` feature.
pub const fn is_enabled() -> bool {
    cfg!(feature = "parallel")
}

/// Map over a slice, in parallel when enabled. Output order matches input.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Always-sequential counterpart of [`map`].
pub fn map_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Count how many indices in `0..n` satisfy `pred`, in parallel when enabled.
pub fn count<F>(n: usize, pred: F) -> usize
where
    F: Fn(usize) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().filter(|&i| pred(i)).count()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).filter(|&i| pred(i)).count()
    }
}

/// Always-sequential counterpart of [`count`].
pub fn count_seq<F>(n: usize, pred: F) -> usize
where
    F: Fn(usize) -> bool,
{
    (0..n).filter(|&i| pred(i)).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let xs: Vec<u32> = (0..1000).collect();
        let doubled = map(&xs, |x| x * 2);
        let doubled_seq = map_seq(&xs, |x| x * 2);
        assert_eq!(doubled, doubled_seq);
        assert_eq!(doubled[500], 1000);
    }

    #[test]
    fn count_matches_sequential() {
        let pred = |i: usize| i % 7 == 0;
        assert_eq!(count(10_000, pred), count_seq(10_000, pred));
    }
}
