//! Order-preserving map over a work list.
//!
//! With the `parallel` feature the map runs on the rayon pool; without it the
//! same code path degrades to a plain iterator. Results always come back in
//! input order, and callers reduce them sequentially, so output is bitwise
//! identical in both builds and for any thread count.

#[cfg(feature = "parallel")]
pub(crate) fn ordered_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn ordered_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
