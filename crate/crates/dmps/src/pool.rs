//! Minimal scoped worker pool for embarrassingly parallel group work.
//!
//! Workers pull item indices from a shared counter, run a pure closure on
//! immutable input, and deposit results by index. The caller reduces in
//! ascending index order, so results are bit-identical regardless of the
//! worker count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};

/// Run `f(i)` for `i in 0..n_items` on up to `n_workers` threads and return
/// the results in index order. The first failing item aborts the batch with
/// an error naming that index.
pub fn run_indexed<T, F>(n_workers: usize, n_items: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if n_workers == 0 {
        return Err(Error::invalid("worker pool needs at least one worker"));
    }
    let mut slots: Vec<Option<T>> = Vec::with_capacity(n_items);
    slots.resize_with(n_items, || None);
    let slots = Mutex::new(slots);
    let next = AtomicUsize::new(0);
    let failure: Mutex<Option<(usize, String)>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..n_workers.min(n_items.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n_items || failure.lock().unwrap().is_some() {
                    break;
                }
                match f(i) {
                    Ok(v) => slots.lock().unwrap()[i] = Some(v),
                    Err(e) => {
                        let mut fail = failure.lock().unwrap();
                        if fail.is_none() {
                            *fail = Some((i, e.to_string()));
                        }
                        break;
                    }
                }
            });
        }
    });

    if let Some((group, msg)) = failure.into_inner().unwrap() {
        return Err(Error::Worker { group, msg });
    }
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::Worker { group: i, msg: "worker produced no result".into() }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_in_index_order() {
        for workers in [1, 2, 4] {
            let out = run_indexed(workers, 20, |i| Ok(i * i)).unwrap();
            assert_eq!(out, (0..20).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn failure_names_the_item() {
        let err = run_indexed(2, 10, |i| {
            if i == 7 {
                Err(Error::Numerical("boom".into()))
            } else {
                Ok(i)
            }
        })
        .unwrap_err();
        match err {
            Error::Worker { group, msg } => {
                assert_eq!(group, 7);
                assert!(msg.contains("boom"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_batch() {
        let out: Vec<usize> = run_indexed(3, 0, |_| Ok(0)).unwrap();
        assert!(out.is_empty());
    }
}
