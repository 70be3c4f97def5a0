//! Cooperative time limits.
//!
//! A limit set with [`with_deadline`] applies to every solver called inside
//! the closure on the same thread. Search loops poll it between iterations and
//! give up with an unknown result once it has passed.

use std::cell::Cell;
use std::time::{Duration, Instant};

thread_local! {
    static DEADLINE: Cell<Option<Instant>> = const { Cell::new(None) };
}

pub fn with_deadline<T>(limit: Option<Duration>, f: impl FnOnce() -> T) -> T {
    let at = limit.map(|d| Instant::now() + d);
    let prev = DEADLINE.with(|c| c.replace(at));
    let out = f();
    DEADLINE.with(|c| c.set(prev));
    out
}

pub fn expired() -> bool {
    DEADLINE.with(|c| c.get()).is_some_and(|d| Instant::now() >= d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_limits_restore() {
        assert!(!expired());
        with_deadline(Some(Duration::ZERO), || {
            assert!(expired());
            with_deadline(None, || assert!(!expired()));
            assert!(expired());
        });
        assert!(!expired());
    }
}
