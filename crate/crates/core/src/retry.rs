//! Bounded re-send loop used for transport faults on the device and agent
//! interfaces.

use core::num::NonZeroU32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: NonZeroU32,
    pub attempt_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: NonZeroU32::new(3).unwrap(),
            attempt_delay_ms: 500,
        }
    }
}

impl RetryPolicy {
    pub fn new(max_attempts: u32, attempt_delay_ms: u64) -> Option<Self> {
        Some(RetryPolicy {
            max_attempts: NonZeroU32::new(max_attempts)?,
            attempt_delay_ms,
        })
    }
}

/// How one attempt failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttemptError<E> {
    /// Connection-level failure; another attempt may succeed.
    Transient(E),
    /// Semantic failure; retrying cannot help.
    Fatal(E),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RetryError<E> {
    Exhausted { attempts: u32, last: E },
    Fatal { attempts: u32, error: E },
}

impl<E> RetryError<E> {
    pub fn attempts(&self) -> u32 {
        match self {
            RetryError::Exhausted { attempts, .. } | RetryError::Fatal { attempts, .. } => {
                *attempts
            }
        }
    }

    pub fn into_inner(self) -> E {
        match self {
            RetryError::Exhausted { last, .. } => last,
            RetryError::Fatal { error, .. } => error,
        }
    }
}

/// Runs `attempt(1)`, `attempt(2)`, ... until one succeeds, one fails
/// fatally, or `policy.max_attempts` attempts have been made. `delay` is
/// called with the policy delay between consecutive attempts. Returns the
/// value and the number of attempts it took.
pub fn run_with_retry<T, E>(
    policy: &RetryPolicy,
    mut delay: impl FnMut(u64),
    mut attempt: impl FnMut(u32) -> Result<T, AttemptError<E>>,
) -> Result<(T, u32), RetryError<E>> {
    let max = policy.max_attempts.get();
    let mut n = 1;
    loop {
        match attempt(n) {
            Ok(v) => return Ok((v, n)),
            Err(AttemptError::Fatal(error)) => return Err(RetryError::Fatal { attempts: n, error }),
            Err(AttemptError::Transient(last)) => {
                if n >= max {
                    return Err(RetryError::Exhausted { attempts: n, last });
                }
            }
        }
        delay(policy.attempt_delay_ms);
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn happy_path_takes_one_attempt() {
        let policy = RetryPolicy::default();
        let r: Result<_, RetryError<()>> = run_with_retry(&policy, |_| panic!("no delay"), |_| Ok(7));
        assert_eq!(r, Ok((7, 1)));
    }

    #[test]
    fn persistent_failure_stops_at_max() {
        let policy = RetryPolicy::new(3, 0).unwrap();
        let mut calls = 0;
        let r: Result<((), u32), _> = run_with_retry(&policy, |_| {}, |_| {
            calls += 1;
            Err(AttemptError::Transient("down"))
        });
        assert_eq!(r, Err(RetryError::Exhausted { attempts: 3, last: "down" }));
        assert_eq!(calls, 3);
    }

    #[test]
    fn fatal_is_not_retried() {
        let policy = RetryPolicy::default();
        let r: Result<((), u32), _> =
            run_with_retry(&policy, |_| {}, |_| Err(AttemptError::Fatal("bad")));
        assert_eq!(r, Err(RetryError::Fatal { attempts: 1, error: "bad" }));
    }

    proptest! {
        // Adversarial plans: each attempt independently fails transiently,
        // fatally, or succeeds.
        #[test]
        fn attempts_never_exceed_max(max in 1u32..8, plan in proptest::collection::vec(0u8..3, 0..16)) {
            let policy = RetryPolicy::new(max, 1).unwrap();
            let mut calls = 0u32;
            let mut delays = 0u32;
            let r: Result<(u32, u32), RetryError<u32>> = run_with_retry(&policy, |_| delays += 1, |n| {
                calls += 1;
                match plan.get(n as usize - 1).copied().unwrap_or(1) {
                    0 => Ok(n),
                    1 => Err(AttemptError::Transient(n)),
                    _ => Err(AttemptError::Fatal(n)),
                }
            });
            prop_assert!(calls <= max);
            prop_assert_eq!(delays + 1, calls);
            match r {
                Ok((_, n)) => prop_assert_eq!(n, calls),
                Err(e) => prop_assert_eq!(e.attempts(), calls),
            }
        }
    }
}
