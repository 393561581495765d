//! Fuzzy-rule guided multi-modal meta-learning for fine-grained emotion
//! recognition.

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b): (f64, f64) = ($a, $b);
        assert!((a - b).abs() <= $tol, "{} vs {} (tol {})", a, b, $tol);
    }};
}

pub mod autodiff;
pub mod cli;
pub mod encoder;
pub mod error;
pub mod fuzzy;
pub mod labels;
pub mod meta;
pub mod synth;
pub mod tasks;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
