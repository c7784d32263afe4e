use super::circuit::Circuit;
use crate::error::Result;

/// A circuit template parameterized by the external parameter `lambda`.
///
/// Implementations must return circuits with identical gate structure for
/// every supported `lambda`; only angles may change.
pub trait CircuitFamily: Send + Sync {
    fn width(&self) -> usize;

    fn build(&self, lambda: f64) -> Result<Circuit>;

    fn name(&self) -> String;
}
