//! Resource budgets.
//!
//! Every generator and every potentially exponential computation in this
//! crate is guarded by an explicit budget. Exceeding a budget is a hard
//! error naming the required size; nothing is ever silently truncated.

use crate::error::{Error, Result};

/// Environment variable that overrides [`Caps::max_cells`].
pub const CAP_CELLS_ENV: &str = "LLAB_CAP_CELLS";

/// Resource budgets consulted by generators, the dimension recursion, the
/// expert enumerations, and the sequential Rademacher enumeration.
#[derive(Debug, Clone)]
pub struct Caps {
    /// Maximum number of table cells (`|hypotheses| * |points|`) a concept
    /// class may occupy. Guards all class generators and loaders.
    pub max_cells: u64,
    /// Maximum number of recursion nodes a single dimension computation may
    /// open before reporting a resource error.
    pub dim_node_budget: u64,
    /// Maximum number of entries retained in a dimension memo cache before
    /// least-recently-used entries are evicted.
    pub dim_cache_entries: usize,
    /// Maximum size of an enumerated expert family.
    pub max_experts: u64,
    /// Maximum number of complete trees the sequential Rademacher
    /// enumeration may visit.
    pub max_rademacher_trees: u64,
    /// Largest point count accepted by the brute-force dimension oracle.
    pub bruteforce_max_points: usize,
    /// Largest hypothesis count accepted by the brute-force dimension oracle.
    pub bruteforce_max_hypotheses: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_cells: 1 << 20,
            dim_node_budget: 50_000_000,
            dim_cache_entries: 1 << 20,
            max_experts: 200_000,
            max_rademacher_trees: 10_000_000,
            bruteforce_max_points: 4,
            bruteforce_max_hypotheses: 20,
        }
    }
}

impl Caps {
    /// Default budgets with `max_cells` taken from the `LLAB_CAP_CELLS`
    /// environment variable when it is set and parseable.
    pub fn from_env() -> Result<Self> {
        let mut caps = Caps::default();
        if let Ok(raw) = std::env::var(CAP_CELLS_ENV) {
            let cells: u64 = raw.trim().parse().map_err(|_| {
                Error::InvalidInput(format!("{CAP_CELLS_ENV} must be a non-negative integer, got {raw:?}"))
            })?;
            caps.max_cells = cells;
        }
        Ok(caps)
    }

    /// Checks a table of `rows * cols` cells against `max_cells`.
    pub fn check_cells(&self, rows: usize, cols: usize, what: &str) -> Result<()> {
        let cells = (rows as u64).saturating_mul(cols as u64);
        if cells > self.max_cells {
            return Err(Error::Resource(format!(
                "{what} needs {cells} table cells, cap is {}",
                self.max_cells
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_cell_cap_is_two_to_twenty() {
        assert_eq!(Caps::default().max_cells, 1 << 20);
    }

    #[test]
    fn cell_check_rejects_oversized_tables() {
        let caps = Caps { max_cells: 10, ..Caps::default() };
        assert!(caps.check_cells(3, 3, "class").is_ok());
        let err = caps.check_cells(4, 3, "class").unwrap_err();
        assert!(err.is_resource(), "{err}");
    }

    #[test]
    fn cell_check_survives_overflowing_products() {
        let caps = Caps::default();
        assert!(caps.check_cells(usize::MAX, 2, "class").is_err());
    }
}
