//! Fixtures shared by the benchmarks.

use kuiper::grid::smooth_random_field;
use kuiper::{Grid, GridField, Rank};

/// Smooth random symmetric field on `points^dim` nodes.
pub fn sym_field(dim: usize, points: usize, seed: u64) -> GridField {
    let g = Grid::unit(dim, points).expect("valid grid");
    smooth_random_field(&g, Rank::Sym, 4, seed)
}
