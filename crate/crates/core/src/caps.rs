//! Combinatorial caps shared by the enumerators and the norm engine.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    /// Largest universe `{1..N}` that `schreier::enumerate` will walk.
    pub enumeration: u32,
    /// Largest support handled by the subset DP of the norm engine.
    pub dp_support: usize,
    /// Largest support searched exhaustively for Schreier weights of order ≥ 2.
    pub exhaustive_weight: usize,
    /// Oracle support cap (hard limit 6).
    pub oracle_support: usize,
    /// Oracle tree-depth cap (hard limit 3).
    pub oracle_depth: usize,
}

pub const ORACLE_SUPPORT_LIMIT: usize = 6;
pub const ORACLE_DEPTH_LIMIT: usize = 3;

impl Default for Caps {
    fn default() -> Self {
        Caps {
            enumeration: 14,
            dp_support: 14,
            exhaustive_weight: 22,
            oracle_support: ORACLE_SUPPORT_LIMIT,
            oracle_depth: ORACLE_DEPTH_LIMIT,
        }
    }
}
