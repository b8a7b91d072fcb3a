//! Deterministic dense point families in the open square.
//!
//! The sequence is organised in levels. Level `j` splits the square into a
//! `2^j × 2^j` grid and places one point of every family in every cell, at a
//! seeded pseudorandom offset; cells are visited in Morton order. Inside a cell,
//! family `n` keeps its abscissa in the `n`-th of `m` vertical bands, so distinct
//! families never share a point of the same cell.
//!
//! Global index `k` belongs to family `k mod m`. Because the layout is indexable,
//! the point of family `n` in the cell of a given level containing `z` is found
//! without scanning the prefix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::PlanarPoint;

/// Deepest level; cell side `2^(1-MAX_LEVEL)`.
pub const MAX_LEVEL: u32 = 26;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointEnumeration {
    pub seed: u64,
    pub families: usize,
}

fn level_start(j: u32) -> u64 {
    ((1u64 << (2 * j)) - 1) / 3
}

fn interleave(a: u64, b: u64) -> u64 {
    let mut c = 0;
    for bit in 0..32 {
        c |= ((a >> bit) & 1) << (2 * bit);
        c |= ((b >> bit) & 1) << (2 * bit + 1);
    }
    c
}

fn deinterleave(c: u64) -> (u64, u64) {
    let (mut a, mut b) = (0, 0);
    for bit in 0..32 {
        a |= ((c >> (2 * bit)) & 1) << bit;
        b |= ((c >> (2 * bit + 1)) & 1) << bit;
    }
    (a, b)
}

impl PointEnumeration {
    pub fn new(seed: u64, families: usize) -> Self {
        Self {
            seed,
            families: families.max(1),
        }
    }

    /// Level and cell of the `i`-th point of a family.
    fn split(i: u64) -> (u32, u64) {
        let mut j = 0;
        while j < 31 && level_start(j + 1) <= i {
            j += 1;
        }
        (j, i - level_start(j))
    }

    fn cell_point(&self, n: usize, j: u32, a: u64, b: u64) -> PlanarPoint {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&(n as u64).to_le_bytes());
        key[16..24].copy_from_slice(&a.to_le_bytes());
        key[24..28].copy_from_slice(&(b as u32).to_le_bytes());
        key[28..32].copy_from_slice(&j.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        let m = self.families as f64;
        let u = (n as f64 + rng.gen_range(0.05..0.95)) / m;
        let v = rng.gen_range(0.05..0.95);
        let side = 2.0 / (1u64 << j) as f64;
        PlanarPoint::new(-1.0 + (a as f64 + u) * side, -1.0 + (b as f64 + v) * side)
    }

    /// `χ(k)`.
    pub fn point(&self, k: u64) -> PlanarPoint {
        let m = self.families as u64;
        self.family_point((k % m) as usize, k / m)
    }

    /// `γ(χ(k))`.
    pub fn family_of(&self, k: u64) -> usize {
        (k % self.families as u64) as usize
    }

    /// `i`-th point of family `n`.
    pub fn family_point(&self, n: usize, i: u64) -> PlanarPoint {
        let (j, c) = Self::split(i);
        let (a, b) = deinterleave(c);
        self.cell_point(n, j, a, b)
    }

    /// Global index of the `i`-th point of family `n`.
    pub fn global_index(&self, n: usize, i: u64) -> u64 {
        i * self.families as u64 + n as u64
    }

    pub fn prefix(&self, len: usize) -> Vec<PlanarPoint> {
        (0..len as u64).map(|k| self.point(k)).collect()
    }

    /// Points of family `n` in the cells around `z`, level by level from the
    /// coarsest, each level in enumeration order. Every family point within
    /// half a cell side of `z` at level `j` appears among the level-`j` items.
    pub fn near(&self, n: usize, z: PlanarPoint) -> impl Iterator<Item = PlanarPoint> + '_ {
        (0..=MAX_LEVEL).flat_map(move |j| {
            let cells = 1i64 << j;
            let cell =
                |x: f64| ((((x + 1.0) / 2.0) * cells as f64).floor() as i64).clamp(0, cells - 1);
            let (ca, cb) = (cell(z.r), cell(z.s));
            let mut around: Vec<(u64, u64)> = Vec::with_capacity(9);
            for a in ca - 1..=ca + 1 {
                for b in cb - 1..=cb + 1 {
                    if (0..cells).contains(&a) && (0..cells).contains(&b) {
                        around.push((a as u64, b as u64));
                    }
                }
            }
            around.sort_by_key(|&(a, b)| interleave(a, b));
            around
                .into_iter()
                .map(move |(a, b)| self.cell_point(n, j, a, b))
        })
    }

    /// Whether `y` is a point of family `n` (up to the deepest level).
    pub fn contains(&self, n: usize, y: PlanarPoint) -> bool {
        (0..=MAX_LEVEL).any(|j| {
            let cells = 1i64 << j;
            let cell =
                |x: f64| ((((x + 1.0) / 2.0) * cells as f64).floor() as i64).clamp(0, cells - 1);
            self.cell_point(n, j, cell(y.r) as u64, cell(y.s) as u64) == y
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_and_deterministic() {
        let e = PointEnumeration::new(7, 3);
        let f = PointEnumeration::new(7, 3);
        for k in 0..1000 {
            let p = e.point(k);
            assert!(p.in_open_square());
            assert_eq!(p, f.point(k));
        }
        assert_ne!(PointEnumeration::new(8, 3).point(0), e.point(0));
    }

    #[test]
    fn round_robin_labels() {
        let e = PointEnumeration::new(1, 3);
        assert_eq!(
            (0..6).map(|k| e.family_of(k)).collect::<Vec<_>>(),
            vec![0, 1, 2, 0, 1, 2]
        );
        assert_eq!(e.family_point(2, 1), e.point(5));
    }

    #[test]
    fn morton_round_trip() {
        for c in [0u64, 1, 5, 77, 1 << 40, 123_456_789] {
            let (a, b) = deinterleave(c);
            assert_eq!(interleave(a, b), c);
        }
    }

    #[test]
    fn dense_at_coarse_scale() {
        let e = PointEnumeration::new(3, 3);
        for n in 0..3 {
            let mut hit = [[false; 10]; 10];
            for i in 0..2000 {
                let p = e.family_point(n, i);
                let a = (((p.r + 1.0) * 5.0) as usize).min(9);
                let b = (((p.s + 1.0) * 5.0) as usize).min(9);
                hit[a][b] = true;
            }
            assert!(hit.iter().flatten().all(|&h| h));
        }
    }

    #[test]
    fn near_reaches_small_radius() {
        let e = PointEnumeration::new(2, 3);
        let z = PlanarPoint::new(0.123_456, -0.987_654);
        let hit = e.near(1, z).find(|p| p.sub(z).norm() < 1e-6).unwrap();
        assert!(e.contains(1, hit));
        assert!(!e.contains(0, hit));
    }
}
