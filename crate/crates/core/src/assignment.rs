//! Minimum-cost UAV-to-slot assignment (Hungarian algorithm).
//!
//! Dense O(n³) shortest-augmenting-path variant with row/column potentials.
//! Columns are scanned in ascending order and only strictly better
//! candidates replace the current best, so equal-cost ties always resolve
//! to the first column in scan order.

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Returns `assignment` with `assignment[i]` = slot index for position `i`,
/// minimizing the total squared distance.
pub fn assign_slots(positions: &[Vec3], slots: &[Vec3]) -> Result<Vec<usize>> {
    if positions.len() != slots.len() {
        return Err(Error::CountMismatch {
            expected: positions.len(),
            got: slots.len(),
        });
    }
    let costs: Vec<Vec<f64>> = positions
        .iter()
        .map(|p| slots.iter().map(|s| (p - s).norm_squared()).collect())
        .collect();
    Ok(solve(&costs))
}

/// Total squared distance of an assignment.
pub fn assignment_cost(positions: &[Vec3], slots: &[Vec3], assignment: &[usize]) -> f64 {
    positions
        .iter()
        .zip(assignment)
        .map(|(p, &s)| (p - slots[s]).norm_squared())
        .sum()
}

/// Solves a square assignment problem over a dense cost matrix.
pub fn solve(costs: &[Vec<f64>]) -> Vec<usize> {
    let n = costs.len();
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(costs.iter().all(|row| row.len() == n));

    // 1-based indices; column 0 is the virtual source
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = costs[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::is_permutation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
            if prefix.len() == used.len() {
                out.push(prefix.clone());
                return;
            }
            for i in 0..used.len() {
                if !used[i] {
                    used[i] = true;
                    prefix.push(i);
                    rec(prefix, used, out);
                    prefix.pop();
                    used[i] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }

    #[test]
    fn identity_when_already_on_slots() {
        let pts: Vec<Vec3> = (0..6).map(|i| Vec3::new(i as f64 * 3.0, (i * i) as f64, 10.0)).collect();
        assert_eq!(assign_slots(&pts, &pts).unwrap(), (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn crossed_pair_is_uncrossed() {
        let pos = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(10.0, 0.0, 0.0)];
        let slots = [Vec3::new(10.0, 1.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        assert_eq!(assign_slots(&pos, &slots).unwrap(), vec![1, 0]);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let pos = [Vec3::zeros()];
        assert!(assign_slots(&pos, &[]).is_err());
        assert!(assign_slots(&[], &[]).unwrap().is_empty());
    }

    #[test]
    fn six_point_instance_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut gen = || Vec3::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0), 10.0);
        let pos: Vec<Vec3> = (0..6).map(|_| gen()).collect();
        let slots: Vec<Vec3> = (0..6).map(|_| gen()).collect();
        let perms = permutations(6);
        assert_eq!(perms.len(), 720);
        let best = perms
            .iter()
            .map(|p| assignment_cost(&pos, &slots, p))
            .fold(f64::INFINITY, f64::min);
        let got = assign_slots(&pos, &slots).unwrap();
        assert!(is_permutation(&got));
        assert_eq!(assignment_cost(&pos, &slots, &got), best);
    }
}
