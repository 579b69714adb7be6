//! Deterministic k-means used to split the swarm into groups.

use crate::geom::Vec3;

const MAX_ITERS: usize = 100;

/// Partitions `points` into `k` clusters of ids.
///
/// Initial centers are taken at evenly spaced ranks of the points sorted by
/// (x, y, z, id), so the result depends only on the input. Clusters are
/// returned with sorted members, ordered by their smallest id.
pub fn kmeans_partition(points: &[(u32, Vec3)], k: usize) -> Vec<Vec<u32>> {
    let n = points.len();
    if n == 0 || k == 0 {
        return Vec::new();
    }
    let k = k.min(n);
    let mut sorted: Vec<&(u32, Vec3)> = points.iter().collect();
    sorted.sort_by(|a, b| {
        a.1.x
            .total_cmp(&b.1.x)
            .then(a.1.y.total_cmp(&b.1.y))
            .then(a.1.z.total_cmp(&b.1.z))
            .then(a.0.cmp(&b.0))
    });
    let mut centers: Vec<Vec3> = (0..k).map(|i| sorted[(2 * i + 1) * n / (2 * k)].1).collect();
    let mut labels = vec![usize::MAX; n];

    for _ in 0..MAX_ITERS {
        let mut changed = false;
        for (i, (_, p)) in points.iter().enumerate() {
            let best = nearest(&centers, p);
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        // refill empty clusters with the worst-fit point of a multi-member cluster
        for c in 0..k {
            if labels.contains(&c) {
                continue;
            }
            let mut counts = vec![0usize; k];
            for &l in &labels {
                counts[l] += 1;
            }
            let donor = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| {
                    let da = (points[a].1 - centers[labels[a]]).norm_squared();
                    let db = (points[b].1 - centers[labels[b]]).norm_squared();
                    da.total_cmp(&db).then(points[b].0.cmp(&points[a].0))
                });
            if let Some(i) = donor {
                labels[i] = c;
                centers[c] = points[i].1;
                changed = true;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let mut sum = Vec3::zeros();
            let mut count = 0usize;
            for (i, (_, p)) in points.iter().enumerate() {
                if labels[i] == c {
                    sum += p;
                    count += 1;
                }
            }
            if count > 0 {
                *center = sum / count as f64;
            }
        }
        if !changed {
            break;
        }
    }

    let mut clusters: Vec<Vec<u32>> = vec![Vec::new(); k];
    for (i, (id, _)) in points.iter().enumerate() {
        clusters[labels[i]].push(*id);
    }
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.retain(|c| !c.is_empty());
    clusters.sort_by_key(|c| c[0]);
    clusters
}

fn nearest(centers: &[Vec3], p: &Vec3) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = (p - center).norm_squared();
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Sum of squared distances from each point to its cluster mean.
pub fn within_cluster_sse(points: &[(u32, Vec3)], clusters: &[Vec<u32>]) -> f64 {
    clusters
        .iter()
        .map(|members| {
            let ps: Vec<Vec3> = members
                .iter()
                .filter_map(|id| points.iter().find(|(pid, _)| pid == id).map(|(_, p)| *p))
                .collect();
            let mean = ps.iter().fold(Vec3::zeros(), |a, p| a + p) / ps.len().max(1) as f64;
            ps.iter().map(|p| (p - mean).norm_squared()).sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Vec<(u32, Vec3)> {
        let centers = [Vec3::new(0.0, 0.0, 10.0), Vec3::new(60.0, 5.0, 10.0), Vec3::new(20.0, 70.0, 10.0)];
        let offsets = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 1.5, 0.0), Vec3::new(0.5, -2.0, 0.0)];
        // interleave ids across blobs so the answer is not the id order
        let mut pts = Vec::new();
        for (j, o) in offsets.iter().enumerate() {
            for (b, c) in centers.iter().enumerate() {
                pts.push(((j * 3 + b) as u32, c + o));
            }
        }
        pts
    }

    #[test]
    fn k_one_and_k_n() {
        let pts = blobs();
        let one = kmeans_partition(&pts, 1);
        assert_eq!(one, vec![(0..9).collect::<Vec<u32>>()]);
        let all = kmeans_partition(&pts, 9);
        assert_eq!(all.len(), 9);
        assert!(all.iter().all(|c| c.len() == 1));
    }

    #[test]
    fn separated_blobs_are_recovered_and_optimal() {
        let pts = blobs();
        let got = kmeans_partition(&pts, 3);
        assert_eq!(got, vec![vec![0, 3, 6], vec![1, 4, 7], vec![2, 5, 8]]);

        // exhaustive oracle over all 3^9 labelings with three non-empty groups
        let mut best = f64::INFINITY;
        let mut best_clusters = Vec::new();
        for code in 0..3usize.pow(9) {
            let mut clusters = vec![Vec::new(); 3];
            let mut c = code;
            for (id, _) in &pts {
                clusters[c % 3].push(*id);
                c /= 3;
            }
            if clusters.iter().any(|g| g.is_empty()) {
                continue;
            }
            let sse = within_cluster_sse(&pts, &clusters);
            if sse < best - 1e-9 {
                best = sse;
                clusters.sort_by_key(|g| g[0]);
                best_clusters = clusters;
            }
        }
        assert_eq!(best_clusters, got);
    }
}
