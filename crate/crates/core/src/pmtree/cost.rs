use super::PmTree;
use crate::ann::DistanceDistribution;

impl PmTree {
    /// Expected number of distance computations of a range query with
    /// radius `r_q`: the sum over nodes of `N(e) * Pr[e accessed]` with
    ///
    /// `Pr[e] = F(e.r + r_q) * Π_i [F(HR_i.max + r_q) - F(HR_i.min - r_q)]`.
    ///
    /// `dist` must describe distances in the tree's (projected) space. The
    /// root is always accessed.
    pub fn estimate_range_cost(&self, dist: &DistanceDistribution, r_q: f64) -> f64 {
        let Some(root) = self.root else { return 0.0 };
        let mut total = 0.0;
        self.visit_preorder(|id, node| {
            let entries = node.len() as f64;
            if id == root {
                total += entries;
                return;
            }
            let e = &node.entry;
            let mut p = dist.cdf(e.radius + r_q);
            for ring in &e.rings {
                p *= (dist.cdf(ring.max + r_q) - dist.cdf(ring.min - r_q)).max(0.0);
            }
            total += entries * p;
        });
        total
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::random_points;
    use super::super::{select_pivots, TreeConfig};
    use super::*;
    use crate::ann::build_projected_distribution;

    #[test]
    fn limits() {
        let pts = random_points(2_000, 4, 3);
        let pivots = select_pivots(&pts, 5, 1).unwrap();
        let tree = PmTree::build(&pts, TreeConfig::default(), pivots).unwrap();
        let f = build_projected_distribution(&pts, 20_000, 2).unwrap();
        let mut entries = 0;
        tree.visit_preorder(|_, n| entries += n.len());

        let all = tree.estimate_range_cost(&f, 2.0 * f.max() + 1.0);
        assert_eq!(all, entries as f64);
        let none = tree.estimate_range_cost(&f, 0.0);
        assert!(none < 0.05 * all, "{none} vs {all}");
        let mut prev = 0.0;
        for i in 0..20 {
            let c = tree.estimate_range_cost(&f, f.max() * i as f64 / 19.0);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn empty_tree_costs_nothing() {
        let tree = PmTree::new(3, TreeConfig::default(), super::super::PivotSet::empty()).unwrap();
        let f = DistanceDistribution::from_distances(vec![1.0]).unwrap();
        assert_eq!(tree.estimate_range_cost(&f, 1.0), 0.0);
    }
}
