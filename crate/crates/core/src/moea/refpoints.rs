//! Das–Dennis simplex-lattice reference directions.

#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePointSet {
    pub points: Vec<Vec<f64>>,
    pub divisions: usize,
}

impl ReferencePointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

/// All vectors with components in `{0, 1/p, ..., 1}` summing to one, in
/// lexicographic order. Yields `C(p + m - 1, m - 1)` points.
pub fn generate_reference_points(m: usize, p: usize) -> ReferencePointSet {
    assert!(m >= 1, "reference points need at least one objective");
    let mut points = Vec::new();
    let mut current = Vec::with_capacity(m);
    fill(m, p, p, &mut current, &mut points);
    ReferencePointSet { points, divisions: p }
}

fn fill(m: usize, p: usize, left: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
    if current.len() == m - 1 {
        current.push(left);
        out.push(current.iter().map(|&k| k as f64 / p as f64).collect());
        current.pop();
        return;
    }
    for k in 0..=left {
        current.push(k);
        fill(m, p, left - k, current, out);
        current.pop();
    }
}

/// `C(p + m - 1, m - 1)`.
pub fn reference_point_count(m: usize, p: usize) -> usize {
    let (n, k) = (p + m - 1, m - 1);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}
