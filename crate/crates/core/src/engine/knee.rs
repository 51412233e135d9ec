use crate::objectives::ObjectiveVector;

/// Index of the knee of a two-objective front.
///
/// Objectives are rescaled to `[0, 1]` over the front; the knee is the point
/// farthest from the line through the two extreme points. Ties, and fronts of
/// one or two points, resolve to the smallest normalized `f_cp`.
pub fn knee_point(front: &[ObjectiveVector]) -> usize {
    assert!(!front.is_empty(), "knee of an empty front");
    let norm = normalize(front);
    let by_cp = |a: usize, b: usize| {
        norm[a][0]
            .total_cmp(&norm[b][0])
            .then(norm[a][1].total_cmp(&norm[b][1]))
            .then(a.cmp(&b))
    };
    let min_cp = (0..front.len()).min_by(|&a, &b| by_cp(a, b)).unwrap();
    if front.len() <= 2 {
        return min_cp;
    }
    let min_sep = (0..front.len())
        .min_by(|&a, &b| {
            norm[a][1]
                .total_cmp(&norm[b][1])
                .then(norm[a][0].total_cmp(&norm[b][0]))
                .then(a.cmp(&b))
        })
        .unwrap();
    let (p, q) = (norm[min_cp], norm[min_sep]);
    let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 {
        return min_cp;
    }
    let distance = |i: usize| ((norm[i][0] - p[0]) * dy - (norm[i][1] - p[1]) * dx).abs() / len;
    let mut best = min_cp;
    let mut best_d = distance(min_cp);
    for i in 0..front.len() {
        let d = distance(i);
        if d > best_d || (d == best_d && by_cp(i, best).is_lt()) {
            best = i;
            best_d = d;
        }
    }
    best
}

pub(crate) fn normalize(front: &[ObjectiveVector]) -> Vec<[f64; 2]> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for o in front {
        for (k, v) in o.as_array().into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    front
        .iter()
        .map(|o| {
            let v = o.as_array();
            let mut out = [0.0; 2];
            for k in 0..2 {
                let span = hi[k] - lo[k];
                out[k] = if span > 0.0 { (v[k] - lo[k]) / span } else { 0.0 };
            }
            out
        })
        .collect()
}
