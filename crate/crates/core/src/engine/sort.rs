//! Fast non-dominated sorting, crowding distance and NSGA-II truncation.

use super::Individual;
use crate::error::{Error, Result};
use crate::objectives::ObjectiveVector;

fn check_flags(objs: &[ObjectiveVector]) -> Result<()> {
    if let Some(first) = objs.first() {
        if objs.iter().any(|o| o.accumulated != first.accumulated) {
            return Err(Error::ContractViolation(
                "plain and accumulated fitness mixed in one sort".into(),
            ));
        }
    }
    Ok(())
}

/// Fronts of indices, best first. Rank of front `k` is `k + 1`.
pub fn nondominated_fronts(objs: &[ObjectiveVector]) -> Result<Vec<Vec<usize>>> {
    check_flags(objs)?;
    let n = objs.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if objs[i].dominates(&objs[j]) {
                dominates[i].push(j);
                dominated_by_count[j] += 1;
            } else if objs[j].dominates(&objs[i]) {
                dominates[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    Ok(fronts)
}

/// 1-based Pareto rank of every vector.
pub fn nondominated_sort(objs: &[ObjectiveVector]) -> Result<Vec<usize>> {
    let mut ranks = vec![0; objs.len()];
    for (k, front) in nondominated_fronts(objs)?.iter().enumerate() {
        for &i in front {
            ranks[i] = k + 1;
        }
    }
    Ok(ranks)
}

/// Crowding distance of each member of `front` (same order as `front`).
pub fn crowding_distances(objs: &[ObjectiveVector], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut out = vec![0.0; m];
    if m <= 2 {
        out.iter_mut().for_each(|d| *d = f64::INFINITY);
        return out;
    }
    for k in 0..2 {
        let key = |i: usize| objs[front[i]].as_array()[k];
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
        let (lo, hi) = (key(order[0]), key(order[m - 1]));
        out[order[0]] = f64::INFINITY;
        out[order[m - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 || !span.is_finite() {
            continue;
        }
        for w in 1..m - 1 {
            let gap = key(order[w + 1]) - key(order[w - 1]);
            out[order[w]] += gap / span;
        }
    }
    out
}

/// Set rank and crowding of every individual in place.
pub fn rank_population(pop: &mut [Individual]) -> Result<()> {
    let objs: Vec<ObjectiveVector> = pop.iter().map(|i| i.objectives).collect();
    for (k, front) in nondominated_fronts(&objs)?.iter().enumerate() {
        let crowd = crowding_distances(&objs, front);
        for (&i, c) in front.iter().zip(crowd) {
            pop[i].rank = k + 1;
            pop[i].crowding = c;
        }
    }
    Ok(())
}

/// Keep the best `n` of `parents ∪ offspring` by rank, then by descending crowding.
pub fn environmental_selection(
    parents: Vec<Individual>,
    offspring: Vec<Individual>,
    n: usize,
) -> Result<Vec<Individual>> {
    let mut union = parents;
    union.extend(offspring);
    let objs: Vec<ObjectiveVector> = union.iter().map(|i| i.objectives).collect();
    let fronts = nondominated_fronts(&objs)?;
    let mut chosen: Vec<(usize, usize, f64)> = Vec::with_capacity(n);
    for (k, front) in fronts.iter().enumerate() {
        if chosen.len() >= n {
            break;
        }
        let crowd = crowding_distances(&objs, front);
        let mut members: Vec<(usize, f64)> = front.iter().copied().zip(crowd).collect();
        if chosen.len() + members.len() > n {
            members.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            members.truncate(n - chosen.len());
        }
        chosen.extend(members.into_iter().map(|(i, c)| (i, k + 1, c)));
    }
    let mut slots: Vec<Option<Individual>> = union.into_iter().map(Some).collect();
    Ok(chosen
        .into_iter()
        .map(|(i, rank, crowding)| {
            let mut ind = slots[i].take().expect("selected once");
            ind.rank = rank;
            ind.crowding = crowding;
            ind
        })
        .collect())
}
