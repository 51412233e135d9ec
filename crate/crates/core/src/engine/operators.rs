//! Variation operators on the flat gene vector.

use rand::Rng;

use super::Individual;
use crate::genome::Genome;

/// Binary tournament on (rank ascending, crowding descending).
pub fn binary_tournament<'a, R: Rng + ?Sized>(pop: &'a [Individual], rng: &mut R) -> &'a Individual {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if a.rank != b.rank {
        return if a.rank < b.rank { a } else { b };
    }
    if a.crowding != b.crowding {
        return if a.crowding > b.crowding { a } else { b };
    }
    if rng.random::<bool>() {
        a
    } else {
        b
    }
}

/// Swap the tails of two gene vectors after position `cut`.
pub fn single_point_crossover(p1: &[f64], p2: &[f64], cut: usize) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(p1.len(), p2.len());
    let mut c1 = p1[..cut].to_vec();
    c1.extend_from_slice(&p2[cut..]);
    let mut c2 = p2[..cut].to_vec();
    c2.extend_from_slice(&p1[cut..]);
    (c1, c2)
}

/// Normalized perturbation of polynomial mutation for a uniform draw `u`.
pub fn polynomial_delta(u: f64, eta: f64) -> f64 {
    if u < 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0)) - 1.0
    } else {
        1.0 - (2.0 * (1.0 - u)).powf(1.0 / (eta + 1.0))
    }
}

/// Mutate each gene with probability `1/len`, clipping into the gene bounds.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    genes: &mut [f64],
    template: &Genome,
    eta: f64,
    rng: &mut R,
) {
    let p = 1.0 / genes.len() as f64;
    for (k, x) in genes.iter_mut().enumerate() {
        if rng.random::<f64>() >= p {
            continue;
        }
        let (lo, hi) = template.gene_bounds(k);
        let delta = polynomial_delta(rng.random::<f64>(), eta);
        *x = (*x + delta * (hi - lo)).clamp(lo, hi);
    }
}
