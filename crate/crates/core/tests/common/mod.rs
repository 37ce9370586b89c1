#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;

use sparse_rom::multiindex::MultiIndex;

/// Grows a downward-closed set by repeatedly adding a random margin index.
pub fn random_set(rng: &mut StdRng, d: usize, n: usize, max_degree: u32) -> Vec<MultiIndex> {
    let mut set = vec![MultiIndex::zero(d)];
    while set.len() < n {
        let mut margin = Vec::new();
        for nu in &set {
            for j in 0..d {
                let mut e = nu.exponents().to_vec();
                e[j] += 1;
                let cand = MultiIndex::new(e).unwrap();
                if cand.total_degree() <= max_degree
                    && !set.contains(&cand)
                    && !margin.contains(&cand)
                    && cand.predecessors().all(|p| set.contains(&p))
                {
                    margin.push(cand);
                }
            }
        }
        if margin.is_empty() {
            break;
        }
        let pick = rng.random_range(0..margin.len());
        set.push(margin.swap_remove(pick));
    }
    set
}
