//! The Noon-Bean transformation of a small random instance: an ATSP tour
//! of the transformed costs decodes to one node per cluster, and its cost
//! minus clusters * M is the cycle cost of that selection.

use kglink::gtsp::{noon_bean, solve_exact_cycle, GtspInstance, DEFAULT_EXACT_BUDGET};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> kglink::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sizes = [2usize, 3, 2];
    let n: usize = sizes.iter().sum();
    let mut cost = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let c = f64::from(rng.gen_range(1..10));
            cost[i][j] = c;
            cost[j][i] = c;
        }
    }
    let inst = GtspInstance::from_costs(&sizes, cost)?;
    let nb = noon_bean(&inst)?;
    println!("{} ATSP nodes, M = {}", nb.atsp.len(), nb.big_m);

    let best = solve_exact_cycle(&inst, DEFAULT_EXACT_BUDGET)?;
    let tour = nb.encode(&best.order, &best.chosen);
    let decoded = nb.decode(&tour);
    let shifted = nb.atsp.tour_cost(&tour) - sizes.len() as f64 * nb.big_m;
    println!("optimal cycle {:?} costs {}", best.order, best.total_cost);
    println!("ATSP tour {tour:?} costs {shifted} after removing the M terms");
    println!("decodes to {:?} (well formed: {})", decoded.chosen, decoded.well_formed);
    assert_eq!(decoded.chosen, best.chosen);
    Ok(())
}
