//! Independent cross-check implementations used by the test and acceptance
//! suites.
//!
//! Nothing here shares code with the formulas it checks: channel rates are
//! rebuilt from the per-individual description (who dies, who the parents
//! are, which alleles the newborn carries), and the closed forms of
//! [`crate::stochastic`] are checked against direct chain simulations and a
//! first-step linear solve.

use crate::model::{Parameters, PopulationState, SubtypeLedger};
use crate::rng::Xoshiro256PlusPlus;

/// Does an individual of this type carry the beneficial `A` allele?
fn has_a(ty: usize) -> bool {
    ty == 1 || ty == 3
}

/// Does an individual of this type carry the beneficial `B` allele?
fn has_b(ty: usize) -> bool {
    ty == 2 || ty == 3
}

fn newborn_type(a_beneficial: bool, b_beneficial: bool) -> usize {
    match (a_beneficial, b_beneficial) {
        (false, false) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (true, true) => 3,
    }
}

/// Channel rates rebuilt by exhaustive enumeration of the individual-based
/// description: every individual dies at its type's rate; the replacement
/// copies a single uniformly chosen parent with probability `1 - r`, or
/// combines the `a/A` locus of one uniform parent with the `b/B` locus of an
/// independently uniform parent with probability `r`; each wild allele
/// mutates at rate `mu`. Returned in the channel order of
/// [`crate::model::CHANNEL_JUMPS`].
pub fn brute_force_channel_rates(state: &PopulationState, params: &Parameters) -> [f64; 12] {
    let n = params.n_f64();
    let r = params.recombination_prob;
    let mu = params.mutation_rate;
    let death = [
        1.0,
        1.0 - params.selection,
        1.0 - params.selection,
        1.0 - 2.0 * params.selection,
    ];
    let x = [state.x0, state.x1, state.x2, state.x3];

    let mut flow = [[0.0f64; 4]; 4]; // flow[dying][born]
    for dying in 0..4 {
        if x[dying] == 0 {
            continue;
        }
        let death_rate = death[dying] * x[dying] as f64;
        // Replacement without recombination: copy one uniform parent.
        for parent in 0..4 {
            if x[parent] == 0 {
                continue;
            }
            flow[dying][parent] += death_rate * (1.0 - r) * x[parent] as f64 / n;
        }
        // Replacement with recombination: loci from two independent uniform
        // parents (possibly the same individual twice).
        for pa in 0..4 {
            if x[pa] == 0 {
                continue;
            }
            for pb in 0..4 {
                if x[pb] == 0 {
                    continue;
                }
                let born = newborn_type(has_a(pa), has_b(pb));
                flow[dying][born] += death_rate * r * (x[pa] as f64 / n) * (x[pb] as f64 / n);
            }
        }
    }
    // In-place allele mutations.
    flow[0][1] += mu * x[0] as f64;
    flow[0][2] += mu * x[0] as f64;
    flow[1][3] += mu * x[1] as f64;
    flow[2][3] += mu * x[2] as f64;

    let mut out = [0.0f64; 12];
    for (i, (src, dst)) in crate::model::CHANNEL_JUMPS.iter().enumerate() {
        out[i] = flow[*src][*dst];
    }
    out
}

/// Lineage-resolved flows rebuilt by exhaustive enumeration, in the
/// subtype order `1m, 1r, 2m, 2r, 3m, 3r, 0r` of
/// [`crate::model::SUBTYPE_NAMES`].
///
/// `offspring_up[s]` is the total rate of events in which someone outside
/// subtype `s` dies and the newborn descends from an `s` member;
/// `founder_up[s]` the rate at which fresh `s` founders appear (mutations
/// for the `m` lineages, the founding locus combinations for the `r`
/// lineages), again with the dying individual outside `s`; `down[s]` the
/// rate at which `s` loses a member (death with a non-`s` newborn, or a
/// mutation out of `s`).
#[derive(Debug, Clone, Default)]
pub struct SubtypeFlows {
    pub offspring_up: [f64; 7],
    pub founder_up: [f64; 7],
    pub down: [f64; 7],
}

/// Subtype index in the `1m..0r` order; type-0 founder stock is `None`.
fn sub_index(ty: usize, m_side: bool) -> Option<usize> {
    match (ty, m_side) {
        (1, true) => Some(0),
        (1, false) => Some(1),
        (2, true) => Some(2),
        (2, false) => Some(3),
        (3, true) => Some(4),
        (3, false) => Some(5),
        (0, false) => Some(6),
        (0, true) => None,
        _ => unreachable!(),
    }
}

/// Newborn's subtype under the descent rules, given the (type, lineage) of
/// the locus parents; `Err(s)` marks a fresh founder of subtype `s`.
fn newborn_subtype(pa: (usize, bool), pb: (usize, bool)) -> Result<(usize, bool), (usize, bool)> {
    let nt = newborn_type(has_a(pa.0), has_b(pb.0));
    match nt {
        1 => {
            if pa.0 == 1 {
                Ok((1, pa.1))
            } else if pb.0 == 1 {
                Ok((1, pb.1))
            } else {
                Err((1, false)) // A from a 3, b from a 0
            }
        }
        2 => {
            if pb.0 == 2 {
                Ok((2, pb.1))
            } else if pa.0 == 2 {
                Ok((2, pa.1))
            } else {
                Err((2, false))
            }
        }
        3 => {
            if pa.0 == 3 {
                Ok((3, pa.1))
            } else if pb.0 == 3 {
                Ok((3, pb.1))
            } else {
                Err((3, false)) // A from a 1, B from a 2
            }
        }
        _ => {
            if pa.0 == 0 {
                Ok((0, pa.1))
            } else if pb.0 == 0 {
                Ok((0, pb.1))
            } else {
                Err((0, false)) // a from a 2, b from a 1
            }
        }
    }
}

pub fn brute_force_subtype_flows(
    state: &PopulationState,
    ledger: &SubtypeLedger,
    params: &Parameters,
) -> SubtypeFlows {
    let n = params.n_f64();
    let r = params.recombination_prob;
    let mu = params.mutation_rate;
    let death = [
        1.0,
        1.0 - params.selection,
        1.0 - params.selection,
        1.0 - 2.0 * params.selection,
    ];
    // Counts per (type, m-side); type 0's m side is the founder stock.
    let count = |ty: usize, m: bool| -> u64 {
        match (ty, m) {
            (0, true) => ledger.x0_founder(state),
            (0, false) => ledger.x0r,
            (1, true) => ledger.x1m,
            (1, false) => ledger.x1r,
            (2, true) => ledger.x2m,
            (2, false) => ledger.x2r,
            (3, true) => ledger.x3m,
            _ => ledger.x3r,
        }
    };
    let members: Vec<(usize, bool)> = (0..4).flat_map(|ty| [(ty, true), (ty, false)]).collect();

    let mut flows = SubtypeFlows::default();
    for &(dt, dm) in &members {
        let cnt = count(dt, dm);
        if cnt == 0 {
            continue;
        }
        let death_rate = death[dt] * cnt as f64;
        let mut stays = 0.0; // probability the newborn is again (dt, dm)
        let mut credit = |born: Result<(usize, bool), (usize, bool)>, prob: f64| {
            let (slot, founder) = match born {
                Ok(s) => (s, false),
                Err(s) => (s, true),
            };
            if slot == (dt, dm) {
                stays += prob;
                return;
            }
            if let Some(idx) = sub_index(slot.0, slot.1) {
                if founder {
                    flows.founder_up[idx] += death_rate * prob;
                } else {
                    flows.offspring_up[idx] += death_rate * prob;
                }
            }
        };
        // Clone of one uniform parent.
        for &(pt, pm) in &members {
            let p = count(pt, pm) as f64 / n;
            if p > 0.0 {
                credit(Ok((pt, pm)), (1.0 - r) * p);
            }
        }
        // Recombination between two independent uniform parents.
        for &pa in &members {
            let p_a = count(pa.0, pa.1) as f64 / n;
            if p_a == 0.0 {
                continue;
            }
            for &pb in &members {
                let p_b = count(pb.0, pb.1) as f64 / n;
                if p_b > 0.0 {
                    credit(newborn_subtype(pa, pb), r * p_a * p_b);
                }
            }
        }
        if let Some(idx) = sub_index(dt, dm) {
            flows.down[idx] += death_rate * (1.0 - stays);
        }
    }

    // In-place mutations: founders in, departures out.
    flows.founder_up[0] += mu * state.x0 as f64; // 1m
    flows.founder_up[2] += mu * state.x0 as f64; // 2m
    flows.founder_up[4] += mu * (state.x1 + state.x2) as f64; // 3m
    flows.down[0] += mu * ledger.x1m as f64;
    flows.down[1] += mu * ledger.x1r as f64;
    flows.down[2] += mu * ledger.x2m as f64;
    flows.down[3] += mu * ledger.x2r as f64;
    flows.down[6] += 2.0 * mu * ledger.x0r as f64;
    flows
}

/// All states of a population of size `n` (including time 0 stamps).
pub fn enumerate_states(n: u64) -> Vec<PopulationState> {
    let mut states = Vec::new();
    for x0 in 0..=n {
        for x1 in 0..=(n - x0) {
            for x2 in 0..=(n - x0 - x1) {
                states.push(PopulationState::new(x0, x1, x2, n - x0 - x1 - x2, 0.0));
            }
        }
    }
    states
}

/// Monte Carlo estimate (mean, standard error) of the survival probability
/// at time `t` of the linear birth-death chain with per-capita birth rate 1
/// and death rate `1 - gap`, started from `initial` individuals.
pub fn mc_bd_survival(gap: f64, t: f64, initial: u64, trials: u64, seed: u64) -> (f64, f64) {
    let mut rng = Xoshiro256PlusPlus::from_seed(seed);
    let death = 1.0 - gap;
    let mut survived = 0u64;
    for _ in 0..trials {
        let mut k = initial;
        let mut clock = 0.0;
        loop {
            if k == 0 {
                break;
            }
            let total = k as f64 * (1.0 + death);
            clock += rng.next_exp(total);
            if clock >= t {
                survived += 1;
                break;
            }
            if rng.next_f64() * (1.0 + death) < 1.0 {
                k += 1;
            } else {
                k -= 1;
            }
        }
    }
    let p = survived as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    (p, se)
}

/// Monte Carlo estimate (mean, standard error) of the probability that a
/// walk with down-step odds `q` started at `start` hits 0 before
/// `level_up`.
pub fn mc_ruin_before(level_up: u64, start: u64, q: f64, trials: u64, seed: u64) -> (f64, f64) {
    let mut rng = Xoshiro256PlusPlus::from_seed(seed);
    let p_down = q / (1.0 + q);
    let mut ruined = 0u64;
    for _ in 0..trials {
        let mut k = start;
        loop {
            if k == 0 {
                ruined += 1;
                break;
            }
            if k == level_up {
                break;
            }
            if rng.next_f64() < p_down {
                k -= 1;
            } else {
                k += 1;
            }
        }
    }
    let p = ruined as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    (p, se)
}

/// Ruin probability by first-step analysis: solves the tridiagonal system
/// `p_k = q/(1+q) p_{k-1} + 1/(1+q) p_{k+1}`, `p_0 = 1`, `p_L = 0`.
pub fn ruin_linear_solve(level_up: u64, start: u64, q: f64) -> f64 {
    let l = level_up as usize;
    if start == 0 {
        return 1.0;
    }
    if start as usize == l {
        return 0.0;
    }
    // Unknowns p_1 .. p_{L-1}; Thomas algorithm on
    // -a p_{k-1} + p_k - c p_{k+1} = 0 with boundary injections.
    let m = l - 1;
    let a = q / (1.0 + q);
    let c = 1.0 / (1.0 + q);
    let mut diag = vec![1.0f64; m];
    let mut rhs = vec![0.0f64; m];
    rhs[0] = a; // p_0 = 1 enters the first equation
                // Forward sweep.
    for i in 1..m {
        let w = -a / diag[i - 1];
        diag[i] -= w * -c;
        rhs[i] -= w * rhs[i - 1];
    }
    // Back substitution.
    let mut p = vec![0.0f64; m];
    p[m - 1] = rhs[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        p[i] = (rhs[i] + c * p[i + 1]) / diag[i];
    }
    p[start as usize - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{alpha_exact, channel_rates, drift, noise_bound, CHANNEL_NAMES};

    #[test]
    fn brute_force_agrees_on_trivial_states() {
        let p = Parameters::new(10, 1e-3, 0.1, 0.2).unwrap();
        let st = PopulationState::all_wild(10);
        let bf = brute_force_channel_rates(&st, &p);
        let ch = channel_rates(&st, &p);
        for i in 0..12 {
            assert!((bf[i] - ch.rates[i]).abs() < 1e-15, "{}", CHANNEL_NAMES[i]);
        }
    }

    #[test]
    fn exhaustive_rate_equivalence_small_populations() {
        for n in 2..=6u64 {
            let p = Parameters::new(n, 7e-3, 0.12, 0.31).unwrap();
            for st in enumerate_states(n) {
                let bf = brute_force_channel_rates(&st, &p);
                let ch = channel_rates(&st, &p);
                for i in 0..12 {
                    assert!(ch.rates[i] >= 0.0 && ch.rates[i].is_finite());
                    let scale = bf[i].abs().max(1e-300);
                    assert!(
                        (bf[i] - ch.rates[i]).abs() / scale < 1e-12,
                        "N={n} state={st:?} channel {}: {} vs {}",
                        CHANNEL_NAMES[i],
                        ch.rates[i],
                        bf[i]
                    );
                }
            }
        }
    }

    #[test]
    fn drift_identity_and_noise_bound_exhaustive() {
        for n in 2..=6u64 {
            let p = Parameters::new(n, 3e-3, 0.09, 0.17).unwrap();
            for st in enumerate_states(n) {
                let ch = channel_rates(&st, &p);
                let beta = drift(&st.simplex_point(&p), &p);
                let mut net = [0.0f64; 3];
                let mut gross = [0.0f64; 3];
                for (i, (src, dst)) in crate::model::CHANNEL_JUMPS.iter().enumerate() {
                    for coord in 0..3 {
                        let ty = coord + 1;
                        if *dst == ty {
                            net[coord] += ch.rates[i];
                            gross[coord] += ch.rates[i];
                        }
                        if *src == ty {
                            net[coord] -= ch.rates[i];
                            gross[coord] += ch.rates[i];
                        }
                    }
                }
                for coord in 0..3 {
                    let want = p.n_f64() * beta[coord];
                    // Scale: the gross flow through the coordinate, floored
                    // at the rounding level of N-sized sums.
                    let scale = gross[coord].max(want.abs()).max(p.n_f64() * 1e-2);
                    assert!(
                        (net[coord] - want).abs() / scale < 1e-12,
                        "N={n} state={st:?} coord {coord}: net {} vs N*beta {}",
                        net[coord],
                        want
                    );
                }
                assert!(alpha_exact(&st, &p) <= noise_bound(&p) + 1e-15);
            }
        }
    }

    #[test]
    fn subtype_flows_match_lineage_rate_forms() {
        use crate::model::{subtype_channel_rates, SUBTYPE_NAMES};
        let p = Parameters::new(60, 4e-3, 0.11, 0.23).unwrap();
        let mut mix = crate::rng::SplitMix64::new(0x5B17);
        for _ in 0..200 {
            let mut parts = [0u64; 8];
            let mut left = 60u64;
            for q in parts.iter_mut().take(7) {
                *q = mix.next_u64() % (left + 1);
                left -= *q;
            }
            parts[7] = left;
            let ledger = SubtypeLedger {
                x1m: parts[0],
                x1r: parts[1],
                x2m: parts[2],
                x2r: parts[3],
                x3m: parts[4],
                x3r: parts[5],
                x0r: parts[6],
            };
            let st = PopulationState::new(
                parts[6] + parts[7],
                parts[0] + parts[1],
                parts[2] + parts[3],
                parts[4] + parts[5],
                0.0,
            );
            let flows = brute_force_subtype_flows(&st, &ledger, &p);
            let rates = subtype_channel_rates(&st, &ledger, &p).unwrap();
            let founders = [
                rates.m1, rates.r1, rates.m2, rates.r2, rates.m3, rates.r3, rates.r0,
            ];
            for i in 0..7 {
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1e-9);
                assert!(
                    close(rates.birth_total[i], flows.offspring_up[i]),
                    "{} births: {} vs oracle {} at {st:?} {ledger:?}",
                    SUBTYPE_NAMES[i],
                    rates.birth_total[i],
                    flows.offspring_up[i]
                );
                assert!(
                    close(rates.death_total[i], flows.down[i]),
                    "{} deaths: {} vs oracle {}",
                    SUBTYPE_NAMES[i],
                    rates.death_total[i],
                    flows.down[i]
                );
                assert!(
                    close(founders[i], flows.founder_up[i]),
                    "{} founders: {} vs oracle {}",
                    SUBTYPE_NAMES[i],
                    founders[i],
                    flows.founder_up[i]
                );
            }
        }
    }

    #[test]
    fn linear_solve_matches_closed_form() {
        for (l, k, q) in [
            (200u64, 50u64, 1.02f64),
            (100, 30, 0.95),
            (50, 25, 1.0 + 1e-9),
        ] {
            let closed = crate::stochastic::ruin_before(l, k, q).unwrap();
            let solved = ruin_linear_solve(l, k, q);
            assert!(
                (closed - solved).abs() < 1e-10,
                "l={l} k={k} q={q}: {closed} vs {solved}"
            );
        }
    }
}
