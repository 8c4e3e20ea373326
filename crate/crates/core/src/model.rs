//! State types and rate functions of the two-locus Moran chain.
//!
//! Everything in this module is a pure function of its arguments; nothing
//! here samples randomness or mutates shared state, so all of it is safe to
//! call concurrently.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid population state: {0}")]
    InvalidState(String),
    #[error("subtype ledger inconsistent with population state: {0}")]
    InvalidLedger(String),
}

/// Model configuration `(N, mu, s, r)`.
///
/// `mu = 0` is accepted so that the simulator can run mutation-free chains
/// (they absorb instead of fixing); the closed-form analytics that need
/// `mu > 0` reject it themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameters {
    pub n_individuals: u64,
    pub mutation_rate: f64,
    pub selection: f64,
    pub recombination_prob: f64,
}

impl Parameters {
    pub fn new(
        n_individuals: u64,
        mutation_rate: f64,
        selection: f64,
        recombination_prob: f64,
    ) -> Result<Self, ModelError> {
        if n_individuals < 2 {
            return Err(ModelError::InvalidParameters(format!(
                "N must be at least 2, got {n_individuals}"
            )));
        }
        if !(0.0..1.0).contains(&mutation_rate) {
            return Err(ModelError::InvalidParameters(format!(
                "mu must lie in [0, 1), got {mutation_rate}"
            )));
        }
        if !(selection > 0.0 && selection <= 0.5) {
            return Err(ModelError::InvalidParameters(format!(
                "s must lie in (0, 1/2], got {selection}"
            )));
        }
        if !(0.0..1.0).contains(&recombination_prob) {
            return Err(ModelError::InvalidParameters(format!(
                "r must lie in [0, 1), got {recombination_prob}"
            )));
        }
        Ok(Self {
            n_individuals,
            mutation_rate,
            selection,
            recombination_prob,
        })
    }

    /// Non-fatal advisories (the chain is well-defined either way).
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.n_individuals % 2 != 0 {
            w.push(format!(
                "N = {} is odd; N chromosomes are usually read as N/2 diploid organisms",
                self.n_individuals
            ));
        }
        if self.mutation_rate == 0.0 {
            w.push("mu = 0: the chain cannot fix from an all-wild-type start".to_string());
        }
        w
    }

    #[inline]
    pub fn n_f64(&self) -> f64 {
        self.n_individuals as f64
    }
}

/// Integer counts of the four types plus the current model time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationState {
    pub x0: u64,
    pub x1: u64,
    pub x2: u64,
    pub x3: u64,
    pub time: f64,
}

impl PopulationState {
    pub fn new(x0: u64, x1: u64, x2: u64, x3: u64, time: f64) -> Self {
        Self {
            x0,
            x1,
            x2,
            x3,
            time,
        }
    }

    /// All-`ab` population at time 0.
    pub fn all_wild(n: u64) -> Self {
        Self::new(n, 0, 0, 0, 0.0)
    }

    pub fn total(&self) -> u64 {
        self.x0 + self.x1 + self.x2 + self.x3
    }

    pub fn validate(&self, params: &Parameters) -> Result<(), ModelError> {
        if self.total() != params.n_individuals {
            return Err(ModelError::InvalidState(format!(
                "counts sum to {}, expected N = {}",
                self.total(),
                params.n_individuals
            )));
        }
        if !(self.time.is_finite() && self.time >= 0.0) {
            return Err(ModelError::InvalidState(format!(
                "time must be finite and nonnegative, got {}",
                self.time
            )));
        }
        Ok(())
    }

    pub fn count(&self, ty: usize) -> u64 {
        match ty {
            0 => self.x0,
            1 => self.x1,
            2 => self.x2,
            3 => self.x3,
            _ => panic!("type index out of range: {ty}"),
        }
    }

    /// Fractions `(x0, x1, x2, x3) / N`.
    #[inline]
    pub fn fractions(&self, params: &Parameters) -> [f64; 4] {
        let inv_n = 1.0 / params.n_f64();
        [
            self.x0 as f64 * inv_n,
            self.x1 as f64 * inv_n,
            self.x2 as f64 * inv_n,
            self.x3 as f64 * inv_n,
        ]
    }

    pub fn simplex_point(&self, params: &Parameters) -> SimplexPoint {
        let f = self.fractions(params);
        SimplexPoint::new(f[1], f[2], f[3])
    }
}

/// A point `(xi1, xi2, xi3)` of the 3-simplex; `xi0 = 1 - xi1 - xi2 - xi3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexPoint {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
}

impl SimplexPoint {
    pub fn new(xi1: f64, xi2: f64, xi3: f64) -> Self {
        Self { xi1, xi2, xi3 }
    }

    #[inline]
    pub fn xi0(&self) -> f64 {
        1.0 - self.xi1 - self.xi2 - self.xi3
    }

    pub fn on_simplex(&self, tol: f64) -> bool {
        self.xi1 >= -tol
            && self.xi2 >= -tol
            && self.xi3 >= -tol
            && self.xi1 + self.xi2 + self.xi3 <= 1.0 + tol
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.xi1, self.xi2, self.xi3]
    }
}

// The twelve state-changing channels, indexed as (source type -> born type).
pub const CH_0TO1: usize = 0;
pub const CH_0TO2: usize = 1;
pub const CH_0TO3: usize = 2;
pub const CH_1TO0: usize = 3;
pub const CH_1TO2: usize = 4;
pub const CH_1TO3: usize = 5;
pub const CH_2TO0: usize = 6;
pub const CH_2TO1: usize = 7;
pub const CH_2TO3: usize = 8;
pub const CH_3TO0: usize = 9;
pub const CH_3TO1: usize = 10;
pub const CH_3TO2: usize = 11;

/// `(dying type, born type)` per channel.
pub const CHANNEL_JUMPS: [(usize, usize); 12] = [
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 0),
    (1, 2),
    (1, 3),
    (2, 0),
    (2, 1),
    (2, 3),
    (3, 0),
    (3, 1),
    (3, 2),
];

pub const CHANNEL_NAMES: [&str; 12] = [
    "0->1", "0->2", "0->3", "1->0", "1->2", "1->3", "2->0", "2->1", "2->3", "3->0", "3->1", "3->2",
];

/// Squared Euclidean jump size in `(xi1, xi2, xi3)` coordinates, in units of
/// `1/N^2`. Channels touching type 0 move one explicit coordinate; the
/// others move two.
const JUMP_NORM2_UNITS: [f64; 12] = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0, 2.0, 2.0, 1.0, 2.0, 2.0];

/// Aggregated rates of the twelve state-changing transitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRates {
    pub rates: [f64; 12],
    pub total: f64,
}

impl ChannelRates {
    pub fn rate(&self, ch: usize) -> f64 {
        self.rates[ch]
    }
}

/// Probability that a replacement born at fractions `fr` has each type.
///
/// Written as `f_i = xi_i * phi_i + founder_i`: the first term covers births
/// that copy (or effectively copy) a type-`i` parent, the second the
/// recombinant combinations that assemble type `i` out of two other types
/// (`A` from a 3 with `b` from a 0 for types 1 and 2; `A` from a 1 with `B`
/// from a 2 for type 3, and its mirror image for type 0). The four values
/// sum to 1 up to rounding.
#[inline]
pub fn replacement_probs(fr: &[f64; 4], r: f64) -> [f64; 4] {
    let founder_03 = r * fr[0] * fr[3];
    let founder_12 = r * fr[1] * fr[2];
    [
        fr[0] * (1.0 - r * fr[3]) + founder_12,
        fr[1] * (1.0 - r * fr[2]) + founder_03,
        fr[2] * (1.0 - r * fr[1]) + founder_03,
        fr[3] * (1.0 - r * fr[0]) + founder_12,
    ]
}

/// Per-capita death weights by type: `1, 1-s, 1-s, 1-2s`.
#[inline]
pub fn death_weights(s: f64) -> [f64; 4] {
    [1.0, 1.0 - s, 1.0 - s, 1.0 - 2.0 * s]
}

/// The twelve aggregated channel rates at `state`.
///
/// A channel `i -> j` fires when a type-`i` individual dies (rate
/// `w_i * x_i`) and the replacement is type `j` (probability `f_j`), plus
/// the in-place allele mutations folded into `0->1`, `0->2`, `1->3` and
/// `2->3` at rate `mu` per eligible allele. `total` may be zero, which
/// signals an absorbing state.
#[inline]
pub fn channel_rates(state: &PopulationState, params: &Parameters) -> ChannelRates {
    let fr = state.fractions(params);
    let f = replacement_probs(&fr, params.recombination_prob);
    let mu = params.mutation_rate;
    let s = params.selection;

    let x0 = state.x0 as f64;
    let d1 = (1.0 - s) * state.x1 as f64;
    let d2 = (1.0 - s) * state.x2 as f64;
    let d3 = (1.0 - 2.0 * s) * state.x3 as f64;

    let rates = [
        x0 * f[1] + mu * x0,
        x0 * f[2] + mu * x0,
        x0 * f[3],
        d1 * f[0],
        d1 * f[2],
        d1 * f[3] + mu * state.x1 as f64,
        d2 * f[0],
        d2 * f[1],
        d2 * f[3] + mu * state.x2 as f64,
        d3 * f[0],
        d3 * f[1],
        d3 * f[2],
    ];
    let mut total = 0.0;
    for r in rates {
        total += r;
    }
    ChannelRates { rates, total }
}

/// Drift vector `beta(xi)` of the rescaled chain, one component per type
/// 1, 2, 3.
///
/// `N * beta(xi)` equals, coordinate by coordinate, the net rate (up-jumps
/// minus down-jumps) out of [`channel_rates`] at the matching counts.
pub fn drift(xi: &SimplexPoint, params: &Parameters) -> [f64; 3] {
    let s = params.selection;
    let r = params.recombination_prob;
    let mu = params.mutation_rate;
    let (x1, x2, x3) = (xi.xi1, xi.xi2, xi.xi3);
    let x0 = xi.xi0();
    let gamma = gamma_s(xi, s);
    let lin = 1.0 - x1 - x2 - 2.0 * x3;
    [
        s * lin * x1 + r * gamma + mu * (x0 - x1),
        s * lin * x2 + r * gamma + mu * (x0 - x2),
        s * (2.0 - x1 - x2 - 2.0 * x3) * x3 - r * gamma + mu * (x1 + x2),
    ]
}

/// `gamma_s(xi) = (xi0*xi3 - xi1*xi2) * (1 - s*xi1 - s*xi2 - 2s*xi3)`, the
/// linkage-disequilibrium flux moved by recombination.
pub fn gamma_s(xi: &SimplexPoint, s: f64) -> f64 {
    let w = 1.0 - s * xi.xi1 - s * xi.xi2 - 2.0 * s * xi.xi3;
    (xi.xi0() * xi.xi3 - xi.xi1 * xi.xi2) * w
}

/// Upper bound `48/N` on the jump-noise intensity `alpha`.
pub fn noise_bound(params: &Parameters) -> f64 {
    48.0 / params.n_f64()
}

/// Exact `alpha(xi) = sum |jump|^2 * rate` over the twelve channels.
pub fn alpha_exact(state: &PopulationState, params: &Parameters) -> f64 {
    let ch = channel_rates(state, params);
    let inv_n2 = 1.0 / (params.n_f64() * params.n_f64());
    let mut a = 0.0;
    for (units, rate) in JUMP_NORM2_UNITS.iter().zip(&ch.rates) {
        a += units * inv_n2 * rate;
    }
    a
}

/// Per-capita growth rates `(G0, G1, G2, G3)` of lineage-counting processes
/// at the state's fractions.
pub fn growth_rates(state: &PopulationState, params: &Parameters) -> [f64; 4] {
    let fr = state.fractions(params);
    let s = params.selection;
    let r = params.recombination_prob;
    let mu = params.mutation_rate;
    let w = 1.0 - s * fr[1] - s * fr[2] - 2.0 * s * fr[3];
    let lin = 1.0 - fr[1] - fr[2] - 2.0 * fr[3];
    [
        -s * (fr[1] + fr[2] + 2.0 * fr[3]) - r * fr[3] * w - 2.0 * mu,
        s * lin - r * fr[2] * w - mu,
        s * lin - r * fr[1] * w - mu,
        s * (2.0 - fr[1] - fr[2] - 2.0 * fr[3]) - r * fr[0] * w,
    ]
}

/// Per-origin counts: each non-wild individual descends from either a
/// mutation-born founder (`m`) or a recombination-born founder (`r`);
/// type 0 additionally splits off descendants of recombination-born `ab`
/// founders (`x0r`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SubtypeLedger {
    pub x1m: u64,
    pub x1r: u64,
    pub x2m: u64,
    pub x2r: u64,
    pub x3m: u64,
    pub x3r: u64,
    pub x0r: u64,
}

impl SubtypeLedger {
    /// Ledger for a starting state: pre-existing individuals count as
    /// mutation-origin, type 0 as original stock.
    pub fn for_initial_state(state: &PopulationState) -> Self {
        Self {
            x1m: state.x1,
            x2m: state.x2,
            x3m: state.x3,
            ..Self::default()
        }
    }

    pub fn x0_founder(&self, state: &PopulationState) -> u64 {
        state.x0 - self.x0r
    }

    pub fn validate_against(&self, state: &PopulationState) -> Result<(), ModelError> {
        let checks = [
            (self.x1m.checked_add(self.x1r), state.x1, "x1"),
            (self.x2m.checked_add(self.x2r), state.x2, "x2"),
            (self.x3m.checked_add(self.x3r), state.x3, "x3"),
        ];
        for (sum, expect, name) in checks {
            if sum != Some(expect) {
                return Err(ModelError::InvalidLedger(format!(
                    "{name} subtype counts do not sum to the aggregate count {expect}"
                )));
            }
        }
        if self.x0r > state.x0 {
            return Err(ModelError::InvalidLedger(format!(
                "x0r = {} exceeds x0 = {}",
                self.x0r, state.x0
            )));
        }
        Ok(())
    }

    /// Aggregate counts implied by the ledger (integer sums).
    pub fn collapse(&self, x0: u64, time: f64) -> PopulationState {
        PopulationState::new(
            x0,
            self.x1m + self.x1r,
            self.x2m + self.x2r,
            self.x3m + self.x3r,
            time,
        )
    }
}

/// Lineage-resolved transition rates.
///
/// `channel_split[ch]` decomposes the aggregate rate of channel `ch` by the
/// newborn's lineage: `[0]` collects births attributed to an `m`-lineage
/// parent (for a type-0 newborn: to the original stock) plus the mutation
/// fold-in, `[1]` births attributed to an `r`-lineage parent plus the
/// recombinant-founder combination. The two entries of each channel sum to
/// the aggregate channel rate.
///
/// `m*` / `r*` are the founder-creation rates themselves and
/// `birth_total` / `death_total` the per-subtype birth and death flows
/// (order `1m, 1r, 2m, 2r, 3m, 3r, 0r`); unlike the channel split these
/// also count replacements inside one type, which leave the aggregate state
/// unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct SubtypeChannelRates {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r0: f64,
    pub birth_total: [f64; 7],
    pub death_total: [f64; 7],
    pub channel_split: [[f64; 2]; 12],
}

pub const SUBTYPE_NAMES: [&str; 7] = ["1m", "1r", "2m", "2r", "3m", "3r", "0r"];

pub fn subtype_channel_rates(
    state: &PopulationState,
    ledger: &SubtypeLedger,
    params: &Parameters,
) -> Result<SubtypeChannelRates, ModelError> {
    ledger.validate_against(state)?;
    let n = params.n_f64();
    let inv_n = 1.0 / n;
    let fr = state.fractions(params);
    let s = params.selection;
    let r = params.recombination_prob;
    let mu = params.mutation_rate;
    let w1 = 1.0 - s;
    let w3 = 1.0 - 2.0 * s;

    let f1m = ledger.x1m as f64 * inv_n;
    let f1r = ledger.x1r as f64 * inv_n;
    let f2m = ledger.x2m as f64 * inv_n;
    let f2r = ledger.x2r as f64 * inv_n;
    let f3m = ledger.x3m as f64 * inv_n;
    let f3r = ledger.x3r as f64 * inv_n;
    let f0r = ledger.x0r as f64 * inv_n;
    let f0f = ledger.x0_founder(state) as f64 * inv_n;

    let phi0 = 1.0 - r * fr[3];
    let phi1 = 1.0 - r * fr[2];
    let phi2 = 1.0 - r * fr[1];
    let phi3 = 1.0 - r * fr[0];
    let founder_03 = r * fr[0] * fr[3];
    let founder_12 = r * fr[1] * fr[2];

    // Newborn-type probabilities split by lineage attribution.
    let p1 = [f1m * phi1, f1r * phi1 + founder_03];
    let p2 = [f2m * phi2, f2r * phi2 + founder_03];
    let p3 = [f3m * phi3, f3r * phi3 + founder_12];
    let p0 = [f0f * phi0, f0r * phi0 + founder_12];

    let x0 = state.x0 as f64;
    let d1 = w1 * state.x1 as f64;
    let d2 = w1 * state.x2 as f64;
    let d3 = w3 * state.x3 as f64;
    let mu_x0 = mu * x0;

    let channel_split = [
        [x0 * p1[0] + mu_x0, x0 * p1[1]],
        [x0 * p2[0] + mu_x0, x0 * p2[1]],
        [x0 * p3[0], x0 * p3[1]],
        [d1 * p0[0], d1 * p0[1]],
        [d1 * p2[0], d1 * p2[1]],
        [d1 * p3[0] + mu * state.x1 as f64, d1 * p3[1]],
        [d2 * p0[0], d2 * p0[1]],
        [d2 * p1[0], d2 * p1[1]],
        [d2 * p3[0] + mu * state.x2 as f64, d2 * p3[1]],
        [d3 * p0[0], d3 * p0[1]],
        [d3 * p1[0], d3 * p1[1]],
        [d3 * p2[0], d3 * p2[1]],
    ];

    // Founder-creation rates: the whole death flow of everyone outside the
    // nascent lineage, times the founding combination probability.
    let death_all = x0 + d1 + d2 + d3;
    let r1 = (death_all - w1 * ledger.x1r as f64) * founder_03;
    let r2 = (death_all - w1 * ledger.x2r as f64) * founder_03;
    let r3 = (death_all - w3 * ledger.x3r as f64) * founder_12;
    let r0 = (death_all - ledger.x0r as f64) * founder_12;

    // Per-subtype birth/death totals (per-capita form times count).
    let sub_counts = [
        ledger.x1m, ledger.x1r, ledger.x2m, ledger.x2r, ledger.x3m, ledger.x3r, ledger.x0r,
    ];
    let sub_fracs = [f1m, f1r, f2m, f2r, f3m, f3r, f0r];
    let sub_phi = [phi1, phi1, phi2, phi2, phi3, phi3, phi0];
    let sub_w = [w1, w1, w1, w1, w3, w3, 1.0];
    // Mutation leaves types 1 and 2 at rate mu per individual, type 0 at
    // rate 2*mu; recombinant lineages additionally exclude their own
    // founding combination from the death side.
    let sub_mu_out = [mu, mu, mu, mu, 0.0, 0.0, 2.0 * mu];
    let sub_refound = [
        0.0, founder_03, 0.0, founder_03, 0.0, founder_12, founder_12,
    ];

    let mut birth_total = [0.0; 7];
    let mut death_total = [0.0; 7];
    for i in 0..7 {
        let cnt = sub_counts[i] as f64;
        let nonself = death_all - sub_w[i] * cnt;
        birth_total[i] = nonself * sub_fracs[i] * sub_phi[i];
        death_total[i] = (sub_w[i]
            * (1.0 - sub_fracs[i] + (1.0 - sub_phi[i]) * sub_fracs[i] - sub_refound[i])
            + sub_mu_out[i])
            * cnt;
    }

    Ok(SubtypeChannelRates {
        m1: mu_x0,
        m2: mu_x0,
        m3: mu * (state.x1 + state.x2) as f64,
        r1,
        r2,
        r3,
        r0,
        birth_total,
        death_total,
        channel_split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u64, mu: f64, s: f64, r: f64) -> Parameters {
        Parameters::new(n, mu, s, r).unwrap()
    }

    #[test]
    fn parameter_bounds() {
        assert!(Parameters::new(1, 0.1, 0.1, 0.0).is_err());
        assert!(Parameters::new(10, 1.0, 0.1, 0.0).is_err());
        assert!(Parameters::new(10, 0.1, 0.0, 0.0).is_err());
        assert!(Parameters::new(10, 0.1, 0.6, 0.0).is_err());
        assert!(Parameters::new(10, 0.1, 0.1, 1.0).is_err());
        assert!(Parameters::new(10, 0.0, 0.5, 0.99).is_ok());
        assert!(!params(11, 0.1, 0.1, 0.0).warnings().is_empty());
        assert!(params(12, 0.1, 0.1, 0.0).warnings().is_empty());
    }

    #[test]
    fn all_wild_state_has_only_mutation_channels() {
        let p = params(100, 1e-3, 0.1, 0.2);
        let st = PopulationState::all_wild(100);
        let ch = channel_rates(&st, &p);
        let mu_n = 1e-3 * 100.0;
        assert_eq!(ch.rates[CH_0TO1], mu_n);
        assert_eq!(ch.rates[CH_0TO2], mu_n);
        for i in 2..12 {
            assert_eq!(ch.rates[i], 0.0, "channel {}", CHANNEL_NAMES[i]);
        }
        assert_eq!(ch.total, 2.0 * mu_n);
    }

    #[test]
    fn all_type1_state_has_only_mutation_to_type3() {
        let p = params(64, 2e-3, 0.05, 0.3);
        let st = PopulationState::new(0, 64, 0, 0, 0.0);
        let ch = channel_rates(&st, &p);
        for i in 0..12 {
            let expect = if i == CH_1TO3 { 2e-3 * 64.0 } else { 0.0 };
            assert_eq!(ch.rates[i], expect, "channel {}", CHANNEL_NAMES[i]);
        }
    }

    #[test]
    fn fixed_state_is_absorbing() {
        let p = params(50, 1e-2, 0.1, 0.4);
        let st = PopulationState::new(0, 0, 0, 50, 0.0);
        let ch = channel_rates(&st, &p);
        assert_eq!(ch.total, 0.0);
    }

    #[test]
    fn source_zero_channels_are_exactly_zero() {
        let p = params(10, 1e-2, 0.1, 0.25);
        let st = PopulationState::new(2, 4, 0, 4, 0.0);
        let ch = channel_rates(&st, &p);
        for (i, (src, _)) in CHANNEL_JUMPS.iter().enumerate() {
            if st.count(*src) == 0 {
                assert_eq!(ch.rates[i], 0.0, "channel {}", CHANNEL_NAMES[i]);
            }
        }
        // Recombination can still create missing types from present ones.
        assert!(ch.rates[CH_1TO2] > 0.0 || ch.rates[CH_3TO2] > 0.0);
    }

    #[test]
    fn replacement_probs_sum_to_one() {
        let cases = [
            [0.25, 0.25, 0.25, 0.25],
            [0.1, 0.2, 0.3, 0.4],
            [0.0, 0.5, 0.5, 0.0],
            [0.97, 0.01, 0.01, 0.01],
        ];
        for fr in cases {
            for r in [0.0, 0.3, 0.99] {
                let f = replacement_probs(&fr, r);
                let sum: f64 = f.iter().sum();
                assert!((sum - 1.0).abs() < 1e-14, "sum = {sum}");
                assert!(f.iter().all(|v| *v >= 0.0));
            }
        }
    }

    #[test]
    fn drift_examples() {
        let p = params(1000, 1e-4, 0.1, 0.01);
        // Origin: only the mutation inflow moves.
        let b = drift(&SimplexPoint::new(0.0, 0.0, 0.0), &p);
        assert_eq!(b, [1e-4, 1e-4, 0.0]);
        // All-AB vertex is a fixed point even with mu > 0.
        let b = drift(&SimplexPoint::new(0.0, 0.0, 1.0), &p);
        assert_eq!(b, [0.0, 0.0, 0.0]);
        // Origin with mu = 0 is a fixed point of the fluid limit.
        let p0 = params(1000, 0.0, 0.1, 0.01);
        assert_eq!(
            drift(&SimplexPoint::new(0.0, 0.0, 0.0), &p0),
            [0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn noise_bound_and_alpha_at_all_wild() {
        let p = params(48, 1e-3, 0.1, 0.2);
        assert_eq!(noise_bound(&p), 1.0);
        // Two active channels of rate mu*N, each moving one coordinate by 1/N.
        let a = alpha_exact(&PopulationState::all_wild(48), &p);
        let expect = 2.0 * (1e-3 * 48.0) / (48.0 * 48.0);
        assert!((a - expect).abs() < 1e-18);
    }

    #[test]
    fn growth_rates_examples() {
        // r = 0: the all-wild state gives G1 = s - mu and G3 = 2s.
        let p = params(100, 1e-3, 0.1, 0.0);
        let g = growth_rates(&PopulationState::all_wild(100), &p);
        assert!((g[1] - (0.1 - 1e-3)).abs() < 1e-15);
        assert!((g[3] - 0.2).abs() < 1e-15);
        // With recombination the all-wild state pays the r * xi0 drag on G3.
        let pr = params(100, 1e-3, 0.1, 0.02);
        let g = growth_rates(&PopulationState::all_wild(100), &pr);
        assert!((g[3] - (0.2 - 0.02)).abs() < 1e-15);
        // All-AB: G0 = -2s - r(1-2s) - 2mu.
        let g = growth_rates(&PopulationState::new(0, 0, 0, 100, 0.0), &pr);
        let expect = -0.2 - 0.02 * (1.0 - 0.2) - 2e-3;
        assert!((g[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn growth_rate_bounds_under_small_fractions() {
        // When x1, x2, x3 <= eta*N: s - 4*eta*s - r - mu <= G1 <= s and
        // 2s - 4*eta*s - r <= G3 <= 2s.
        let p = params(10_000, 1e-4, 0.05, 1e-3);
        let eta = 0.05;
        let cap = (eta * 10_000.0) as u64;
        let mut seed = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for _ in 0..200 {
            let x1 = next() % (cap + 1);
            let x2 = next() % (cap + 1);
            let x3 = next() % (cap + 1);
            let st = PopulationState::new(10_000 - x1 - x2 - x3, x1, x2, x3, 0.0);
            let g = growth_rates(&st, &p);
            let (s, r, mu) = (0.05, 1e-3, 1e-4);
            assert!(
                g[1] <= s + 1e-15 && g[1] >= s - 4.0 * eta * s - r - mu - 1e-15,
                "G1 = {}",
                g[1]
            );
            assert!(g[2] <= s + 1e-15 && g[2] >= s - 4.0 * eta * s - r - mu - 1e-15);
            assert!(g[3] <= 2.0 * s + 1e-15 && g[3] >= 2.0 * s - 4.0 * eta * s - r - 1e-15);
        }
    }

    #[test]
    fn subtype_founder_rates_vanish_without_sources() {
        let p = params(100, 1e-3, 0.1, 0.2);
        // No type 3 present: no recombinant 1r/2r founders can arise.
        let st = PopulationState::new(40, 30, 30, 0, 0.0);
        let ledger = SubtypeLedger {
            x1m: 30,
            x2m: 30,
            ..Default::default()
        };
        let sr = subtype_channel_rates(&st, &ledger, &p).unwrap();
        assert_eq!(sr.r1, 0.0);
        assert_eq!(sr.r2, 0.0);
        assert!(sr.r3 > 0.0);
        // No type 1 or type 2: no recombinant 3r/0r founders.
        let st = PopulationState::new(60, 0, 0, 40, 0.0);
        let ledger = SubtypeLedger {
            x3m: 40,
            ..Default::default()
        };
        let sr = subtype_channel_rates(&st, &ledger, &p).unwrap();
        assert_eq!(sr.r3, 0.0);
        assert_eq!(sr.r0, 0.0);
        assert!(sr.r1 > 0.0);
    }

    #[test]
    fn subtype_split_collapses_to_channel_rates() {
        let p = params(97, 3e-3, 0.08, 0.15);
        let mut seed = 12345u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for _ in 0..300 {
            let mut parts = [0u64; 8];
            let mut left = 97u64;
            for p in parts.iter_mut().take(7) {
                *p = next() % (left + 1);
                left -= *p;
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
            let x0 = parts[6] + parts[7];
            let st = PopulationState::new(
                x0,
                parts[0] + parts[1],
                parts[2] + parts[3],
                parts[4] + parts[5],
                0.0,
            );
            let agg = channel_rates(&st, &p);
            let sub = subtype_channel_rates(&st, &ledger, &p).unwrap();
            for ch in 0..12 {
                let sum = sub.channel_split[ch][0] + sub.channel_split[ch][1];
                let scale = agg.rates[ch].abs().max(1e-300);
                assert!(
                    (sum - agg.rates[ch]).abs() / scale < 1e-12,
                    "channel {}: split sum {} vs aggregate {}",
                    CHANNEL_NAMES[ch],
                    sum,
                    agg.rates[ch]
                );
            }
            // Integer collapse reproduces the aggregate state, hence
            // bit-identical channel rates.
            let collapsed = ledger.collapse(x0, 0.0);
            assert_eq!(channel_rates(&collapsed, &p), agg);
        }
    }

    #[test]
    fn inconsistent_ledger_is_rejected() {
        let p = params(10, 1e-3, 0.1, 0.1);
        let st = PopulationState::new(5, 3, 1, 1, 0.0);
        let bad = SubtypeLedger {
            x1m: 1,
            x1r: 1, // sums to 2, aggregate says 3
            x2m: 1,
            x3m: 1,
            ..Default::default()
        };
        assert!(matches!(
            subtype_channel_rates(&st, &bad, &p),
            Err(ModelError::InvalidLedger(_))
        ));
    }
}
