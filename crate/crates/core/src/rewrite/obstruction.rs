//! Replay of the naive differentiation order on a step-4 group.
//!
//! The naive scheme differentiates by `X_3 X_4` first and then applies one
//! more letter `Z`, assuming every derivative supported on layers 3 and 4 is
//! already controlled. The `f_i` term `A [X_3, X_j] X_4 u` then reappears under
//! `Z`. For `Z = X_2` it still carries one layer-2 derivative, exactly as many
//! as the target `X_2 X_3 X_4 u`, so the estimate would need itself.

use super::expand::{fi_terms, Target};
use super::word::{DerivativeWord, LayerProfile, Letter};
use serde::Serialize;

/// Outcome for one choice of `Z`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ZCase {
    pub z_layer: usize,
    pub term: String,
    pub target_profile: Vec<usize>,
    pub term_profile: Vec<usize>,
    /// Supported on layers 3 and 4, hence known under the naive hypothesis.
    pub covered: bool,
    /// Not covered and as many layer-2 derivatives as the target.
    pub circular: bool,
    #[serde(rename = "W_target")]
    pub w_target: usize,
    #[serde(rename = "W_term")]
    pub w_term: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObstructionReport {
    pub step: usize,
    pub cases: Vec<ZCase>,
    /// Layers of `Z` whose replay is circular.
    pub obstructed: Vec<usize>,
}

/// Replays `Z X_3 X_4` for `Z ∈ {X_2, X_3, X_4}` on step 4.
pub fn naive_order_obstruction() -> ObstructionReport {
    let step = 4;
    let system = LayerProfile::new(step, vec![0, 1, 1]).expect("valid");
    let layers = system.letters_innermost_first();
    let term = fi_terms(&system, 3)
        .into_iter()
        .find(|t| t.target == Target::U)
        .expect("the layer-3 letter leaves one coefficient term");
    let word = term.to_word(&layers);
    let mut cases = Vec::new();
    for z in 2..=4 {
        let mut letters = vec![Letter::Named { layer: z, index: 1 }];
        letters.extend_from_slice(&word.letters);
        let w = DerivativeWord::new(letters);
        let jp = w.profile(step, 2);
        let target = system.add(z, 1);
        let covered = jp.get(2) == 0;
        let circular = !covered && jp.get(2) >= target.get(2);
        cases.push(ZCase {
            z_layer: z,
            term: format!("A {w} u"),
            target_profile: target.counts.clone(),
            term_profile: jp.counts.clone(),
            covered,
            circular,
            w_target: target.measure(),
            w_term: jp.measure(),
        });
    }
    let obstructed = cases.iter().filter(|c| c.circular).map(|c| c.z_layer).collect();
    ObstructionReport { step, cases, obstructed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_layer_two_is_circular() {
        let r = naive_order_obstruction();
        assert_eq!(r.obstructed, vec![2]);
        assert_eq!(r.cases[0].term_profile, vec![1, 0, 2]);
    }
}
