//! Ground timeline checking: fully instantiated condition/effect tokens with
//! integer arguments, values and times, checked directly against the timeline
//! semantics (support and coherence). Both the plan validator and the
//! brute-force oracle go through this module, so they agree by construction.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::model::FluentId;

/// A ground state variable: a fluent applied to constant arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundSv {
    pub fluent: FluentId,
    pub args: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundCondition {
    pub sv: GroundSv,
    pub value: i64,
    pub start: i64,
    pub end: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundEffect {
    pub sv: GroundSv,
    pub value: i64,
    pub start: i64,
    pub end: i64,
}

/// Violations reference tokens by their index in the checked slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundViolation {
    /// Two effects impose values on the same state variable over overlapping
    /// intervals `]start, persist]`.
    Overlap { effect_a: usize, effect_b: usize },
    /// No effect establishes the condition's value over its interval.
    Unsupported { condition: usize },
}

/// Checks support and coherence over ground tokens.
///
/// The persistence end of each effect is existential in the constraint model;
/// here it is reconstructed as a canonical witness: each condition is matched
/// to the effect with the latest establishment time `end' <= start` on its
/// state variable (preferring a value match on ties), and every matched
/// effect persists to the latest end of the conditions relying on it.
pub fn check_tokens(
    conditions: &[GroundCondition],
    effects: &[GroundEffect],
    stop_at_first: bool,
) -> Vec<GroundViolation> {
    let mut out = Vec::new();
    let mut persist: Vec<i64> = effects.iter().map(|e| e.end).collect();

    for (ci, cond) in conditions.iter().enumerate() {
        let mut best: Option<usize> = None;
        for (ei, eff) in effects.iter().enumerate() {
            if eff.sv != cond.sv || eff.end > cond.start {
                continue;
            }
            best = Some(match best {
                None => ei,
                Some(prev) => {
                    if better_establisher(effects, ei, prev, cond) {
                        ei
                    } else {
                        prev
                    }
                }
            });
        }
        match best {
            Some(ei) if effects[ei].value == cond.value => {
                if cond.end > persist[ei] {
                    persist[ei] = cond.end;
                }
            }
            _ => {
                out.push(GroundViolation::Unsupported { condition: ci });
                if stop_at_first {
                    return out;
                }
            }
        }
    }

    for a in 0..effects.len() {
        for b in (a + 1)..effects.len() {
            if effects[a].sv != effects[b].sv {
                continue;
            }
            // ]s, t] intervals overlap iff max(s_a, s_b) < min(t_a, t_b)
            let lo = effects[a].start.max(effects[b].start);
            let hi = persist[a].min(persist[b]);
            if lo < hi {
                out.push(GroundViolation::Overlap { effect_a: a, effect_b: b });
                if stop_at_first {
                    return out;
                }
            }
        }
    }

    out
}

/// Candidate ordering for the greedy match: latest establishment first, then
/// a matching value, then content order so that the choice does not depend on
/// the listing order of equal tokens.
fn better_establisher(effects: &[GroundEffect], new: usize, old: usize, cond: &GroundCondition) -> bool {
    let (n, o) = (&effects[new], &effects[old]);
    if n.end != o.end {
        return n.end > o.end;
    }
    let n_match = n.value == cond.value;
    let o_match = o.value == cond.value;
    if n_match != o_match {
        return n_match;
    }
    (n.start, n.value) < (o.start, o.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sv(fluent: u32, args: &[i64]) -> GroundSv {
        GroundSv { fluent: FluentId(fluent), args: args.to_vec() }
    }

    fn eff(f: u32, args: &[i64], value: i64, start: i64, end: i64) -> GroundEffect {
        GroundEffect { sv: sv(f, args), value, start, end }
    }

    fn cond(f: u32, args: &[i64], value: i64, start: i64, end: i64) -> GroundCondition {
        GroundCondition { sv: sv(f, args), value, start, end }
    }

    #[test]
    fn truck_single_step_is_consistent() {
        // init loc(R1) <- L0 at [0,0]; Go transition ]0,10] to L2;
        // start condition at 0 needs L0, goal at 10 needs L2
        let effects = vec![eff(0, &[0], 0, 0, 0), eff(0, &[0], 2, 0, 10)];
        let conditions = vec![cond(0, &[0], 0, 0, 0), cond(0, &[0], 2, 10, 10)];
        assert_eq!(check_tokens(&conditions, &effects, false), vec![]);
    }

    #[test]
    fn unsupported_when_only_wrong_value_exists() {
        let effects = vec![eff(0, &[0], 0, 0, 0)];
        let conditions = vec![cond(0, &[0], 2, 10, 10)];
        assert_eq!(
            check_tokens(&conditions, &effects, false),
            vec![GroundViolation::Unsupported { condition: 0 }]
        );
    }

    #[test]
    fn overlapping_transitions_on_same_state_variable() {
        // two Go-like transitions ]0,10] and ]5,15] on loc(R1)
        let effects = vec![eff(0, &[0], 2, 0, 10), eff(0, &[0], 3, 5, 15)];
        assert_eq!(
            check_tokens(&[], &effects, false),
            vec![GroundViolation::Overlap { effect_a: 0, effect_b: 1 }]
        );
    }

    #[test]
    fn distinct_state_variables_never_interact() {
        let effects = vec![eff(0, &[0], 2, 0, 10), eff(0, &[1], 3, 5, 15), eff(1, &[0], 1, 2, 8)];
        assert_eq!(check_tokens(&[], &effects, false), vec![]);
    }

    #[test]
    fn persistence_stretch_creates_overlap() {
        // effect A establishes value 1 at time 2; a condition relies on it at
        // time 9, stretching A's persistence over effect B's transition ]4,6]
        let effects = vec![eff(0, &[], 1, 0, 2), eff(0, &[], 2, 4, 6)];
        let conditions = vec![cond(0, &[], 1, 9, 9)];
        let violations = check_tokens(&conditions, &effects, false);
        // the greedy matcher picks B (latest establisher <= 9) and fails on
        // the value, which is the single-supporter reading of the timeline
        assert_eq!(violations, vec![GroundViolation::Unsupported { condition: 0 }]);
    }

    #[test]
    fn condition_before_any_effect_is_unsupported() {
        let effects = vec![eff(0, &[], 1, 3, 5)];
        let conditions = vec![cond(0, &[], 1, 0, 0)];
        assert_eq!(
            check_tokens(&conditions, &effects, false),
            vec![GroundViolation::Unsupported { condition: 0 }]
        );
    }

    #[test]
    fn instantaneous_tie_prefers_matching_value() {
        // two instantaneous effects at time 0 on the same state variable with
        // zero-length transitions; the condition takes the matching one
        let effects = vec![eff(0, &[], 1, 0, 0), eff(0, &[], 2, 0, 0)];
        let conditions = vec![cond(0, &[], 2, 3, 3)];
        let violations = check_tokens(&conditions, &effects, false);
        // matching value stretches effect 1 to persist to 3; effect 0 keeps
        // an empty interval, so no overlap either
        assert_eq!(violations, vec![]);
    }

    #[test]
    fn support_requires_persistence_through_condition_end() {
        // condition spans [3,7]; establisher at 2 must persist to 7, which
        // collides with the transition starting at 5
        let effects = vec![eff(0, &[], 1, 0, 2), eff(0, &[], 1, 5, 9)];
        let conditions = vec![cond(0, &[], 1, 3, 7)];
        let violations = check_tokens(&conditions, &effects, false);
        assert_eq!(violations, vec![GroundViolation::Overlap { effect_a: 0, effect_b: 1 }]);
    }
}
