//! Encoding-size statistics: variable and assertion counts per depth, plus
//! synthetic object injection for checking that the lifted encoding does not
//! grow with the number of objects.

use serde::Serialize;
use tempo_core::bounded::gen_problem;
use tempo_core::encode::{encode, EncodeOptions};
use tempo_core::{Problem, TypeKind};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StatsRow {
    pub k: u32,
    pub variables: usize,
    pub assertions: usize,
    pub coherence: usize,
    pub support: usize,
    pub consistency: usize,
    pub symmetry: usize,
    pub domain: usize,
}

/// One row per depth in `0..=k_max`.
pub fn stats_table(p: &Problem, k_max: u32, opts: &EncodeOptions) -> Vec<StatsRow> {
    (0..=k_max)
        .map(|k| {
            let pi = gen_problem(p, k);
            let s = encode(p, &pi, opts).stats();
            StatsRow {
                k,
                variables: s.variables,
                assertions: s.assertions,
                coherence: s.coherence,
                support: s.support,
                consistency: s.consistency,
                symmetry: s.symmetry,
                domain: s.domain,
            }
        })
        .collect()
}

/// Appends `extra` fresh, unused constants to every object enumeration type.
/// Used by `stats --objects +N` to demonstrate object-count independence.
pub fn inject_objects(p: &mut Problem, extra: usize) {
    for ty in &mut p.types {
        let base = ty.name.clone();
        if let TypeKind::Objects(members) = &mut ty.kind {
            for i in 0..extra {
                let mut name = format!("{base}_pad{i}");
                while members.contains(&name) {
                    name.push('_');
                }
                members.push(name);
            }
        }
    }
}

pub fn render_text(rows: &[StatsRow]) -> String {
    let mut out = String::new();
    out.push_str("    k  variables  assertions   coherence     support consistency    symmetry      domain\n");
    for r in rows {
        out.push_str(&format!(
            "{:>5} {:>10} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11}\n",
            r.k, r.variables, r.assertions, r.coherence, r.support, r.consistency, r.symmetry, r.domain
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anml::parse_problem;

    const TRUCK: &str = r#"
type Truck = { R1 };
type Loc = { L0, L1, L2, L3 };
fluent Loc loc(Truck t);
action Go(Truck r, Loc ls, Loc le) {
  duration := 10;
  [start] loc(r) == ls;
  [start, end] loc(r) := le;
  ls != le;
};
loc(R1) := L0;
goal { timepoint t; var Loc l; [t] loc(R1) == l; t < 100; l in { L2, L3 }; };
"#;

    #[test]
    fn object_injection_leaves_assertion_counts_unchanged() {
        let p = parse_problem(TRUCK).unwrap();
        let before = stats_table(&p, 2, &EncodeOptions::default());
        let mut padded = p.clone();
        inject_objects(&mut padded, 40);
        assert!(tempo_core::validate_problem(&padded).is_empty());
        let after = stats_table(&padded, 2, &EncodeOptions::default());
        for (b, a) in before.iter().zip(&after) {
            assert_eq!(b.assertions, a.assertions, "k={}", b.k);
            assert_eq!(b.variables, a.variables, "k={}", b.k);
        }
    }

    #[test]
    fn rows_cover_every_depth() {
        let p = parse_problem(TRUCK).unwrap();
        let rows = stats_table(&p, 3, &EncodeOptions::default());
        assert_eq!(rows.len(), 4);
        assert!(rows.windows(2).all(|w| w[0].k + 1 == w[1].k));
        assert!(rows.windows(2).all(|w| w[0].assertions < w[1].assertions));
    }
}
