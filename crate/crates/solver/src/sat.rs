//! CDCL SAT core with a difference-logic theory hook: two-watched-literal
//! propagation, first-UIP conflict analysis with activity bumping, and lazy
//! edge posting into the [`DiffGraph`](crate::theory::DiffGraph) for
//! variables that stand for difference atoms.

use crate::theory::DiffGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lit(pub u32);

impl Lit {
    pub fn new(var: u32, positive: bool) -> Self {
        Lit(var << 1 | u32::from(!positive))
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub fn negate(self) -> Self {
        Lit(self.0 ^ 1)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// `plus - minus <= bound`; when the owning variable is false the negation
/// `minus - plus <= -bound - 1` holds instead.
#[derive(Debug, Clone, Copy)]
pub struct DiffAtom {
    pub plus: usize,
    pub minus: usize,
    pub bound: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
}

const NO_REASON: u32 = u32::MAX;

pub struct Solver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<u32>>,
    assign: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    act_inc: f64,
    phase: Vec<bool>,
    seen: Vec<bool>,
    /// var -> index into `atom_defs` when the variable is a difference atom
    atoms: Vec<Option<u32>>,
    atom_defs: Vec<DiffAtom>,
    graph: DiffGraph,
    theory_head: usize,
    /// (trail position, graph size before its edge) for backtracking
    theory_undo: Vec<(usize, usize)>,
    unsat: bool,
}

impl Solver {
    /// `int_nodes` counts the difference-graph nodes (integer variables plus
    /// the zero node).
    pub fn new(int_nodes: usize) -> Self {
        Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assign: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            act_inc: 1.0,
            phase: Vec::new(),
            seen: Vec::new(),
            atoms: Vec::new(),
            atom_defs: Vec::new(),
            graph: DiffGraph::new(int_nodes),
            theory_head: 0,
            theory_undo: Vec::new(),
            unsat: false,
        }
    }

    pub fn new_var(&mut self) -> u32 {
        let v = self.assign.len() as u32;
        self.assign.push(0);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.activity.push(0.0);
        self.phase.push(false);
        self.seen.push(false);
        self.atoms.push(None);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        v
    }

    /// Marks a variable as the given difference atom.
    pub fn new_atom_var(&mut self, atom: DiffAtom) -> u32 {
        let v = self.new_var();
        self.atoms[v as usize] = Some(self.atom_defs.len() as u32);
        self.atom_defs.push(atom);
        v
    }

    pub fn value_lit(&self, l: Lit) -> Option<bool> {
        match self.assign[l.var() as usize] {
            0 => None,
            1 => Some(l.positive()),
            _ => Some(!l.positive()),
        }
    }

    pub fn value_var(&self, v: u32) -> Option<bool> {
        match self.assign[v as usize] {
            0 => None,
            1 => Some(true),
            _ => Some(false),
        }
    }

    pub fn int_value(&self, node: usize, zero: usize) -> i64 {
        self.graph.value(node) - self.graph.value(zero)
    }

    fn current_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Adds a clause at decision level 0. Tautologies are dropped, duplicate
    /// literals merged; empty clauses flag the instance unsatisfiable.
    pub fn add_clause(&mut self, mut lits: Vec<Lit>) {
        debug_assert_eq!(self.current_level(), 0);
        lits.sort_by_key(|l| l.0);
        lits.dedup();
        if lits.windows(2).any(|w| w[0].var() == w[1].var()) {
            return; // l and not l
        }
        match lits.len() {
            0 => self.unsat = true,
            1 => {
                if !self.enqueue(lits[0], NO_REASON) {
                    self.unsat = true;
                }
            }
            _ => {
                let ci = self.clauses.len() as u32;
                self.watches[lits[0].index()].push(ci);
                self.watches[lits[1].index()].push(ci);
                self.clauses.push(lits);
            }
        }
    }

    fn enqueue(&mut self, l: Lit, reason: u32) -> bool {
        match self.value_lit(l) {
            Some(true) => true,
            Some(false) => false,
            None => {
                let v = l.var() as usize;
                self.assign[v] = if l.positive() { 1 } else { -1 };
                self.level[v] = self.current_level();
                self.reason[v] = reason;
                self.trail.push(l);
                true
            }
        }
    }

    fn bool_propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let fl = p.negate();
            let mut i = 0;
            while i < self.watches[fl.index()].len() {
                let ci = self.watches[fl.index()][i] as usize;
                if self.clauses[ci][0] == fl {
                    self.clauses[ci].swap(0, 1);
                }
                debug_assert_eq!(self.clauses[ci][1], fl);
                let w0 = self.clauses[ci][0];
                if self.value_lit(w0) == Some(true) {
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..self.clauses[ci].len() {
                    let lk = self.clauses[ci][k];
                    if self.value_lit(lk) != Some(false) {
                        self.clauses[ci].swap(1, k);
                        self.watches[lk.index()].push(ci as u32);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    self.watches[fl.index()].swap_remove(i);
                    continue;
                }
                match self.value_lit(w0) {
                    Some(false) => return Some(ci as u32),
                    _ => {
                        self.enqueue(w0, ci as u32);
                        i += 1;
                    }
                }
            }
        }
        None
    }

    /// Posts edges for freshly assigned atom variables; on a theory conflict
    /// returns the (currently true) literals of the negative cycle.
    fn theory_sync(&mut self) -> Result<(), Vec<Lit>> {
        while self.theory_head < self.trail.len() {
            let pos = self.theory_head;
            self.theory_head += 1;
            let p = self.trail[pos];
            let Some(aid) = self.atoms[p.var() as usize] else { continue };
            let a = self.atom_defs[aid as usize];
            let (from, to, w) = if p.positive() {
                (a.minus, a.plus, a.bound)
            } else {
                (a.plus, a.minus, -a.bound - 1)
            };
            let before = self.graph.len();
            match self.graph.add_edge(from, to, w, p.0) {
                Ok(()) => self.theory_undo.push((pos, before)),
                Err(tags) => {
                    return Err(tags.into_iter().map(Lit).collect());
                }
            }
        }
        Ok(())
    }

    fn propagate_all(&mut self) -> Option<Vec<Lit>> {
        loop {
            if let Some(ci) = self.bool_propagate() {
                return Some(self.clauses[ci as usize].clone());
            }
            if let Err(cycle) = self.theory_sync() {
                // conflict clause: the negation of the cycle's literals
                return Some(cycle.into_iter().map(Lit::negate).collect());
            }
            if self.qhead == self.trail.len() && self.theory_head == self.trail.len() {
                return None;
            }
        }
    }

    fn cancel_until(&mut self, target: u32) {
        if self.current_level() <= target {
            return;
        }
        let new_len = self.trail_lim[target as usize];
        while let Some(&(pos, graph_len)) = self.theory_undo.last() {
            if pos < new_len {
                break;
            }
            self.graph.truncate(graph_len);
            self.theory_undo.pop();
        }
        for pos in (new_len..self.trail.len()).rev() {
            let v = self.trail[pos].var() as usize;
            self.phase[v] = self.assign[v] == 1;
            self.assign[v] = 0;
            self.reason[v] = NO_REASON;
        }
        self.trail.truncate(new_len);
        self.trail_lim.truncate(target as usize);
        self.qhead = new_len;
        self.theory_head = self.theory_head.min(new_len);
    }

    fn bump(&mut self, v: u32) {
        self.activity[v as usize] += self.act_inc;
        if self.activity[v as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.act_inc *= 1e-100;
        }
    }

    fn analyze(&mut self, conflict: Vec<Lit>) -> (Vec<Lit>, u32) {
        let mut learned = vec![Lit(0)];
        let mut pathc = 0u32;
        let mut confl = conflict;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();

        loop {
            let start = usize::from(p.is_some());
            for &q in &confl[start..] {
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(q.var());
                    if self.level[v] == self.current_level() {
                        pathc += 1;
                    } else {
                        learned.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var() as usize] {
                    break;
                }
            }
            let pl = self.trail[index];
            self.seen[pl.var() as usize] = false;
            pathc -= 1;
            if pathc == 0 {
                learned[0] = pl.negate();
                break;
            }
            let r = self.reason[pl.var() as usize];
            debug_assert_ne!(r, NO_REASON, "resolved literal must be propagated");
            confl = self.clauses[r as usize].clone();
            debug_assert_eq!(confl[0], pl);
            p = Some(pl);
        }

        for &l in &learned {
            self.seen[l.var() as usize] = false;
        }

        let backjump = if learned.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learned.len() {
                if self.level[learned[i].var() as usize] > self.level[learned[max_i].var() as usize] {
                    max_i = i;
                }
            }
            learned.swap(1, max_i);
            self.level[learned[1].var() as usize]
        };
        (learned, backjump)
    }

    fn pick_branch(&self) -> Option<u32> {
        let mut best: Option<u32> = None;
        for v in 0..self.assign.len() {
            if self.assign[v] != 0 {
                continue;
            }
            best = Some(match best {
                None => v as u32,
                Some(b) if self.activity[v] > self.activity[b as usize] => v as u32,
                Some(b) => b,
            });
        }
        best
    }

    pub fn solve(&mut self) -> SatResult {
        if self.unsat {
            return SatResult::Unsat;
        }
        loop {
            match self.propagate_all() {
                Some(conflict) => {
                    if self.current_level() == 0 {
                        return SatResult::Unsat;
                    }
                    let (learned, backjump) = self.analyze(conflict);
                    self.cancel_until(backjump);
                    if learned.len() == 1 {
                        if !self.enqueue(learned[0], NO_REASON) {
                            return SatResult::Unsat;
                        }
                    } else {
                        let ci = self.clauses.len() as u32;
                        self.watches[learned[0].index()].push(ci);
                        self.watches[learned[1].index()].push(ci);
                        let assert_lit = learned[0];
                        self.clauses.push(learned);
                        let ok = self.enqueue(assert_lit, ci);
                        debug_assert!(ok);
                    }
                    self.act_inc /= 0.95;
                }
                None => match self.pick_branch() {
                    Some(v) => {
                        self.trail_lim.push(self.trail.len());
                        let phase = self.phase[v as usize];
                        let ok = self.enqueue(Lit::new(v, phase), NO_REASON);
                        debug_assert!(ok);
                    }
                    None => return SatResult::Sat,
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: u32, pos: bool) -> Lit {
        Lit::new(v, pos)
    }

    #[test]
    fn pure_boolean_sat_and_unsat() {
        let mut s = Solver::new(1);
        let a = s.new_var();
        let b = s.new_var();
        s.add_clause(vec![lit(a, true), lit(b, true)]);
        s.add_clause(vec![lit(a, false), lit(b, true)]);
        assert_eq!(s.solve(), SatResult::Sat);
        assert_eq!(s.value_var(b), Some(true));

        let mut s = Solver::new(1);
        let a = s.new_var();
        s.add_clause(vec![lit(a, true)]);
        s.add_clause(vec![lit(a, false)]);
        assert_eq!(s.solve(), SatResult::Unsat);
    }

    #[test]
    fn empty_clause_is_unsat() {
        let mut s = Solver::new(1);
        s.add_clause(vec![]);
        assert_eq!(s.solve(), SatResult::Unsat);
    }

    #[test]
    fn theory_conflict_forces_boolean_choice() {
        // nodes: x=0, y=1, zero=2
        let mut s = Solver::new(3);
        // a: x - y <= -1 (x < y), b: y - x <= -1 (y < x)
        let a = s.new_atom_var(DiffAtom { plus: 0, minus: 1, bound: -1 });
        let b = s.new_atom_var(DiffAtom { plus: 1, minus: 0, bound: -1 });
        // a or b, both allowed individually, together infeasible
        s.add_clause(vec![lit(a, true), lit(b, true)]);
        assert_eq!(s.solve(), SatResult::Sat);
        let av = s.value_var(a).unwrap();
        let bv = s.value_var(b).unwrap();
        assert!(av || bv);
        // model respects the chosen atom AND the negation of the other:
        // either way x != y with a consistent order
        let x = s.int_value(0, 2);
        let y = s.int_value(1, 2);
        assert_ne!(x, y);

        let mut s = Solver::new(3);
        let a = s.new_atom_var(DiffAtom { plus: 0, minus: 1, bound: -1 });
        let b = s.new_atom_var(DiffAtom { plus: 1, minus: 0, bound: -1 });
        s.add_clause(vec![lit(a, true)]);
        s.add_clause(vec![lit(b, true)]);
        assert_eq!(s.solve(), SatResult::Unsat);
    }

    #[test]
    fn negated_atoms_post_their_negation() {
        // x - zero <= 4 asserted false means x >= 5
        let mut s = Solver::new(2);
        let a = s.new_atom_var(DiffAtom { plus: 0, minus: 1, bound: 4 });
        s.add_clause(vec![lit(a, false)]);
        assert_eq!(s.solve(), SatResult::Sat);
        assert!(s.int_value(0, 1) >= 5);
    }

    #[test]
    fn chained_bounds_propagate_through_theory() {
        // x in [3, 3] via two atoms; y = x + 2 via two atoms; check values
        let (x, y, zero) = (0, 1, 2);
        let mut s = Solver::new(3);
        let le = s.new_atom_var(DiffAtom { plus: x, minus: zero, bound: 3 });
        let ge = s.new_atom_var(DiffAtom { plus: zero, minus: x, bound: -3 });
        let d1 = s.new_atom_var(DiffAtom { plus: y, minus: x, bound: 2 });
        let d2 = s.new_atom_var(DiffAtom { plus: x, minus: y, bound: -2 });
        for v in [le, ge, d1, d2] {
            s.add_clause(vec![lit(v, true)]);
        }
        assert_eq!(s.solve(), SatResult::Sat);
        assert_eq!(s.int_value(x, zero), 3);
        assert_eq!(s.int_value(y, zero), 5);
    }
}
