//! Leaf-truth region enumeration.
//!
//! A region is one truth assignment over the distinct threshold conditions
//! (atoms) of a tree. Satisfiable regions are realized into concrete input
//! assignments by per-variable interval construction: each atom contributes
//! a bound to its variable's interval, empty intersections mark the region
//! unsatisfiable, and representatives hug the condition-derived interval
//! edge so that small threshold perturbations flip at least one region.
//!
//! Ratio conditions constrain the quotient as its own variable; realization
//! fixes the denominator (1.0 whenever admissible, keeping fixture inputs
//! float-exact) and back-solves the numerator. Combinations that would need
//! contradictory values of one parameter are skipped as unsatisfiable.

use std::collections::BTreeMap;

use crate::pasta::{Assignment, CmpOp, FaultTree, ParamKind};

/// The quantity an atom constrains.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Param(String),
    Ratio(String, String),
}

/// One distinct threshold condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub var: Var,
    pub op: CmpOp,
    pub threshold: f64,
}

impl Atom {
    fn key(&self) -> (Var, CmpOp, u64) {
        (self.var.clone(), self.op, self.threshold.to_bits())
    }
}

/// Distinct atoms of a tree in first-reference (declaration) order of its
/// basic events. Derived parameters resolve to ratio variables, so renamed
/// ratios with the same formula compare equal.
pub fn tree_atoms(tree: &FaultTree) -> Vec<Atom> {
    let mut out: Vec<Atom> = Vec::new();
    for (_, cond) in tree.basics() {
        let var = match tree.param(&cond.parameter).map(|p| &p.kind) {
            Some(ParamKind::Derived { numerator, denominator }) => {
                Var::Ratio(numerator.clone(), denominator.clone())
            }
            _ => Var::Param(cond.parameter.clone()),
        };
        let atom = Atom { var, op: cond.op, threshold: cond.threshold };
        if !out.iter().any(|a| a.key() == atom.key()) {
            out.push(atom);
        }
    }
    out
}

/// Distinct atoms of two trees (union, `a` first).
pub fn union_atoms(a: &FaultTree, b: &FaultTree) -> Vec<Atom> {
    let mut out = tree_atoms(a);
    for atom in tree_atoms(b) {
        if !out.iter().any(|x| x.key() == atom.key()) {
            out.push(atom);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct RegionOptions {
    /// Inset separating strict inequalities from their threshold.
    pub epsilon: f64,
    /// Plausible `(low, high)` ranges per measured parameter; the neutral
    /// value for an unconstrained parameter is the range midpoint, else 1.0.
    pub ranges: BTreeMap<String, (f64, f64)>,
    /// Upper bound on the number of truth masks probed.
    pub probe_cap: u64,
    /// When a variable's interval is condition-bounded on both sides, emit
    /// an extra representative hugging the low edge too. Verification
    /// suites turn this on so that every threshold keeps an ε-close witness
    /// on both sides in every combination context.
    pub edge_profiles: bool,
}

impl Default for RegionOptions {
    fn default() -> Self {
        RegionOptions {
            epsilon: 1e-3,
            ranges: BTreeMap::new(),
            probe_cap: 1 << 20,
            edge_profiles: false,
        }
    }
}

const WIDE: f64 = 1e9;

/// Closed interval with provenance flags: whether each bound was induced by
/// a condition (as opposed to the default range).
#[derive(Debug, Clone, Copy)]
struct Interval {
    lo: f64,
    hi: f64,
    lo_cond: bool,
    hi_cond: bool,
}

impl Interval {
    fn unconstrained() -> Self {
        Interval { lo: -WIDE, hi: WIDE, lo_cond: false, hi_cond: false }
    }

    fn empty(&self) -> bool {
        self.lo > self.hi
    }

    fn clamp_lo(&mut self, lo: f64, from_cond: bool) {
        if lo > self.lo {
            self.lo = lo;
            self.lo_cond = from_cond;
        }
    }

    fn clamp_hi(&mut self, hi: f64, from_cond: bool) {
        if hi < self.hi {
            self.hi = hi;
            self.hi_cond = from_cond;
        }
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn both_cond(&self) -> bool {
        self.lo_cond && self.hi_cond
    }

    /// Representative hugging a condition-derived edge when one exists.
    /// With both edges condition-derived, `prefer_lo` picks which.
    fn rep_edge(&self, neutral: f64, prefer_lo: bool) -> f64 {
        if prefer_lo && self.lo_cond {
            self.lo
        } else if self.hi_cond {
            self.hi
        } else if self.lo_cond {
            self.lo
        } else if self.contains(neutral) {
            neutral
        } else {
            (self.lo + self.hi) / 2.0
        }
    }

    fn rep(&self, neutral: f64) -> f64 {
        self.rep_edge(neutral, false)
    }
}

fn apply_atom(interval: &mut Interval, op: CmpOp, threshold: f64, truth: bool, eps: f64) {
    match (op, truth) {
        (CmpOp::Lt, true) => interval.clamp_hi(threshold - eps, true),
        (CmpOp::Lt, false) => interval.clamp_lo(threshold, true),
        (CmpOp::Le, true) => interval.clamp_hi(threshold, true),
        (CmpOp::Le, false) => interval.clamp_lo(threshold + eps, true),
        (CmpOp::Gt, true) => interval.clamp_lo(threshold + eps, true),
        (CmpOp::Gt, false) => interval.clamp_hi(threshold, true),
        (CmpOp::Ge, true) => interval.clamp_lo(threshold, true),
        (CmpOp::Ge, false) => interval.clamp_hi(threshold - eps, true),
    }
}

/// Intervals keyed by measured parameter and by ratio (numerator,
/// denominator) pair.
type VarIntervals<'a> = (BTreeMap<&'a str, Interval>, BTreeMap<(&'a str, &'a str), Interval>);

struct Realizer<'a> {
    atoms: &'a [Atom],
    measured: &'a [String],
    opts: &'a RegionOptions,
}

impl Realizer<'_> {
    fn neutral(&self, param: &str) -> f64 {
        match self.opts.ranges.get(param) {
            Some((lo, hi)) => (lo + hi) / 2.0,
            None => 1.0,
        }
    }

    fn base_interval(&self, param: &str) -> Interval {
        let mut iv = Interval::unconstrained();
        if let Some((lo, hi)) = self.opts.ranges.get(param) {
            iv.clamp_lo(*lo, false);
            iv.clamp_hi(*hi, false);
        }
        iv
    }

    /// Interval per constrained variable under `mask`; `None` when any
    /// intersection is empty (the region is unsatisfiable).
    fn intervals(&self, mask: u64) -> Option<VarIntervals<'_>> {
        let mut params: BTreeMap<&str, Interval> = BTreeMap::new();
        let mut ratios: BTreeMap<(&str, &str), Interval> = BTreeMap::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            let truth = mask & (1 << i) != 0;
            let iv = match &atom.var {
                Var::Param(p) => {
                    params.entry(p.as_str()).or_insert_with(|| self.base_interval(p))
                }
                Var::Ratio(a, b) => ratios
                    .entry((a.as_str(), b.as_str()))
                    .or_insert_with(Interval::unconstrained),
            };
            apply_atom(iv, atom.op, atom.threshold, truth, self.opts.epsilon);
            if iv.empty() {
                return None;
            }
        }
        Some((params, ratios))
    }

    /// Variables whose interval under `mask` is condition-bounded on both
    /// sides; each deserves a second, low-edge representative.
    fn both_edged_vars(&self, mask: u64) -> Vec<Var> {
        let Some((params, ratios)) = self.intervals(mask) else { return Vec::new() };
        let mut out = Vec::new();
        for (p, iv) in &params {
            if iv.both_cond() {
                out.push(Var::Param(p.to_string()));
            }
        }
        for ((a, b), iv) in &ratios {
            if iv.both_cond() {
                out.push(Var::Ratio(a.to_string(), b.to_string()));
            }
        }
        out
    }

    /// Try to realize one truth mask into a total assignment over the
    /// measured parameters. `None` means the region is unsatisfiable (or not
    /// realizable by interval construction). `lo_pref` selects the low edge
    /// for one variable's representative.
    fn realize(&self, mask: u64, lo_pref: Option<&Var>) -> Option<Assignment> {
        let (params, ratios) = self.intervals(mask)?;
        let prefers_lo = |var: &Var| lo_pref == Some(var);

        let mut fixed: BTreeMap<&str, f64> = BTreeMap::new();

        // Ratio variables first: fix denominator and numerator together.
        for ((num, den), r_iv) in &ratios {
            let num_iv =
                params.get(num.to_owned()).copied().unwrap_or_else(|| self.base_interval(num));
            let den_iv =
                params.get(den.to_owned()).copied().unwrap_or_else(|| self.base_interval(den));

            let ratio_rep = r_iv.rep_edge(
                1.0,
                prefers_lo(&Var::Ratio(num.to_string(), den.to_string())),
            );
            // Inward nudges keep an edge-hugging candidate viable when
            // back-solving a pinned numerator drifts past the edge by an ulp.
            let nudge = self.opts.epsilon / 2.0;
            let r_candidates = [
                ratio_rep,
                ratio_rep - nudge,
                ratio_rep + nudge,
                (r_iv.lo + r_iv.hi) / 2.0,
                r_iv.lo,
                r_iv.hi,
            ];
            let den_candidates: Vec<f64> = match fixed.get(den) {
                Some(v) => vec![*v],
                None => {
                    let den_rep = den_iv.rep(self.neutral(den));
                    let den_mid = (den_iv.lo + den_iv.hi) / 2.0;
                    // A condition-bounded denominator keeps its edge-hugging
                    // representative; a free one takes 1.0 so the numerator
                    // realizes the quotient exactly.
                    let ordered = if den_iv.lo_cond || den_iv.hi_cond {
                        [den_rep, 1.0, den_mid]
                    } else {
                        [1.0, den_rep, den_mid]
                    };
                    ordered
                        .into_iter()
                        .filter(|d| *d != 0.0 && den_iv.contains(*d))
                        .collect()
                }
            };

            let mut done = false;
            if let Some(&num_fixed) = fixed.get(num) {
                // Numerator already pinned: back-solve a denominator that
                // lands the quotient on the preferred representative first,
                // then settle for any admissible denominator.
                for &r in &r_candidates {
                    if r == 0.0 {
                        continue;
                    }
                    let d = num_fixed / r;
                    if d != 0.0 && den_iv.contains(d) && r_iv.contains(num_fixed / d) {
                        fixed.insert(den, d);
                        done = true;
                        break;
                    }
                }
                if !done {
                    for &d in &den_candidates {
                        if d != 0.0 && r_iv.contains(num_fixed / d) {
                            fixed.insert(den, d);
                            done = true;
                            break;
                        }
                    }
                }
            } else {
                'outer: for &d in &den_candidates {
                    for &r in &r_candidates {
                        let n = r * d;
                        if num_iv.contains(n) && r_iv.contains(n / d) {
                            fixed.insert(den, d);
                            fixed.insert(num, n);
                            done = true;
                            break 'outer;
                        }
                    }
                }
            }
            if !done {
                return None;
            }
        }

        // Directly constrained parameters not yet pinned by a ratio.
        for (p, iv) in &params {
            if !fixed.contains_key(p) {
                let rep =
                    iv.rep_edge(self.neutral(p), prefers_lo(&Var::Param(p.to_string())));
                fixed.insert(p, rep);
            }
        }

        // Everything else measured: neutral.
        let mut out = Assignment::new();
        for p in self.measured {
            let v = fixed.get(p.as_str()).copied().unwrap_or_else(|| self.neutral(p));
            out.set(p.clone(), v).ok()?;
        }
        Some(out)
    }
}

/// Enumerate satisfiable leaf-truth regions over `atoms`, returning up to
/// `cap` realized representative assignments (total over `measured`), in
/// ascending mask order. With `edge_profiles` set, a region whose variables
/// are condition-bounded on both sides yields one extra assignment per such
/// variable.
pub fn enumerate_regions(
    atoms: &[Atom],
    measured: &[String],
    opts: &RegionOptions,
    cap: usize,
) -> Vec<Assignment> {
    let realizer = Realizer { atoms, measured, opts };
    let n = atoms.len();
    let total: u64 = if n >= 63 { u64::MAX } else { 1u64 << n };
    let probes = total.min(opts.probe_cap);
    let mut out = Vec::new();
    for mask in 0..probes {
        if out.len() >= cap {
            break;
        }
        let Some(assignment) = realizer.realize(mask, None) else { continue };
        if opts.edge_profiles {
            for var in realizer.both_edged_vars(mask) {
                if let Some(variant) = realizer.realize(mask, Some(&var)) {
                    if variant != assignment && !out.contains(&variant) {
                        out.push(variant);
                    }
                }
            }
        }
        out.push(assignment);
    }
    out
}

/// Measured parameter names of a tree, declaration order.
pub fn measured_params(tree: &FaultTree) -> Vec<String> {
    tree.schema().iter().filter(|p| p.is_measured()).map(|p| p.name.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pasta::{evaluate, parse_pasta};

    #[test]
    fn single_condition_yields_both_regions() {
        let t = parse_pasta("tree d\nparam x unit \"\"\nbasic b : x < 10\ntop f = b\n").unwrap();
        let atoms = tree_atoms(&t);
        let regions =
            enumerate_regions(&atoms, &measured_params(&t), &RegionOptions::default(), 100);
        assert_eq!(regions.len(), 2);
        let fired: Vec<bool> =
            regions.iter().map(|a| !evaluate(&t, a).unwrap().is_empty()).collect();
        assert_eq!(fired, vec![false, true]); // mask 0 = condition false
    }

    #[test]
    fn contradictory_regions_are_skipped() {
        // x < 1 and x > 2 can never hold together: of the 4 masks only 3
        // survive.
        let t = parse_pasta(
            "tree d\nparam x unit \"\"\nbasic lo : x < 1\nbasic hi : x > 2\ngate g = or(lo, hi)\ntop f = g\n",
        )
        .unwrap();
        let atoms = tree_atoms(&t);
        let regions =
            enumerate_regions(&atoms, &measured_params(&t), &RegionOptions::default(), 100);
        assert_eq!(regions.len(), 3);
    }

    #[test]
    fn duplicate_conditions_collapse_to_one_atom() {
        let t = parse_pasta(
            "tree d\nparam x unit \"\"\nbasic a : x < 1\nbasic b : x < 1\ngate g = and(a, b)\ntop f = g\n",
        )
        .unwrap();
        assert_eq!(tree_atoms(&t).len(), 1);
    }

    #[test]
    fn ratio_regions_realize_with_unit_denominator() {
        let t = parse_pasta(
            "tree d\nparam a unit \"\"\nparam b unit \"\"\nratio r = a / b\nbasic c : r < 0.1\ntop f = c\n",
        )
        .unwrap();
        let atoms = tree_atoms(&t);
        let regions =
            enumerate_regions(&atoms, &measured_params(&t), &RegionOptions::default(), 100);
        assert_eq!(regions.len(), 2);
        for r in &regions {
            assert_eq!(r.get("b"), Some(1.0));
        }
        assert!(evaluate(&t, &regions[1]).unwrap().contains("f"));
        assert!(evaluate(&t, &regions[0]).unwrap().is_empty());
    }

    #[test]
    fn ratio_and_direct_constraint_on_same_parameter() {
        // h2 is both directly thresholded and the denominator of ch4/h2.
        let t = parse_pasta(
            "tree d\nparam ch4 unit \"\"\nparam h2 unit \"\"\nratio r = ch4 / h2\nbasic hot : r >= 1\nbasic rich : h2 >= 150\ngate g = and(hot, rich)\ntop f = g\n",
        )
        .unwrap();
        let atoms = tree_atoms(&t);
        let regions =
            enumerate_regions(&atoms, &measured_params(&t), &RegionOptions::default(), 100);
        assert_eq!(regions.len(), 4);
        // The all-true region exists and actually fires the fault.
        assert!(regions.iter().any(|a| evaluate(&t, a).unwrap().contains("f")));
    }

    #[test]
    fn representatives_hug_condition_edges() {
        let t = parse_pasta("tree d\nparam x unit \"\"\nbasic b : x < 10\ntop f = b\n").unwrap();
        let atoms = tree_atoms(&t);
        let opts = RegionOptions::default();
        let regions = enumerate_regions(&atoms, &measured_params(&t), &opts, 100);
        // False region pins x at the threshold; true region at threshold − ε.
        assert_eq!(regions[0].get("x"), Some(10.0));
        assert_eq!(regions[1].get("x"), Some(10.0 - opts.epsilon));
    }

    #[test]
    fn cap_limits_output() {
        let t = parse_pasta(
            "tree d\nparam x unit \"\"\nparam y unit \"\"\nbasic a : x < 1\nbasic b : y < 1\ngate g = and(a, b)\ntop f = g\n",
        )
        .unwrap();
        let atoms = tree_atoms(&t);
        let regions = enumerate_regions(&atoms, &measured_params(&t), &RegionOptions::default(), 2);
        assert_eq!(regions.len(), 2);
    }

    #[test]
    fn assignments_are_total_over_measured_params() {
        let t = parse_pasta(
            "tree d\nparam x unit \"\"\nparam unused unit \"\"\nbasic b : x < 5\ntop f = b\n",
        )
        .unwrap();
        let regions = enumerate_regions(
            &tree_atoms(&t),
            &measured_params(&t),
            &RegionOptions::default(),
            10,
        );
        for r in &regions {
            assert!(r.get("unused").is_some());
        }
    }
}
