mod common;

use common::{disagreements, load_expected, parse_formula, Expected};
use tdldpc::classifier::reference_catalog;
use tdldpc::code::code_from_mols;
use tdldpc::existence::{find_instances, AbsorbingSetType};
use tdldpc::gf::PrimeField;
use tdldpc::mols::MolsSet;
use tdldpc::setsystem::{colour_to_group_mappings, ColourToGroupMapping, Colouring, SetSystem};
use tdldpc::symbolic::{
    colouring_constraint, elimination_process, find_elimination_constraint, symbolic_matrix, Formula, SymPoly,
};

const K4: &str = include_str!("data/k4_constraints.txt");
const K3: &str = include_str!("data/k3_constraints.txt");

fn colouring(sys: &SetSystem, classes: &[Vec<usize>]) -> Colouring {
    let c: Vec<&[usize]> = classes.iter().map(Vec::as_slice).collect();
    Colouring::from_classes(sys, &c).unwrap()
}

fn system(k: usize, label: &str) -> SetSystem {
    reference_catalog(k).into_iter().find(|(l, _)| l == label).unwrap_or_else(|| panic!("{label}")).1
}

/// Tabulated entries that the exhaustive instance search contradicts.
fn corrected(mut rows: Vec<Expected>) -> Vec<Expected> {
    for e in &mut rows {
        let first = e.classes[0].clone();
        if e.candidate == "(6,6){2}" && first == [1, 10, 11, 15] {
            for (ells, _) in &mut e.groups {
                for l in ells.iter_mut() {
                    *l = match *l {
                        5 => 6,
                        6 => 5,
                        x => x,
                    };
                }
            }
        }
        if e.candidate == "(6,6){1}" && first == [1, 8, 10] {
            let hit = if e.classes[1] == [2, 7, 12, 13] {
                3
            } else if e.classes[3] == [4, 5, 12, 14, 15] {
                1
            } else {
                0
            };
            for (ells, f) in &mut e.groups {
                if ells.contains(&hit) {
                    f.push_str(" | !C15");
                }
            }
        }
    }
    rows
}

#[test]
fn worked_example_matrix_and_constraint() {
    let sys = SetSystem::from_one_based(&[&[1, 2, 3, 4], &[1, 5, 6, 7], &[2, 5, 8, 9], &[3, 6, 8, 10]]).unwrap();
    let phi = colouring(&sys, &[vec![1, 8], vec![2, 6], vec![3, 7, 9], vec![4, 5, 10]]);
    let pi = ColourToGroupMapping::from_short(&[1, 4, 2, 3]).unwrap();
    let e = symbolic_matrix(&sys, &phi, &pi).unwrap();
    // (scale factor, point with it, point with +1, point with -1), one-based
    let expect = [
        (0, 1, 4, 2),
        (1, 1, 4, 3),
        (0, 1, 5, 6),
        (1, 1, 5, 7),
        (0, 8, 5, 2),
        (1, 8, 5, 9),
        (0, 8, 10, 6),
        (1, 8, 10, 3),
    ];
    assert_eq!(e.len(), expect.len());
    for (row, &(i, a, b, c)) in e.iter().zip(&expect) {
        let mut want = vec![SymPoly::zero(2); 10];
        want[a - 1] = SymPoly::var(2, i);
        want[b - 1] = SymPoly::constant(2, 1);
        want[c - 1] = SymPoly::constant(2, -1);
        assert_eq!(row, &want);
    }
    let d = find_elimination_constraint(&sys, &phi, &pi).unwrap();
    assert_eq!(d.formula.render(), "C2");
    assert!(!d.aborted);
}

#[test]
fn four_colour_tables() {
    let maps = colour_to_group_mappings(4);
    let mut bad = Vec::new();
    for e in corrected(load_expected(K4)) {
        let sys = system(4, &e.candidate);
        let cc = colouring_constraint(&sys, &colouring(&sys, &e.classes), &maps).unwrap();
        let mut seen = [false; 24];
        for (ells, f) in &e.groups {
            let want = parse_formula(f);
            for &l in ells {
                assert!(!seen[l - 1]);
                seen[l - 1] = true;
                let got = &cc.derivations[l - 1].formula;
                if !disagreements(got, &want, 2).is_empty() {
                    bad.push(format!("{} {:?} l={l}: got {} want {f}", e.candidate, e.classes, got.render()));
                }
            }
        }
        assert!(seen.iter().all(|&s| s), "{} {:?}", e.candidate, e.classes);
    }
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn three_colour_table() {
    let mut bad = Vec::new();
    let maps = colour_to_group_mappings(3);
    for e in load_expected(K3) {
        let sys = system(3, &e.candidate);
        let cc = colouring_constraint(&sys, &colouring(&sys, &e.classes), &maps).unwrap();
        let want = parse_formula(e.combined.as_deref().unwrap());
        if !disagreements(&cc.formula, &want, 1).is_empty() {
            bad.push(format!("{} {:?}: got {}", e.candidate, e.classes, cc.formula.render()));
        }
    }
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn corrected_entries_confirmed_by_search() {
    // a2 = 3 a1 violates C15 and nothing else in the affected groups
    let sys = system(4, "(6,6){1}");
    let maps = colour_to_group_mappings(4);
    let cases = [
        (vec![vec![1, 8, 10], vec![2, 7, 12, 13], vec![3, 6, 9, 15], vec![4, 5, 11, 14]], 3),
        (vec![vec![1, 8, 10], vec![2, 6, 11], vec![3, 7, 9, 13], vec![4, 5, 12, 14, 15]], 1),
    ];
    for (classes, l) in cases {
        let phi = colouring(&sys, &classes);
        let h = code_from_mols(&MolsSet::reduced(PrimeField::new(11).unwrap(), &[1, 3]).unwrap());
        let ty = AbsorbingSetType { system: sys.clone(), colouring: phi.clone(), mapping: Some(maps[l - 1].clone()) };
        assert!(find_instances(&h, &ty).unwrap().is_empty());
        let ty = AbsorbingSetType { system: sys.clone(), colouring: phi, mapping: None };
        assert!(!find_instances(&h, &ty).unwrap().is_empty());
    }
}

#[test]
fn eliminated_types_have_no_instances() {
    // Soundness on small fields: whenever the constraint says a type is absent,
    // the exhaustive search agrees.
    for label in ["(4,4)", "(5,4)", "(6,2){1}"] {
        let sys = system(4, label);
        let maps = colour_to_group_mappings(4);
        for cc in elimination_process(&sys, 4).unwrap() {
            for q in [5u64, 7] {
                for a in 2..q {
                    let h = code_from_mols(&MolsSet::reduced(PrimeField::new(q).unwrap(), &[1, a as i64]).unwrap());
                    for (d, pi) in cc.derivations.iter().zip(&maps) {
                        if d.formula.eval(q, &[1, a]) {
                            let ty = AbsorbingSetType {
                                system: sys.clone(),
                                colouring: cc.colouring.clone(),
                                mapping: Some(pi.clone()),
                            };
                            assert!(find_instances(&h, &ty).unwrap().is_empty(), "{label} q={q} a={a}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn derivation_serializes() {
    let sys = system(4, "(4,4)");
    let cc = elimination_process(&sys, 4).unwrap();
    let js = serde_json::to_string(&cc).unwrap();
    let back: Vec<tdldpc::symbolic::ColouringConstraint> = serde_json::from_str(&js).unwrap();
    assert_eq!(back, cc);
    assert_ne!(cc[0].formula, Formula::True);
}
