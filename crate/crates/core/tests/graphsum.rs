use gwcrc_core::exactfield::{rat, Cyc, CycNum, Field};
use gwcrc_core::frobenius::FrobeniusData;
use gwcrc_core::graphsum::*;
use gwcrc_core::hypergeom::Target;
use gwcrc_core::Error;

fn gens(t: Target, n: usize, kmax: usize, order: i64) -> (FrobeniusData<CycNum>, Generators) {
    let frob = FrobeniusData::<CycNum>::new(t, n, order + kmax as i64 + 2).unwrap();
    let pt = gwcrc_core::rmatrix::solve_flatness_with(
        &frob,
        kmax,
        order,
        gwcrc_core::rmatrix::Normalization::True,
        None,
    )
    .unwrap();
    let g = Generators::from_table(&frob, &pt, order).unwrap();
    (frob, g)
}

#[test]
fn graph_counts() {
    let count = |g, m| enumerate_stable_graphs(g, m).unwrap().len();
    assert_eq!(count(0, 3), 1);
    assert_eq!(count(0, 4), 4);
    assert_eq!(count(1, 1), 2);
    assert_eq!(count(1, 2), 5);
    assert_eq!(count(2, 0), 7);
    let g11 = enumerate_stable_graphs(1, 1).unwrap();
    let mut auts: Vec<u64> = g11.iter().map(|g| g.aut).collect();
    auts.sort();
    assert_eq!(auts, vec![1, 2]);
    let g20 = enumerate_stable_graphs(2, 0).unwrap();
    let mut auts: Vec<u64> = g20.iter().map(|g| g.aut).collect();
    auts.sort();
    assert_eq!(auts, vec![1, 2, 2, 2, 8, 8, 12]);
    assert!(matches!(enumerate_stable_graphs(0, 2), Err(Error::UnstableRange { .. })));
    assert!(matches!(enumerate_stable_graphs(1, 0), Err(Error::UnstableRange { .. })));
}

#[test]
fn decoration_counts() {
    let total = |g, m, n| -> usize {
        enumerate_stable_graphs(g, m).unwrap().iter().map(|gr| decorations(gr, n).len()).sum()
    };
    assert_eq!(total(1, 1, 3), 6);
    assert_eq!(total(2, 0, 3), 45);
}

#[test]
fn genus_zero_three_point_matches_frobenius() {
    for t in [Target::KP, Target::CnZn] {
        for n in [3usize, 4] {
            let order = 8;
            let (frob, gen) = gens(t, n, 1, order);
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let pot = assemble_potential(&gen, 0, &[a, b, c]).unwrap();
                        let want = frob.three_point(a, b, c).unwrap();
                        assert!(
                            pot.total.sub_series(&want).zero_through(order - 1),
                            "{t:?} n={n} ({a},{b},{c}): {} vs {}",
                            pot.total,
                            want
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn leg_example() {
    for n in [3usize, 4] {
        let (_, gen) = gens(Target::KP, n, 1, 6);
        let leg = leg_contribution(&gen, 0, 0, 0).unwrap();
        let want = Cyc::for_n(n).i().mul_rational(&rat(1, n as i64));
        assert!(leg.sub_series(&gwcrc_core::Series::constant(leg.var(), want)).zero_through(5), "{leg}");
    }
}

#[test]
fn edges_divisible_and_symmetric() {
    for t in [Target::KP, Target::CnZn] {
        let (_, gen) = gens(t, 3, 5, 8);
        for p1 in 0..3 {
            for p2 in 0..3 {
                for r in edge_divisibility_residuals(&gen, p1, p2, 4).unwrap() {
                    assert!(r.zero_through(7));
                }
                for b1 in 0..2u32 {
                    for b2 in 0..2u32 {
                        let right = edge_contribution(&gen, b1, p1, b2, p2).unwrap();
                        let left = edge_contribution_left(&gen, b1, p1, b2, p2).unwrap();
                        let swapped = edge_contribution(&gen, b2, p2, b1, p1).unwrap();
                        assert!(right.sub_series(&left).zero_through(7));
                        assert!(right.sub_series(&swapped).zero_through(7));
                    }
                }
            }
        }
    }
}

fn assert_crc(n: usize, g: usize, ins: &[usize], rho: &CycNum, order: i64) {
    let rep = verify_crc(n, g, ins, rho, order).unwrap();
    assert!(rep.passed(), "n={n} g={g} {ins:?}: {:?} {:?}", rep.mismatches, rep.total_mismatch);
    assert!(rep.lhs.per_graph.iter().any(|t| !t.value.is_zero()));
    let flipped = if g % 2 == 1 { -1 } else { 1 };
    let bad = verify_crc_with_sign(n, g, ins, rho, order, flipped).unwrap();
    assert!(!bad.passed());
}

#[test]
fn crc_n3_contributionwise() {
    let rho = CycNum::from_i64(-1);
    assert_crc(3, 1, &[0], &rho, 10);
    assert_crc(3, 1, &[1], &rho, 10);
    assert_crc(3, 1, &[2], &rho, 10);
    assert_crc(3, 2, &[], &rho, 10);
}

#[test]
fn crc_genus_zero_three_point() {
    let rho = CycNum::from_i64(-1);
    for ins in [[0usize, 0, 0], [0, 1, 2], [1, 1, 1], [2, 2, 2]] {
        let rep = verify_crc(3, 0, &ins, &rho, 10).unwrap();
        assert!(rep.passed(), "{ins:?}");
        assert_eq!(rep.prefactor, CycNum::from_i64(-1));
    }
}

#[test]
fn crc_n4() {
    let rho = Cyc::for_n(4).root(8, 1);
    assert_crc(4, 1, &[1], &rho, 10);
    let rho3 = Cyc::for_n(4).root(8, 3);
    assert!(verify_crc(4, 1, &[2], &rho3, 8).unwrap().passed());
}

#[test]
fn upsilon_generators() {
    let n = 3;
    let order = 8;
    let rho = CycNum::from_i64(-1);
    let cz = FrobeniusData::<CycNum>::new(Target::CnZn, n, order + 4).unwrap();
    let up = Generators::upsilon(&cz, 2, order, &rho).unwrap();
    let want_l = cz.l.scale(&rho.mul_rational(&rat(-1, 3))).truncate(order);
    assert!(up.l.sub_series(&want_l).zero_through(order - 1));
    let want_kn = cz.l.pow_u(3).scale_rational(&rat(1, 27)).truncate(order);
    assert!(up.k[n].sub_series(&want_kn).zero_through(order - 1));
    assert!(matches!(Generators::upsilon(&cz, 2, order, &CycNum::from_i64(1)), Err(Error::InvalidRho)));
    assert!(matches!(verify_crc(3, 1, &[0], &CycNum::from_i64(1), 6), Err(Error::InvalidRho)));
}

#[test]
fn serial_and_parallel_agree() {
    let (_, gen) = gens(Target::KP, 3, required_kmax(2, 0), 8);
    let par = assemble_potential_with(&gen, 2, &[], true).unwrap();
    let ser = assemble_potential_with(&gen, 2, &[], false).unwrap();
    assert_eq!(par.to_json(), ser.to_json());
    assert_eq!(par.per_graph.len(), 45);
}

#[test]
fn larger_kmax_changes_nothing() {
    let need = required_kmax(1, 1);
    let (_, small) = gens(Target::CnZn, 3, need, 8);
    let (_, big) = gens(Target::CnZn, 3, need + 2, 8);
    let a = assemble_potential(&small, 1, &[1]).unwrap();
    let b = assemble_potential(&big, 1, &[1]).unwrap();
    assert_eq!(a.total.to_json(), b.total.to_json());
    let (_, tiny) = gens(Target::CnZn, 3, need - 1, 8);
    assert!(matches!(assemble_potential(&tiny, 1, &[1]), Err(Error::AskLargerKmax { .. })));
    assert!(matches!(leg_contribution(&tiny, 0, need as u32, 0), Err(Error::AskLargerKmax { .. })));
}

#[test]
fn vertex_contributions_finitely_generated() {
    assert!(vertex_finite_generation(3, 1, 1, 16).unwrap() > 0);
    assert!(vertex_finite_generation(3, 2, 0, 16).unwrap() > 0);
}

#[test]
fn vertex_dimension_vanishing() {
    let (_, gen) = gens(Target::KP, 3, 2, 6);
    assert!(vertex_contribution(&gen, 0, &[1, 0, 0], 0).unwrap().is_zero());
    let v = vertex_contribution(&gen, 0, &[0, 0, 0], 1).unwrap();
    assert!(v.sub_series(&gwcrc_core::Series::constant(v.var(), gen.branch.clone())).zero_through(5));
}
