//! Closed-form statistics against hand arithmetic and brute-force enumeration.

mod common;

use common::oracles::{bh_oracle, hadamard8, spearman_d2_oracle, tau_b_oracle};
use common::{constant, planted};
use genstrat_stats::data::{Observations, Record};
use genstrat_stats::decomposition::{variance_components, variance_decomposition};
use genstrat_stats::diagnostics::{axis_diagnostics, vif, Vif};
use genstrat_stats::fit::{fit_alpha, fit_alpha_per_game, game_bootstrap};
use genstrat_stats::h2h::head_to_head_matrix;
use genstrat_stats::jagged::{jaggedness, jaggedness_from_z, k_sweep, neighbourhoods};
use genstrat_stats::multiple::{bh_fdr, bh_qvalues};
use genstrat_stats::rank::{kendall_tau, rank_correlation, spearman_rho, RankKind};
use genstrat_stats::stability::{game_counts, p_rev, rank_stability, z_stat, ZStat};
use genstrat_stats::StatsError;
use proptest::prelude::*;

// Standard normal CDF values from printed tables.
const PHI_M1: f64 = 0.158_655_253_931_457_05;
const PHI_M2: f64 = 0.022_750_131_948_179_21;

#[test]
fn bh_hand_cases() {
    assert_eq!(bh_fdr(&[0.01, 0.02, 0.04, 0.20], 0.05), vec![true, true, false, false]);
    assert_eq!(bh_fdr(&[1.0; 5], 0.05), vec![false; 5]);
    assert_eq!(bh_fdr(&[0.01], 0.05), vec![true]);
    // Step-up: p_(3) = 0.03 ≤ 3·0.05/4 rescues p_(2) = 0.026 > 2·0.05/4.
    assert_eq!(bh_fdr(&[0.03, 0.026, 0.001, 0.9], 0.05), vec![true, true, true, false]);
}

#[test]
fn kendall_four_items_by_pair_count() {
    // Pairs: (1,2)+ (1,3)+ (1,4)+ (2,3)− (2,4)+ (3,4)+ → (5 − 1)/6.
    let t = kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    assert!((t - 4.0 / 6.0).abs() < 1e-15);
    // d = (0, 1, −1, 0): 1 − 6·2/(4·15).
    let r = spearman_rho(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    assert!((r - 0.8).abs() < 1e-15);
    let x = [3.0, 1.0, 4.0, 1.5];
    let rev: Vec<f64> = x.iter().map(|v| -v).collect();
    for kind in [RankKind::Kendall, RankKind::Spearman] {
        assert_eq!(rank_correlation(&x, &x, kind), Some(1.0));
        assert_eq!(rank_correlation(&x, &rev, kind), Some(-1.0));
    }
    assert_eq!(kendall_tau(&[1.0, 1.0], &[1.0, 2.0]), None);
}

#[test]
fn vif_three_axis_hand_example() {
    // h1, h2, h3 are orthogonal centred ±1 columns. With x3 = h1 + h3:
    // x3 on (h1, h2) leaves h3, R² = 1 − 4/8; x1 on (h2, x3) fits x3/2, R² = 1 − 2/4;
    // x2 is orthogonal to both.
    let h1 = [1.0, 1.0, -1.0, -1.0];
    let h2 = [1.0, -1.0, 1.0, -1.0];
    let h3 = [1.0, -1.0, -1.0, 1.0];
    let x3: Vec<f64> = h1.iter().zip(&h3).map(|(a, b)| a + b).collect();
    let v = vif(&[h1.to_vec(), h2.to_vec(), x3]);
    let expect = [2.0, 1.0, 2.0];
    for (got, want) in v.iter().zip(expect) {
        match got {
            Vif::Finite(x) => assert!((x - want).abs() < 1e-12, "{x} vs {want}"),
            Vif::Infinite => panic!("unexpected sentinel"),
        }
    }
}

#[test]
fn orthogonal_axes_have_unit_vif_and_duplicates_are_infinite() {
    let h = hadamard8();
    let cols: Vec<Vec<f64>> = (1..7).map(|c| (0..8).map(|r| h[r][c]).collect()).collect();
    let names = ["a", "b", "c", "d", "e", "f"];
    let d = axis_diagnostics(&names, &cols).unwrap();
    for v in &d.vif {
        assert!(matches!(v, Vif::Finite(x) if (x - 1.0).abs() < 1e-12));
    }
    for i in 0..6 {
        for j in 0..6 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((d.correlation[i][j].unwrap() - want).abs() < 1e-12);
        }
    }
    let mut dup = cols.clone();
    dup[5] = dup[0].clone();
    let d = axis_diagnostics(&names, &dup).unwrap();
    assert_eq!(d.vif[0], Vif::Infinite);
    assert_eq!(d.vif[5], Vif::Infinite);
    assert!(matches!(axis_diagnostics(&names, &vec![vec![0.0; 7]; 6]), Err(StatsError::TooFewGames { need: 8, got: 7 })));
}

#[test]
fn reversal_sums_three_pair_hand_case() {
    // Overall (1, 0, −1), per-game (0, 0.5, −0.5), unit SEs.
    // Pair gaps 1, 2, 1; only (0,1) is reversed.
    let (n, e, v, pairs) = game_counts(&[Some(0.0), Some(0.5), Some(-0.5)], &[1.0, 0.0, -1.0], |_, _| 1.0);
    assert_eq!((n, pairs), (1, 3));
    let e_hand = 2.0 * PHI_M1 + PHI_M2;
    let v_hand = 2.0 * PHI_M1 * (1.0 - PHI_M1) + PHI_M2 * (1.0 - PHI_M2);
    assert!((e - e_hand).abs() < 1e-12, "{e} vs {e_hand}");
    assert!((v - v_hand).abs() < 1e-12);
    match z_stat(n, e, v) {
        ZStat::Finite(z) => assert!((z - (1.0 - e_hand) / v_hand.sqrt()).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
    assert_eq!(p_rev(0.0, 0.7), 0.5);
    assert_eq!(p_rev(0.0, 0.0), 0.5);
    assert_eq!(p_rev(1.0, 0.0), 0.0);
    assert_eq!(z_stat(1, 0.0, 0.0), ZStat::PosInfinity);
    assert_eq!(z_stat(0, 0.0, 0.0), ZStat::Undefined);
    assert_eq!(ZStat::PosInfinity.p_value(), 0.0);
}

#[test]
fn variance_components_two_by_two() {
    // Row means ±2, grand mean 0: σ²_M = 4; residuals ±1: σ²_MG = 1.
    let c = variance_components(&vec![vec![Some(1.0), Some(3.0)], vec![Some(-1.0), Some(-3.0)]]).unwrap();
    assert!((c.sigma2_m - 4.0).abs() < 1e-15);
    assert!((c.sigma2_mg - 1.0).abs() < 1e-15);
    assert!((c.ratio - 0.25).abs() < 1e-15);
    let flat = variance_components(&vec![vec![Some(2.0); 3], vec![Some(-2.0); 3]]).unwrap();
    assert_eq!(flat.sigma2_mg, 0.0);
    assert!(variance_components(&vec![vec![Some(1.0)], vec![Some(1.0)]]).is_err(), "game effect must be 0");
}

#[test]
fn decomposition_bootstrap_runs_jointly() {
    let alpha = vec![vec![1.0, 0.5, 1.5, 0.0], vec![0.0, 0.5, -0.5, 0.2], vec![-1.0, -1.0, -1.0, -0.2]];
    let obs = Observations::from_records(planted(&alpha, 3, 1.0, 6)).unwrap();
    let d = variance_decomposition(&obs, 300, 2).unwrap();
    let direct = variance_components(&fit_alpha_per_game(&obs).alpha).unwrap();
    assert_eq!(d.point, direct);
    let (lo, hi) = d.ci_ratio.unwrap();
    assert!(lo <= hi);
    assert_eq!(d, variance_decomposition(&obs, 300, 2).unwrap());
}

fn line_points(x: &[f64]) -> Vec<[f64; 6]> {
    x.iter().map(|v| [*v, 0.0, 0.0, 0.0, 0.0, 0.0]).collect()
}

#[test]
fn jaggedness_five_game_hand_case() {
    // Games on a line at 0..4, K = 1: neighbourhoods {0,1} {1,0} {2,1} {3,2} {4,3}
    // (the tie at game 1 goes to the lower index). z = (0, 2, 2, 4, 0) gives
    // local stds 1, 1, 0, 1, 2 and J = 1.
    let nb = neighbourhoods(&line_points(&[0.0, 1.0, 2.0, 3.0, 4.0]), 1);
    assert_eq!(nb, vec![vec![0, 1], vec![1, 0], vec![2, 1], vec![3, 2], vec![4, 3]]);
    let z = vec![[0.0, 2.0, 2.0, 4.0, 0.0].map(Some).to_vec(), vec![Some(1.5); 5]];
    let j = jaggedness_from_z(&z, &nb);
    assert!((j[0].unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(j[1], Some(0.0));
}

#[test]
fn jaggedness_pipeline_on_planted_surface() {
    let alpha = vec![
        vec![1.0, 0.2, 0.8, -0.4, 0.5, 0.0],
        vec![0.0, 0.3, -0.2, 0.6, -0.5, 0.1],
        vec![-1.0, -0.5, -0.6, -0.2, 0.0, -0.1],
    ];
    let mut recs = planted(&alpha, 2, 1.0, 3);
    // A game where every margin is 0 has no stakes scale.
    for r in 0..2 {
        recs.push(Record { game: 900, alice: "m0".into(), bob: "m1".into(), run: r, margin: 0.0 });
        recs.push(Record { game: 900, alice: "m2".into(), bob: "m1".into(), run: r, margin: 0.0 });
    }
    let obs = Observations::from_records(recs).unwrap();
    let table: Vec<(u64, [f64; 6])> = obs.games.iter().map(|g| (*g, [*g as f64, (*g % 3) as f64, 0.0, 1.0, 0.0, 0.0])).collect();
    let boot = game_bootstrap(&obs, 200, 4);
    let rep = jaggedness(&obs, &table, &boot, 3).unwrap();
    assert_eq!(rep.excluded, vec![900]);
    assert_eq!(rep.games.len(), 6);
    assert!(rep.sigma.iter().all(|s| *s > 0.0));
    for (m, j) in rep.j.iter().enumerate() {
        let j = j.unwrap();
        assert!(j >= 0.0);
        let (lo, hi) = rep.ci[m].unwrap();
        assert!(lo <= hi);
    }
    let sweep = k_sweep(&rep, &table, &[3, 1, 2, 5]);
    assert_eq!(sweep[0].j, rep.j);
    assert_eq!(sweep[0].tau_vs_first, Some(1.0));
    assert!(matches!(jaggedness(&obs, &table, &boot, 6), Err(StatsError::TooFewGames { need: 7, got: 6 })));
}

#[test]
fn stability_null_has_no_reversals_on_flat_surfaces() {
    let obs = Observations::from_records(constant(&[0.8, 0.1, -0.3, -0.6], 5, 2, 0.0, 0)).unwrap();
    let boot = game_bootstrap(&obs, 100, 1);
    let fit = fit_alpha(&obs).unwrap();
    let pg = fit_alpha_per_game(&obs);
    let r = rank_stability(&obs.models, &obs.games, &pg.alpha, &fit.alpha, &boot);
    assert!(r.games.iter().all(|g| g.n_obs == 0));
    assert!(r.cells.is_empty());
    assert!(r.independence_assumed);
    // Noiseless data: every SE is 0 and every gap nonzero, so the null is degenerate at 0.
    assert!(r.games.iter().all(|g| g.e == 0.0 && g.z == ZStat::Undefined && g.p == 1.0));
}

#[test]
fn stability_flags_a_planted_reversal() {
    let alpha = vec![vec![1.0, 1.0, 1.0, -1.0], vec![0.0, 0.0, 0.0, 1.0], vec![-1.0, -1.0, -1.0, 0.0]];
    let obs = Observations::from_records(planted(&alpha, 4, 0.3, 9)).unwrap();
    let boot = game_bootstrap(&obs, 300, 5);
    let fit = fit_alpha(&obs).unwrap();
    let r = rank_stability(&obs.models, &obs.games, &fit_alpha_per_game(&obs).alpha, &fit.alpha, &boot);
    let last = r.games.iter().find(|g| g.game == 103).unwrap();
    assert_eq!(last.n_obs, 2);
    assert!(r.cells.iter().filter(|c| c.game == 103).all(|c| c.p < 0.05));
    assert!(r.games.iter().filter(|g| g.game != 103).all(|g| g.n_obs == 0));
}

#[test]
fn head_to_head_hand_mean_and_antisymmetry() {
    let rec = |a: &str, b: &str, run, m| Record { game: 1, alice: a.into(), bob: b.into(), run, margin: m };
    // A as Alice: +2, +4 (mean 3). A as Bob: Alice margins −1, +1, −3, so A gets 1, −1, 3 (mean 1).
    let recs = vec![
        rec("A", "B", 0, 2.0),
        rec("A", "B", 1, 4.0),
        rec("B", "A", 0, -1.0),
        rec("B", "A", 1, 1.0),
        rec("B", "A", 2, -3.0),
    ];
    let m = head_to_head_matrix(&Observations::from_records(recs).unwrap(), 200, 1);
    assert!((m.mean[0][1].unwrap() - 2.0).abs() < 1e-15);
    assert_eq!(m.mean[1][0], Some(-2.0));
    assert_eq!(m.mean[0][0], None);

    let obs = Observations::from_records(constant(&[0.9, 0.2, -0.1, -1.0], 4, 3, 1.0, 2)).unwrap();
    let m = head_to_head_matrix(&obs, 300, 9);
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                assert_eq!(m.mean[i][j].unwrap(), -m.mean[j][i].unwrap());
                assert_eq!(m.significant[i][j], m.significant[j][i]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bh_matches_oracle_and_is_monotone(p in proptest::collection::vec(0.0f64..1.0, 1..30), q in 0.001f64..0.3) {
        let flags = bh_fdr(&p, q);
        prop_assert_eq!(&flags, &bh_oracle(&p, q));
        let lower = bh_fdr(&p, q / 2.0);
        prop_assert!(lower.iter().zip(&flags).all(|(l, f)| !*l || *f));
        let qv = bh_qvalues(&p);
        prop_assert!(qv.iter().zip(&flags).all(|(v, f)| (*v <= q) == *f));
    }

    #[test]
    fn tau_b_matches_sign_product_oracle(
        a in proptest::collection::vec(0u8..4, 2..12),
        b in proptest::collection::vec(0u8..4, 12),
    ) {
        let a: Vec<f64> = a.iter().map(|x| *x as f64).collect();
        let b: Vec<f64> = b[..a.len()].iter().map(|x| *x as f64).collect();
        let got = kendall_tau(&a, &b);
        let want = tau_b_oracle(&a, &b);
        prop_assert_eq!(got.is_some(), want.is_some());
        if let (Some(g), Some(w)) = (got, want) {
            prop_assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn spearman_matches_rank_difference_formula(
        perm in Just((0..8).collect::<Vec<u32>>()).prop_shuffle(),
        scale in 0.1f64..10.0,
    ) {
        let a: Vec<f64> = (0..8).map(|x| (x as f64 * scale).exp()).collect();
        let b: Vec<f64> = perm.iter().map(|x| *x as f64 - 3.5).collect();
        prop_assert!((spearman_rho(&a, &b).unwrap() - spearman_d2_oracle(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn jaggedness_constant_and_homogeneous(
        z in proptest::collection::vec(-3.0f64..3.0, 6),
        c in -2.0f64..2.0,
        lambda in 0.01f64..10.0,
        k in 1usize..5,
    ) {
        let xs: Vec<f64> = (0..6).map(|i| (i * 7 % 6) as f64).collect();
        let nb = neighbourhoods(&line_points(&xs), k);
        let flat = jaggedness_from_z(&vec![vec![Some(c); 6]], &nb);
        prop_assert!(flat[0].unwrap().abs() < 1e-12);
        let base = jaggedness_from_z(&vec![z.iter().map(|v| Some(*v)).collect()], &nb)[0].unwrap();
        let scaled = jaggedness_from_z(&vec![z.iter().map(|v| Some(lambda * v)).collect()], &nb)[0].unwrap();
        prop_assert!(base >= 0.0);
        prop_assert!((scaled - lambda * base).abs() < 1e-9 * (1.0 + scaled.abs()));
    }

    #[test]
    fn p_rev_is_bounded(gap in -5.0f64..5.0, se in 0.0f64..3.0) {
        let p = p_rev(gap, se);
        prop_assert!((0.0..=0.5).contains(&p));
    }
}
