//! CSV renderers for every report table. Numbers use six decimals so reruns are
//! byte-identical; `display` columns carry the two-decimal signed form.

use csv::Writer;

use crate::ablation::AblationReport;
use crate::decomposition::Decomposition;
use crate::diagnostics::AxisDiagnostics;
use crate::fit::{BtFit, LeaveOneOut, PerGameAlpha, StrengthFit};
use crate::h2h::HeadToHead;
use crate::jagged::{JaggednessReport, KSweepRow};
use crate::profile::{Composite, ExtremePrediction, ProfileFit, AXIS_NAMES};
use crate::stability::RankStabilityReport;

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// `+0.85 [0.74, 0.96]`.
pub fn display_ci(x: f64, ci: Option<(f64, f64)>) -> String {
    match ci {
        Some((lo, hi)) => format!("{x:+.2} [{lo:.2}, {hi:.2}]"),
        None => format!("{x:+.2}"),
    }
}

fn render(header: &[String], rows: Vec<Vec<String>>) -> String {
    let mut w = Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 fields")
}

fn h(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

pub const LEADERBOARD_HEADER: [&str; 6] = ["rank", "model", "alpha", "ci_low", "ci_high", "display"];

pub fn leaderboard_csv(fit: &StrengthFit) -> String {
    let rows = fit
        .ranking()
        .into_iter()
        .enumerate()
        .map(|(r, m)| {
            let ci = fit.ci.as_ref().map(|c| c[m]);
            vec![
                (r + 1).to_string(),
                fit.models[m].clone(),
                num(fit.alpha[m]),
                opt(ci.map(|c| c.0)),
                opt(ci.map(|c| c.1)),
                display_ci(fit.alpha[m], ci),
            ]
        })
        .collect();
    render(&h(&LEADERBOARD_HEADER), rows)
}

/// One row per game, one column per model; masked cells are empty.
pub fn per_game_csv(pg: &PerGameAlpha) -> String {
    let header = std::iter::once("game".to_string()).chain(pg.models.iter().cloned()).collect::<Vec<_>>();
    let rows = (0..pg.games.len())
        .map(|g| std::iter::once(pg.games[g].to_string()).chain(pg.alpha.iter().map(|r| opt(r[g]))).collect())
        .collect();
    render(&header, rows)
}

pub fn per_game_se_csv(pg: &PerGameAlpha) -> Option<String> {
    let se = pg.se.as_ref()?;
    let header = std::iter::once("game".to_string()).chain(pg.models.iter().cloned()).collect::<Vec<_>>();
    let rows = (0..pg.games.len())
        .map(|g| std::iter::once(pg.games[g].to_string()).chain(se.iter().map(|r| opt(r[g]))).collect())
        .collect();
    Some(render(&header, rows))
}

/// Row minus column; `*` marks intervals excluding 0, the diagonal is empty.
pub fn head_to_head_csv(m: &HeadToHead) -> String {
    let header = std::iter::once("row_minus_column".to_string()).chain(m.models.iter().cloned()).collect::<Vec<_>>();
    let rows = (0..m.models.len())
        .map(|i| {
            std::iter::once(m.models[i].clone())
                .chain((0..m.models.len()).map(|j| match m.mean[i][j] {
                    Some(v) if i != j => format!("{v:+.2}{}", if m.significant[i][j] { "*" } else { "" }),
                    _ => String::new(),
                }))
                .collect()
        })
        .collect();
    render(&header, rows)
}

/// Wide slopes table; `*` marks BH rejections.
pub fn profile_csv(fit: &ProfileFit) -> String {
    let header = ["model", "intercept"].iter().map(|s| s.to_string()).chain(AXIS_NAMES.iter().map(|s| s.to_string())).collect::<Vec<_>>();
    let rows = (0..fit.models.len())
        .map(|m| {
            let mut r = vec![fit.models[m].clone(), format!("{:+.2}", fit.coef[m][0])];
            r.extend((0..AXIS_NAMES.len()).map(|a| format!("{:+.2}{}", fit.slope(m, a), if fit.reject[m][a] { "*" } else { "" })));
            r
        })
        .collect();
    render(&header, rows)
}

pub fn profile_long_csv(fit: &ProfileFit) -> String {
    let mut rows = Vec::new();
    for m in 0..fit.models.len() {
        for (k, name) in fit.regressors.iter().enumerate() {
            let ci = fit.ci[m][k];
            let bh = if (1..=AXIS_NAMES.len()).contains(&k) { fit.reject[m][k - 1].to_string() } else { String::new() };
            rows.push(vec![
                fit.models[m].clone(),
                name.clone(),
                num(fit.coef[m][k]),
                opt(ci.map(|c| c.0)),
                opt(ci.map(|c| c.1)),
                num(fit.p[m][k]),
                bh,
            ]);
        }
    }
    render(&h(&["model", "regressor", "coef", "ci_low", "ci_high", "p", "bh_reject"]), rows)
}

pub fn extremes_csv(preds: &[ExtremePrediction]) -> String {
    let rows = preds
        .iter()
        .map(|p| {
            vec![
                p.model.clone(),
                p.axis.clone(),
                num(p.z_max),
                num(p.value),
                opt(p.ci.map(|c| c.0)),
                opt(p.ci.map(|c| c.1)),
            ]
        })
        .collect();
    render(&h(&["model", "axis", "z_max", "predicted_alpha", "ci_low", "ci_high"]), rows)
}

pub fn composite_csv(c: &Composite) -> String {
    let mut rows: Vec<Vec<String>> =
        AXIS_NAMES.iter().zip(&c.weights).map(|(a, w)| vec!["weight".into(), a.to_string(), num(*w), String::new()]).collect();
    rows.push(vec!["explained".into(), String::new(), num(c.explained), String::new()]);
    let names = ["low", "mid", "high"];
    rows.extend(
        c.scores.iter().zip(&c.tertile).map(|((g, s), t)| vec!["game".into(), g.to_string(), num(*s), names[*t as usize].into()]),
    );
    render(&h(&["kind", "key", "value", "tertile"]), rows)
}

pub fn jaggedness_csv(r: &JaggednessReport) -> String {
    let rows = (0..r.models.len())
        .map(|m| {
            vec![
                r.models[m].clone(),
                opt(r.j[m]),
                opt(r.ci[m].map(|c| c.0)),
                opt(r.ci[m].map(|c| c.1)),
                r.k.to_string(),
                r.games.len().to_string(),
            ]
        })
        .collect();
    render(&h(&["model", "j", "ci_low", "ci_high", "k", "games"]), rows)
}

pub fn sigma_csv(r: &JaggednessReport) -> String {
    let mut rows: Vec<Vec<String>> = r.games.iter().zip(&r.sigma).map(|(g, s)| vec![g.to_string(), num(*s), "included".into()]).collect();
    rows.extend(r.excluded.iter().map(|g| vec![g.to_string(), num(0.0), "excluded".into()]));
    render(&h(&["game", "sigma", "status"]), rows)
}

pub fn k_sweep_csv(models: &[String], rows: &[KSweepRow]) -> String {
    let header = std::iter::once("k".to_string())
        .chain(models.iter().cloned())
        .chain(std::iter::once("tau_vs_first".into()))
        .collect::<Vec<_>>();
    let body = rows
        .iter()
        .map(|r| {
            std::iter::once(r.k.to_string()).chain(r.j.iter().map(|x| opt(*x))).chain(std::iter::once(opt(r.tau_vs_first))).collect()
        })
        .collect();
    render(&header, body)
}

pub fn stability_games_csv(r: &RankStabilityReport) -> String {
    let rows = r
        .games
        .iter()
        .map(|g| {
            vec![
                g.game.to_string(),
                g.pairs.to_string(),
                g.n_obs.to_string(),
                num(g.e),
                num(g.v),
                g.z.to_string(),
                num(g.p),
                num(g.q),
                g.reject_05.to_string(),
                g.reject_10.to_string(),
            ]
        })
        .collect();
    render(&h(&["game", "pairs", "n_obs", "e", "v", "z", "p", "q", "reject_q05", "reject_q10"]), rows)
}

pub fn stability_cells_csv(r: &RankStabilityReport) -> String {
    let rows = r
        .cells
        .iter()
        .map(|c| {
            vec![
                c.game.to_string(),
                c.stronger.clone(),
                c.weaker.clone(),
                num(c.gap),
                num(c.cell_diff),
                num(c.p),
                num(c.q),
                c.reject_05.to_string(),
            ]
        })
        .collect();
    render(&h(&["game", "stronger", "weaker", "gap", "cell_diff", "p", "q", "reject_q05"]), rows)
}

pub fn ablation_csv(r: &AblationReport) -> String {
    let rows = r
        .rows
        .iter()
        .map(|a| {
            vec![
                a.family.clone(),
                a.anchor.clone().unwrap_or_else(|| "pooled".into()),
                num(a.delta),
                num(a.ci.0),
                num(a.ci.1),
                a.n.to_string(),
                a.games.to_string(),
                display_ci(a.delta, Some(a.ci)),
            ]
        })
        .collect();
    render(&h(&["family", "anchor", "delta", "ci_low", "ci_high", "n", "games", "display"]), rows)
}

pub fn diagnostics_csv(d: &AxisDiagnostics) -> String {
    let header = std::iter::once("axis".to_string())
        .chain(d.names.iter().cloned())
        .chain(std::iter::once("vif".into()))
        .collect::<Vec<_>>();
    let rows = (0..d.names.len())
        .map(|a| {
            std::iter::once(d.names[a].clone())
                .chain(d.correlation[a].iter().map(|c| opt(*c)))
                .chain(std::iter::once(d.vif[a].to_string()))
                .collect()
        })
        .collect();
    render(&header, rows)
}

pub fn decomposition_csv(d: &Decomposition) -> String {
    let row = |name: &str, v: f64, ci: Option<(f64, f64)>| {
        vec![name.to_string(), num(v), opt(ci.map(|c| c.0)), opt(ci.map(|c| c.1))]
    };
    let rows = vec![
        row("sigma2_model", d.point.sigma2_m, d.ci_sigma2_m),
        row("sigma2_model_game", d.point.sigma2_mg, d.ci_sigma2_mg),
        row("ratio", d.point.ratio, d.ci_ratio),
        vec!["cells".into(), d.point.cells.to_string(), String::new(), String::new()],
    ];
    render(&h(&["component", "value", "ci_low", "ci_high"]), rows)
}

pub fn bradley_terry_csv(bt: &BtFit) -> String {
    let mut idx: Vec<usize> = (0..bt.models.len()).collect();
    idx.sort_by(|a, b| bt.scores[*b].total_cmp(&bt.scores[*a]));
    let rows = idx
        .into_iter()
        .map(|m| {
            vec![
                bt.models[m].clone(),
                num(bt.scores[m]),
                bt.separated.to_string(),
                bt.ties_excluded.to_string(),
            ]
        })
        .collect();
    render(&h(&["model", "score", "ridge_stabilized", "ties_excluded"]), rows)
}

pub fn leave_one_out_csv(rows: &[LeaveOneOut]) -> String {
    let body = rows
        .iter()
        .map(|r| vec![r.dropped_game.to_string(), opt(r.tau), r.error.clone().unwrap_or_default()])
        .collect();
    render(&h(&["dropped_game", "kendall_tau", "error"]), body)
}
