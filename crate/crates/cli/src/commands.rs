use std::f64::consts::PI;

use qgraph_core::bethe::{solve_gaudin, solve_graph_pair, solve_lieb_liniger_ring, BetheRoot, GraphZSpec};
use qgraph_core::pde::{
    extrapolate, gap_scale_ev, physical_energy_ev, Axes, Contact, DomainSpec, Profile, Sector,
};
use qgraph_core::thermo::{
    ground_state_limit, pair_condensation, surface_model, sweep_thermo, DefectWeights, SurfaceModelSpec,
    SweepResult, ThermoState, VerdictRule,
};
use qgraph_core::{negative_spectrum, scan_spectrum, total_length, weyl_fit, zero_mode_multiplicity};
use serde_json::{json, Value};

use crate::input::{load_graph, InputError, PairAlpha};
use crate::output::{fval, num, Params, Report, Table};
use crate::{BecCommand, BetheCommand, CliError, Command, OracleCommand, SectorArg};

type Res = Result<Report, CliError>;

fn list(v: &[impl ToString]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn sector(s: SectorArg) -> Sector {
    match s {
        SectorArg::Full => Sector::Full,
        SectorArg::Bosonic => Sector::Bosonic,
        SectorArg::Fermionic => Sector::Fermionic,
    }
}

fn report(stem: &str, command: &str, params: Params, table: Table, summary: Value) -> Res {
    Ok(Report {
        stem: stem.into(),
        command: command.into(),
        params,
        table,
        summary,
    })
}

pub fn run(cmd: &Command) -> Res {
    match cmd {
        Command::Spectrum { graph, kmax, grid, tol } => {
            let gf = load_graph(graph)?;
            let total = total_length(&gf.graph);
            let grid = grid.unwrap_or(PI / total / 4.0);
            let zero = zero_mode_multiplicity(&gf.graph, &gf.bc)?;
            let scan = scan_spectrum(&gf.graph, &gf.bc, *kmax, grid, *tol)?;
            let mut t = Table::new(&["index", "k", "lambda", "multiplicity", "residual", "source"]);
            if zero > 0 {
                t.push(vec!["0".into(), "0".into(), "0".into(), zero.to_string(), "0".into(), "zero-mode".into()]);
            }
            for e in &scan.eigenvalues {
                t.push(vec![
                    t.len().to_string(),
                    num(e.k),
                    num(e.lambda),
                    e.multiplicity.to_string(),
                    num(e.residual),
                    e.source.tag().into(),
                ]);
            }
            let params = Params::new()
                .set("graph", graph.display())
                .set("kmax", kmax)
                .set("grid", grid)
                .set("tol", tol);
            report(
                "spectrum",
                "spectrum",
                params,
                t,
                json!({
                    "eigenvalues": scan.count() + zero,
                    "zero_modes": zero,
                    "edges": gf.edge_ids,
                    "vertices": gf.vertex_ids,
                    "total_length": fval(total),
                    "winding": scan.total_winding,
                    "refinements": scan.refinements,
                    "fallbacks": scan.fallbacks,
                    "warnings": scan.warnings,
                }),
            )
        }
        Command::Negative { graph, kappa_max } => {
            let gf = load_graph(graph)?;
            let neg = negative_spectrum(&gf.graph, &gf.bc, *kappa_max)?;
            let mut t = Table::new(&["index", "kappa", "lambda", "multiplicity", "residual"]);
            for (i, e) in neg.iter().enumerate() {
                t.push(vec![i.to_string(), num(e.k), num(e.lambda), e.multiplicity.to_string(), num(e.residual)]);
            }
            let params = Params::new().set("graph", graph.display()).set("kappa_max", kappa_max);
            report(
                "negative",
                "negative",
                params,
                t,
                json!({
                    "eigenvalues": neg.iter().map(|e| e.multiplicity).sum::<usize>(),
                    "l_max": fval(gf.bc.l_max()),
                }),
            )
        }
        Command::Weyl { graph, count } => {
            let gf = load_graph(graph)?;
            if *count < 2 {
                return Err(InputError::Argument("--count must be at least 2".into()).into());
            }
            let total = total_length(&gf.graph);
            let k_max = (*count as f64 + 10.0) * PI / total * 1.05;
            let mut scan = scan_spectrum(&gf.graph, &gf.bc, k_max, PI / total / 4.0, 1e-10)?;
            let mut acc = 0;
            scan.eigenvalues.retain(|e| {
                let keep = acc < *count;
                acc += e.multiplicity;
                keep
            });
            let (slope, dev) = weyl_fit(&scan, &gf.graph)?;
            let mut t = Table::new(&["k", "count"]);
            let mut n = 0;
            for e in &scan.eigenvalues {
                n += e.multiplicity;
                t.push(vec![num(e.k), n.to_string()]);
            }
            let params = Params::new().set("graph", graph.display()).set("count", count);
            report(
                "weyl",
                "weyl",
                params,
                t,
                json!({
                    "slope": fval(slope),
                    "expected": fval(total / PI),
                    "relative_deviation": fval(dev),
                    "eigenvalues_used": n,
                }),
            )
        }
        Command::Bethe { model } => bethe(model),
        Command::Oracle { domain } => oracle(domain),
        Command::Bec { model } => bec(model),
    }
}

fn bethe_table(roots: &[BetheRoot]) -> Table {
    let mut t = Table::new(&["label1", "label2", "k1", "k2", "lambda", "residual"]);
    for r in roots {
        t.push(vec![
            r.label.0.to_string(),
            r.label.1.to_string(),
            num(r.k1),
            num(r.k2),
            num(r.lambda),
            num(r.residual),
        ]);
    }
    t
}

fn bethe(model: &BetheCommand) -> Res {
    match model {
        BetheCommand::Gaudin(a) | BetheCommand::Ring(a) => {
            let gaudin = matches!(model, BetheCommand::Gaudin(_));
            let roots = if gaudin {
                solve_gaudin(a.length, a.alpha, a.lmax)?
            } else {
                solve_lieb_liniger_ring(a.length, a.alpha, a.lmax)?
            };
            let name = if gaudin { "gaudin" } else { "ring" };
            let params = Params::new().set("length", a.length).set("alpha", a.alpha).set("lmax", a.lmax);
            report(
                &format!("bethe_{name}"),
                &format!("bethe {name}"),
                params,
                bethe_table(&roots),
                json!({
                    "roots": roots.len(),
                    "model": roots.first().map_or(name, |r| r.model.tag()),
                    "max_residual": fval(roots.iter().fold(0.0, |m, r| m.max(r.residual))),
                }),
            )
        }
        BetheCommand::Graph { graph, lmax, alpha } => {
            let gf = load_graph(graph)?;
            let ne = gf.graph.n_edges();
            let table = match (alpha, &gf.alpha) {
                (Some(a), _) | (None, Some(PairAlpha::Uniform(a))) => vec![vec![*a; ne]; ne],
                (None, Some(PairAlpha::Table(t))) => t.clone(),
                (None, None) => {
                    return Err(InputError::Argument(
                        "no pair interaction: pass --alpha or add pair_interactions to the graph file".into(),
                    )
                    .into())
                }
            };
            let spec = GraphZSpec::new(gf.graph.clone(), &gf.bc, table)?;
            let roots = solve_graph_pair(&spec, *lmax)?;
            let mut t = Table::new(&["k1", "k2", "lambda", "residual", "seeds", "nullity"]);
            for r in &roots {
                t.push(vec![
                    num(r.root.k1),
                    num(r.root.k2),
                    num(r.root.lambda),
                    num(r.root.residual),
                    r.seeds.to_string(),
                    r.nullity.to_string(),
                ]);
            }
            let mut params = Params::new().set("graph", graph.display()).set("lmax", lmax);
            if let Some(a) = alpha {
                params = params.set("alpha", a);
            }
            report(
                "bethe_graph",
                "bethe graph",
                params,
                t,
                json!({
                    "roots": roots.len(),
                    "dimensions": spec.dimensions().to_string(),
                    "note": "roots satisfy the necessary conditions Z(k1,k2) = Z(k2,k1) = 0",
                }),
            )
        }
    }
}

fn oracle(domain: &OracleCommand) -> Res {
    let (spec, extent, levels, count, stem, mut params, physical, d) = match domain {
        OracleCommand::Square { l, alpha, sigma, sector: s, h_levels, count } => {
            let contact = match alpha.trim() {
                "inf" | "infinity" | "hardcore" => Contact::Hardcore,
                a => Contact::Strength(Profile::Constant(a.parse::<f64>().map_err(|_| {
                    InputError::Argument(format!("--alpha: expected a number or inf, got {a}"))
                })?)),
            };
            let mut spec = DomainSpec::square(*l, sector(*s)).with_contact(contact);
            if let Some(sg) = sigma {
                spec = spec.with_axes(Axes::Robin(Profile::Constant(*sg)));
            }
            let mut p = Params::new().set("L", l).set("alpha", alpha);
            if let Some(sg) = sigma {
                p = p.set("sigma", sg);
            }
            (spec, *l, h_levels, *count, "oracle_square", p, None, 1.0)
        }
        OracleCommand::Pencil { d, l, sigma, sector: s, h_levels, count, physical } => {
            let spec = DomainSpec::pencil(*d, *l, Profile::Constant(*sigma), sector(*s));
            let p = Params::new().set("d", d).set("L", l).set("sigma", sigma);
            (spec, *d, h_levels, *count, "oracle_pencil", p, *physical, *d)
        }
    };
    let sec = match domain {
        OracleCommand::Square { sector: s, .. } | OracleCommand::Pencil { sector: s, .. } => sector(*s),
    };
    params = params
        .set("sector", sec.name())
        .set("h_levels", list(levels))
        .set("count", count);
    if let Some(m) = physical {
        params = params.set("physical_d_m", m);
    }
    if levels.iter().any(|&n| n == 0) {
        return Err(InputError::Argument("--h-levels must be positive".into()).into());
    }
    let h: Vec<f64> = levels.iter().map(|&n| extent / n as f64).collect();
    let r = extrapolate(&spec, count, &h)?;
    let mut header: Vec<String> = vec!["index".into()];
    header.extend(levels.iter().map(|n| format!("lambda_n{n}")));
    header.extend(["extrapolated", "error", "order", "flagged"].map(String::from));
    if physical.is_some() {
        header.push("energy_ev".into());
    }
    let mut t = Table::with_header(header);
    for k in 0..r.extrapolated.len() {
        let mut row = vec![k.to_string()];
        row.extend(r.levels.iter().map(|l| num(l[k])));
        row.extend([num(r.extrapolated[k]), num(r.error[k]), num(r.order[k]), r.flagged[k].to_string()]);
        if let Some(m) = physical {
            row.push(num(physical_energy_ev(r.extrapolated[k] * d * d, m)));
        }
        t.push(row);
    }
    let mut summary = json!({
        "extrapolated": r.extrapolated.iter().map(|&x| fval(x)).collect::<Vec<_>>(),
        "error": r.error.iter().map(|&x| fval(x)).collect::<Vec<_>>(),
        "flagged": r.flagged,
    });
    if let Some(ess) = r.essential {
        let below = r.extrapolated.iter().filter(|&&x| x < ess).count();
        summary["essential_threshold"] = fval(ess);
        summary["levels_below_threshold"] = json!(below);
        if let Some(&e0) = r.extrapolated.first() {
            summary["ground_over_pi2"] = fval(e0 * d * d / (PI * PI));
            if let Some(m) = physical {
                summary["physical"] = json!({
                    "d_m": fval(m),
                    "ground_ev": fval(physical_energy_ev(e0 * d * d, m)),
                    "gap_ev": fval(physical_energy_ev((ess - e0) * d * d, m)),
                    "gap_scale_ev": fval(gap_scale_ev(m)),
                });
            }
        }
    }
    report(stem, &stem.replace('_', " "), params, t, summary)
}

fn rule_json(rule: &VerdictRule) -> Value {
    json!({
        "condensed_fraction": fval(rule.condensed),
        "empty_fraction": fval(rule.empty),
        "condensed_slope": fval(rule.condensed_slope),
        "empty_slope": fval(rule.empty_slope),
        "window": "three largest sizes",
    })
}

fn sweep_json(r: &SweepResult) -> Value {
    let warnings: Vec<String> = r
        .states
        .iter()
        .flat_map(|s| s.warnings.iter().map(move |w| format!("size {}: {w}", s.size)))
        .collect();
    json!({
        "verdict": r.verdict.tag(),
        "limsup_estimate": fval(r.limsup_estimate),
        "slope": fval(r.slope),
        "rule": rule_json(&r.rule),
        "warnings": warnings,
    })
}

fn state_row(s: &ThermoState, rho0: f64, rule: &VerdictRule) -> Vec<String> {
    vec![
        num(s.size),
        num(s.mu),
        num(s.gap),
        num(rho0),
        s.levels.iter().map(|l| l.1).sum::<usize>().to_string(),
        num(s.residual),
        num(s.tail_estimate),
        (rho0 > rule.condensed * s.rho).to_string(),
        (rho0 < rule.empty * s.rho).to_string(),
    ]
}

const STATE_COLS: [&str; 9] = [
    "size",
    "mu",
    "gap",
    "rho0",
    "levels",
    "density_residual",
    "tail_estimate",
    "above_condensed",
    "below_empty",
];

fn default_sizes(sizes: &Option<Vec<f64>>, d: f64) -> Vec<f64> {
    sizes.clone().unwrap_or_else(|| vec![6.0 * d, 12.0 * d, 24.0 * d, 48.0 * d])
}

fn bec(model: &BecCommand) -> Res {
    match model {
        BecCommand::Sweep { graph, beta, rho, eta } => {
            let gf = load_graph(graph)?;
            let r = sweep_thermo(&gf.graph, &gf.bc, *beta, *rho, eta)?;
            let mut t = Table::new(&STATE_COLS);
            for (s, &r0) in r.states.iter().zip(&r.ground_occupation) {
                t.push(state_row(s, r0, &r.rule));
            }
            let mut summary = sweep_json(&r);
            if gf.bc.l_max() > 0.0 {
                let g = ground_state_limit(&gf.graph, &gf.bc, eta)?;
                summary["ground_state_limit"] = json!({
                    "values": g.values.iter().map(|&x| fval(x)).collect::<Vec<_>>(),
                    "estimate": fval(g.estimate),
                    "l_max": fval(g.l_max),
                    "distance_to_minus_l_max": fval(g.distance_linear),
                    "distance_to_minus_l_max_squared": fval(g.distance_quadratic),
                    "monotone": g.monotone,
                    "cauchy": g.cauchy,
                });
            }
            let params = Params::new()
                .set("graph", graph.display())
                .set("beta", beta)
                .set("rho", rho)
                .set("eta", list(eta));
            report("bec_sweep", "bec sweep", params, t, summary)
        }
        BecCommand::Pairs { d, beta, rho, sizes, sigma, h, physical } => {
            let sizes = default_sizes(sizes, *d);
            let r = pair_condensation(*d, *beta, *rho, &sizes, &Profile::Constant(*sigma), *h)?;
            let mut cols = STATE_COLS.to_vec();
            cols.push("e0");
            let mut t = Table::new(&cols);
            for (s, &r0) in r.sweep.states.iter().zip(&r.sweep.ground_occupation) {
                let mut row = state_row(s, r0, &r.sweep.rule);
                row.push(num(s.lowest()));
                t.push(row);
            }
            let mut summary = sweep_json(&r.sweep);
            summary["rho_crit"] = fval(r.rho_crit);
            let e0 = r.sweep.states.last().map_or(f64::NAN, |s| s.lowest());
            if let Some(m) = physical {
                summary["physical"] = json!({
                    "d_m": fval(*m),
                    "ground_ev": fval(physical_energy_ev(e0 * d * d, *m)),
                    "gap_scale_ev": fval(gap_scale_ev(*m)),
                });
            }
            let mut params = Params::new()
                .set("d", d)
                .set("beta", beta)
                .set("rho", rho)
                .set("sizes", list(&sizes))
                .set("sigma", sigma)
                .set("h", h);
            if let Some(m) = physical {
                params = params.set("physical_d_m", m);
            }
            report("bec_pairs", "bec pairs", params, t, summary)
        }
        BecCommand::Surface { d, delta, e, alpha_s, lambda_rep, beta, rho, sizes, h, physical } => {
            let sizes = default_sizes(sizes, *d);
            let spec = SurfaceModelSpec {
                d: *d,
                delta: *delta,
                weights: DefectWeights::Uniform(*e),
                alpha_s: *alpha_s,
                lambda_rep: *lambda_rep,
                h: *h,
            };
            let r = surface_model(&spec, *beta, *rho, &sizes)?;
            let mut cols = STATE_COLS.to_vec();
            cols.extend(["defects", "rho_s", "fixed_point_residual", "iterations", "method", "bulk_e0"]);
            let mut t = Table::new(&cols);
            for ((s, &r0), sf) in r.sweep.states.iter().zip(&r.sweep.ground_occupation).zip(&r.surface) {
                let mut row = state_row(s, r0, &r.sweep.rule);
                row.extend([
                    sf.defects.to_string(),
                    num(sf.rho_s),
                    num(sf.residual),
                    sf.iterations.to_string(),
                    match sf.method {
                        qgraph_core::thermo::FixedPointMethod::Damped(th) => format!("damped-{th}"),
                        qgraph_core::thermo::FixedPointMethod::Bisection => "bisection".into(),
                    },
                    num(sf.bulk_e0),
                ]);
                t.push(row);
            }
            let mut summary = sweep_json(&r.sweep);
            summary["destruction_condition"] = json!(r.destruction_condition);
            summary["rho_s"] = json!(r.surface.iter().map(|s| fval(s.rho_s)).collect::<Vec<_>>());
            if let Some(m) = physical {
                let e0 = r.surface.last().map_or(f64::NAN, |s| s.bulk_e0);
                summary["physical"] = json!({
                    "d_m": fval(*m),
                    "bulk_ground_ev": fval(physical_energy_ev(e0 * d * d, *m)),
                    "gap_scale_ev": fval(gap_scale_ev(*m)),
                });
            }
            let mut params = Params::new()
                .set("d", d)
                .set("delta", delta)
                .set("e", e)
                .set("alpha_s", alpha_s)
                .set("lambda_rep", lambda_rep)
                .set("beta", beta)
                .set("rho", rho)
                .set("sizes", list(&sizes))
                .set("h", h);
            if let Some(m) = physical {
                params = params.set("physical_d_m", m);
            }
            report("bec_surface", "bec surface", params, t, summary)
        }
    }
}
