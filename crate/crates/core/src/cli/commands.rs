use super::output::{dvec, mat, num, vec};
use super::*;
use crate::asf::{asf as asf_at, fit_pvr, named_contrast, AsfEstimate, AsfOptions, Basis, Contrast, Overlap, PolicyDataset};
use crate::dyadic::{bootstrap, fit_composite, parse_outcomes, variance_report, DyadicDataset, Family, FitOptions, NodeTable, OmegaKind, Recipe, Scheme};
use crate::graph::{load_edgelist, write_edgelist, Graph, Graphlet};
use crate::graphon::{sample_graph, GraphonSpec, NodeEffectLaw};
use crate::moments::{count_patterns, moment_covariance, parse_pattern, transitivity as ti, transitivity_se, CovMode};
use crate::strategic::{self as st, MiyauchiParams, Net, ShockDist, Shocks, SmdMode};
use crate::triad_probit::{fit_triad_probit, CovParams, TriadProbitOptions};
use std::collections::HashMap;

fn parse_cov(text: &str, seed: u64) -> Result<Option<CovMode>> {
    match text.trim() {
        "none" => Ok(None),
        "exact" => Ok(Some(CovMode::Exact)),
        other => {
            let draws = other
                .strip_prefix("subsample:")
                .and_then(|m| m.parse::<usize>().ok())
                .ok_or_else(|| Error::Config(format!("--cov expects exact, subsample:M or none, got '{other}'")))?;
            Ok(Some(CovMode::Subsample { draws, seed }))
        }
    }
}

fn load_graph(path: &Path, n: Option<usize>, directed: bool, inputs: &mut Inputs) -> Result<(Graph, usize)> {
    let text = inputs.read("edges", path)?;
    let loaded = load_edgelist(&text, directed, n)?;
    Ok((loaded.graph, loaded.duplicates))
}

/// Edge list whose endpoints are ids of `nodes`.
fn graph_on_nodes(path: &Path, nodes: &NodeTable, directed: bool, inputs: &mut Inputs) -> Result<Graph> {
    let text = inputs.read("edges", path)?;
    let loaded = load_edgelist(&text, directed, None)?;
    let index: HashMap<&str, usize> = nodes.ids.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
    let find = |u: usize| {
        index
            .get(loaded.labels[u].as_str())
            .copied()
            .ok_or_else(|| Error::UndefinedInput(format!("edge endpoint '{}' is not in the node file", loaded.labels[u])))
    };
    let edges = loaded
        .graph
        .edges()
        .iter()
        .map(|&(u, v)| Ok((find(u)?, find(v)?)))
        .collect::<Result<Vec<_>>>()?;
    Graph::from_edges(nodes.n(), directed, &edges)
}

fn read_nodes(path: &Path, inputs: &mut Inputs) -> Result<NodeTable> {
    NodeTable::from_csv(&inputs.read("nodes", path)?)
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
}

pub(super) fn simulate(a: &SimulateArgs, seed: u64, inputs: &mut Inputs) -> Result<Value> {
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| Error::Config(format!("--{flag} is required for this model")));
    let spec = match a.model {
        ModelKind::Er => GraphonSpec::Constant(need(a.rho, "rho")?),
        ModelKind::Beta => GraphonSpec::Beta(NodeEffectLaw::Normal { mean: a.mean, sd: a.sd }),
        ModelKind::Threshold => GraphonSpec::Threshold(need(a.alpha_t, "alpha-t")?),
        ModelKind::Graphon => {
            let path = a.grid.as_ref().ok_or_else(|| Error::Config("--grid is required for the graphon model".into()))?;
            GraphonSpec::parse_grid(&inputs.read("grid", path)?)?
        }
    };
    let sample = sample_graph(&spec, a.n, seed)?;
    if let Some(out) = &a.out {
        std::fs::write(out, write_edgelist(&sample.graph, None)).map_err(|source| Error::Io {
            path: out.display().to_string(),
            source,
        })?;
    }
    Ok(json!({
        "n": a.n,
        "edges": sample.graph.edge_count(),
        "density": num(sample.graph.density()?),
        "out": a.out.as_ref().map(|p| p.display().to_string()),
    }))
}

fn covariance_json(graph: &Graph, shapes: &[(String, Graphlet)], mode: CovMode) -> Result<(Value, Option<f64>)> {
    let order3: Vec<&(String, Graphlet)> = shapes.iter().filter(|(_, g)| g.order() == 3).collect();
    if order3.is_empty() {
        return Ok((Value::Null, None));
    }
    let gs: Vec<Graphlet> = order3.iter().map(|(_, g)| *g).collect();
    let cov = moment_covariance(graph, &gs, mode)?;
    let se: Vec<f64> = (0..gs.len()).map(|k| cov.se(k)).collect();
    let has_ti = cov.index_of(&Graphlet::triangle()).is_some() && cov.index_of(&Graphlet::two_star()).is_some();
    let ti_se = if has_ti { Some(transitivity_se(&cov)?) } else { None };
    Ok((
        json!({
            "patterns": order3.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
            "matrix": mat(&cov.cov),
            "se": vec(&se),
            "negative_variance": cov.negative_variance,
        }),
        ti_se,
    ))
}

pub(super) fn moments(a: &MomentsArgs, seed: u64, inputs: &mut Inputs) -> Result<Value> {
    let (graph, duplicates) = load_graph(&a.edges, a.n, false, inputs)?;
    let shapes = split_list(&a.patterns)
        .into_iter()
        .map(|name| Ok((name.clone(), parse_pattern(&name)?)))
        .collect::<Result<Vec<_>>>()?;
    if shapes.is_empty() {
        return Err(Error::Config("no patterns requested".into()));
    }
    let gs: Vec<Graphlet> = shapes.iter().map(|s| s.1).collect();
    let est = count_patterns(&graph, &gs)?;
    let patterns: Vec<Value> = shapes
        .iter()
        .zip(&est)
        .map(|((name, _), m)| {
            json!({
                "pattern": name,
                "induced_count": m.induced_count,
                "injective_count": m.injective_count,
                "p_n": num(m.p_n),
                "q_n": num(m.q_n),
            })
        })
        .collect();
    let (covariance, ti_se) = match parse_cov(&a.cov, seed)? {
        Some(mode) => covariance_json(&graph, &shapes, mode)?,
        None => (Value::Null, None),
    };
    let t = ti(&graph)?;
    Ok(json!({
        "n": graph.n(),
        "edges": graph.edge_count(),
        "density": num(graph.density()?),
        "duplicate_edges": duplicates,
        "patterns": patterns,
        "covariance": covariance,
        "transitivity": {
            "index": num(t.index),
            "index_injective": num(t.index_injective),
            "se": ti_se.map(num),
        },
    }))
}

pub(super) fn transitivity(a: &TransitivityArgs, seed: u64, inputs: &mut Inputs) -> Result<Value> {
    let (graph, _) = load_graph(&a.edges, a.n, false, inputs)?;
    let t = ti(&graph)?;
    let se = match parse_cov(&a.cov, seed)? {
        Some(mode) => Some(transitivity_se(&moment_covariance(&graph, &[Graphlet::triangle(), Graphlet::two_star()], mode)?)?),
        None => None,
    };
    Ok(json!({
        "n": graph.n(),
        "p_triangle": num(t.p_triangle),
        "p_two_star": num(t.p_two_star),
        "index": num(t.index),
        "se": se.map(num),
    }))
}

fn vcov_kinds(list: &str) -> Result<Vec<(String, OmegaKind)>> {
    split_list(list).into_iter().map(|s| Ok((s.clone(), s.parse()?))).collect()
}

fn parse_bootstrap(spec: &str) -> Result<(Scheme, usize)> {
    let (scheme, rest) = spec.split_once(':').unwrap_or((spec, "B=999"));
    let b = rest
        .trim()
        .strip_prefix("B=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Config(format!("--bootstrap expects scheme:B=<count>, got '{spec}'")))?;
    Ok((scheme.parse()?, b))
}

pub(super) fn dyadic_fit(a: &DyadicArgs, seed: u64, inputs: &mut Inputs) -> Result<Value> {
    let nodes = read_nodes(&a.nodes, inputs)?;
    let outcomes = parse_outcomes(&inputs.read("outcomes", &a.outcomes)?, &nodes)?;
    let recipe = Recipe::parse(&inputs.read("recipe", &a.recipe)?)?;
    let family: Family = a.family.parse()?;
    let data = DyadicDataset::from_nodes(&nodes, &outcomes, &recipe, a.directed)?;
    let fit = fit_composite(&data, family, &FitOptions::default())?;
    let rep = variance_report(&fit)?;
    let mut se = serde_json::Map::new();
    let mut vcov = serde_json::Map::new();
    for (name, kind) in vcov_kinds(&a.vcov)? {
        se.insert(name.clone(), vec(&rep.se(kind)));
        vcov.insert(name, mat(&rep.vcov(kind)));
    }
    let boot = match &a.bootstrap {
        Some(spec) => {
            let (scheme, b) = parse_bootstrap(spec)?;
            let r = bootstrap(&data, &fit, scheme, b, seed, a.level)?;
            json!({
                "scheme": r.scheme,
                "replicates": r.replicates,
                "dropped": r.dropped,
                "se": vec(&r.se),
                "ci_percentile": r.ci_percentile.iter().map(|c| vec(&[c.0, c.1])).collect::<Vec<_>>(),
                "ci_normal": r.ci_normal.iter().map(|c| vec(&[c.0, c.1])).collect::<Vec<_>>(),
            })
        }
        None => Value::Null,
    };
    Ok(json!({
        "family": family.to_string(),
        "n": data.n(),
        "dyads": data.len(),
        "missing_dyads": data.missing(),
        "names": fit.names,
        "theta": dvec(&fit.theta),
        "loglik": num(fit.loglik),
        "iterations": fit.iterations,
        "converged": fit.converged,
        "se": se,
        "vcov": vcov,
        "bootstrap": boot,
    }))
}

fn policy_data(a: &AsfArgs, inputs: &mut Inputs) -> Result<PolicyDataset> {
    let nodes = read_nodes(&a.nodes, inputs)?;
    let outcomes = parse_outcomes(&inputs.read("outcomes", &a.outcomes)?, &nodes)?;
    let col = |c: &str| -> Result<Vec<f64>> {
        let k = nodes.column(c)?;
        Ok((0..nodes.n()).map(|i| nodes.get(i, k)).collect())
    };
    let block = |names: &[String]| -> Result<Vec<Vec<f64>>> {
        let cols = names.iter().map(|c| nodes.column(c)).collect::<Result<Vec<_>>>()?;
        Ok((0..nodes.n()).map(|i| cols.iter().map(|&k| nodes.get(i, k)).collect()).collect())
    };
    let (r_names, s_names) = (split_list(&a.r_cols), split_list(&a.s_cols));
    Ok(PolicyDataset {
        w: col(&a.w_col)?,
        x: col(&a.x_col)?,
        r: block(&r_names)?,
        s: block(&s_names)?,
        r_names,
        s_names,
        outcomes,
    })
}

fn asf_json(e: &AsfEstimate) -> Value {
    let overlap = match &e.overlap {
        Overlap::Passed { min_product } => json!({"status": "passed", "min_product": num(*min_product)}),
        Overlap::Continuous => json!({"status": "continuous proxies, not checked"}),
    };
    let abs: Vec<f64> = e.psi.iter().map(|p| p.abs()).collect();
    json!({
        "w": num(e.w),
        "x": num(e.x),
        "m": num(e.m),
        "se": num(e.se),
        "var_proxy": num(e.var_proxy),
        "var_first_stage": num(e.var_first_stage),
        "influence": {
            "mean_abs": num(abs.iter().sum::<f64>() / abs.len() as f64),
            "max_abs": num(abs.iter().cloned().fold(0.0, f64::max)),
        },
        "overlap": overlap,
        "fitted_range": vec(&[e.smallest_q, e.largest_q]),
    })
}

pub(super) fn asf(a: &AsfArgs, inputs: &mut Inputs) -> Result<Value> {
    let data = policy_data(a, inputs)?;
    let basis = Basis::parse(&inputs.read("recipe", &a.recipe)?, &data.r_names, &data.s_names)?;
    let family: Family = a.family.parse()?;
    let kind: OmegaKind = a.vcov.parse()?;
    let (pvr, fit, _) = fit_pvr(&data, family, &basis, kind)?;
    let opts = AsfOptions { kappa: a.kappa, fg_proxy_term: a.fg_proxy };
    let first_stage = json!({"names": basis.names(), "gamma": dvec(&fit.theta), "converged": fit.converged});
    match &a.contrast {
        Some(c) => {
            let contrast: Contrast = c.parse()?;
            let (cells, est) = named_contrast(&pvr, &data, contrast, &opts)?;
            Ok(json!({
                "contrast": c,
                "estimate": num(est.value),
                "se": num(est.se),
                "cells": cells.iter().map(asf_json).collect::<Vec<_>>(),
                "first_stage": first_stage,
            }))
        }
        None => {
            let est = asf_at(&pvr, &data, a.w, a.x, &opts)?;
            Ok(json!({"estimate": num(est.m), "se": num(est.se), "cell": asf_json(&est), "first_stage": first_stage}))
        }
    }
}

pub(super) fn triad_probit(a: &TriadArgs, seed: u64, inputs: &mut Inputs) -> Result<Value> {
    let nodes = read_nodes(&a.covariates, inputs)?;
    let graph = graph_on_nodes(&a.edges, &nodes, true, inputs)?;
    let recipe = Recipe::parse(&inputs.read("recipe", &a.recipe)?)?;
    let n = nodes.n();
    let mut rows = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            rows.push(if i == j { Vec::new() } else { recipe.row(&nodes, i, j)? });
        }
    }
    let data = DyadicDataset::complete(n, true, recipe.names(), |i, j| {
        (graph.has_edge(i, j) as u8 as f64, rows[i * n + j].clone())
    })?;
    let opts = TriadProbitOptions {
        draws: a.draws,
        seed,
        max_iter: a.max_iter,
        fixed_cov: a.independent.then_some(CovParams::ZERO),
        ..Default::default()
    };
    let fit = fit_triad_probit(&data, &opts)?;
    let se = |m: &Option<nalgebra::DMatrix<f64>>| m.as_ref().map(|m| vec(&fit.se(m)));
    let free_names: Vec<&String> = fit.free.iter().map(|&k| &fit.names[k]).collect();
    Ok(json!({
        "n": fit.n,
        "triads": fit.triads,
        "draws": fit.draws,
        "names": fit.names,
        "theta": dvec(&fit.theta),
        "estimated": free_names,
        "loglik": num(fit.loglik),
        "grad_norm": num(fit.grad_norm),
        "iterations": fit.iterations,
        "converged": fit.converged,
        "se": {
            "all_terms": se(&fit.avar_display),
            "exact_weights": se(&fit.avar_exact),
            "leading": se(&fit.avar_leading),
        },
    }))
}

// Strategic configurations.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EquilibriaConfig {
    alpha: f64,
    beta: f64,
    #[serde(default = "default_dist")]
    dist: String,
    n: usize,
    #[serde(default = "one")]
    replicates: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SmdConfig {
    edges: PathBuf,
    n: Option<usize>,
    alpha_grid: Vec<f64>,
    beta_grid: Vec<f64>,
    #[serde(default = "default_dist")]
    dist: String,
    #[serde(default = "fifty")]
    simulations: usize,
    #[serde(default = "default_mode")]
    mode: String,
    #[serde(default = "two")]
    slack: f64,
    #[serde(default = "default_cov")]
    cov: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LeungConfig {
    edges: PathBuf,
    nodes: PathBuf,
    recipe: String,
    #[serde(default = "yes")]
    interactions: bool,
    #[serde(default = "default_vcov")]
    vcov: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeleConfig {
    nodes: PathBuf,
    recipe: String,
    alpha: Vec<f64>,
    beta: f64,
    meeting: Option<Vec<f64>>,
    steps: usize,
    #[serde(default)]
    burn_in: usize,
    #[serde(default)]
    start_complete: bool,
}

fn default_dist() -> String {
    "logistic".into()
}
fn default_mode() -> String {
    "equality".into()
}
fn default_cov() -> String {
    "exact".into()
}
fn default_vcov() -> String {
    "fg".into()
}
fn one() -> usize {
    1
}
fn fifty() -> usize {
    st::miyauchi::MIN_SIMULATIONS
}
fn two() -> f64 {
    2.0
}
fn yes() -> bool {
    true
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn edges_json(net: &Net) -> Value {
    json!({"edges": net.edge_count()})
}

pub(super) fn strategic(a: &StrategicArgs, seed: u64, inputs: &mut Inputs) -> Result<Value> {
    let text = inputs.read("config", &a.config)?;
    let base = a.config.parent().unwrap_or(Path::new("")).to_path_buf();
    let parse_err = |e: serde_json::Error| Error::Config(format!("{}: {e}", a.config.display()));
    let patterns = [Graphlet::edge(), Graphlet::two_star(), Graphlet::triangle()];
    match a.action {
        StrategicAction::Equilibria => {
            let c: EquilibriaConfig = serde_json::from_str(&text).map_err(parse_err)?;
            let p = MiyauchiParams { alpha: c.alpha, beta: c.beta, dist: c.dist.parse()? };
            let draws = (0..c.replicates as u64)
                .map(|b| {
                    let u = Shocks::draw(c.n, p.dist, seed, b);
                    let eq = st::min_max_equilibria(&p, &u, b)?;
                    let q = |net: &Net| -> Result<Value> {
                        Ok(vec(&count_patterns(&net.to_graph(), &patterns)?.iter().map(|m| m.q_n).collect::<Vec<_>>()))
                    };
                    Ok(json!({
                        "replicate": b,
                        "lower": edges_json(&eq.lower),
                        "upper": edges_json(&eq.upper),
                        "lower_moments": q(&eq.lower)?,
                        "upper_moments": q(&eq.upper)?,
                        "sweeps": [eq.sweeps_lower, eq.sweeps_upper],
                        "unique": eq.lower == eq.upper,
                    }))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(json!({"moments": ["edge", "twostar", "triangle"], "replicates": draws}))
        }
        StrategicAction::Smd => {
            let c: SmdConfig = serde_json::from_str(&text).map_err(parse_err)?;
            let (graph, _) = load_graph(&resolve(&base, &c.edges), c.n, false, inputs)?;
            let shapes = [Graphlet::two_star(), Graphlet::triangle()];
            let obs: Vec<f64> = count_patterns(&graph, &shapes)?.iter().map(|m| m.q_n).collect();
            let mode = parse_cov(&c.cov, seed)?.ok_or_else(|| Error::Config("smd needs a covariance mode".into()))?;
            let omega = st::injective_triad_covariance(&graph, mode)?;
            let grid: Vec<(f64, f64)> = c
                .alpha_grid
                .iter()
                .flat_map(|&al| c.beta_grid.iter().map(move |&be| (al, be)))
                .collect();
            let smd_mode = match c.mode.as_str() {
                "equality" => SmdMode::Equality,
                "inequality" => SmdMode::Inequality,
                other => return Err(Error::Config(format!("unknown smd mode '{other}'"))),
            };
            let dist: ShockDist = c.dist.parse()?;
            let r = st::smd_fit(&obs, &omega, &grid, dist, graph.n(), c.simulations, &shapes, smd_mode, c.slack, seed)?;
            Ok(json!({
                "moments": ["twostar", "triangle"],
                "observed": vec(&obs),
                "omega": mat(&omega),
                "grid": r.grid.iter().map(|g| vec(&[g.0, g.1])).collect::<Vec<_>>(),
                "criterion": vec(&r.criterion),
                "theta_hat": r.best.map(|b| vec(&[b.0, b.1])),
                "identified_set": (smd_mode == SmdMode::Inequality)
                    .then(|| r.identified_set.iter().map(|g| vec(&[g.0, g.1])).collect::<Vec<_>>()),
                "identified_set_empty": smd_mode == SmdMode::Inequality && r.identified_set.is_empty(),
            }))
        }
        StrategicAction::Leung => {
            let c: LeungConfig = serde_json::from_str(&text).map_err(parse_err)?;
            let nodes = read_nodes(&resolve(&base, &c.nodes), inputs)?;
            let graph = graph_on_nodes(&resolve(&base, &c.edges), &nodes, true, inputs)?;
            let recipe = Recipe::parse(&c.recipe)?;
            let fit = st::leung_fit(&graph, &nodes, &recipe, c.interactions)?;
            let kind: OmegaKind = c.vcov.parse()?;
            Ok(json!({
                "names": fit.fit.names,
                "theta": dvec(&fit.fit.theta),
                "se": fit.variance.as_ref().map(|v| vec(&v.se(kind))),
                "converged": fit.fit.converged,
                "cells": fit.cells.iter().map(|c| json!({"t": vec(&c.t), "dyads": c.dyads, "belief": num(c.mean)})).collect::<Vec<_>>(),
            }))
        }
        StrategicAction::Mele => {
            let c: MeleConfig = serde_json::from_str(&text).map_err(parse_err)?;
            let nodes = read_nodes(&resolve(&base, &c.nodes), inputs)?;
            let recipe = Recipe::parse(&c.recipe)?;
            let model = st::MeleModel::from_recipe(&nodes, &recipe, &c.alpha, c.beta, c.meeting)?;
            let n = model.n();
            let start = if c.start_complete { Net::complete(n) } else { Net::empty(n) };
            let exact = n <= st::mele::MAX_EXACT_N;
            let mut freq = vec![0.0; if exact { 1 << (n * (n - 1) / 2) } else { 0 }];
            let mut edge_sum = 0.0;
            let run = st::mele_chain(&model, start, c.burn_in, c.steps, seed, |d| {
                edge_sum += d.edge_count() as f64;
                if exact {
                    freq[d.code() as usize] += 1.0;
                }
            })?;
            let diagnostics = if exact && c.steps > 0 {
                let pi = st::ergm_exact(&model, st::Potential::Chain)?;
                freq.iter_mut().for_each(|f| *f /= c.steps as f64);
                json!({
                    "tv_to_exact": num(st::total_variation(&freq, &pi)),
                    "states_visited": freq.iter().filter(|&&f| f > 0.0).count(),
                    "states": freq.len(),
                })
            } else {
                Value::Null
            };
            Ok(json!({
                "n": n,
                "steps": c.steps,
                "changes": run.changes,
                "terminal_edges": run.terminal.edge_count(),
                "mean_edges": num(if c.steps > 0 { edge_sum / c.steps as f64 } else { f64::NAN }),
                "diagnostics": diagnostics,
            }))
        }
    }
}
