//! One function per subcommand.

use std::path::Path;

use num_traits::Zero;
use rayon::prelude::*;
use serde_json::json;

use multidimer::closed_form::{closed_form_gauge, closed_form_gauge_exact, ClosedFormShape};
use multidimer::el::{el_flow_residual, gauge_flow_residual, height_el_residual, max_abs, DEFAULT_STEP};
use multidimer::error::Error;
use multidimer::flow::{critical_flow, embed_in_polytope, DiscreteFlow};
use multidimer::gauge_limit::{discrete_gauge_convergence, LimitFamily};
use multidimer::lattice::{build_lattice, LatticeName};
use multidimer::matching::{sample_cover, unit_weights, ExactMeasure, GuardRails};
use multidimer::region::*;
use multidimer::shapes::{aztec_cuboid_shape, aztec_diamond_shape, BoxDomain, WeightedAztecDiamond};
use multidimer::sinkhorn::{gauge_distance, gauge_residual, sinkhorn_solve, GaugePair, SinkhornOptions};
use multidimer::thermo::ThermoModel;

use crate::config::RunConfig;
use crate::output::{fmt_f64, Cell, OutDir, Table};
use crate::CliError;

/// Largest gauge distance `verify` accepts.
const VERIFY_TOL: f64 = 1e-8;

/// Opens the output directory and echoes the configuration into it.
fn open(cfg: &RunConfig) -> Result<OutDir, CliError> {
    let mut out = OutDir::create(Path::new(&cfg.out), cfg.format)?;
    out.write_json("config.json", &serde_json::to_value(cfg).map_err(CliError::other)?)?;
    Ok(out)
}

fn read_input(path: &str) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::invalid(format!("cannot read {path}: {e}")))
}

fn lattice_name(s: &str) -> Result<LatticeName, CliError> {
    Ok(s.parse::<LatticeName>()?)
}

fn whole(x: Option<f64>, default: u64, name: &str) -> Result<u64, CliError> {
    match x {
        None => Ok(default),
        Some(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => Ok(v as u64),
        Some(v) => Err(CliError::invalid(format!("--{name} must be a non-negative integer, got {v}"))),
    }
}

fn cuboid_sides(cfg: &RunConfig) -> Result<(u64, u64, u64), CliError> {
    Ok((whole(cfg.a, 1, "a")?, whole(cfg.b, 1, "b")?, whole(cfg.c, 2, "c")?))
}

fn closed_shape(cfg: &RunConfig) -> Result<ClosedFormShape, CliError> {
    Ok(match cfg.shape()? {
        "aztec-diamond" => ClosedFormShape::AztecDiamond { n: cfg.n.unwrap_or(8) },
        "aztec-cuboid" => {
            let (a, b, c) = cuboid_sides(cfg)?;
            ClosedFormShape::AztecCuboid { a, b, c }
        }
        "trunc-quadrant" => ClosedFormShape::TruncQuadrant { k: cfg.k.unwrap_or(3), depth: cfg.depth.unwrap_or(6) },
        "trunc-orthant3" => ClosedFormShape::TruncOrthant3 { k: cfg.k.unwrap_or(2), depth: cfg.depth.unwrap_or(4) },
        other => {
            return Err(CliError::invalid(format!(
                "no closed-form gauge for `{other}`; use aztec-diamond, aztec-cuboid, trunc-quadrant or trunc-orthant3"
            )))
        }
    })
}

/// Builds the region named by the configuration.
fn build_region(cfg: &RunConfig) -> Result<RegionGraph, CliError> {
    let shape = cfg.shape()?;
    let region = match shape {
        "aztec-diamond" => build_aztec_diamond(cfg.n.unwrap_or(8) as usize)?,
        "aztec-cuboid" => {
            let (a, b, c) = cuboid_sides(cfg)?;
            build_aztec_cuboid(a, b, c)?
        }
        "trunc-quadrant" => build_truncated_quadrant(cfg.k.unwrap_or(3), cfg.depth.unwrap_or(6))?,
        "trunc-orthant3" => build_truncated_orthant3(cfg.k.unwrap_or(2), cfg.depth.unwrap_or(4))?,
        "hexagon" => build_hexagon(cfg.n.unwrap_or(6) as usize)?,
        "octahedron" => build_aztec_octahedron(cfg.n.unwrap_or(4) as usize)?,
        "square" => return Ok(build_square(cfg.big_n.unwrap_or(1))),
        "torus" => build_torus(&build_lattice(lattice_name(cfg.lattice_or("z2"))?), cfg.n.unwrap_or(4) as usize)?,
        other => {
            return Err(CliError::invalid(format!(
                "unknown region `{other}`; use aztec-diamond, aztec-cuboid, trunc-quadrant, trunc-orthant3, \
                 hexagon, octahedron, square or torus"
            )))
        }
    };
    Ok(match cfg.big_n {
        Some(0) => return Err(CliError::invalid("--N must be positive")),
        Some(n) => region.with_uniform_multiplicity(n),
        None => region,
    })
}

fn rails(cfg: &RunConfig) -> GuardRails {
    GuardRails { unsafe_override: cfg.unsafe_override, ..Default::default() }
}

fn label(coord: &[i64]) -> String {
    coord.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

fn gauge_table(region: &RegionGraph, gauge: &GaugePair) -> Table {
    let mut t = Table::new(["color", "index", "label", "log_value", "value"]);
    for (i, s) in region.whites.iter().enumerate() {
        t.push(vec!["white".into(), i.into(), label(&s.coord).into(), gauge.log_f[i].into(), gauge.f(i).into()]);
    }
    for (j, s) in region.blacks.iter().enumerate() {
        t.push(vec!["black".into(), j.into(), label(&s.coord).into(), gauge.log_g[j].into(), gauge.g(j).into()]);
    }
    t
}

pub fn region(cfg: &RunConfig) -> Result<(), CliError> {
    let region = build_region(cfg)?;
    let boundary = region.whites.iter().chain(&region.blacks).filter(|s| s.boundary).count();
    let mut out = open(cfg)?;
    out.write_json("region.json", &region.to_json())?;
    out.finish(&cfg.command)?;
    println!(
        "{}: {} white, {} black, {} edges, {} boundary vertices",
        region.name,
        region.whites.len(),
        region.blacks.len(),
        region.edges.len(),
        boundary
    );
    Ok(())
}

fn read_weights(text: &str, path: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (k == 0 && line.eq_ignore_ascii_case("weight")) {
            continue;
        }
        out.push(line.parse().map_err(|e| CliError::invalid(format!("{path}:{}: {e}", k + 1)))?);
    }
    Ok(out)
}

pub fn sinkhorn(cfg: &RunConfig) -> Result<(), CliError> {
    let path = cfg.region.as_deref().ok_or_else(|| CliError::invalid("`sinkhorn` needs a region file"))?;
    let region_bytes = read_input(path)?;
    let value: serde_json::Value = serde_json::from_slice(&region_bytes)
        .map_err(|e| CliError::invalid(format!("{path}: {e}")))?;
    let region = RegionGraph::from_json(&value)?;
    let mut inputs = vec![(path.to_string(), region_bytes)];
    let weights = match cfg.weights.as_deref() {
        Some(p) => {
            let bytes = read_input(p)?;
            let w = read_weights(&String::from_utf8_lossy(&bytes), p)?;
            inputs.push((p.to_string(), bytes));
            w
        }
        None => vec![1.0; region.edges.len()],
    };
    let defaults = SinkhornOptions::default();
    let opts = SinkhornOptions {
        tol: cfg.tol.unwrap_or(defaults.tol),
        max_iter: cfg.max_iter.unwrap_or(defaults.max_iter),
        ..defaults
    };
    let (solution, diagnostics, failure) = match sinkhorn_solve(&region, &weights, &opts) {
        Ok((gauge, d)) => {
            let diagnostics = json!({
                "converged": true,
                "iterations": d.iterations,
                "max_residual": d.max_residual,
                "residual_history": d.residual_history,
                "log_domain": d.log_domain,
                "tol": opts.tol,
                "max_iter": opts.max_iter,
            });
            (Some((gauge, d)), diagnostics, None)
        }
        Err(e @ Error::NoConvergence { .. }) => {
            let Error::NoConvergence { iterations, residual, history } = &e else { unreachable!() };
            let diagnostics = json!({
                "converged": false,
                "iterations": iterations,
                "max_residual": residual,
                "residual_history": history,
                "tol": opts.tol,
                "max_iter": opts.max_iter,
            });
            (None, diagnostics, Some(e))
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = open(cfg)?;
    for (p, bytes) in &inputs {
        out.input(p, bytes);
    }
    out.write_json("diagnostics.json", &diagnostics)?;
    if let Some((gauge, _)) = &solution {
        out.write_table("gauge", &gauge_table(&region, gauge))?;
    }
    out.finish(&cfg.command)?;
    match (solution, failure) {
        (Some((_, d)), _) => {
            println!("converged after {} sweeps, max residual {}", d.iterations, fmt_f64(d.max_residual));
            Ok(())
        }
        (None, Some(e)) => Err(e.into()),
        (None, None) => unreachable!("a failed solve carries its error"),
    }
}

pub fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let shape = closed_shape(cfg)?;
    let (region, exact) = closed_form_gauge(&shape)?;
    let exact_rational = closed_form_gauge_exact(&shape, &region)?;
    let exact_solves = exact_rational.residuals(&region).iter().all(|r| r.is_zero());
    let weights = vec![1.0; region.edges.len()];
    let opts = SinkhornOptions { tol: cfg.tol.unwrap_or(1e-12), ..Default::default() };
    let (numeric, diag) = sinkhorn_solve(&region, &weights, &opts)?;
    let distance = gauge_distance(&numeric, &exact)?;
    let pass = distance <= VERIFY_TOL && exact_solves;
    let mut out = open(cfg)?;
    out.write_json(
        "verify.json",
        &json!({
            "shape": shape,
            "region": region.name,
            "gauge_distance": distance,
            "threshold": VERIFY_TOL,
            "closed_form_residual": gauge_residual(&region, &weights, &exact),
            "closed_form_exact": exact_solves,
            "sinkhorn_iterations": diag.iterations,
            "sinkhorn_residual": diag.max_residual,
            "pass": pass,
        }),
    )?;
    out.write_table("closed_form_gauge", &gauge_table(&region, &exact))?;
    out.finish(&cfg.command)?;
    println!("{} {}: gauge distance {}", if pass { "PASS" } else { "FAIL" }, region.name, fmt_f64(distance));
    if pass {
        Ok(())
    } else {
        Err(CliError::check(format!("gauge distance {distance:.3e} exceeds {VERIFY_TOL:.0e}")))
    }
}

/// Boundary distance, Newton and closed-form values, and the combined `σ` at one slope.
type SigmaRow = (f64, Option<f64>, Option<f64>, Result<f64, Error>);

/// Grid points over the bounding box of the Newton polytope, last axis fastest.
fn polytope_grid(vertices: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let d = vertices[0].len();
    let lo: Vec<f64> = (0..d).map(|i| vertices.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..d).map(|i| vertices.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
    BoxDomain::new(lo, hi).interior_grid(k, 0.0)
}

pub fn surface_tension(cfg: &RunConfig) -> Result<(), CliError> {
    let model = ThermoModel::new(lattice_name(cfg.lattice_or("z2"))?);
    let k = cfg.grid.unwrap_or(41);
    if k < 2 {
        return Err(CliError::invalid("--grid must be at least 2"));
    }
    let poly = model.polytope().clone();
    let tol = poly.tol;
    let points: Vec<Vec<f64>> =
        polytope_grid(&poly.vertices_f64(), k).into_iter().filter(|s| poly.boundary_distance(s) >= -tol).collect();
    let rows: Vec<SigmaRow> = points
        .par_iter()
        .map(|s| {
            let dist = poly.boundary_distance(s);
            let newton = if dist > tol { model.surface_tension_newton(s).ok() } else { None };
            (dist, newton, model.surface_tension_closed(s), model.surface_tension(s))
        })
        .collect();
    let d = model.dimension();
    let mut header: Vec<String> = (1..=d).map(|i| format!("s{i}")).collect();
    header.extend(["boundary_distance", "sigma", "sigma_newton", "sigma_closed"].map(String::from));
    let mut table = Table::new(header);
    let (mut max, mut min) = ((f64::NEG_INFINITY, 0), (f64::INFINITY, 0));
    let mut agreement: f64 = 0.0;
    for (idx, (s, (dist, newton, closed, sigma))) in points.iter().zip(rows).enumerate() {
        let sigma = sigma?;
        if sigma > max.0 {
            max = (sigma, idx);
        }
        if sigma < min.0 {
            min = (sigma, idx);
        }
        if let (Some(a), Some(b)) = (newton, closed) {
            agreement = agreement.max((a - b).abs());
        }
        let mut row: Vec<Cell> = s.iter().map(|&x| x.into()).collect();
        row.extend([dist.into(), sigma.into(), newton.into(), closed.into()]);
        table.push(row);
    }
    let mut out = open(cfg)?;
    out.write_table("surface_tension", &table)?;
    out.write_json(
        "summary.json",
        &json!({
            "lattice": model.lattice.name,
            "points": points.len(),
            "max": {"value": max.0, "at": points[max.1]},
            "min": {"value": min.0, "at": points[min.1]},
            "newton_closed_max_difference": agreement,
        }),
    )?;
    out.finish(&cfg.command)?;
    println!("{} slopes", points.len());
    println!("max {} at {:?}", fmt_f64(max.0), points[max.1]);
    println!("min {} at {:?}", fmt_f64(min.0), points[min.1]);
    println!("newton vs closed form {}", fmt_f64(agreement));
    Ok(())
}

pub fn embed(cfg: &RunConfig) -> Result<(), CliError> {
    let region = build_region(cfg)?;
    let lattice = region.lattice.clone().ok_or_else(|| CliError::invalid("embedding needs a lattice region"))?;
    let flow = match cfg.flow.as_deref().unwrap_or("critical") {
        "critical" => {
            let weights = vec![1.0; region.edges.len()];
            let opts = SinkhornOptions { tol: cfg.tol.unwrap_or(1e-12), ..Default::default() };
            let (gauge, _) = sinkhorn_solve(&region, &weights, &opts)?;
            critical_flow(&region, &weights, &gauge)
        }
        "uniform" => DiscreteFlow::uniform(&region, 1.0 / lattice.degree as f64),
        other => return Err(CliError::invalid(format!("unknown flow `{other}`; use critical or uniform"))),
    };
    let embedding = embed_in_polytope(&region, &flow)?;
    let poly = lattice.newton_polytope();
    let d = poly.dimension();
    let axes: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    let mut header = vec!["color".to_string(), "index".into()];
    header.extend(axes.iter().cloned());
    header.push("inside".into());
    let mut points = Table::new(header);
    let mut inside = 0;
    let mut largest: f64 = 0.0;
    for (v, p) in &embedding.points {
        let ok = poly.contains(p);
        inside += ok as usize;
        largest = largest.max(p.iter().map(|x| x.abs()).fold(0.0, f64::max));
        let color = match v.color() {
            Color::White => "white",
            Color::Black => "black",
        };
        let mut row: Vec<Cell> = vec![color.into(), v.index().into()];
        row.extend(p.iter().map(|&x| Cell::from(x)));
        row.push(if ok { 1i64 } else { 0 }.into());
        points.push(row);
    }
    let mut header = vec!["edge".to_string()];
    header.extend(axes.iter().map(|a| format!("white_{a}")));
    header.extend(axes.iter().map(|a| format!("black_{a}")));
    let mut segments = Table::new(header);
    for (e, w, b) in &embedding.segments {
        let mut row: Vec<Cell> = vec![(*e).into()];
        row.extend(w.iter().chain(b).map(|&x| Cell::from(x)));
        segments.push(row);
    }
    let mut out = open(cfg)?;
    out.write_table("points", &points)?;
    out.write_table("segments", &segments)?;
    out.finish(&cfg.command)?;
    let total = embedding.points.len();
    println!("{inside}/{total} vertex images inside the Newton polytope, largest coordinate {}", fmt_f64(largest));
    if inside == total {
        Ok(())
    } else {
        Err(CliError::check(format!("{} vertex images leave the Newton polytope", total - inside)))
    }
}

pub fn sample(cfg: &RunConfig) -> Result<(), CliError> {
    let region = build_region(cfg)?;
    let rails = rails(cfg);
    let weights = vec![1.0; region.edges.len()];
    let count = cfg.samples.unwrap_or(1);
    let steps = cfg.chain_steps.unwrap_or(10_000);
    let covers = (0..count as u64)
        .map(|i| sample_cover(&region, &weights, cfg.seed.wrapping_add(i), &rails, steps))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(["sample", "edge", "white", "black", "multiplicity"]);
    for (i, cover) in covers.iter().enumerate() {
        for (k, e) in region.edges.iter().enumerate() {
            table.push(vec![i.into(), k.into(), e.white.into(), e.black.into(), cover.m[k].into()]);
        }
    }
    let method = if rails.check(&region).is_ok() { "exact" } else { "metropolis" };
    let mut out = open(cfg)?;
    out.write_table("samples", &table)?;
    out.finish(&cfg.command)?;
    println!("{count} {method} samples of {} with N = {}", region.name, region.interior_n);
    Ok(())
}

pub fn enumerate(cfg: &RunConfig) -> Result<(), CliError> {
    let region = build_region(cfg)?;
    let mu = ExactMeasure::new(&region, &unit_weights(&region), &rails(cfg))?;
    let probabilities = mu.probabilities();
    let mut table = Table::new(["cover", "multiplicities", "lift_count", "weight", "probability"]);
    println!("{} covers of {} with N = {}, Z = {}", mu.covers.len(), region.name, region.interior_n, mu.z);
    for (i, cover) in mu.covers.iter().enumerate() {
        let m = cover.m.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        println!("cover {i}: [{m}] probability {}", probabilities[i]);
        table.push(vec![
            i.into(),
            m.into(),
            mu.lift_counts[i].to_string().into(),
            mu.cover_weights[i].to_string().into(),
            probabilities[i].to_string().into(),
        ]);
    }
    let mut out = open(cfg)?;
    out.write_table("covers", &table)?;
    out.finish(&cfg.command)?;
    Ok(())
}

/// What `el-residual` differentiates at each grid point.
enum ResidualTarget {
    Shape(Box<multidimer::shapes::LimitShape>),
    Weighted(WeightedAztecDiamond),
}

pub fn el_residual(cfg: &RunConfig) -> Result<(), CliError> {
    let (target, model, domain, default_margin, default_tol) = match cfg.shape()? {
        "aztec-diamond" => {
            let s = aztec_diamond_shape();
            let m = ThermoModel::new(s.lattice);
            let dom = s.flow.domain.clone();
            (ResidualTarget::Shape(Box::new(s)), m, dom, 0.1, 1e-8)
        }
        "aztec-cuboid" => {
            let s = aztec_cuboid_shape(cfg.a.unwrap_or(1.0), cfg.b.unwrap_or(2.0), cfg.c.unwrap_or(2.0))?;
            let m = ThermoModel::new(s.lattice);
            let dom = s.flow.domain.clone();
            (ResidualTarget::Shape(Box::new(s)), m, dom, 0.1, 1e-8)
        }
        "weighted-aztec" => {
            let w = cfg.type_weights.clone().unwrap_or_else(|| vec![2.0, 1.0, 2.0, 1.0]);
            if w.len() != 4 {
                return Err(CliError::invalid("--type-weights takes four values a,b,c,d"));
            }
            let s = WeightedAztecDiamond::new(w[0], w[1], w[2], w[3])?;
            // The height route differentiates twice, so rounding sets the floor.
            (ResidualTarget::Weighted(s), s.model(), s.domain(), 0.15, 1e-6)
        }
        other => {
            return Err(CliError::invalid(format!(
                "unknown limit shape `{other}`; use aztec-diamond, aztec-cuboid or weighted-aztec"
            )))
        }
    };
    let k = cfg.grid.unwrap_or(20);
    let margin = cfg.margin.unwrap_or(default_margin);
    let step = cfg.step.unwrap_or(DEFAULT_STEP);
    let tol = cfg.tol.unwrap_or(default_tol);
    if k == 0 || !(0.0..0.5).contains(&margin) || !(step > 0.0) {
        return Err(CliError::invalid("--grid must be positive, --margin in [0, 0.5) and --step positive"));
    }
    let points = domain.interior_grid(k, margin);
    let rows = points
        .par_iter()
        .map(|x| match &target {
            ResidualTarget::Shape(s) => {
                let flow = max_abs(&[el_flow_residual(&model, &s.flow, x, step)?]);
                let gauge = s.field.as_ref().map(|a| gauge_flow_residual(&model, a, x, step)).transpose()?;
                Ok((flow, gauge))
            }
            ResidualTarget::Weighted(w) => {
                Ok((max_abs(&[height_el_residual(&model, &w.height_field(), x, step)?]), None))
            }
        })
        .collect::<Result<Vec<(f64, Option<f64>)>, Error>>()?;
    let mut header: Vec<String> = (1..=domain.dimension()).map(|i| format!("x{i}")).collect();
    header.extend(["flow_residual", "gauge_residual"].map(String::from));
    let mut table = Table::new(header);
    let mut worst: f64 = 0.0;
    for (x, (flow, gauge)) in points.iter().zip(&rows) {
        worst = worst.max(*flow).max(gauge.unwrap_or(0.0));
        let mut row: Vec<Cell> = x.iter().map(|&v| v.into()).collect();
        row.extend([Cell::from(*flow), Cell::from(*gauge)]);
        table.push(row);
    }
    let mut out = open(cfg)?;
    out.write_table("el_residual", &table)?;
    out.write_json(
        "summary.json",
        &json!({"points": points.len(), "step": step, "margin": margin, "max_residual": worst, "tolerance": tol}),
    )?;
    out.finish(&cfg.command)?;
    println!("max residual {} over {} points", fmt_f64(worst), points.len());
    if worst <= tol {
        Ok(())
    } else {
        Err(CliError::check(format!("max residual {worst:.3e} exceeds {tol:.0e}")))
    }
}

pub fn gauge_limit(cfg: &RunConfig) -> Result<(), CliError> {
    let family = match cfg.shape()? {
        "aztec-diamond" => LimitFamily::AztecDiamond,
        "aztec-cuboid" => LimitFamily::AztecCuboid,
        other => return Err(CliError::invalid(format!("unknown family `{other}`; use aztec-diamond or aztec-cuboid"))),
    };
    let ns = cfg.ns.clone().unwrap_or_else(|| vec![8, 16, 32]);
    let rows = discrete_gauge_convergence(family, &ns, cfg.sinkhorn_up_to)?;
    let monotone = rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error);
    let mut table = Table::new(["n", "sup_error", "sinkhorn_distance"]);
    println!("{:>6}  {:>24}  {:>24}", "n", "sup_error", "sinkhorn_distance");
    for r in &rows {
        table.push(vec![r.n.into(), r.sup_error.into(), r.sinkhorn_distance.into()]);
        let dist = r.sinkhorn_distance.map(fmt_f64).unwrap_or_default();
        println!("{:>6}  {:>24}  {:>24}", r.n, fmt_f64(r.sup_error), dist);
    }
    let mut out = open(cfg)?;
    out.write_table("gauge_limit", &table)?;
    out.finish(&cfg.command)?;
    if monotone {
        println!("errors decrease monotonically");
        Ok(())
    } else {
        Err(CliError::check("errors do not decrease monotonically"))
    }
}
