//! Finite regions, tori and the named example families.

use std::collections::HashMap;

use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lattice::{build_lattice, LatticeName, LatticeSpec, Q};

/// Vertex color.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    White,
    Black,
}

/// A vertex of one color class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    /// Integer label in lattice-index space.
    pub coord: Vec<i64>,
    /// Whether some lattice neighbor lies outside the region.
    pub boundary: bool,
    /// Covering multiplicity `N_v`.
    pub mult: u64,
}

/// An edge from a white vertex to a black vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub white: usize,
    pub black: usize,
    /// Zero-based edge type.
    pub ty: usize,
}

/// Reference to a vertex by color and index within its class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexRef {
    White(usize),
    Black(usize),
}

impl VertexRef {
    pub fn color(&self) -> Color {
        match self {
            VertexRef::White(_) => Color::White,
            VertexRef::Black(_) => Color::Black,
        }
    }

    pub fn index(&self) -> usize {
        match *self {
            VertexRef::White(i) | VertexRef::Black(i) => i,
        }
    }
}

/// A finite bipartite graph with covering multiplicities.
#[derive(Clone, Debug)]
pub struct RegionGraph {
    /// Ambient lattice; `None` for abstract graphs.
    pub lattice: Option<LatticeSpec>,
    pub whites: Vec<Site>,
    pub blacks: Vec<Site>,
    pub edges: Vec<Edge>,
    /// The interior multiplicity `N`.
    pub interior_n: u64,
    /// Positions are divided by this factor when scaled.
    pub scale: f64,
    /// Label period for tori.
    pub period: Option<i64>,
    /// Human-readable name of the family.
    pub name: String,
    white_adj: Vec<Vec<usize>>,
    black_adj: Vec<Vec<usize>>,
}

impl RegionGraph {
    fn assemble(
        lattice: Option<LatticeSpec>,
        whites: Vec<Site>,
        blacks: Vec<Site>,
        edges: Vec<Edge>,
        name: String,
    ) -> Self {
        let mut white_adj = vec![Vec::new(); whites.len()];
        let mut black_adj = vec![Vec::new(); blacks.len()];
        for (k, e) in edges.iter().enumerate() {
            white_adj[e.white].push(k);
            black_adj[e.black].push(k);
        }
        RegionGraph {
            lattice,
            whites,
            blacks,
            edges,
            interior_n: 1,
            scale: 1.0,
            period: None,
            name,
            white_adj,
            black_adj,
        }
    }

    /// The induced subgraph of a lattice on the given labels.
    ///
    /// Boundary flags mark vertices with a lattice neighbor outside the
    /// region. Every multiplicity starts at one.
    pub fn from_labels(
        lattice: LatticeSpec,
        white_labels: Vec<Vec<i64>>,
        black_labels: Vec<Vec<i64>>,
        name: impl Into<String>,
    ) -> Self {
        let black_index: HashMap<&[i64], usize> =
            black_labels.iter().enumerate().map(|(i, b)| (b.as_slice(), i)).collect();
        let white_index: HashMap<&[i64], usize> =
            white_labels.iter().enumerate().map(|(i, w)| (w.as_slice(), i)).collect();
        let mut edges = Vec::new();
        let mut white_missing = vec![false; white_labels.len()];
        for (wi, w) in white_labels.iter().enumerate() {
            for (ty, t) in lattice.shifts.iter().enumerate() {
                let b: Vec<i64> = w.iter().zip(t).map(|(a, s)| a + s).collect();
                match black_index.get(b.as_slice()) {
                    Some(&bi) => edges.push(Edge { white: wi, black: bi, ty }),
                    None => white_missing[wi] = true,
                }
            }
        }
        let black_missing: Vec<bool> = black_labels
            .iter()
            .map(|b| {
                lattice.shifts.iter().any(|t| {
                    let w: Vec<i64> = b.iter().zip(t).map(|(a, s)| a - s).collect();
                    !white_index.contains_key(w.as_slice())
                })
            })
            .collect();
        let whites = white_labels
            .into_iter()
            .zip(white_missing)
            .map(|(coord, boundary)| Site { coord, boundary, mult: 1 })
            .collect();
        let blacks = black_labels
            .into_iter()
            .zip(black_missing)
            .map(|(coord, boundary)| Site { coord, boundary, mult: 1 })
            .collect();
        Self::assemble(Some(lattice), whites, blacks, edges, name.into())
    }

    /// A bipartite graph with no ambient lattice; every vertex is boundary.
    pub fn abstract_graph(n_white: usize, n_black: usize, edges: &[(usize, usize)], name: impl Into<String>) -> Self {
        let whites = (0..n_white).map(|i| Site { coord: vec![i as i64], boundary: true, mult: 1 }).collect();
        let blacks = (0..n_black).map(|i| Site { coord: vec![i as i64], boundary: true, mult: 1 }).collect();
        let edges = edges.iter().map(|&(w, b)| Edge { white: w, black: b, ty: 0 }).collect();
        Self::assemble(None, whites, blacks, edges, name.into())
    }

    /// Sets `N_v = N` at every vertex and `interior_n = N`.
    pub fn with_uniform_multiplicity(mut self, n: u64) -> Self {
        self.interior_n = n;
        for s in self.whites.iter_mut().chain(self.blacks.iter_mut()) {
            s.mult = n;
        }
        self
    }

    /// Sets the scale used for rescaled coordinates.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn set_multiplicity(&mut self, v: VertexRef, n: u64) {
        match v {
            VertexRef::White(i) => self.whites[i].mult = n,
            VertexRef::Black(i) => self.blacks[i].mult = n,
        }
    }

    pub fn multiplicity(&self, v: VertexRef) -> u64 {
        self.site(v).mult
    }

    pub fn site(&self, v: VertexRef) -> &Site {
        match v {
            VertexRef::White(i) => &self.whites[i],
            VertexRef::Black(i) => &self.blacks[i],
        }
    }

    /// Limiting multiplicity `β_v = N_v / N`.
    pub fn beta(&self, v: VertexRef) -> f64 {
        self.multiplicity(v) as f64 / self.interior_n as f64
    }

    /// Edge indices at a white vertex.
    pub fn white_edges(&self, i: usize) -> &[usize] {
        &self.white_adj[i]
    }

    /// Edge indices at a black vertex.
    pub fn black_edges(&self, i: usize) -> &[usize] {
        &self.black_adj[i]
    }

    pub fn edges_at(&self, v: VertexRef) -> &[usize] {
        match v {
            VertexRef::White(i) => &self.white_adj[i],
            VertexRef::Black(i) => &self.black_adj[i],
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.whites.len() + self.blacks.len()
    }

    /// All vertices, whites first.
    pub fn vertices(&self) -> impl Iterator<Item = VertexRef> + '_ {
        (0..self.whites.len())
            .map(VertexRef::White)
            .chain((0..self.blacks.len()).map(VertexRef::Black))
    }

    pub fn white_total(&self) -> u64 {
        self.whites.iter().map(|s| s.mult).sum()
    }

    pub fn black_total(&self) -> u64 {
        self.blacks.iter().map(|s| s.mult).sum()
    }

    pub fn is_torus(&self) -> bool {
        self.period.is_some()
    }

    /// Spatial dimension, or zero for abstract graphs.
    pub fn dimension(&self) -> usize {
        self.lattice.as_ref().map_or(0, |l| l.dimension)
    }

    /// Geometric position of a vertex.
    pub fn position(&self, v: VertexRef) -> Option<Vec<Q>> {
        let l = self.lattice.as_ref()?;
        Some(match v {
            VertexRef::White(i) => l.white_position(&self.whites[i].coord),
            VertexRef::Black(i) => l.black_position(&self.blacks[i].coord),
        })
    }

    /// Position divided by the region scale.
    pub fn scaled_position(&self, v: VertexRef) -> Option<Vec<f64>> {
        self.position(v)
            .map(|p| p.iter().map(|x| x.to_f64().unwrap_or(f64::NAN) / self.scale).collect())
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        for v in self.vertices() {
            let s = self.site(v);
            if s.mult == 0 || s.mult > self.interior_n {
                return Err(Error::InvalidInput(format!("multiplicity {} at {v:?} outside 1..={}", s.mult, self.interior_n)));
            }
            if !s.boundary && s.mult != self.interior_n {
                return Err(Error::InvalidInput(format!("interior vertex {v:?} must carry N = {}", self.interior_n)));
            }
        }
        if let Some(l) = &self.lattice {
            for e in &self.edges {
                let w = &self.whites[e.white].coord;
                let b = &self.blacks[e.black].coord;
                let t = &l.shifts[e.ty];
                let ok = b.iter().zip(w).zip(t).all(|((x, y), s)| match self.period {
                    Some(n) => (x - y - s).rem_euclid(n) == 0,
                    None => x - y == *s,
                });
                if !ok {
                    return Err(Error::InvalidInput(format!("edge {e:?} does not match its type")));
                }
            }
        }
        Ok(())
    }

    /// Serialises the region to the export JSON layout.
    pub fn to_json(&self) -> Value {
        let nw = self.whites.len();
        let vertices: Vec<Value> = self
            .vertices()
            .map(|v| {
                let s = self.site(v);
                json!({
                    "coord": s.coord,
                    "color": v.color(),
                    "boundary": s.boundary,
                    "N": s.mult,
                })
            })
            .collect();
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|e| json!({"w": e.white, "b": nw + e.black, "type": e.ty + 1}))
            .collect();
        json!({
            "name": self.name,
            "lattice": self.lattice.as_ref().map(|l| l.name.as_str()),
            "interior_N": self.interior_n,
            "scale": self.scale,
            "period": self.period,
            "vertices": vertices,
            "edges": edges,
        })
    }

    /// Reads a region from the export JSON layout.
    pub fn from_json(value: &Value) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(format!("region JSON: {m}"));
        let lattice = match value.get("lattice") {
            Some(Value::String(s)) => Some(build_lattice(s.parse::<LatticeName>()?)),
            _ => None,
        };
        let verts = value.get("vertices").and_then(Value::as_array).ok_or_else(|| bad("missing vertices"))?;
        let mut whites = Vec::new();
        let mut blacks = Vec::new();
        let mut local = Vec::with_capacity(verts.len());
        for v in verts {
            let coord: Vec<i64> = serde_json::from_value(v.get("coord").cloned().ok_or_else(|| bad("coord"))?)
                .map_err(|e| bad(&e.to_string()))?;
            let color: Color = serde_json::from_value(v.get("color").cloned().ok_or_else(|| bad("color"))?)
                .map_err(|e| bad(&e.to_string()))?;
            let boundary = v.get("boundary").and_then(Value::as_bool).unwrap_or(true);
            let mult = v.get("N").and_then(Value::as_u64).unwrap_or(1);
            let site = Site { coord, boundary, mult };
            match color {
                Color::White => {
                    local.push(VertexRef::White(whites.len()));
                    whites.push(site);
                }
                Color::Black => {
                    local.push(VertexRef::Black(blacks.len()));
                    blacks.push(site);
                }
            }
        }
        let mut edges = Vec::new();
        for e in value.get("edges").and_then(Value::as_array).ok_or_else(|| bad("missing edges"))? {
            let w = e.get("w").and_then(Value::as_u64).ok_or_else(|| bad("edge w"))? as usize;
            let b = e.get("b").and_then(Value::as_u64).ok_or_else(|| bad("edge b"))? as usize;
            let ty = e.get("type").and_then(Value::as_u64).unwrap_or(1) as usize;
            match (local.get(w), local.get(b)) {
                (Some(VertexRef::White(wi)), Some(VertexRef::Black(bi))) if ty >= 1 => {
                    edges.push(Edge { white: *wi, black: *bi, ty: ty - 1 })
                }
                _ => return Err(bad("edge endpoints must be a white and a black vertex")),
            }
        }
        let name = value.get("name").and_then(Value::as_str).unwrap_or("region").to_string();
        let mut r = Self::assemble(lattice, whites, blacks, edges, name);
        r.interior_n = value
            .get("interior_N")
            .and_then(Value::as_u64)
            .unwrap_or_else(|| r.whites.iter().chain(&r.blacks).map(|s| s.mult).max().unwrap_or(1));
        r.scale = value.get("scale").and_then(Value::as_f64).unwrap_or(1.0);
        r.period = value.get("period").and_then(Value::as_i64);
        r.validate()?;
        Ok(r)
    }
}

/// The torus `T(n, Λ)`: labels modulo `n` in every coordinate.
pub fn build_torus(lattice: &LatticeSpec, n: usize) -> Result<RegionGraph> {
    if n == 0 {
        return Err(Error::InvalidInput("torus size must be positive".into()));
    }
    let d = lattice.dimension;
    let n_i = n as i64;
    let labels: Vec<Vec<i64>> = (0..n.pow(d as u32))
        .map(|mut k| {
            let mut v = vec![0i64; d];
            for x in v.iter_mut().rev() {
                *x = (k % n) as i64;
                k /= n;
            }
            v
        })
        .collect();
    let index = |v: &[i64]| v.iter().fold(0usize, |acc, &x| acc * n + x.rem_euclid(n_i) as usize);
    let mut edges = Vec::with_capacity(labels.len() * lattice.degree);
    for (wi, w) in labels.iter().enumerate() {
        for (ty, t) in lattice.shifts.iter().enumerate() {
            let b: Vec<i64> = w.iter().zip(t).map(|(a, s)| a + s).collect();
            edges.push(Edge { white: wi, black: index(&b), ty });
        }
    }
    let sites: Vec<Site> = labels.iter().map(|c| Site { coord: c.clone(), boundary: false, mult: 1 }).collect();
    let mut r = RegionGraph::assemble(
        Some(lattice.clone()),
        sites.clone(),
        sites,
        edges,
        format!("torus-{}-{n}", lattice.name.as_str().to_lowercase()),
    );
    r.period = Some(n_i);
    r.scale = n as f64;
    Ok(r)
}

/// The Aztec diamond `AD(n)`: blacks `{0..n}×{0..n−1}`, whites `{0..n−1}×{0..n}`.
pub fn build_aztec_diamond(n: usize) -> Result<RegionGraph> {
    if n == 0 {
        return Err(Error::InvalidInput("Aztec diamond size must be positive".into()));
    }
    let ni = n as i64;
    let whites = (0..ni).flat_map(|i| (0..=ni).map(move |j| vec![i, j])).collect();
    let blacks = (0..=ni).flat_map(|i| (0..ni).map(move |j| vec![i, j])).collect();
    let r = RegionGraph::from_labels(build_lattice(LatticeName::Z2Diag), whites, blacks, format!("aztec-diamond-{n}"));
    Ok(r.with_scale(n as f64))
}

/// The 4-cycle, identical to `AD(1)`, with `N_v = N` everywhere.
pub fn build_square(n: u64) -> RegionGraph {
    let mut r = build_aztec_diamond(1).expect("n = 1 is valid").with_uniform_multiplicity(n);
    r.name = "square".into();
    r
}

/// Checks the Aztec cuboid balance identity `(a+1)(b+1)(c+1) = a(b+2)(c+2)`.
pub fn check_cuboid_constraint(a: u64, b: u64, c: u64) -> Result<()> {
    if a == 0 || b == 0 || c == 0 {
        return Err(Error::InvalidInput("cuboid parameters must be positive".into()));
    }
    let lhs = (a + 1) * (b + 1) * (c + 1);
    let rhs = a * (b + 2) * (c + 2);
    if lhs == rhs {
        Ok(())
    } else {
        Err(Error::CuboidConstraint { lhs, rhs })
    }
}

/// The Aztec cuboid `AC(a,b,c)` in the BCC lattice.
///
/// Blacks are `{0..a}×{0..b}×{0..c}` and whites `{0..a−1}×{−1..b}×{−1..c}`
/// (labels; whites sit at label + (1/2,1/2,1/2)). The balance identity makes
/// both color classes the same size. Positions are scaled by `1/a`.
pub fn build_aztec_cuboid(a: u64, b: u64, c: u64) -> Result<RegionGraph> {
    check_cuboid_constraint(a, b, c)?;
    let (a, b, c) = (a as i64, b as i64, c as i64);
    let mut whites = Vec::new();
    for i in 0..a {
        for j in -1..=b {
            for k in -1..=c {
                whites.push(vec![i, j, k]);
            }
        }
    }
    let mut blacks = Vec::new();
    for i in 0..=a {
        for j in 0..=b {
            for k in 0..=c {
                blacks.push(vec![i, j, k]);
            }
        }
    }
    let r = RegionGraph::from_labels(build_lattice(LatticeName::Bcc), whites, blacks, format!("aztec-cuboid-{a}-{b}-{c}"));
    Ok(r.with_scale(a as f64))
}

/// Covering data that makes the truncation consistent with the corner gauge:
/// returns `(N, N_outer)` with `N_outer / N = num / den` in lowest terms.
fn outer_multiplicities(num: u64, den: u64) -> (u64, u64) {
    let g = num.gcd(&den);
    (den / g, num / g)
}

/// The honeycomb truncated quadrant of depth `depth` above the corner `K`.
///
/// Blacks satisfy `i, j ≥ 0`, `K ≤ i+j ≤ K+depth`; whites `K−1 ≤ i+j ≤ K+depth−1`.
/// The outer black diagonal receives `N_v = N·K/(K+depth+1)`, the limiting
/// multiplicity under which the corner gauge solves the truncated equations.
pub fn build_truncated_quadrant(k: u64, depth: u64) -> Result<RegionGraph> {
    if k == 0 || depth == 0 {
        return Err(Error::InvalidInput("truncated quadrant needs K ≥ 1 and depth ≥ 1".into()));
    }
    let (ki, l) = (k as i64, (k + depth) as i64);
    let diag = |lo: i64, hi: i64| -> Vec<Vec<i64>> {
        (lo..=hi).flat_map(|s| (0..=s).map(move |i| vec![i, s - i])).collect()
    };
    let whites = diag(ki - 1, l - 1);
    let blacks = diag(ki, l);
    let mut r = RegionGraph::from_labels(build_lattice(LatticeName::Honeycomb), whites, blacks, format!("trunc-quadrant-{k}-{depth}"));
    let (n, outer) = outer_multiplicities(k, (l + 1) as u64);
    apply_outer_layer(&mut r, l, n, outer);
    Ok(r.with_scale(k as f64))
}

/// The diamond-cubic truncated orthant of depth `depth` above the corner `K`.
///
/// Blacks satisfy `i, j, k ≥ 0`, `K ≤ i+j+k ≤ K+depth`; whites
/// `K−1 ≤ i+j+k ≤ K+depth−1`. The outer black plane carries
/// `N_v = N·K(K+1)/((L+1)(L+2))` with `L = K+depth`.
pub fn build_truncated_orthant3(k: u64, depth: u64) -> Result<RegionGraph> {
    if k == 0 || depth == 0 {
        return Err(Error::InvalidInput("truncated orthant needs K ≥ 1 and depth ≥ 1".into()));
    }
    let (ki, l) = (k as i64, (k + depth) as i64);
    let plane = |lo: i64, hi: i64| -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        for s in lo..=hi {
            for i in 0..=s {
                for j in 0..=(s - i) {
                    out.push(vec![i, j, s - i - j]);
                }
            }
        }
        out
    };
    let whites = plane(ki - 1, l - 1);
    let blacks = plane(ki, l);
    let mut r = RegionGraph::from_labels(build_lattice(LatticeName::DiamondCubic), whites, blacks, format!("trunc-orthant3-{k}-{depth}"));
    let lu = l as u64;
    let (n, outer) = outer_multiplicities(k * (k + 1), (lu + 1) * (lu + 2));
    apply_outer_layer(&mut r, l, n, outer);
    Ok(r.with_scale(k as f64))
}

fn apply_outer_layer(r: &mut RegionGraph, outer_level: i64, n: u64, outer: u64) {
    r.interior_n = n;
    for s in r.whites.iter_mut() {
        s.mult = n;
    }
    for s in r.blacks.iter_mut() {
        s.mult = if s.coord.iter().sum::<i64>() == outer_level { outer } else { n };
    }
}

/// Lozenge hexagon with side `n` in the honeycomb lattice.
///
/// Triangles of the triangular lattice inside the hexagon
/// `0 ≤ p, q ≤ 2n`, `n ≤ p+q ≤ 3n` become vertices: upward triangles are
/// black, downward triangles white.
pub fn build_hexagon(n: usize) -> Result<RegionGraph> {
    if n == 0 {
        return Err(Error::InvalidInput("hexagon size must be positive".into()));
    }
    let n = n as i64;
    let inside = |x: i64, y: i64| (0..=2 * n).contains(&x) && (0..=2 * n).contains(&y) && (n..=3 * n).contains(&(x + y));
    let mut whites = Vec::new();
    let mut blacks = Vec::new();
    for p in 0..=2 * n {
        for q in 0..=2 * n {
            if inside(p, q) && inside(p + 1, q) && inside(p, q + 1) {
                blacks.push(vec![p, q]);
            }
            if inside(p + 1, q) && inside(p, q + 1) && inside(p + 1, q + 1) {
                whites.push(vec![p, q]);
            }
        }
    }
    let r = RegionGraph::from_labels(build_lattice(LatticeName::Honeycomb), whites, blacks, format!("hexagon-{n}"));
    Ok(r.with_scale(n as f64))
}

/// The Aztec octahedron of size `n` in `Z³`.
///
/// Vertices are the unit cubes with centers `c ∈ (Z+1/2)³`, `|2c|₁ ≤ 2n+1`,
/// placed at `c/2`; a cube is white when the sum of its lower corner is even.
pub fn build_aztec_octahedron(n: usize) -> Result<RegionGraph> {
    if n == 0 {
        return Err(Error::InvalidInput("octahedron size must be positive".into()));
    }
    let lattice = build_lattice(LatticeName::Z3);
    let r = n as i64 + 1;
    let mut whites = Vec::new();
    let mut blacks = Vec::new();
    for x in -r..r {
        for y in -r..r {
            for z in -r..r {
                let m = [x, y, z];
                if m.iter().map(|&v| (2 * v + 1).abs()).sum::<i64>() > 2 * n as i64 + 1 {
                    continue;
                }
                let pos: Vec<Q> = m.iter().map(|&v| Q::new(2 * v + 1, 4)).collect();
                let white = m.iter().sum::<i64>().rem_euclid(2) == 0;
                let label = lattice.label_at(white, &pos).expect("cube centers lie on the lattice");
                if white {
                    whites.push(label);
                } else {
                    blacks.push(label);
                }
            }
        }
    }
    let r = RegionGraph::from_labels(lattice, whites, blacks, format!("aztec-octahedron-{n}"));
    Ok(r.with_scale(n as f64))
}
