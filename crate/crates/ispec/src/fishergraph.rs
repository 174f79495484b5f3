//! The Fisher graph of a periodic Ising model on an `s x t` torus of
//! fundamental domains, with weights and a Kasteleyn orientation.
//!
//! Every Ising site becomes a six-vertex gadget: triangles `(R, U, A)` and
//! `(L, D, B)` joined by the edge `A-B`, all with weight 1. Terminal `R` of
//! site `(x, y)` connects to `L` of `(x+1, y)` with the horizontal weight and
//! `U` connects to `D` of `(x, y+1)` with the vertical weight. Even subgraphs
//! of the square lattice correspond one-to-one to perfect matchings: each of
//! the eight even subsets of `{R, U, L, D}` has exactly one completion
//! inside the gadget.
//!
//! Edges wrapping vertically (from row `H-1` back to row `0`) are marked
//! `crosses_x`; edges wrapping horizontally are marked `crosses_y`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::EdgeWeightMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    R = 0,
    U = 1,
    A = 2,
    L = 3,
    D = 4,
    B = 5,
}

pub const ROLES: [Role; 6] = [Role::R, Role::U, Role::A, Role::L, Role::D, Role::B];

/// Gadget terminals, i.e. the vertices that carry external edges.
pub const TERMINALS: [Role; 4] = [Role::R, Role::U, Role::L, Role::D];

/// Edges per site: six triangle edges, `A-B`, one horizontal, one vertical.
pub const EDGES_PER_SITE: usize = 9;

/// Template index of the horizontal external edge `R(x,y) -> L(x+1,y)`.
pub const HORIZONTAL: usize = 7;
/// Template index of the vertical external edge `U(x,y) -> D(x,y+1)`.
pub const VERTICAL: usize = 8;
/// Template index of the internal edge `A-B`.
pub const BRIDGE: usize = 6;

/// Per-site edge template `(tail role, head role, head site offset)`; the
/// tail always lies in the site that owns the edge.
pub const TEMPLATE: [(Role, Role, (usize, usize)); EDGES_PER_SITE] = [
    (Role::R, Role::U, (0, 0)),
    (Role::U, Role::A, (0, 0)),
    (Role::A, Role::R, (0, 0)),
    (Role::L, Role::D, (0, 0)),
    (Role::D, Role::B, (0, 0)),
    (Role::B, Role::L, (0, 0)),
    (Role::A, Role::B, (0, 0)),
    (Role::R, Role::L, (1, 0)),
    (Role::U, Role::D, (0, 1)),
];

/// Boundary walks of the three faces owned by site `(0, 0)`, as
/// `(site offset, role)` sequences. Drawing site `(i, j)` at column `i` and
/// row `j` with rows increasing downward, every walk runs clockwise: the two
/// gadget triangles and the plaquette face between four neighboring sites.
pub const TEMPLATE_FACES: [&[((usize, usize), Role)]; 3] = [
    &[((0, 0), Role::R), ((0, 0), Role::U), ((0, 0), Role::A)],
    &[((0, 0), Role::L), ((0, 0), Role::D), ((0, 0), Role::B)],
    &[
        ((0, 0), Role::R),
        ((1, 0), Role::L),
        ((1, 0), Role::B),
        ((1, 0), Role::A),
        ((1, 0), Role::U),
        ((1, 1), Role::D),
        ((1, 1), Role::L),
        ((0, 1), Role::R),
        ((0, 1), Role::A),
        ((0, 1), Role::B),
        ((0, 1), Role::D),
        ((0, 0), Role::U),
    ],
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FisherVertex {
    /// Fundamental-domain coordinates on the torus.
    pub cell: (usize, usize),
    /// Site within the fundamental domain.
    pub site: (usize, usize),
    pub role: Role,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Internal,
    Horizontal,
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FisherEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
    /// `+1` when oriented `u -> v`, `-1` when oriented `v -> u`.
    pub sign: i8,
    pub crosses_x: bool,
    pub crosses_y: bool,
    pub kind: EdgeKind,
    /// Index into [`TEMPLATE`].
    pub template: usize,
    /// Global site `(x, y)` owning the edge.
    pub site: (usize, usize),
}

/// A face boundary as a cyclic list of `(edge id, traversed u -> v)`.
pub type FaceWalk = Vec<(usize, bool)>;

#[derive(Clone, Debug)]
pub struct FisherGraph {
    m: usize,
    n: usize,
    torus: (usize, usize),
    vertices: Vec<FisherVertex>,
    edges: Vec<FisherEdge>,
}

/// Builds the weighted, oriented Fisher graph on an `s x t` torus of
/// fundamental domains; the lattice is `(s m) x (t n)` sites.
pub fn build_fisher(weights: &EdgeWeightMap, s: usize, t: usize) -> Result<FisherGraph> {
    if s == 0 || t == 0 {
        return Err(Error::InvalidArgument("torus size must be positive".into()));
    }
    let (m, n) = (weights.m(), weights.n());
    let (w, h) = (s * m, t * n);
    let mut vertices = Vec::with_capacity(6 * w * h);
    for y in 0..h {
        for x in 0..w {
            for role in ROLES {
                vertices.push(FisherVertex {
                    cell: (x / m, y / n),
                    site: (x % m, y % n),
                    role,
                });
            }
        }
    }
    let mut edges = Vec::with_capacity(EDGES_PER_SITE * w * h);
    for y in 0..h {
        for x in 0..w {
            for (k, &(a, b, (dx, dy))) in TEMPLATE.iter().enumerate() {
                let (hx, hy) = ((x + dx) % w, (y + dy) % h);
                let (kind, weight) = match k {
                    HORIZONTAL => (EdgeKind::Horizontal, weights.th_at(x, y)),
                    VERTICAL => (EdgeKind::Vertical, weights.tv_at(x, y)),
                    _ => (EdgeKind::Internal, 1.0),
                };
                edges.push(FisherEdge {
                    u: vertex_index(w, x, y, a),
                    v: vertex_index(w, hx, hy, b),
                    weight,
                    sign: 1,
                    crosses_x: k == VERTICAL && y == h - 1,
                    crosses_y: k == HORIZONTAL && x == w - 1,
                    kind,
                    template: k,
                    site: (x, y),
                });
            }
        }
    }
    orient_crossing(FisherGraph {
        m,
        n,
        torus: (s, t),
        vertices,
        edges,
    })
}

fn vertex_index(width: usize, x: usize, y: usize, role: Role) -> usize {
    (y * width + x) * 6 + role as usize
}

/// Orients the graph so that every face walk has an odd number of edges
/// oriented along it (clockwise-odd in the drawing of [`TEMPLATE_FACES`]).
///
/// The orientation is solved once on the single-site torus and tiled, so
/// the signs are periodic and the four twisted matrices `K^{theta tau}`
/// differ from `K^{00}` only on `crosses_x` / `crosses_y` entries.
pub fn orient_crossing(mut graph: FisherGraph) -> Result<FisherGraph> {
    let signs = template_orientation()?;
    for e in &mut graph.edges {
        e.sign = signs[e.template];
    }
    Ok(graph)
}

/// Edge signs for the nine template edges.
pub fn template_orientation() -> Result<[i8; EDGES_PER_SITE]> {
    let faces = lift_faces(1, 1, 0, 0);
    let solved = solve_orientation(EDGES_PER_SITE, &faces)?;
    let mut out = [1; EDGES_PER_SITE];
    out.copy_from_slice(&solved);
    Ok(out)
}

/// The three face walks owned by site `(x, y)` of a `w x h` torus, with
/// edge ids laid out as in [`build_fisher`].
fn lift_faces(w: usize, h: usize, x: usize, y: usize) -> Vec<FaceWalk> {
    TEMPLATE_FACES
        .iter()
        .map(|face| {
            (0..face.len())
                .map(|k| {
                    let (p, rp) = face[k];
                    let (q, rq) = face[(k + 1) % face.len()];
                    let (tmpl, forward) = template_step(p, rp, q, rq);
                    let tail = if forward { p } else { q };
                    let (tx, ty) = ((x + tail.0) % w, (y + tail.1) % h);
                    ((ty * w + tx) * EDGES_PER_SITE + tmpl, forward)
                })
                .collect()
        })
        .collect()
}

fn template_step(
    p: (usize, usize),
    rp: Role,
    q: (usize, usize),
    rq: Role,
) -> (usize, bool) {
    let d = (q.0 as i64 - p.0 as i64, q.1 as i64 - p.1 as i64);
    for (k, &(a, b, (ox, oy))) in TEMPLATE.iter().enumerate() {
        let o = (ox as i64, oy as i64);
        if a == rp && b == rq && d == o {
            return (k, true);
        }
        if a == rq && b == rp && (-d.0, -d.1) == o {
            return (k, false);
        }
    }
    unreachable!("face template step {rp:?}{p:?} -> {rq:?}{q:?} is not an edge")
}

/// Number of edges in the walk oriented along the direction of travel.
pub fn walk_parity(walk: &FaceWalk, signs: impl Fn(usize) -> i8) -> usize {
    walk.iter()
        .filter(|&&(e, fwd)| (signs(e) > 0) == fwd)
        .count()
}

/// Finds edge signs making every face walk odd.
///
/// Builds a spanning tree of the dual graph (faces joined by edges lying
/// between two distinct faces), fixes every non-tree edge to `+1`, and
/// assigns tree edges leaf-first so each face picks up odd parity. An edge
/// traversed twice by the same face contributes exactly one along-count
/// whatever its sign, so it never constrains the system.
pub fn solve_orientation(num_edges: usize, faces: &[FaceWalk]) -> Result<Vec<i8>> {
    let mut incidence: Vec<Vec<usize>> = vec![Vec::new(); num_edges];
    for (f, walk) in faces.iter().enumerate() {
        for &(e, _) in walk {
            incidence[e].push(f);
        }
    }
    if let Some(e) = incidence.iter().position(|inc| inc.len() != 2) {
        return Err(Error::NonOrientable(format!(
            "edge {e} borders {} face sides instead of 2",
            incidence[e].len()
        )));
    }
    let mut signs = vec![1i8; num_edges];
    let mut parent_edge: Vec<Option<usize>> = vec![None; faces.len()];
    let mut seen = vec![false; faces.len()];
    let mut order = Vec::with_capacity(faces.len());
    for root in 0..faces.len() {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(f) = queue.pop_front() {
            order.push(f);
            for &(e, _) in &faces[f] {
                let g = if incidence[e][0] == f {
                    incidence[e][1]
                } else {
                    incidence[e][0]
                };
                if g != f && !seen[g] {
                    seen[g] = true;
                    parent_edge[g] = Some(e);
                    queue.push_back(g);
                }
            }
        }
    }
    for &f in order.iter().rev() {
        let Some(e) = parent_edge[f] else { continue };
        if walk_parity(&faces[f], |k| signs[k]) % 2 == 0 {
            signs[e] = -signs[e];
        }
    }
    if let Some(f) = faces
        .iter()
        .position(|w| walk_parity(w, |k| signs[k]) % 2 == 0)
    {
        return Err(Error::NonOrientable(format!("face {f} left with even parity")));
    }
    Ok(signs)
}

/// Number of ways to complete a gadget internally when the terminals in
/// `mask` (bit `1 << role`) are already matched by external edges.
pub fn gadget_completion_count(mask: u8) -> usize {
    gadget_completions(mask).len()
}

/// All sets of internal template edges (indices `0..7`) that perfectly
/// match the gadget vertices not in `mask`.
pub fn gadget_completions(mask: u8) -> Vec<Vec<usize>> {
    fn rec(covered: u8, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some(v) = (0..6).find(|&r| covered & (1 << r) == 0) else {
            out.push(chosen.clone());
            return;
        };
        for (k, &(a, b, _)) in TEMPLATE.iter().enumerate().take(BRIDGE + 1) {
            let (a, b) = (a as u8, b as u8);
            let other = if a == v {
                b
            } else if b == v {
                a
            } else {
                continue;
            };
            if covered & (1 << other) == 0 {
                chosen.push(k);
                rec(covered | (1 << v) | (1 << other), chosen, out);
                chosen.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(mask, &mut Vec::new(), &mut out);
    out
}

impl FisherGraph {
    pub fn period(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn torus(&self) -> (usize, usize) {
        self.torus
    }

    /// Lattice width in sites, `s m`.
    pub fn width(&self) -> usize {
        self.torus.0 * self.m
    }

    /// Lattice height in sites, `t n`.
    pub fn height(&self) -> usize {
        self.torus.1 * self.n
    }

    pub fn sites(&self) -> usize {
        self.width() * self.height()
    }

    pub fn vertices(&self) -> &[FisherVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[FisherEdge] {
        &self.edges
    }

    pub fn vertex_id(&self, x: usize, y: usize, role: Role) -> usize {
        vertex_index(self.width(), x % self.width(), y % self.height(), role)
    }

    /// Global site `(x, y)` and role of vertex `v`.
    pub fn vertex_site(&self, v: usize) -> ((usize, usize), Role) {
        let s = v / 6;
        ((s % self.width(), s / self.width()), ROLES[v % 6])
    }

    /// Edge id of template edge `k` owned by site `(x, y)`.
    pub fn edge_id(&self, x: usize, y: usize, k: usize) -> usize {
        let (x, y) = (x % self.width(), y % self.height());
        (y * self.width() + x) * EDGES_PER_SITE + k
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertices.len()];
        for e in &self.edges {
            d[e.u] += 1;
            d[e.v] += 1;
        }
        d
    }

    /// All `3 W H` face walks of the torus embedding.
    pub fn face_walks(&self) -> Vec<FaceWalk> {
        let (w, h) = (self.width(), self.height());
        let mut out = Vec::with_capacity(3 * w * h);
        for y in 0..h {
            for x in 0..w {
                out.extend(lift_faces(w, h, x, y));
            }
        }
        out
    }

    /// Along-count of every face walk under the current signs.
    pub fn face_parities(&self) -> Vec<usize> {
        self.face_walks()
            .iter()
            .map(|f| walk_parity(f, |e| self.edges[e].sign))
            .collect()
    }

    /// Signed, weighted matrix entry `K[u][v]` of edge `e` at corner
    /// `(theta, tau)`: weight times orientation sign, times `-1` for each
    /// active twist the edge crosses.
    pub fn edge_entry(&self, e: usize, theta: usize, tau: usize) -> f64 {
        let edge = &self.edges[e];
        let mut v = edge.weight * f64::from(edge.sign);
        if edge.crosses_x && theta % 2 == 1 {
            v = -v;
        }
        if edge.crosses_y && tau % 2 == 1 {
            v = -v;
        }
        v
    }

    /// The real skew Kasteleyn matrix `K^{theta tau}` of the torus graph.
    pub fn kasteleyn_matrix(&self, theta: usize, tau: usize) -> DenseMatrix<f64> {
        let mut k = DenseMatrix::zeros(self.vertices.len());
        for (i, e) in self.edges.iter().enumerate() {
            let v = self.edge_entry(i, theta, tau);
            k[(e.u, e.v)] += v;
            k[(e.v, e.u)] -= v;
        }
        k
    }

    /// Homology class `(hx, hy)` of a set of edges: parities of the numbers
    /// of `crosses_x` and `crosses_y` edges it contains.
    pub fn homology_class(&self, edge_ids: &[usize]) -> (usize, usize) {
        let hx = edge_ids.iter().filter(|&&e| self.edges[e].crosses_x).count() % 2;
        let hy = edge_ids.iter().filter(|&&e| self.edges[e].crosses_y).count() % 2;
        (hx, hy)
    }

    /// Debug dump `u_id,v_id,weight,sign,crossesX,crossesY`, one edge per line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("u_id,v_id,weight,sign,crossesX,crossesY\n");
        for e in &self.edges {
            let _ = writeln!(
                s,
                "{},{},{:.16e},{},{},{}",
                e.u, e.v, e.weight, e.sign, e.crosses_x, e.crosses_y
            );
        }
        s
    }

    /// Completes a choice of external edges to a perfect matching by adding
    /// the unique internal completion of every gadget.
    pub fn complete_matching(&self, external: &[usize]) -> Result<Vec<usize>> {
        let mut masks = vec![0u8; self.sites()];
        for &e in external {
            let edge = &self.edges[e];
            if edge.kind == EdgeKind::Internal {
                return Err(Error::InvalidArgument(format!("edge {e} is internal")));
            }
            for v in [edge.u, edge.v] {
                let (s, r) = (v / 6, v % 6);
                if masks[s] & (1 << r) != 0 {
                    let ((x, y), _) = self.vertex_site(v);
                    return Err(Error::BijectionFailure { x, y, mask: masks[s] });
                }
                masks[s] |= 1 << r;
            }
        }
        let mut out = external.to_vec();
        for (s, &mask) in masks.iter().enumerate() {
            let comps = gadget_completions(mask);
            if comps.len() != 1 {
                let (x, y) = (s % self.width(), s / self.width());
                return Err(Error::BijectionFailure { x, y, mask });
            }
            let (x, y) = (s % self.width(), s / self.width());
            out.extend(comps[0].iter().map(|&k| self.edge_id(x, y, k)));
        }
        out.sort_unstable();
        Ok(out)
    }
}

/// Domain-wall map from spins to dimers.
///
/// `graph` is read as the Fisher graph of the dual of a `W x H` spin torus
/// (dual site `(x, y)` in the plaquette whose lower-left corner is spin
/// `(x, y)`). A dual edge is occupied exactly when the two spins it
/// separates disagree; gadgets are then completed internally. `spins` is
/// indexed `y * W + x`. The map is two-to-one: `spins` and `-spins` give
/// the same matching.
pub fn polygon_to_dimer(graph: &FisherGraph, spins: &[i8]) -> Result<Vec<usize>> {
    let (w, h) = (graph.width(), graph.height());
    if spins.len() != w * h {
        return Err(Error::DimensionMismatch(format!(
            "{} spins for a {w}x{h} torus",
            spins.len()
        )));
    }
    let spin = |x: usize, y: usize| spins[(y % h) * w + (x % w)];
    let mut external = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if spin(x + 1, y) != spin(x + 1, y + 1) {
                external.push(graph.edge_id(x, y, HORIZONTAL));
            }
            if spin(x, y + 1) != spin(x + 1, y + 1) {
                external.push(graph.edge_id(x, y, VERTICAL));
            }
        }
    }
    graph.complete_matching(&external)
}
