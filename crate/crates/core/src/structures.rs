//! Force models for the immersed structures: closed elastic fibers,
//! tethered points, the anchored ECM spring network and membrane–cortex
//! adhesion links.
//!
//! Forces returned here are per-node forces (pN/μm): force densities
//! (pN/μm²) multiplied by the reference point spacing. The `*_density`
//! variants return the densities themselves.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vec2::{centroid, Vec2};

/// A closed elastic curve with tension `T = gamma + k (|X_s| - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFiber {
    pub nodes: Vec<Vec2>,
    /// Reference arclength per segment (μm).
    pub ref_spacing: f64,
    /// Surface tension (pN/μm).
    pub gamma: f64,
    /// Stretching stiffness (pN/μm).
    pub k_elastic: f64,
}

impl ClosedFiber {
    pub fn new(nodes: Vec<Vec2>, ref_spacing: f64, gamma: f64, k_elastic: f64) -> Result<Self> {
        let f = ClosedFiber {
            nodes,
            ref_spacing,
            gamma,
            k_elastic,
        };
        f.validate()?;
        Ok(f)
    }

    /// `n` nodes on a circle, counter-clockwise from angle zero, with the
    /// reference spacing equal to the initial chord length.
    pub fn circle(center: Vec2, radius: f64, n: usize, gamma: f64, k_elastic: f64) -> Result<Self> {
        let nodes = circle_nodes(center, radius, n);
        let spacing = if n > 1 { nodes[0].distance(nodes[1]) } else { 0.0 };
        ClosedFiber::new(nodes, spacing, gamma, k_elastic)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() < 3 {
            return Err(Error::InvalidParameter {
                name: "nodes",
                reason: "a closed fiber needs at least 3 nodes",
            });
        }
        if !(self.ref_spacing > 0.0 && self.ref_spacing.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "ref_spacing",
                reason: "must be positive and finite",
            });
        }
        if !(self.k_elastic >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "k_elastic",
                reason: "stiffness must be non-negative",
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn centroid(&self) -> Vec2 {
        centroid(&self.nodes)
    }

    /// Shoelace area; positive for counter-clockwise node order.
    pub fn signed_area(&self) -> f64 {
        let n = self.nodes.len();
        0.5 * (0..n)
            .map(|j| self.nodes[j].cross(self.nodes[(j + 1) % n]))
            .sum::<f64>()
    }
}

/// `n` points on a circle, counter-clockwise from angle zero. Points are
/// placed so that node `j` and node `n - j` are exact mirror images about
/// the horizontal line through the center.
pub fn circle_nodes(center: Vec2, radius: f64, n: usize) -> Vec<Vec2> {
    let mut offsets = vec![Vec2::ZERO; n];
    for j in 0..=n / 2 {
        let theta = 2.0 * core::f64::consts::PI * j as f64 / n as f64;
        let p = Vec2::new(radius * libm::cos(theta), radius * libm::sin(theta));
        offsets[j] = p;
        if j != 0 && n - j != j {
            offsets[n - j] = Vec2::new(p.x, -p.y);
        }
    }
    if n.is_multiple_of(2) && n > 0 {
        offsets[n / 2].y = 0.0;
    }
    offsets.into_iter().map(|p| center + p).collect()
}

/// Per-segment tension; segment `j` joins node `j` to node `j + 1`.
pub fn fiber_tension(fiber: &ClosedFiber) -> Vec<f64> {
    let n = fiber.nodes.len();
    (0..n)
        .map(|j| {
            let stretch = fiber.nodes[(j + 1) % n].distance(fiber.nodes[j]) / fiber.ref_spacing;
            fiber.gamma + fiber.k_elastic * (stretch - 1.0)
        })
        .collect()
}

/// Elastic force per node: `(T tau)_{j+1/2} - (T tau)_{j-1/2}`, i.e. the
/// centered-difference divergence of `T tau` times the reference spacing.
pub fn fiber_elastic_force(fiber: &ClosedFiber) -> Result<Vec<Vec2>> {
    let n = fiber.nodes.len();
    let mut segment = Vec::with_capacity(n);
    for j in 0..n {
        let d = fiber.nodes[(j + 1) % n] - fiber.nodes[j];
        let len = d.norm();
        if !(len > 0.0) {
            return Err(Error::DegenerateGeometry("zero-length fiber segment"));
        }
        let stretch = len / fiber.ref_spacing;
        let tension = fiber.gamma + fiber.k_elastic * (stretch - 1.0);
        segment.push(d * (tension / len));
    }
    Ok((0..n).map(|j| segment[j] - segment[(j + n - 1) % n]).collect())
}

/// Elastic force density (pN/μm²) at each node.
pub fn fiber_elastic_force_density(fiber: &ClosedFiber) -> Result<Vec<Vec2>> {
    let inv = 1.0 / fiber.ref_spacing;
    Ok(fiber_elastic_force(fiber)?.into_iter().map(|f| f * inv).collect())
}

/// Unit outward normals from the centered-difference tangent.
///
/// The rotation direction follows the curve orientation (sign of the
/// enclosed area), which for a convex curve is the same as pointing away
/// from the centroid and stays correct on concave stretches.
pub fn outward_normals(fiber: &ClosedFiber) -> Result<Vec<Vec2>> {
    let n = fiber.nodes.len();
    let area = fiber.signed_area();
    if area == 0.0 {
        return Err(Error::DegenerateGeometry("fiber encloses no area"));
    }
    let ccw = area > 0.0;
    (0..n)
        .map(|j| {
            let t = fiber.nodes[(j + 1) % n] - fiber.nodes[(j + n - 1) % n];
            // For a counter-clockwise curve the outward normal is the tangent
            // rotated clockwise.
            let normal = if ccw { Vec2::new(t.y, -t.x) } else { Vec2::new(-t.y, t.x) };
            normal
                .normalized()
                .ok_or(Error::DegenerateGeometry("zero centered-difference tangent"))
        })
        .collect()
}

/// Two-sided tether: `F_i = -k (X_i - X_i^R + X_i - X_i^L)`.
pub fn tether_force(points: &[Vec2], anchors_right: &[Vec2], anchors_left: &[Vec2], k_teth: f64) -> Result<Vec<Vec2>> {
    for (what, other) in [("right anchors", anchors_right), ("left anchors", anchors_left)] {
        if other.len() != points.len() {
            return Err(Error::LengthMismatch {
                what,
                expected: points.len(),
                found: other.len(),
            });
        }
    }
    Ok(points
        .iter()
        .zip(anchors_right.iter().zip(anchors_left))
        .map(|(&x, (&r, &l))| ((x - r) + (x - l)) * -k_teth)
        .collect())
}

/// ECM nodes joined by springs and each tied to an anchor point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpringNetwork {
    pub nodes: Vec<Vec2>,
    /// Undirected edges `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
    pub anchors: Vec<Vec2>,
    /// Spring stiffness (pN/μm²).
    pub k_teth: f64,
}

impl SpringNetwork {
    /// Network whose anchors make the given configuration force-free.
    pub fn at_rest(nodes: Vec<Vec2>, edges: Vec<(usize, usize)>, k_teth: f64) -> Result<Self> {
        let anchors = compute_anchors(&nodes, &edges)?;
        let net = SpringNetwork {
            nodes,
            edges,
            anchors,
            k_teth,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        validate_edges(self.nodes.len(), &self.edges)?;
        if self.anchors.len() != self.nodes.len() {
            return Err(Error::LengthMismatch {
                what: "network anchors",
                expected: self.nodes.len(),
                found: self.anchors.len(),
            });
        }
        if !(self.k_teth >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "k_teth",
                reason: "stiffness must be non-negative",
            });
        }
        Ok(())
    }

    /// Neighbor lists in ascending order.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }
}

fn validate_edges(n: usize, edges: &[(usize, usize)]) -> Result<()> {
    let mut sorted: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
    for &(i, j) in edges {
        if i >= j || j >= n {
            return Err(Error::InvalidParameter {
                name: "edges",
                reason: "edges must be (i, j) with i < j < node count",
            });
        }
        sorted.push((i, j));
    }
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter {
            name: "edges",
            reason: "duplicate edge",
        });
    }
    Ok(())
}

/// `F^j = -k (X^j - Z^j + Σ_{i ∈ N(j)} (X^j - X^i))`.
pub fn ecm_force(network: &SpringNetwork) -> Vec<Vec2> {
    let k = network.k_teth;
    let mut spring = vec![Vec2::ZERO; network.nodes.len()];
    for &(i, j) in &network.edges {
        let d = network.nodes[i] - network.nodes[j];
        spring[i] += d;
        spring[j] -= d;
    }
    network
        .nodes
        .iter()
        .zip(&network.anchors)
        .zip(spring)
        .map(|((&x, &z), s)| ((x - z) + s) * -k)
        .collect()
}

/// Anchors `Z^j = X^j + Σ_{i ∈ N(j)} (X^j - X^i)` that make the given
/// configuration force-free.
pub fn compute_anchors(nodes: &[Vec2], edges: &[(usize, usize)]) -> Result<Vec<Vec2>> {
    validate_edges(nodes.len(), edges)?;
    let mut anchors = nodes.to_vec();
    for &(i, j) in edges {
        let d = nodes[i] - nodes[j];
        anchors[i] += d;
        anchors[j] -= d;
    }
    Ok(anchors)
}

fn circumcircle(a: Vec2, b: Vec2, c: Vec2) -> Option<(Vec2, f64)> {
    let ab = b - a;
    let ac = c - a;
    let d = 2.0 * ab.cross(ac);
    if d == 0.0 {
        return None;
    }
    let ab2 = ab.norm_squared();
    let ac2 = ac.norm_squared();
    let off = Vec2::new(ac.y * ab2 - ab.y * ac2, ab.x * ac2 - ac.x * ab2) / d;
    Some((a + off, off.norm()))
}

fn segments_cross(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (p2 - p1).cross(q1 - p1);
    let d2 = (p2 - p1).cross(q2 - p1);
    let d3 = (q2 - q1).cross(p1 - q1);
    let d4 = (q2 - q1).cross(p2 - q1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Edges of the Delaunay triangulation by brute force: a triangle is kept
/// when no other point lies strictly inside its circumcircle. For
/// cocircular configurations the crossing candidates are resolved in favor
/// of the lexicographically smallest edge.
pub fn delaunay_edges(points: &[Vec2]) -> Result<Vec<(usize, usize)>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::DegenerateGeometry("Delaunay triangulation needs at least 3 points"));
    }
    for i in 0..n {
        for j in i + 1..n {
            if points[i] == points[j] {
                return Err(Error::DegenerateGeometry("duplicate points"));
            }
        }
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let scale = (hi - lo).norm();
    let tol = 1e-12 * scale;

    let mut candidates: Vec<(usize, usize)> = Vec::new();
    let mut degenerate = false;
    let mut any_triangle = false;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                // Reject near-collinear triples relative to the point scale.
                let area2 = (points[j] - points[i]).cross(points[k] - points[i]);
                if area2.abs() <= tol * scale {
                    continue;
                }
                let Some((center, radius)) = circumcircle(points[i], points[j], points[k]) else {
                    continue;
                };
                let mut empty = true;
                for (l, &p) in points.iter().enumerate() {
                    if l == i || l == j || l == k {
                        continue;
                    }
                    let dist = p.distance(center);
                    if dist < radius - tol {
                        empty = false;
                        break;
                    }
                    if dist <= radius + tol {
                        degenerate = true;
                    }
                }
                if empty {
                    any_triangle = true;
                    candidates.extend_from_slice(&[(i, j), (i, k), (j, k)]);
                }
            }
        }
    }
    if !any_triangle {
        return Err(Error::DegenerateGeometry("all points are collinear"));
    }
    candidates.sort_unstable();
    candidates.dedup();
    if !degenerate {
        return Ok(candidates);
    }
    log::debug!("Delaunay input has cocircular points; keeping lowest-index edges");
    let mut kept: Vec<(usize, usize)> = Vec::with_capacity(candidates.len());
    for (a, b) in candidates {
        let crosses = kept.iter().any(|&(c, d)| {
            a != c && a != d && b != c && b != d && segments_cross(points[a], points[b], points[c], points[d])
        });
        if !crosses {
            kept.push((a, b));
        }
    }
    Ok(kept)
}

/// Membrane–cortex links. `pairs[l] = (membrane node, cortex node)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdhesionState {
    pub pairs: Vec<(usize, usize)>,
    pub broken: Vec<bool>,
    /// Link stiffness (pN/μm³).
    pub k_adh: f64,
}

impl AdhesionState {
    /// Node `i` of the membrane linked to node `i` of the cortex.
    pub fn one_to_one(n: usize, k_adh: f64) -> Self {
        AdhesionState {
            pairs: (0..n).map(|i| (i, i)).collect(),
            broken: vec![false; n],
            k_adh,
        }
    }

    /// Explicit pairing; each membrane and each cortex node appears at most
    /// once.
    pub fn with_pairs(pairs: Vec<(usize, usize)>, n_membrane: usize, n_cortex: usize, k_adh: f64) -> Result<Self> {
        let mut seen_m = vec![false; n_membrane];
        let mut seen_c = vec![false; n_cortex];
        for &(m, c) in &pairs {
            if m >= n_membrane || c >= n_cortex {
                return Err(Error::InvalidParameter {
                    name: "pairs",
                    reason: "link index out of range",
                });
            }
            if seen_m[m] || seen_c[c] {
                return Err(Error::InvalidParameter {
                    name: "pairs",
                    reason: "links must pair nodes one to one",
                });
            }
            seen_m[m] = true;
            seen_c[c] = true;
        }
        let broken = vec![false; pairs.len()];
        Ok(AdhesionState { pairs, broken, k_adh })
    }

    pub fn break_links_at_membrane_nodes(&mut self, membrane_nodes: &[usize]) {
        for (l, &(m, _)) in self.pairs.iter().enumerate() {
            if membrane_nodes.contains(&m) {
                self.broken[l] = true;
            }
        }
    }

    pub fn intact(&self) -> usize {
        self.broken.iter().filter(|b| !**b).count()
    }

    fn check(&self, membrane: &ClosedFiber, cortex: &ClosedFiber) -> Result<()> {
        if self.broken.len() != self.pairs.len() {
            return Err(Error::LengthMismatch {
                what: "adhesion broken flags",
                expected: self.pairs.len(),
                found: self.broken.len(),
            });
        }
        if self
            .pairs
            .iter()
            .any(|&(m, c)| m >= membrane.len() || c >= cortex.len())
        {
            return Err(Error::InvalidParameter {
                name: "pairs",
                reason: "link index out of range for the given fibers",
            });
        }
        Ok(())
    }
}

/// Adhesion force densities (pN/μm²) on membrane and cortex nodes.
pub fn adhesion_force_densities(
    membrane: &ClosedFiber,
    cortex: &ClosedFiber,
    state: &AdhesionState,
) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
    state.check(membrane, cortex)?;
    let mut on_membrane = vec![Vec2::ZERO; membrane.len()];
    let mut on_cortex = vec![Vec2::ZERO; cortex.len()];
    for (&(m, c), &broken) in state.pairs.iter().zip(&state.broken) {
        if broken {
            continue;
        }
        let f = (membrane.nodes[m] - cortex.nodes[c]) * -state.k_adh;
        on_membrane[m] = f;
        on_cortex[c] = -f;
    }
    Ok((on_membrane, on_cortex))
}

/// Adhesion forces per node: densities times the membrane reference
/// spacing, equal and opposite on the two curves.
pub fn adhesion_forces(
    membrane: &ClosedFiber,
    cortex: &ClosedFiber,
    state: &AdhesionState,
) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
    let (m, c) = adhesion_force_densities(membrane, cortex, state)?;
    let ds = membrane.ref_spacing;
    Ok((
        m.into_iter().map(|f| f * ds).collect(),
        c.into_iter().map(|f| f * ds).collect(),
    ))
}
