//! 1D meshes, DOF numbering and global assembly.
//!
//! Nodes are numbered left to right and each node's components are
//! contiguous, so assembled matrices are banded. A crack duplicates its
//! interface node; the two copies are joined only by the spring element.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis;
use crate::element::{
    bswi_beam_matrices, bswi_rod_matrices, conventional_beam_matrices, conventional_rod_matrices,
    crack_spring_matrices, CrackSpec, ElementMatrices, MaterialProps, SectionProps,
};
use crate::error::{domain, Result, WaveError};
use crate::linalg::BandMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementKind {
    BswiRod,
    BswiBeam,
    FemRod,
    FemBeam,
}

impl ElementKind {
    pub fn is_beam(self) -> bool {
        matches!(self, ElementKind::BswiBeam | ElementKind::FemBeam)
    }

    pub fn is_wavelet(self) -> bool {
        matches!(self, ElementKind::BswiRod | ElementKind::BswiBeam)
    }

    pub fn nodes_per_element(self) -> usize {
        if self.is_wavelet() {
            basis::BSWI_FUNCS
        } else {
            2
        }
    }

    pub fn components(self) -> &'static [Component] {
        if self.is_beam() {
            &[Component::Deflection, Component::Rotation]
        } else {
            &[Component::Axial]
        }
    }

    pub fn matrices(self, mat: &MaterialProps, sec: &SectionProps, l_e: f64) -> Result<ElementMatrices> {
        Ok(match self {
            ElementKind::BswiRod => bswi_rod_matrices(mat, sec, l_e)?,
            ElementKind::BswiBeam => bswi_beam_matrices(mat, sec, l_e)?.interleaved(),
            ElementKind::FemRod => conventional_rod_matrices(mat, sec, l_e)?,
            ElementKind::FemBeam => conventional_beam_matrices(mat, sec, l_e)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Component {
    Axial,
    Deflection,
    Rotation,
}

impl Component {
    pub fn tag(self) -> &'static str {
        match self {
            Component::Axial => "u",
            Component::Deflection => "w",
            Component::Rotation => "theta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    #[default]
    Free,
    Clamped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshElement {
    pub kind: ElementKind,
    pub x0: f64,
    pub length: f64,
    pub nodes: Vec<usize>,
}

/// A crack joining `left_node` and `right_node`. Closed cracks share one node.
#[derive(Debug, Clone, PartialEq)]
pub struct CrackInterface {
    pub spec: CrackSpec,
    pub left_node: usize,
    pub right_node: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub length: f64,
    pub kind: ElementKind,
    pub material: MaterialProps,
    pub section: SectionProps,
    /// Node coordinates in numbering order (duplicates at open cracks).
    pub nodes: Vec<f64>,
    pub elements: Vec<MeshElement>,
    pub cracks: Vec<CrackInterface>,
    pub bc: [BoundaryCondition; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshSpec {
    pub length: f64,
    pub n_elements: usize,
    pub kind: ElementKind,
    pub material: MaterialProps,
    pub section: SectionProps,
    pub cracks: Vec<CrackSpec>,
    pub bc: [BoundaryCondition; 2],
}

impl MeshSpec {
    pub fn uniform(length: f64, n_elements: usize, kind: ElementKind, material: MaterialProps, section: SectionProps) -> Self {
        Self {
            length,
            n_elements,
            kind,
            material,
            section,
            cracks: Vec::new(),
            bc: [BoundaryCondition::Free; 2],
        }
    }
}

/// Uniform mesh, with every crack on an element interface (containing
/// elements are split at the crack position).
pub fn build_mesh(spec: &MeshSpec) -> Result<Mesh1D> {
    let l = spec.length;
    if !(l > 0.0) || !l.is_finite() {
        return domain(format!("length must be positive, got {l}"));
    }
    if spec.n_elements == 0 {
        return domain("at least one element is required");
    }
    spec.material.validate()?;
    spec.section.validate()?;
    if !spec.cracks.is_empty() && !spec.kind.is_beam() {
        return domain("cracks are supported on beam meshes only");
    }
    let tol = 1e-9 * l;
    let mut cracks = spec.cracks.clone();
    cracks.sort_by(|a, b| a.position.partial_cmp(&b.position).unwrap());
    for c in &cracks {
        if !(c.position > 0.0 && c.position < l) {
            return domain(format!("crack position {} must lie strictly inside (0, {l})", c.position));
        }
    }
    for w in cracks.windows(2) {
        if w[1].position - w[0].position < tol {
            return domain(format!("cracks at {} and {} are too close", w[0].position, w[1].position));
        }
    }

    let mut breaks: Vec<f64> = (0..=spec.n_elements)
        .map(|i| l * i as f64 / spec.n_elements as f64)
        .collect();
    // index into `breaks` for each crack
    let mut crack_breaks = Vec::with_capacity(cracks.len());
    for c in &cracks {
        let pos = breaks.partition_point(|&b| b < c.position);
        let near = [pos.saturating_sub(1), pos.min(breaks.len() - 1)]
            .into_iter()
            .find(|&i| (breaks[i] - c.position).abs() <= tol);
        match near {
            Some(i) => crack_breaks.push(breaks[i]),
            None => {
                breaks.insert(pos, c.position);
                crack_breaks.push(c.position);
            }
        }
    }

    let kind = spec.kind;
    let npe = kind.nodes_per_element();
    let local: Vec<f64> = if kind.is_wavelet() {
        basis::bswi43().nodes().coords().to_vec()
    } else {
        vec![0.0, 1.0]
    };
    let mut nodes = vec![0.0];
    let mut elements = Vec::with_capacity(breaks.len() - 1);
    let mut interfaces = Vec::new();
    for (e, w) in breaks.windows(2).enumerate() {
        let (x0, x1) = (w[0], w[1]);
        let len = x1 - x0;
        let mut ids = Vec::with_capacity(npe);
        let mut start = nodes.len() - 1;
        if e > 0 {
            if let Some(ci) = crack_breaks.iter().position(|&b| b == x0) {
                let c = cracks[ci];
                if c.is_open() {
                    nodes.push(x0);
                    interfaces.push(CrackInterface {
                        spec: c,
                        left_node: start,
                        right_node: start + 1,
                    });
                    start += 1;
                } else {
                    interfaces.push(CrackInterface {
                        spec: c,
                        left_node: start,
                        right_node: start,
                    });
                }
            }
        }
        ids.push(start);
        for &xi in &local[1..npe - 1] {
            nodes.push(x0 + xi * len);
            ids.push(nodes.len() - 1);
        }
        nodes.push(x1);
        ids.push(nodes.len() - 1);
        elements.push(MeshElement {
            kind,
            x0,
            length: len,
            nodes: ids,
        });
    }
    Ok(Mesh1D {
        length: l,
        kind,
        material: spec.material,
        section: spec.section,
        nodes,
        elements,
        cracks: interfaces,
        bc: spec.bc,
    })
}

impl Mesh1D {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn components(&self) -> &'static [Component] {
        self.kind.components()
    }

    pub fn last_node(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Nodes at element ends (including both sides of open cracks).
    pub fn end_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .elements
            .iter()
            .flat_map(|e| [e.nodes[0], *e.nodes.last().unwrap()])
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Position and meaning of a global DOF.
#[derive(Debug, Clone, PartialEq)]
pub struct DofLabel {
    pub node: usize,
    pub component: Component,
    pub x: f64,
}

impl DofLabel {
    pub fn name(&self) -> String {
        format!("n{}:{}", self.node, self.component.tag())
    }
}

/// Element matrix pair shared by structurally identical blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Prototype {
    pub k: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// Local DOFs eliminated by condensation.
    pub interior: Vec<usize>,
    /// Local DOFs kept in the condensed system.
    pub boundary: Vec<usize>,
}

impl Prototype {
    pub fn new(k: DMatrix<f64>, m: DMatrix<f64>, interior: Vec<usize>) -> Self {
        let n = k.nrows();
        let boundary = (0..n).filter(|i| !interior.contains(i)).collect();
        Self { k, m, interior, boundary }
    }

    pub fn ndof(&self) -> usize {
        self.k.nrows()
    }
}

/// One element (or spring) scattered into the global system. `None` marks a
/// constrained DOF.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub proto: usize,
    pub dofs: Vec<Option<usize>>,
}

/// Assembled structure: element blocks plus the DOF map and the
/// boundary/interior partition.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    n_dof: usize,
    labels: Vec<DofLabel>,
    prototypes: Vec<Prototype>,
    blocks: Vec<Block>,
    boundary: Vec<usize>,
    interior: Vec<usize>,
    /// Global DOF -> position in `boundary`.
    boundary_pos: Vec<Option<usize>>,
    dof_map: HashMap<(usize, Component), usize>,
    length: f64,
}

impl GlobalSystem {
    /// Builds a system from blocks. Interior DOFs must each belong to exactly
    /// one block.
    pub fn from_blocks(n_dof: usize, prototypes: Vec<Prototype>, blocks: Vec<Block>, labels: Vec<DofLabel>) -> Result<Self> {
        if labels.len() != n_dof {
            return Err(WaveError::Config(format!("{} labels for {n_dof} DOFs", labels.len())));
        }
        let mut owner: Vec<Option<usize>> = vec![None; n_dof];
        let mut is_interior = vec![false; n_dof];
        for (bi, b) in blocks.iter().enumerate() {
            let p = prototypes
                .get(b.proto)
                .ok_or_else(|| WaveError::Config(format!("block {bi} refers to missing prototype {}", b.proto)))?;
            if p.ndof() != b.dofs.len() {
                return Err(WaveError::Config(format!(
                    "block {bi} maps {} DOFs onto a {}-DOF element",
                    b.dofs.len(),
                    p.ndof()
                )));
            }
            for d in b.dofs.iter().flatten() {
                if *d >= n_dof {
                    return Err(WaveError::Config(format!("block {bi} refers to DOF {d} of {n_dof}")));
                }
            }
            for &li in &p.interior {
                let Some(g) = b.dofs[li] else {
                    return Err(WaveError::Config(format!("block {bi}: interior DOF {li} is constrained")));
                };
                if owner[g].is_some() {
                    return Err(WaveError::Config(format!("interior DOF {g} shared between blocks")));
                }
                owner[g] = Some(bi);
                is_interior[g] = true;
            }
        }
        for (bi, b) in blocks.iter().enumerate() {
            let p = &prototypes[b.proto];
            for &li in &p.boundary {
                if let Some(g) = b.dofs[li] {
                    if is_interior[g] {
                        return Err(WaveError::Config(format!(
                            "DOF {g} is interior to block {:?} but boundary in block {bi}",
                            owner[g]
                        )));
                    }
                }
            }
        }
        let boundary: Vec<usize> = (0..n_dof).filter(|&d| !is_interior[d]).collect();
        let interior: Vec<usize> = (0..n_dof).filter(|&d| is_interior[d]).collect();
        let mut boundary_pos = vec![None; n_dof];
        for (i, &d) in boundary.iter().enumerate() {
            boundary_pos[d] = Some(i);
        }
        let dof_map = labels
            .iter()
            .enumerate()
            .map(|(i, l)| ((l.node, l.component), i))
            .collect();
        let length = labels.iter().map(|l| l.x).fold(0.0, f64::max);
        Ok(Self {
            n_dof,
            labels,
            prototypes,
            blocks,
            boundary,
            interior,
            boundary_pos,
            dof_map,
            length,
        })
    }

    /// Single block holding dense `m`, `k`; `interior` lists condensed DOFs.
    pub fn from_dense(m: DMatrix<f64>, k: DMatrix<f64>, interior: Vec<usize>) -> Result<Self> {
        let n = k.nrows();
        if k.ncols() != n || m.nrows() != n || m.ncols() != n {
            return Err(WaveError::Config("mass and stiffness must be square and equal in size".into()));
        }
        let labels = (0..n)
            .map(|i| DofLabel {
                node: i,
                component: Component::Axial,
                x: 0.0,
            })
            .collect();
        let proto = Prototype::new(k, m, interior);
        let block = Block {
            proto: 0,
            dofs: (0..n).map(Some).collect(),
        };
        Self::from_blocks(n, vec![proto], vec![block], labels)
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    pub fn labels(&self) -> &[DofLabel] {
        &self.labels
    }

    pub fn prototypes(&self) -> &[Prototype] {
        &self.prototypes
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary_position(&self, dof: usize) -> Option<usize> {
        self.boundary_pos[dof]
    }

    pub fn dof(&self, node: usize, component: Component) -> Option<usize> {
        self.dof_map.get(&(node, component)).copied()
    }

    /// Largest coordinate among the DOF labels (the structure length for meshes).
    pub fn length(&self) -> f64 {
        self.length
    }

    fn scatter_dense(&self, pick: impl Fn(&Prototype) -> &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n_dof, self.n_dof);
        for b in &self.blocks {
            let e = pick(&self.prototypes[b.proto]);
            for (i, gi) in b.dofs.iter().enumerate() {
                let Some(gi) = gi else { continue };
                for (j, gj) in b.dofs.iter().enumerate() {
                    let Some(gj) = gj else { continue };
                    a[(*gi, *gj)] += e[(i, j)];
                }
            }
        }
        a
    }

    pub fn dense_mass(&self) -> DMatrix<f64> {
        self.scatter_dense(|p| &p.m)
    }

    pub fn dense_stiffness(&self) -> DMatrix<f64> {
        self.scatter_dense(|p| &p.k)
    }

    /// Half bandwidth over all DOFs.
    pub fn bandwidth(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| {
                let g: Vec<usize> = b.dofs.iter().flatten().copied().collect();
                match (g.iter().min(), g.iter().max()) {
                    (Some(lo), Some(hi)) => hi - lo,
                    _ => 0,
                }
            })
            .max()
            .unwrap_or(0)
    }

    /// Half bandwidth of the condensed (boundary-only) system.
    pub fn boundary_bandwidth(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| {
                let p = &self.prototypes[b.proto];
                let g: Vec<usize> = p
                    .boundary
                    .iter()
                    .filter_map(|&l| b.dofs[l])
                    .map(|d| self.boundary_pos[d].expect("boundary DOF"))
                    .collect();
                match (g.iter().min(), g.iter().max()) {
                    (Some(lo), Some(hi)) => hi - lo,
                    _ => 0,
                }
            })
            .max()
            .unwrap_or(0)
    }

    fn scatter_band(&self, pick: impl Fn(&Prototype) -> &DMatrix<f64>) -> BandMatrix<f64> {
        let bw = self.bandwidth();
        let mut a = BandMatrix::zeros(self.n_dof, bw, bw);
        for b in &self.blocks {
            let e = pick(&self.prototypes[b.proto]);
            for (i, gi) in b.dofs.iter().enumerate() {
                let Some(gi) = gi else { continue };
                for (j, gj) in b.dofs.iter().enumerate() {
                    let Some(gj) = gj else { continue };
                    let v = e[(i, j)];
                    if v != 0.0 {
                        a.add(*gi, *gj, v);
                    }
                }
            }
        }
        a
    }

    pub fn band_mass(&self) -> BandMatrix<f64> {
        self.scatter_band(|p| &p.m)
    }

    pub fn band_stiffness(&self) -> BandMatrix<f64> {
        self.scatter_band(|p| &p.k)
    }

    /// Total `1ᵀ M 1` over the DOFs of one component.
    pub fn component_mass(&self, component: Component) -> f64 {
        let m = self.dense_mass();
        let sel: Vec<usize> = (0..self.n_dof)
            .filter(|&i| self.labels[i].component == component)
            .collect();
        sel.iter().flat_map(|&i| sel.iter().map(move |&j| (i, j))).map(|(i, j)| m[(i, j)]).sum()
    }
}

fn key_bits(kind: ElementKind, l: f64) -> (ElementKind, u64) {
    (kind, l.to_bits())
}

/// Numbers DOFs and scatters element (and spring) matrices.
pub fn assemble(mesh: &Mesh1D) -> Result<GlobalSystem> {
    let comps = mesh.components();
    let nc = comps.len();
    let n_nodes = mesh.nodes.len();
    let last = n_nodes - 1;
    let mut index: Vec<Option<usize>> = vec![None; n_nodes * nc];
    let mut labels = Vec::new();
    for node in 0..n_nodes {
        let clamped = (node == 0 && mesh.bc[0] == BoundaryCondition::Clamped)
            || (node == last && mesh.bc[1] == BoundaryCondition::Clamped);
        for (ci, &c) in comps.iter().enumerate() {
            if !clamped {
                index[node * nc + ci] = Some(labels.len());
                labels.push(DofLabel {
                    node,
                    component: c,
                    x: mesh.nodes[node],
                });
            }
        }
    }
    let n_dof = labels.len();

    let mut prototypes = Vec::new();
    let mut lookup: HashMap<(ElementKind, u64), usize> = HashMap::new();
    let mut blocks = Vec::with_capacity(mesh.elements.len() + mesh.cracks.len());
    let npe = mesh.kind.nodes_per_element();
    for e in &mesh.elements {
        if e.nodes.len() != npe {
            return Err(WaveError::Config(format!(
                "element has {} nodes, expected {npe}",
                e.nodes.len()
            )));
        }
        let key = key_bits(e.kind, e.length);
        let proto = match lookup.get(&key) {
            Some(&p) => p,
            None => {
                let em = e.kind.matrices(&mesh.material, &mesh.section, e.length)?;
                let interior = if e.kind.is_wavelet() {
                    (nc..(npe - 1) * nc).collect()
                } else {
                    Vec::new()
                };
                prototypes.push(Prototype::new(em.k, em.m, interior));
                lookup.insert(key, prototypes.len() - 1);
                prototypes.len() - 1
            }
        };
        let dofs = e
            .nodes
            .iter()
            .flat_map(|&n| (0..nc).map(move |c| (n, c)))
            .map(|(n, c)| index[n * nc + c])
            .collect();
        blocks.push(Block { proto, dofs });
    }
    for c in &mesh.cracks {
        if c.left_node == c.right_node {
            continue;
        }
        let em = match crack_spring_matrices(c.spec.c_b, c.spec.c_s) {
            Ok(em) => em,
            Err(WaveError::NoCrack) => continue,
            Err(e) => return Err(e),
        };
        prototypes.push(Prototype::new(em.k, em.m, Vec::new()));
        let dofs = [c.left_node, c.right_node]
            .iter()
            .flat_map(|&n| (0..nc).map(move |ci| (n, ci)))
            .map(|(n, ci)| index[n * nc + ci])
            .collect();
        blocks.push(Block {
            proto: prototypes.len() - 1,
            dofs,
        });
    }
    let sys = GlobalSystem::from_blocks(n_dof, prototypes, blocks, labels)?;
    Ok(sys)
}

/// A point load on one nodal DOF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSpec {
    pub node: usize,
    pub component: Component,
}

/// Nodal force vector for a point load. The loaded DOF must be a boundary DOF.
pub fn build_load_vector(system: &GlobalSystem, load: &LoadSpec, amplitude: f64) -> Result<Vec<f64>> {
    let dof = system.dof(load.node, load.component).ok_or_else(|| {
        WaveError::Config(format!(
            "node {} has no free {:?} DOF (constrained or wrong element type)",
            load.node, load.component
        ))
    })?;
    if system.boundary_position(dof).is_none() {
        return Err(WaveError::InteriorLoad(dof));
    }
    let mut f = vec![0.0; system.n_dof()];
    f[dof] = amplitude;
    Ok(f)
}

/// Linear functional over global DOFs that reads one field value.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub label: String,
    pub x: f64,
    pub component: Component,
    pub weights: Vec<(usize, f64)>,
}

impl Probe {
    pub fn dof(system: &GlobalSystem, dof: usize) -> Self {
        let l = &system.labels()[dof];
        Self {
            label: l.name(),
            x: l.x,
            component: l.component,
            weights: vec![(dof, 1.0)],
        }
    }

    pub fn read<T>(&self, u: &[T]) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        self.weights.iter().map(|&(d, w)| u[d] * w).sum()
    }
}

impl Mesh1D {
    /// Field value at `x` interpolated with the element shape functions.
    /// At a node the probe reads that node directly (the left copy at a
    /// crack).
    pub fn probe(&self, system: &GlobalSystem, x: f64, component: Component, label: impl Into<String>) -> Result<Probe> {
        if !self.components().contains(&component) {
            return domain(format!("{component:?} is not a DOF of {:?} meshes", self.kind));
        }
        if !(x >= 0.0 && x <= self.length) {
            return domain(format!("probe position {x} outside [0, {}]", self.length));
        }
        let tol = 1e-9 * self.length;
        let label = label.into();
        if let Some(node) = self.nodes.iter().position(|&xn| (xn - x).abs() <= tol) {
            let weights = system.dof(node, component).map(|d| vec![(d, 1.0)]).unwrap_or_default();
            return Ok(Probe {
                label,
                x,
                component,
                weights,
            });
        }
        let e = self
            .elements
            .iter()
            .find(|e| x >= e.x0 && x <= e.x0 + e.length)
            .ok_or_else(|| WaveError::Domain(format!("no element contains x = {x}")))?;
        let xi = ((x - e.x0) / e.length).clamp(0.0, 1.0);
        let shape = if e.kind.is_wavelet() {
            basis::bswi43().eval(xi)?
        } else {
            vec![1.0 - xi, xi]
        };
        let weights = e
            .nodes
            .iter()
            .zip(shape)
            .filter_map(|(&n, w)| system.dof(n, component).map(|d| (d, w)))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        Ok(Probe {
            label,
            x,
            component,
            weights,
        })
    }

    /// Every node's DOF of `component`, left to right, as `(x, dof)`;
    /// constrained nodes read as `None`.
    pub fn node_dofs(&self, system: &GlobalSystem, component: Component) -> Vec<(f64, Option<usize>)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(n, &x)| (x, system.dof(n, component)))
            .collect()
    }
}
