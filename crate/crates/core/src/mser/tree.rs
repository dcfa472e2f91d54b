//! Max-tree over 4-connected upper threshold sets, built by union-find on
//! pixels taken brightest first.

use super::sort::{sort_keys, PixelOrder};
use crate::error::{Error, Result};
use crate::image::BScan;

/// One connected component of `{I >= level}` at the level where it appears.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    /// Parent node; the root points to itself.
    pub parent: u32,
    pub level: u8,
    pub area: u32,
    /// Canonical pixel representing this node.
    pub pixel: u32,
    /// Smallest pixel index in the subtree, used to break ties.
    pub min_pixel: u32,
    /// Sum of (row, col) over the subtree.
    pub sum_x: [u64; 2],
    /// Sum of (row*row, row*col, col*col) over the subtree.
    pub sum_xx: [u64; 3],
}

/// Mean and covariance of a node's pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// (row, col)
    pub centroid: [f64; 2],
    pub covariance: [[f64; 2]; 2],
}

#[derive(Debug, Clone)]
pub struct ComponentTree {
    width: usize,
    height: usize,
    /// Canonicalized per-pixel parent.
    parent: Vec<u32>,
    node_of_pixel: Vec<u32>,
    nodes: Vec<Node>,
    child_start: Vec<u32>,
    children: Vec<u32>,
    own_start: Vec<u32>,
    own_pixels: Vec<u32>,
}

fn find(zpar: &mut [u32], p: u32) -> u32 {
    let mut root = p;
    while zpar[root as usize] != root {
        root = zpar[root as usize];
    }
    let mut q = p;
    while zpar[q as usize] != root {
        let next = zpar[q as usize];
        zpar[q as usize] = root;
        q = next;
    }
    root
}

/// Groups `items` by `key` into compressed rows: `start[k]..start[k + 1]`.
fn bucket(count: usize, items: impl Iterator<Item = (u32, u32)> + Clone) -> (Vec<u32>, Vec<u32>) {
    let mut start = vec![0u32; count + 1];
    for (k, _) in items.clone() {
        start[k as usize + 1] += 1;
    }
    for i in 1..=count {
        start[i] += start[i - 1];
    }
    let mut fill = start.clone();
    let mut out = vec![0u32; start[count] as usize];
    for (k, v) in items {
        let slot = &mut fill[k as usize];
        out[*slot as usize] = v;
        *slot += 1;
    }
    (start, out)
}

pub fn build_component_tree(img: &BScan) -> Result<ComponentTree> {
    if img.is_empty() {
        return Err(Error::param("cannot build a component tree of an empty image"));
    }
    Ok(ComponentTree::from_order(
        img.width(),
        img.height(),
        &sort_keys(img.to_u8()),
    ))
}

impl ComponentTree {
    fn from_order(width: usize, height: usize, sorted: &PixelOrder) -> Self {
        let n = width * height;
        let f = &sorted.keys;
        let order = &sorted.order;
        let mut parent = vec![u32::MAX; n];
        let mut zpar = vec![u32::MAX; n];

        for &p in order.iter().rev() {
            parent[p as usize] = p;
            zpar[p as usize] = p;
            let (row, col) = (p as usize / width, p as usize % width);
            let mut neighbours = [u32::MAX; 4];
            if row > 0 {
                neighbours[0] = p - width as u32;
            }
            if row + 1 < height {
                neighbours[1] = p + width as u32;
            }
            if col > 0 {
                neighbours[2] = p - 1;
            }
            if col + 1 < width {
                neighbours[3] = p + 1;
            }
            for q in neighbours {
                if q == u32::MAX || zpar[q as usize] == u32::MAX {
                    continue;
                }
                let r = find(&mut zpar, q);
                if r != p {
                    parent[r as usize] = p;
                    zpar[r as usize] = p;
                }
            }
        }

        // Point every pixel at the canonical pixel of its parent node.
        for &p in order.iter() {
            let q = parent[p as usize];
            let pq = parent[q as usize];
            if f[pq as usize] == f[q as usize] {
                parent[p as usize] = pq;
            }
        }

        let root_pixel = order[0];
        let is_canonical =
            |p: u32| p == root_pixel || f[parent[p as usize] as usize] != f[p as usize];

        // Darkest first, so parents are numbered before their children.
        let mut node_id = vec![u32::MAX; n];
        let mut nodes = Vec::new();
        for &p in order.iter() {
            if is_canonical(p) {
                node_id[p as usize] = nodes.len() as u32;
                nodes.push(Node {
                    parent: 0,
                    level: f[p as usize],
                    area: 0,
                    pixel: p,
                    min_pixel: u32::MAX,
                    sum_x: [0; 2],
                    sum_xx: [0; 3],
                });
            }
        }
        for node in nodes.iter_mut().skip(1) {
            node.parent = node_id[parent[node.pixel as usize] as usize];
        }

        let mut node_of_pixel = vec![0u32; n];
        for p in 0..n {
            let id = if node_id[p] != u32::MAX {
                node_id[p]
            } else {
                node_id[parent[p] as usize]
            };
            node_of_pixel[p] = id;
            let node = &mut nodes[id as usize];
            let (r, c) = ((p / width) as u64, (p % width) as u64);
            node.area += 1;
            node.min_pixel = node.min_pixel.min(p as u32);
            node.sum_x[0] += r;
            node.sum_x[1] += c;
            node.sum_xx[0] += r * r;
            node.sum_xx[1] += r * c;
            node.sum_xx[2] += c * c;
        }
        for i in (1..nodes.len()).rev() {
            let child = nodes[i];
            let up = &mut nodes[child.parent as usize];
            up.area += child.area;
            up.min_pixel = up.min_pixel.min(child.min_pixel);
            for k in 0..2 {
                up.sum_x[k] += child.sum_x[k];
            }
            for k in 0..3 {
                up.sum_xx[k] += child.sum_xx[k];
            }
        }

        let count = nodes.len();
        let (child_start, children) = bucket(
            count,
            (1..count as u32).map(|i| (nodes[i as usize].parent, i)),
        );
        let (own_start, own_pixels) = bucket(
            count,
            node_of_pixel.iter().enumerate().map(|(p, &id)| (id, p as u32)),
        );

        Self {
            width,
            height,
            parent,
            node_of_pixel,
            nodes,
            child_start,
            children,
            own_start,
            own_pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    /// Canonicalized parent pixel of every pixel.
    pub fn pixel_parents(&self) -> &[u32] {
        &self.parent
    }

    /// Node each pixel is attached to, i.e. the smallest node containing it.
    pub fn node_of_pixel(&self, pixel: usize) -> usize {
        self.node_of_pixel[pixel] as usize
    }

    pub fn parent(&self, id: usize) -> usize {
        self.nodes[id].parent as usize
    }

    pub fn children(&self, id: usize) -> &[u32] {
        &self.children[self.child_start[id] as usize..self.child_start[id + 1] as usize]
    }

    /// Pixels attached directly to this node, excluding descendants.
    pub fn own_pixels(&self, id: usize) -> &[u32] {
        &self.own_pixels[self.own_start[id] as usize..self.own_start[id + 1] as usize]
    }

    /// Every pixel of the node's region, in no particular order.
    pub fn region_pixels(&self, id: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.nodes[id].area as usize);
        let mut stack = vec![id as u32];
        while let Some(n) = stack.pop() {
            out.extend_from_slice(self.own_pixels(n as usize));
            stack.extend_from_slice(self.children(n as usize));
        }
        out
    }

    pub fn moments(&self, id: usize) -> Moments {
        let node = &self.nodes[id];
        let a = node.area as f64;
        let mu = [node.sum_x[0] as f64 / a, node.sum_x[1] as f64 / a];
        let m = [
            node.sum_xx[0] as f64 / a,
            node.sum_xx[1] as f64 / a,
            node.sum_xx[2] as f64 / a,
        ];
        let rc = m[1] - mu[0] * mu[1];
        Moments {
            centroid: mu,
            covariance: [
                [(m[0] - mu[0] * mu[0]).max(0.0), rc],
                [rc, (m[2] - mu[1] * mu[1]).max(0.0)],
            ],
        }
    }
}

/// Population mean and covariance of explicit (row, col) coordinates.
pub fn moments_of_pixels(pixels: &[(usize, usize)]) -> Moments {
    let a = pixels.len() as f64;
    let mu = [
        pixels.iter().map(|p| p.0 as f64).sum::<f64>() / a,
        pixels.iter().map(|p| p.1 as f64).sum::<f64>() / a,
    ];
    let mut cov = [[0.0; 2]; 2];
    for &(r, c) in pixels {
        let d = [r as f64 - mu[0], c as f64 - mu[1]];
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] += d[i] * d[j] / a;
            }
        }
    }
    Moments {
        centroid: mu,
        covariance: cov,
    }
}

/// Centroid and covariance of every node, indexed by node id.
pub fn region_moments(tree: &ComponentTree) -> Vec<Moments> {
    (0..tree.len()).map(|id| tree.moments(id)).collect()
}
