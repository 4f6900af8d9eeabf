use crate::model::NetworkInstance;

/// Which model a [`VarIndex`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulationKind {
    /// Compact MILP on per-path link rates with flow rows at the segment
    /// endpoints and the two valid inequality families.
    Milp,
    /// The path-based MINLP with its bilinear rows replaced by the
    /// standard three-row linearization.
    MinlpLinearized,
    /// Aggregated LP: one rate variable per (link, service, segment).
    Lp2,
}

impl FormulationKind {
    pub fn name(self) -> &'static str {
        match self {
            FormulationKind::Milp => "milp",
            FormulationKind::MinlpLinearized => "minlp-lin",
            FormulationKind::Lp2 => "lp-ii",
        }
    }
}

/// Semantic key of a model column. Cloud nodes and links are referred to
/// by their position in `cloud_nodes` and `links`; `f` is a 0-based chain
/// position and `s` a segment (`0..=chain_len`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKey {
    Y { v: usize },
    Xvk { v: usize, k: usize },
    Xvks { v: usize, k: usize, f: usize },
    Zijk { link: usize, k: usize },
    Zijksp { link: usize, k: usize, s: usize, p: usize },
    /// Rate fraction; `p` is always 0 in the aggregated LP.
    R { link: usize, k: usize, s: usize, p: usize },
    Theta { k: usize, s: usize },
    Rksp { k: usize, s: usize, p: usize },
}

pub(crate) const FAMILIES: [&str; 8] = ["y", "x_vk", "x_vks", "z_ijk", "z_ijksp", "r", "theta", "r_ksp"];

/// Bijection between [`VarKey`]s and column indices.
///
/// Canonical order: `y`, `x_vk`, `x_vks`, `z_ijk`, `z_ijksp`, `r`, `theta`,
/// `r_ksp`. Inside a family the key fields vary in the order they are
/// declared, the last one fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VarIndex {
    pub kind: FormulationKind,
    pub num_cloud: usize,
    pub num_links: usize,
    /// Path budget of the instance.
    pub paths: usize,
    pub chain: Vec<usize>,
    func_off: Vec<usize>,
    seg_off: Vec<usize>,
    total_funcs: usize,
    total_segs: usize,
    /// Start of each family, plus the total at the end.
    off: [usize; 9],
}

impl VarIndex {
    pub fn new(inst: &NetworkInstance, kind: FormulationKind) -> Self {
        let chain: Vec<usize> = inst.services.iter().map(|s| s.chain_len()).collect();
        let mut func_off = Vec::with_capacity(chain.len());
        let mut seg_off = Vec::with_capacity(chain.len());
        let (mut tf, mut ts) = (0, 0);
        for &l in &chain {
            func_off.push(tf);
            seg_off.push(ts);
            tf += l;
            ts += l + 1;
        }
        let nv = inst.cloud_nodes.len();
        let nl = inst.links.len();
        let nk = chain.len();
        let p = inst.paths;
        let (zp, rp, rksp) = match kind {
            FormulationKind::Milp => (p, p, 0),
            FormulationKind::MinlpLinearized => (p, p, p),
            FormulationKind::Lp2 => (0, 1, 0),
        };
        let sizes = [nv, nv * nk, nv * tf, nl * nk, nl * ts * zp, nl * ts * rp, ts, ts * rksp];
        let mut off = [0; 9];
        for (i, s) in sizes.iter().enumerate() {
            off[i + 1] = off[i] + s;
        }
        VarIndex {
            kind,
            num_cloud: nv,
            num_links: nl,
            paths: p,
            chain,
            func_off,
            seg_off,
            total_funcs: tf,
            total_segs: ts,
            off,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.off[8]
    }

    pub fn num_services(&self) -> usize {
        self.chain.len()
    }

    /// Number of path copies carried by the rate family.
    pub fn rate_paths(&self) -> usize {
        if self.kind == FormulationKind::Lp2 {
            1
        } else {
            self.paths
        }
    }

    pub fn has_path_links(&self) -> bool {
        self.kind != FormulationKind::Lp2
    }

    pub fn has_path_split(&self) -> bool {
        self.kind == FormulationKind::MinlpLinearized
    }

    /// Column range of family `i` in canonical order.
    pub fn family_range(&self, i: usize) -> std::ops::Range<usize> {
        self.off[i]..self.off[i + 1]
    }

    fn seg(&self, k: usize, s: usize) -> usize {
        debug_assert!(s <= self.chain[k]);
        self.seg_off[k] + s
    }

    pub fn y(&self, v: usize) -> usize {
        self.off[0] + v
    }

    pub fn x_vk(&self, v: usize, k: usize) -> usize {
        self.off[1] + v * self.chain.len() + k
    }

    pub fn x_vks(&self, v: usize, k: usize, f: usize) -> usize {
        debug_assert!(f < self.chain[k]);
        self.off[2] + v * self.total_funcs + self.func_off[k] + f
    }

    pub fn z_ijk(&self, link: usize, k: usize) -> usize {
        self.off[3] + link * self.chain.len() + k
    }

    pub fn z_ijksp(&self, link: usize, k: usize, s: usize, p: usize) -> usize {
        assert!(self.has_path_links(), "aggregated LP has no per-path link indicators");
        self.off[4] + (link * self.total_segs + self.seg(k, s)) * self.paths + p
    }

    pub fn r(&self, link: usize, k: usize, s: usize, p: usize) -> usize {
        let rp = self.rate_paths();
        debug_assert!(p < rp);
        self.off[5] + (link * self.total_segs + self.seg(k, s)) * rp + p
    }

    pub fn theta(&self, k: usize, s: usize) -> usize {
        self.off[6] + self.seg(k, s)
    }

    pub fn r_ksp(&self, k: usize, s: usize, p: usize) -> usize {
        assert!(self.has_path_split(), "only the linearized MINLP has path fractions");
        self.off[7] + self.seg(k, s) * self.paths + p
    }

    pub fn col(&self, key: VarKey) -> Option<usize> {
        let nk = self.chain.len();
        let ok = |v: usize, k: usize| v < self.num_cloud && k < nk;
        let okl = |e: usize, k: usize| e < self.num_links && k < nk;
        Some(match key {
            VarKey::Y { v } if v < self.num_cloud => self.y(v),
            VarKey::Xvk { v, k } if ok(v, k) => self.x_vk(v, k),
            VarKey::Xvks { v, k, f } if ok(v, k) && f < self.chain[k] => self.x_vks(v, k, f),
            VarKey::Zijk { link, k } if okl(link, k) => self.z_ijk(link, k),
            VarKey::Zijksp { link, k, s, p }
                if okl(link, k) && s <= self.chain[k] && p < self.paths && self.has_path_links() =>
            {
                self.z_ijksp(link, k, s, p)
            }
            VarKey::R { link, k, s, p } if okl(link, k) && s <= self.chain[k] && p < self.rate_paths() => {
                self.r(link, k, s, p)
            }
            VarKey::Theta { k, s } if k < nk && s <= self.chain[k] => self.theta(k, s),
            VarKey::Rksp { k, s, p } if k < nk && s <= self.chain[k] && p < self.paths && self.has_path_split() => {
                self.r_ksp(k, s, p)
            }
            _ => return None,
        })
    }

    /// Inverse of [`VarIndex::col`].
    pub fn key(&self, col: usize) -> Option<VarKey> {
        if col >= self.num_vars() {
            return None;
        }
        let fam = (0..8).find(|&i| col < self.off[i + 1])?;
        let c = col - self.off[fam];
        let nk = self.chain.len();
        let service_of_func = |g: usize| {
            let k = self.func_off.partition_point(|&o| o <= g) - 1;
            (k, g - self.func_off[k])
        };
        let service_of_seg = |g: usize| {
            let k = self.seg_off.partition_point(|&o| o <= g) - 1;
            (k, g - self.seg_off[k])
        };
        Some(match fam {
            0 => VarKey::Y { v: c },
            1 => VarKey::Xvk { v: c / nk, k: c % nk },
            2 => {
                let (k, f) = service_of_func(c % self.total_funcs);
                VarKey::Xvks { v: c / self.total_funcs, k, f }
            }
            3 => VarKey::Zijk { link: c / nk, k: c % nk },
            4 | 5 => {
                let pp = if fam == 4 { self.paths } else { self.rate_paths() };
                let p = c % pp;
                let rest = c / pp;
                let (k, s) = service_of_seg(rest % self.total_segs);
                let link = rest / self.total_segs;
                if fam == 4 {
                    VarKey::Zijksp { link, k, s, p }
                } else {
                    VarKey::R { link, k, s, p }
                }
            }
            6 => {
                let (k, s) = service_of_seg(c);
                VarKey::Theta { k, s }
            }
            _ => {
                let (k, s) = service_of_seg(c / self.paths);
                VarKey::Rksp { k, s, p: c % self.paths }
            }
        })
    }
}
