use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DiffMethodSpec;
use crate::error::{Error, Result};
use crate::grid::{io, Field, MultiIndex};

/// A field together with a set of its partial derivatives on the same grid.
#[derive(Debug, Clone)]
pub struct Jet {
    base: Field,
    derivs: BTreeMap<MultiIndex, Field>,
    /// `None` for analytic or solver-derived reference jets.
    method: Option<DiffMethodSpec>,
    /// Per-axis number of end nodes produced by one-sided stencils.
    boundary_strip: Vec<usize>,
}

impl Jet {
    pub fn new(base: Field, method: Option<DiffMethodSpec>) -> Self {
        let dim = base.grid().dim();
        Self {
            base,
            derivs: BTreeMap::new(),
            method,
            boundary_strip: vec![0; dim],
        }
    }

    pub fn insert(&mut self, index: MultiIndex, field: Field) -> Result<()> {
        if index.dim() != self.base.grid().dim() {
            return Err(Error::param("index", format!("{index} does not match the grid dimension")));
        }
        if index.is_zero() {
            return Err(Error::param("index", "the zero index is the base field"));
        }
        if !field.shares_grid(&self.base) {
            return Err(Error::GridMismatch);
        }
        self.derivs.insert(index, field);
        Ok(())
    }

    pub fn base(&self) -> &Field {
        &self.base
    }

    /// The field for `index`; the zero index returns the base.
    pub fn get(&self, index: &MultiIndex) -> Result<&Field> {
        if index.is_zero() {
            return Ok(&self.base);
        }
        self.derivs
            .get(index)
            .ok_or_else(|| Error::MissingDerivative(index.clone()))
    }

    pub fn contains(&self, index: &MultiIndex) -> bool {
        index.is_zero() || self.derivs.contains_key(index)
    }

    /// Derivative indices in ascending order (the base is not included).
    pub fn indices(&self) -> impl Iterator<Item = &MultiIndex> {
        self.derivs.keys()
    }

    pub fn derivatives(&self) -> &BTreeMap<MultiIndex, Field> {
        &self.derivs
    }

    pub fn method(&self) -> Option<&DiffMethodSpec> {
        self.method.as_ref()
    }

    pub fn boundary_strip(&self) -> &[usize] {
        &self.boundary_strip
    }

    pub fn label(&self, index: &MultiIndex) -> String {
        index.label(self.base.grid().names())
    }

    /// Writes `manifest.json` plus one binary field file per entry.
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let names = self.base.grid().names();
        let mut entries = vec![JetEntry {
            index: MultiIndex::zero(names.len()),
            label: "u".into(),
            file: "u.field".into(),
        }];
        io::save(&self.base, &dir.join("u.field"))?;
        for (idx, f) in &self.derivs {
            let label = idx.label(names);
            let file = format!("{label}.field");
            io::save(f, &dir.join(&file))?;
            entries.push(JetEntry {
                index: idx.clone(),
                label,
                file,
            });
        }
        let manifest = JetManifest {
            format: JET_FORMAT.into(),
            method: self.method.clone(),
            boundary_strip: self.boundary_strip.clone(),
            entries,
        };
        let file = std::fs::File::create(dir.join("manifest.json"))?;
        serde_json::to_writer_pretty(file, &manifest)?;
        Ok(())
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let file = std::fs::File::open(dir.join("manifest.json"))?;
        let manifest: JetManifest = serde_json::from_reader(std::io::BufReader::new(file))?;
        if manifest.format != JET_FORMAT {
            return Err(Error::Format(format!("unknown jet format `{}`", manifest.format)));
        }
        let base_entry = manifest
            .entries
            .iter()
            .find(|e| e.index.is_zero())
            .ok_or_else(|| Error::Format("jet manifest lacks the base field".into()))?;
        let base = io::load(&dir.join(&base_entry.file))?;
        let mut jet = Jet::new(base, manifest.method);
        jet.boundary_strip = manifest.boundary_strip;
        for e in manifest.entries.iter().filter(|e| !e.index.is_zero()) {
            let mut f = io::load(&dir.join(&e.file))?;
            // re-share the base grid so that entries compare by pointer
            f = Field::new(jet.base.grid().clone(), f.values().clone())?;
            jet.insert(e.index.clone(), f)?;
        }
        Ok(jet)
    }
}

const JET_FORMAT: &str = "diffbench-jet-v1";

#[derive(Serialize, Deserialize)]
struct JetManifest {
    format: String,
    method: Option<DiffMethodSpec>,
    boundary_strip: Vec<usize>,
    entries: Vec<JetEntry>,
}

#[derive(Serialize, Deserialize)]
struct JetEntry {
    index: MultiIndex,
    label: String,
    file: String,
}

/// All pure partials up to `max_orders[axis]` along each axis.
pub fn build_jet(field: &Field, max_orders: &[usize], spec: &DiffMethodSpec) -> Result<Jet> {
    let dim = field.grid().dim();
    if max_orders.len() != dim {
        return Err(Error::param(
            "max_orders",
            format!("{} orders for a {dim}-D field", max_orders.len()),
        ));
    }
    let mut indices = Vec::new();
    for (axis, &m) in max_orders.iter().enumerate() {
        for r in 1..=m {
            indices.push(MultiIndex::along(dim, axis, r));
        }
    }
    if indices.is_empty() {
        return Err(Error::param("max_orders", "at least one derivative must be requested"));
    }
    build_jet_indices(field, &indices, spec)
}

/// Jet holding exactly the requested multi-indices. Mixed partials are
/// formed by differentiating along the axes in ascending order.
pub fn build_jet_indices(field: &Field, indices: &[MultiIndex], spec: &DiffMethodSpec) -> Result<Jet> {
    spec.validate()?;
    let dim = field.grid().dim();
    let mut jet = Jet::new(field.clone(), Some(spec.clone()));
    // partial results keyed by the multi-index reached so far
    let mut cache: BTreeMap<MultiIndex, Field> = BTreeMap::new();
    let mut wanted: Vec<MultiIndex> = indices.to_vec();
    wanted.sort();
    wanted.dedup();
    for idx in &wanted {
        if idx.dim() != dim {
            return Err(Error::param("index", format!("{idx} does not match a {dim}-D field")));
        }
        if idx.is_zero() {
            continue;
        }
        let f = derive(field, idx, spec, &mut cache).map_err(|e| Error::Derivative {
            index: idx.clone(),
            source: Box::new(e),
        })?;
        for (axis, &o) in idx.orders().iter().enumerate() {
            if o > 0 {
                let w = spec.boundary_width(o);
                jet.boundary_strip[axis] = jet.boundary_strip[axis].max(w);
            }
        }
        jet.insert(idx.clone(), f)?;
    }
    Ok(jet)
}

fn derive(
    base: &Field,
    idx: &MultiIndex,
    spec: &DiffMethodSpec,
    cache: &mut BTreeMap<MultiIndex, Field>,
) -> Result<Field> {
    if let Some(f) = cache.get(idx) {
        return Ok(f.clone());
    }
    let orders = idx.orders();
    let dim = orders.len();
    // the last axis with a non-zero order is differentiated last
    let last = orders.iter().rposition(|&o| o > 0).expect("non-zero index");
    let mut prefix = orders.to_vec();
    let out = if spec.is_repeated() {
        prefix[last] -= 1;
        let prev = MultiIndex::new(prefix);
        let src = if prev.is_zero() {
            base.clone()
        } else {
            derive(base, &prev, spec, cache)?
        };
        spec.differentiate(&src, last, 1)?
    } else {
        prefix[last] = 0;
        let prev = MultiIndex::new(prefix);
        let src = if prev.is_zero() {
            base.clone()
        } else {
            derive(base, &prev, spec, cache)?
        };
        spec.differentiate(&src, last, orders[last])?
    };
    debug_assert_eq!(idx.dim(), dim);
    cache.insert(idx.clone(), out.clone());
    Ok(out)
}

/// Root-mean-square of `∂_a ∂_b u − ∂_b ∂_a u` for first derivatives along
/// two distinct axes; zero for exact differentiation.
pub fn mixed_commutator(field: &Field, axis_a: usize, axis_b: usize, spec: &DiffMethodSpec) -> Result<f64> {
    if axis_a == axis_b {
        return Err(Error::param("axis", "commutator needs two distinct axes"));
    }
    let ab = spec.differentiate(&spec.differentiate(field, axis_a, 1)?, axis_b, 1)?;
    let ba = spec.differentiate(&spec.differentiate(field, axis_b, 1)?, axis_a, 1)?;
    let diff = ab.lin_comb(1.0, &ba, -1.0)?;
    Ok(diff.mean_square().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffmethods::{DiffMethod, PolynomialParams};
    use crate::grid::make_uniform_grid;
    use std::sync::Arc;

    fn plane() -> Field {
        let g = make_uniform_grid(&[(0.0, 1.0, 24), (-1.0, 1.0, 32)])
            .unwrap()
            .with_names(["t", "x"])
            .unwrap();
        Field::from_fn(Arc::new(g), |c| (c[0] * 2.0).sin() * (c[1] * 3.0).cos()).unwrap()
    }

    #[test]
    fn enumerates_pure_partials() {
        let f = plane();
        let jet = build_jet(&f, &[1, 3], &DiffMethodSpec::Gradient).unwrap();
        let labels: Vec<String> = jet.indices().map(|i| jet.label(i)).collect();
        assert_eq!(labels, vec!["u_t", "u_x", "u_xx", "u_xxx"]);
        assert_eq!(jet.boundary_strip(), &[1, 3]);
    }

    #[test]
    fn mixed_partial_uses_ascending_axes() {
        let f = plane();
        let spec = DiffMethodSpec::Gradient;
        let idx = MultiIndex::new(vec![1, 1]);
        let jet = build_jet_indices(&f, std::slice::from_ref(&idx), &spec).unwrap();
        let manual = spec
            .differentiate(&spec.differentiate(&f, 0, 1).unwrap(), 1, 1)
            .unwrap();
        assert_eq!(jet.get(&idx).unwrap().as_slice(), manual.as_slice());
    }

    #[test]
    fn deterministic() {
        let f = plane();
        for m in [DiffMethod::Gradient, DiffMethod::Spectral, DiffMethod::Polynomial] {
            let spec = match m {
                DiffMethod::Polynomial => DiffMethodSpec::Polynomial(PolynomialParams { window: 9, poly_order: 4 }),
                _ => m.default_spec(),
            };
            let a = build_jet(&f, &[2, 2], &spec).unwrap();
            let b = build_jet(&f, &[2, 2], &spec).unwrap();
            for (x, y) in a.derivatives().values().zip(b.derivatives().values()) {
                assert_eq!(x.as_slice(), y.as_slice());
            }
        }
    }

    #[test]
    fn errors_carry_the_index() {
        let f = plane();
        let spec = DiffMethodSpec::Polynomial(PolynomialParams { window: 31, poly_order: 4 });
        match build_jet(&f, &[1, 1], &spec) {
            Err(Error::Derivative { index, .. }) => assert_eq!(index, MultiIndex::new(vec![1, 0])),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn directory_round_trip() {
        let f = plane();
        let jet = build_jet(&f, &[1, 2], &DiffMethodSpec::Gradient).unwrap();
        let dir = tempfile::tempdir().unwrap();
        jet.save_dir(dir.path()).unwrap();
        let back = Jet::load_dir(dir.path()).unwrap();
        assert_eq!(back.method(), jet.method());
        assert_eq!(back.boundary_strip(), jet.boundary_strip());
        for (idx, field) in jet.derivatives() {
            assert_eq!(back.get(idx).unwrap().as_slice(), field.as_slice());
        }
    }

    #[test]
    fn gradient_commutes_on_smooth_data() {
        let c = mixed_commutator(&plane(), 0, 1, &DiffMethodSpec::Gradient).unwrap();
        assert!(c < 1e-12);
    }
}
