//! Thickness and permittivity error metrics and nearest-material
//! classification.

use std::fmt::Write as _;

use crate::defaults::MAX_LAYERS;
use crate::error::{Error, Result};
use crate::scene::TargetVector;

/// Material classes; materials sharing a permittivity form one class whose
/// name joins the member names with `/`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialCatalog {
    classes: Vec<MaterialClass>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialClass {
    pub name: String,
    pub eps_r: f64,
}

const BUILTIN: [(&str, f64); 12] = [
    ("finery", 5.31),
    ("brick", 3.75),
    ("bitumen", 2.8),
    ("tiles", 21.0),
    ("concrete", 5.31),
    ("mineral wool", 1.5),
    ("plasterboard", 2.58),
    ("steel", 1.0),
    ("heraklith", 1.1),
    ("ytong", 1.7),
    ("styrofoam", 1.06),
    ("mortar", 4.7),
];

impl MaterialCatalog {
    /// Builds classes sorted by permittivity. Names must be unique and
    /// permittivities positive.
    pub fn from_entries<S: AsRef<str>>(entries: &[(S, f64)]) -> Result<Self> {
        let mut classes: Vec<MaterialClass> = Vec::new();
        let mut names: Vec<&str> = Vec::new();
        for (name, eps) in entries {
            let name = name.as_ref().trim();
            if name.is_empty() {
                return Err(Error::Argument("material name is empty".into()));
            }
            if !(eps.is_finite() && *eps > 0.0) {
                return Err(Error::Argument(format!("{name}: permittivity {eps} must be positive")));
            }
            if names.contains(&name) {
                return Err(Error::Argument(format!("material {name} listed twice")));
            }
            names.push(name);
            match classes.iter_mut().find(|c| c.eps_r == *eps) {
                Some(c) => {
                    c.name.push('/');
                    c.name.push_str(name);
                }
                None => classes.push(MaterialClass { name: name.to_string(), eps_r: *eps }),
            }
        }
        if classes.is_empty() {
            return Err(Error::EmptyCatalog);
        }
        classes.sort_by(|a, b| a.eps_r.total_cmp(&b.eps_r));
        Ok(Self { classes })
    }

    /// The twelve wall materials with their relative permittivities.
    pub fn builtin() -> Self {
        Self::from_entries(&BUILTIN).expect("builtin catalog is valid")
    }

    pub fn classes(&self) -> &[MaterialClass] {
        &self.classes
    }

    /// Catalog text: one `name,eps_r` per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (name, eps) = content
                .rsplit_once(',')
                .ok_or_else(|| Error::Parse { line, message: "expected `name,eps_r`".into() })?;
            let eps: f64 = eps
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("bad permittivity `{}`", eps.trim()) })?;
            entries.push((name.trim().to_string(), eps));
        }
        Self::from_entries(&entries)
    }
}

/// Nearest class by `|eps - eps_r|`; an exact tie goes to the lower class.
pub fn classify_material(eps: f64, cat: &MaterialCatalog) -> Result<&MaterialClass> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Argument(format!("permittivity {eps} must be positive")));
    }
    let mut best: Option<&MaterialClass> = None;
    for c in &cat.classes {
        // classes ascend in eps_r, so strict improvement keeps the lower one on ties
        if best.is_none_or(|b| (eps - c.eps_r).abs() < (eps - b.eps_r).abs()) {
            best = Some(c);
        }
    }
    best.ok_or(Error::EmptyCatalog)
}

/// Mean absolute errors over existing layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerErrors {
    /// Mean over every existing layer of every sample.
    pub overall: f64,
    /// `100 * overall / mean_true`.
    pub overall_pct: f64,
    /// Mean true value over the same layers.
    pub mean_true: f64,
    /// Per layer index; `None` when no sample has that layer.
    pub per_layer: [Option<f64>; MAX_LAYERS],
}

fn check_inputs(preds: &[TargetVector], targets: &[TargetVector]) -> Result<()> {
    if preds.len() != targets.len() {
        return Err(Error::Argument(format!("{} predictions for {} targets", preds.len(), targets.len())));
    }
    if targets.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

fn slot_errors(preds: &[TargetVector], targets: &[TargetVector], offset: usize) -> Result<LayerErrors> {
    check_inputs(preds, targets)?;
    let mut sum = [0.0; MAX_LAYERS];
    let mut count = [0usize; MAX_LAYERS];
    let mut true_sum = 0.0;
    for (p, t) in preds.iter().zip(targets) {
        for l in 0..MAX_LAYERS {
            if t.thickness(l) > 0.0 {
                sum[l] += (p.0[offset + l] - t.0[offset + l]).abs();
                true_sum += t.0[offset + l];
                count[l] += 1;
            }
        }
    }
    let n: usize = count.iter().sum();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let overall = sum.iter().sum::<f64>() / n as f64;
    let mean_true = true_sum / n as f64;
    let mut per_layer = [None; MAX_LAYERS];
    for l in 0..MAX_LAYERS {
        if count[l] > 0 {
            per_layer[l] = Some(sum[l] / count[l] as f64);
        }
    }
    Ok(LayerErrors {
        overall,
        overall_pct: if mean_true > 0.0 { 100.0 * overall / mean_true } else { 0.0 },
        mean_true,
        per_layer,
    })
}

/// Thickness errors in meters, counted only where the true layer exists.
pub fn thickness_errors(preds: &[TargetVector], targets: &[TargetVector]) -> Result<LayerErrors> {
    slot_errors(preds, targets, 0)
}

pub fn permittivity_errors(preds: &[TargetVector], targets: &[TargetVector]) -> Result<LayerErrors> {
    slot_errors(preds, targets, MAX_LAYERS)
}

/// Fraction of existing layers whose predicted and true permittivities fall
/// in the same material class.
pub fn classification_accuracy(preds: &[TargetVector], targets: &[TargetVector], cat: &MaterialCatalog) -> Result<f64> {
    check_inputs(preds, targets)?;
    let (mut hit, mut n) = (0usize, 0usize);
    for (p, t) in preds.iter().zip(targets) {
        for l in 0..t.layer_count() {
            n += 1;
            let pe = p.eps(l);
            if pe > 0.0 && classify_material(pe, cat)?.name == classify_material(t.eps(l), cat)?.name {
                hit += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(hit as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n_samples: usize,
    pub thickness: LayerErrors,
    pub permittivity: LayerErrors,
    pub accuracy: Option<f64>,
}

pub fn evaluate(preds: &[TargetVector], targets: &[TargetVector], cat: Option<&MaterialCatalog>) -> Result<MetricsReport> {
    Ok(MetricsReport {
        n_samples: targets.len(),
        thickness: thickness_errors(preds, targets)?,
        permittivity: permittivity_errors(preds, targets)?,
        accuracy: cat.map(|c| classification_accuracy(preds, targets, c)).transpose()?,
    })
}

fn cell(v: Option<f64>, scale: f64) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.1}", x * scale))
}

/// Fixed-width text tables: totals, then one column per layer.
pub fn render_report(m: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "samples: {}", m.n_samples);
    let _ = writeln!(out, "{:<28}{:>10}{:>10}", "", "abs", "%");
    let _ = writeln!(
        out,
        "{:<28}{:>10}{:>10}",
        "mean thickness error (mm)",
        cell(Some(m.thickness.overall), 1e3),
        cell(Some(m.thickness.overall_pct), 1.0)
    );
    let _ = writeln!(
        out,
        "{:<28}{:>10}{:>10}",
        "mean permittivity error",
        cell(Some(m.permittivity.overall), 1.0),
        cell(Some(m.permittivity.overall_pct), 1.0)
    );
    let _ = writeln!(out);
    let _ = write!(out, "{:<28}", "layer");
    for l in 1..=MAX_LAYERS {
        let _ = write!(out, "{l:>8}");
    }
    let _ = writeln!(out);
    for (label, errs, scale) in [("thickness error (mm)", &m.thickness, 1e3), ("permittivity error", &m.permittivity, 1.0)] {
        let _ = write!(out, "{label:<28}");
        for v in errs.per_layer {
            let _ = write!(out, "{:>8}", cell(v, scale));
        }
        let _ = writeln!(out);
    }
    if let Some(a) = m.accuracy {
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<28}{:>10}", "classification accuracy (%)", cell(Some(a), 100.0));
    }
    out
}

fn opt_str(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// `metric,value` rows. Values are written exactly; absent values are empty.
pub fn report_csv(m: &MetricsReport) -> String {
    let mut out = String::from("metric,value\n");
    let _ = writeln!(out, "n_samples,{}", m.n_samples);
    for (key, e) in [("thickness_m", &m.thickness), ("permittivity", &m.permittivity)] {
        let _ = writeln!(out, "{key}_overall,{}", e.overall);
        let _ = writeln!(out, "{key}_overall_pct,{}", e.overall_pct);
        let _ = writeln!(out, "{key}_mean_true,{}", e.mean_true);
        for (l, v) in e.per_layer.iter().enumerate() {
            let _ = writeln!(out, "{key}_layer{},{}", l + 1, opt_str(*v));
        }
    }
    let _ = writeln!(out, "accuracy,{}", opt_str(m.accuracy));
    out
}

pub fn parse_report_csv(text: &str) -> Result<MetricsReport> {
    let mut map = std::collections::BTreeMap::new();
    for (idx, raw) in text.lines().enumerate().skip(1) {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (k, v) = raw.split_once(',').ok_or_else(|| Error::Parse { line, message: "expected `metric,value`".into() })?;
        let v = if v.is_empty() {
            None
        } else {
            Some(v.parse::<f64>().map_err(|_| Error::Parse { line, message: format!("bad value `{v}`") })?)
        };
        if map.insert(k.to_string(), v).is_some() {
            return Err(Error::Parse { line, message: format!("duplicate metric {k}") });
        }
    }
    if !text.starts_with("metric,value") {
        return Err(Error::Parse { line: 1, message: "missing `metric,value` header".into() });
    }
    type Map = std::collections::BTreeMap<String, Option<f64>>;
    fn take(map: &mut Map, k: &str) -> Result<Option<f64>> {
        map.remove(k).ok_or_else(|| Error::Format(format!("report lacks {k}")))
    }
    fn need(map: &mut Map, k: &str) -> Result<f64> {
        take(map, k)?.ok_or_else(|| Error::Format(format!("{k} is empty")))
    }
    fn errs(map: &mut Map, key: &str) -> Result<LayerErrors> {
        let overall = need(map, &format!("{key}_overall"))?;
        let overall_pct = need(map, &format!("{key}_overall_pct"))?;
        let mean_true = need(map, &format!("{key}_mean_true"))?;
        let mut per_layer = [None; MAX_LAYERS];
        for (l, slot) in per_layer.iter_mut().enumerate() {
            *slot = take(map, &format!("{key}_layer{}", l + 1))?;
        }
        Ok(LayerErrors { overall, overall_pct, mean_true, per_layer })
    }
    let n = need(&mut map, "n_samples")?;
    let thickness = errs(&mut map, "thickness_m")?;
    let permittivity = errs(&mut map, "permittivity")?;
    let accuracy = take(&mut map, "accuracy")?;
    if let Some(k) = map.keys().next() {
        return Err(Error::Format(format!("unknown metric {k}")));
    }
    if n.fract() != 0.0 || n < 0.0 {
        return Err(Error::Format(format!("sample count {n}")));
    }
    Ok(MetricsReport { n_samples: n as usize, thickness, permittivity, accuracy })
}
