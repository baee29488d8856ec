//! Finsler metric specifications and the builtin zoo.
//!
//! A [`MetricSpec`] is parsed from JSON (see [`MetricSpec::from_json`]) or
//! taken from [`MetricSpec::builtin`]. Everything downstream only needs the
//! [`Metric`] trait: the Taylor jet of the energy `F = ½L²` in the joint
//! variables `(x, y)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::expr::{Expr, VarSet};
use crate::jets::Jet;

/// Box from which audit samplers draw points, one interval per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDomain {
    pub x: Vec<(f64, f64)>,
    pub y: Vec<(f64, f64)>,
}

/// A Finsler function on a single coordinate chart.
pub trait Metric: Send + Sync {
    fn dim(&self) -> usize;

    /// Jet of `F = ½L²` in the `2n` variables `(x0.., y0..)`, expanded at
    /// `(x, y)`. Fails with an outside-domain error unless `L(x, y) > 0`.
    fn energy_jet(&self, x: &[f64], y: &[f64], order: u32) -> Result<Jet>;

    /// `L(x, y)`.
    fn length(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let f = self.energy_jet(x, y, 1)?.value();
        Ok((2.0 * f).sqrt())
    }

    /// Where audits should look for admissible points.
    fn sampling_domain(&self) -> SamplingDomain {
        let n = self.dim();
        SamplingDomain {
            x: vec![(-1.0, 1.0); n],
            y: vec![(-1.0, 1.0); n],
        }
    }
}

/// Variable jets for the joint point `(x, y)`.
pub fn point_jets(x: &[f64], y: &[f64], dim: usize, order: u32) -> Result<Vec<Jet>> {
    check_point(x, y, dim)?;
    let joint: Vec<f64> = x.iter().chain(y).copied().collect();
    Jet::variables(&joint, order)
}

pub fn check_point(x: &[f64], y: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim || y.len() != dim {
        return Err(FinslerError::InvalidArgument(format!(
            "point has |x| = {}, |y| = {}, metric dimension is {dim}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(FinslerError::InvalidArgument("point has non-finite entries".into()));
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(FinslerError::OutsideDomain("y = 0 is excluded".into()));
    }
    Ok(())
}

fn positive_energy(l_squared_half: Jet, what: &str) -> Result<Jet> {
    let v = l_squared_half.value();
    if v > 0.0 && v.is_finite() {
        Ok(l_squared_half)
    } else {
        Err(FinslerError::OutsideDomain(format!("{what} = {v} is not positive")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricKind {
    /// `L² = g_ij(x) y^i y^j`; full symmetric table.
    Riemannian { g: Vec<Vec<Expr>> },
    /// `L^m = a_{i…k}(x) y^i … y^k`; one coefficient per sorted index tuple.
    MthRoot { m: u32, coeffs: BTreeMap<Vec<usize>, Expr> },
    /// Coordinates `(z, θ)`; profile `r(z)` written in the variable `z`.
    Revolution { profile: Expr },
    /// Explicit `L(x, y)`.
    Custom { lagrangian: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub dim: usize,
    pub kind: MetricKind,
    pub domain_note: Option<String>,
}

/// Largest supported dimension (index keys are single digits).
pub const MAX_DIM: usize = 9;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: String,
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coeffs: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    profile: Option<String>,
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    lagrangian: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain_note: Option<String>,
}

fn schema(msg: impl Into<String>) -> FinslerError {
    FinslerError::Schema(msg.into())
}

fn parse_index_key(key: &str, len: usize, dim: usize) -> Result<Vec<usize>> {
    if key.len() != len || !key.bytes().all(|b| b.is_ascii_digit()) {
        return Err(schema(format!("index key `{key}` must be {len} digits")));
    }
    let idx: Vec<usize> = key.bytes().map(|b| (b - b'0') as usize).collect();
    if let Some(&bad) = idx.iter().find(|&&i| i >= dim) {
        return Err(schema(format!(
            "index {bad} in key `{key}` out of range for dimension {dim}"
        )));
    }
    Ok(idx)
}

fn index_key(idx: &[usize]) -> String {
    idx.iter().map(|i| char::from(b'0' + *i as u8)).collect()
}

/// Number of distinct orderings of an index tuple, `m! / Π count!`.
pub fn multinomial(sorted: &[usize]) -> f64 {
    let mut result = 1.0;
    let mut run = 0;
    for (k, w) in sorted.iter().enumerate() {
        result *= (k + 1) as f64;
        if k > 0 && sorted[k - 1] == *w {
            run += 1;
        } else {
            run = 1;
        }
        result /= run as f64;
    }
    result
}

fn parse_expr_in(text: &str, vars: &VarSet, context: &str) -> Result<Expr> {
    Expr::parse(text, vars).map_err(|e| match e {
        FinslerError::Syntax { column, message } => FinslerError::Syntax {
            column,
            message: format!("{message} (in {context})"),
        },
        other => other,
    })
}

impl MetricSpec {
    /// Parses and validates a metric-spec JSON document.
    pub fn from_json(text: &str) -> Result<MetricSpec> {
        let raw: RawSpec = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
        MetricSpec::from_raw(raw)
    }

    fn from_raw(raw: RawSpec) -> Result<MetricSpec> {
        let dim = raw.dim;
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(schema(format!("dim must be in 2..={MAX_DIM}, got {dim}")));
        }
        let forbid = |present: bool, field: &str| -> Result<()> {
            if present {
                Err(schema(format!(
                    "field `{field}` is not allowed for kind `{}`",
                    raw.kind
                )))
            } else {
                Ok(())
            }
        };
        let kind = match raw.kind.as_str() {
            "riemannian" => {
                forbid(raw.m.is_some(), "m")?;
                forbid(raw.coeffs.is_some(), "coeffs")?;
                forbid(raw.profile.is_some(), "profile")?;
                forbid(raw.lagrangian.is_some(), "L")?;
                let table = raw.g.as_ref().ok_or_else(|| schema("riemannian metric needs `g`"))?;
                let vars = VarSet::coords(dim);
                let mut g: Vec<Vec<Option<Expr>>> = vec![vec![None; dim]; dim];
                for (key, text) in table {
                    let idx = parse_index_key(key, 2, dim)?;
                    let e = parse_expr_in(text, &vars, &format!("g[{key}]"))?;
                    let (i, j) = (idx[0].min(idx[1]), idx[0].max(idx[1]));
                    match &g[i][j] {
                        Some(prev) if *prev != e => {
                            return Err(FinslerError::SymmetryConflict(format!(
                                "g[{i}{j}] and g[{j}{i}] differ"
                            )))
                        }
                        _ => g[i][j] = Some(e),
                    }
                }
                let mut full = vec![vec![Expr::Num(0.0); dim]; dim];
                for i in 0..dim {
                    for j in i..dim {
                        match g[i][j].take() {
                            Some(e) => {
                                full[i][j] = e.clone();
                                full[j][i] = e;
                            }
                            None if i == j => return Err(schema(format!("missing diagonal entry g[{i}{i}]"))),
                            None => {}
                        }
                    }
                }
                MetricKind::Riemannian { g: full }
            }
            "mth_root" => {
                forbid(raw.g.is_some(), "g")?;
                forbid(raw.profile.is_some(), "profile")?;
                forbid(raw.lagrangian.is_some(), "L")?;
                let m = raw.m.ok_or_else(|| schema("mth_root metric needs `m`"))?;
                if m < 2 {
                    return Err(schema(format!("m must be at least 2, got {m}")));
                }
                if m > 12 {
                    return Err(schema(format!("m must be at most 12, got {m}")));
                }
                let table = raw
                    .coeffs
                    .as_ref()
                    .filter(|c| !c.is_empty())
                    .ok_or_else(|| schema("mth_root metric needs non-empty `coeffs`"))?;
                let vars = VarSet::coords(dim);
                let mut coeffs: BTreeMap<Vec<usize>, Expr> = BTreeMap::new();
                for (key, text) in table {
                    let mut idx = parse_index_key(key, m as usize, dim)?;
                    let e = parse_expr_in(text, &vars, &format!("coeffs[{key}]"))?;
                    idx.sort_unstable();
                    match coeffs.get(&idx) {
                        Some(prev) if *prev != e => {
                            return Err(FinslerError::SymmetryConflict(format!(
                                "coefficients for permutations of `{}` differ",
                                index_key(&idx)
                            )))
                        }
                        _ => {
                            coeffs.insert(idx, e);
                        }
                    }
                }
                MetricKind::MthRoot { m, coeffs }
            }
            "surface_of_revolution" => {
                forbid(raw.m.is_some(), "m")?;
                forbid(raw.coeffs.is_some(), "coeffs")?;
                forbid(raw.g.is_some(), "g")?;
                forbid(raw.lagrangian.is_some(), "L")?;
                if dim != 2 {
                    return Err(schema(format!("surface_of_revolution has dim 2, got {dim}")));
                }
                let text = raw
                    .profile
                    .as_ref()
                    .ok_or_else(|| schema("surface_of_revolution needs `profile`"))?;
                let profile = parse_expr_in(text, &VarSet::named(&["z"]), "profile")?;
                MetricKind::Revolution { profile }
            }
            "custom" => {
                forbid(raw.m.is_some(), "m")?;
                forbid(raw.coeffs.is_some(), "coeffs")?;
                forbid(raw.g.is_some(), "g")?;
                forbid(raw.profile.is_some(), "profile")?;
                let text = raw
                    .lagrangian
                    .as_ref()
                    .ok_or_else(|| schema("custom metric needs `L`"))?;
                MetricKind::Custom {
                    lagrangian: parse_expr_in(text, &VarSet::finsler(dim), "L")?,
                }
            }
            other => return Err(schema(format!("unknown kind `{other}`"))),
        };
        Ok(MetricSpec {
            dim,
            kind,
            domain_note: raw.domain_note,
        })
    }

    fn to_raw(&self) -> RawSpec {
        let mut raw = RawSpec {
            kind: self.kind_name().to_string(),
            dim: self.dim,
            m: None,
            coeffs: None,
            g: None,
            profile: None,
            lagrangian: None,
            domain_note: self.domain_note.clone(),
        };
        match &self.kind {
            MetricKind::Riemannian { g } => {
                let mut table = BTreeMap::new();
                for i in 0..self.dim {
                    for j in i..self.dim {
                        if i == j || g[i][j] != Expr::Num(0.0) {
                            table.insert(index_key(&[i, j]), g[i][j].to_string());
                        }
                    }
                }
                raw.g = Some(table);
            }
            MetricKind::MthRoot { m, coeffs } => {
                raw.m = Some(*m);
                raw.coeffs = Some(coeffs.iter().map(|(k, e)| (index_key(k), e.to_string())).collect());
            }
            MetricKind::Revolution { profile } => raw.profile = Some(profile.to_string()),
            MetricKind::Custom { lagrangian } => raw.lagrangian = Some(lagrangian.to_string()),
        }
        raw
    }

    /// Canonical JSON: fixed key order, sorted index keys (symmetric entries
    /// once, under the sorted index), expressions in canonical printed form,
    /// no insignificant whitespace. Parsing the output yields an equal spec.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("spec serialization cannot fail")
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            MetricKind::Riemannian { .. } => "riemannian",
            MetricKind::MthRoot { .. } => "mth_root",
            MetricKind::Revolution { .. } => "surface_of_revolution",
            MetricKind::Custom { .. } => "custom",
        }
    }

    /// `L(x, y)`, rejecting points outside the admissible cone.
    pub fn eval_l(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.length(x, y)
    }

    /// Profile radius and its derivative at `z`, for surfaces of revolution.
    pub fn profile_at(&self, z: f64) -> Result<(f64, f64)> {
        match &self.kind {
            MetricKind::Revolution { profile } => {
                let r = profile.eval(&[Jet::variable(0, z, 1, 1)?])?;
                Ok((r.value(), r.partial_vars(&[0])?))
            }
            _ => Err(FinslerError::InvalidArgument(
                "profile is only defined for surfaces of revolution".into(),
            )),
        }
    }

    pub fn is_mth_root(&self) -> bool {
        matches!(self.kind, MetricKind::MthRoot { .. })
    }

    /// `a_{i…k}(x) y^i … y^k` summed over all (unsorted) index tuples, i.e. `L^m`.
    pub fn mth_power(&self, vars: &[Jet]) -> Result<Jet> {
        let MetricKind::MthRoot { coeffs, .. } = &self.kind else {
            return Err(FinslerError::InvalidArgument("not an m-th root metric".into()));
        };
        let n = self.dim;
        let mut total = vars[0].constant_like(0.0);
        for (idx, coeff) in coeffs {
            let mut mono = vars[n + idx[0]].clone();
            for &k in &idx[1..] {
                mono = &mono * &vars[n + k];
            }
            let weight = multinomial(idx);
            let term = match coeff.constant_value() {
                Some(c) => mono.scale(c * weight),
                None => &mono * &coeff.eval(&vars[..n])?.scale(weight),
            };
            total = &total + &term;
        }
        Ok(total)
    }

    /// Builtin metric by name, e.g. `cubic_l1`, `euclidean(3)`,
    /// `revolution(1 + z^2)`, `cubic_normal_form(exp(x0), 1, 1, 2)`.
    pub fn builtin(name: &str) -> Result<MetricSpec> {
        let name = name.trim();
        let (head, args) = match name.find('(') {
            Some(open) => {
                if !name.ends_with(')') {
                    return Err(FinslerError::UnknownBuiltin(name.to_string()));
                }
                let inner = &name[open + 1..name.len() - 1];
                let args: Vec<&str> = inner.split(',').map(str::trim).collect();
                (name[..open].trim().to_ascii_lowercase(), args)
            }
            None => (name.to_ascii_lowercase(), Vec::new()),
        };
        let arity = |k: usize| -> Result<()> {
            if args.len() == k {
                Ok(())
            } else {
                Err(FinslerError::InvalidArgument(format!(
                    "builtin `{head}` takes {k} argument(s), got {}",
                    args.len()
                )))
            }
        };
        match head.as_str() {
            "euclidean" => {
                let n = match args.as_slice() {
                    [] => 2,
                    [a] => a
                        .parse::<usize>()
                        .map_err(|_| FinslerError::InvalidArgument(format!("bad dimension `{a}`")))?,
                    _ => {
                        arity(1)?;
                        unreachable!("arity check rejects other lengths")
                    }
                };
                Self::euclidean(n)
            }
            "cubic_l1" => {
                arity(0)?;
                Self::mth_root_from(
                    2,
                    3,
                    &[("000", "1"), ("111", "1")],
                    "positive quadrant y0, y1 > 0 (regular where y0 y1 != 0)",
                )
            }
            "cubic_l2" => {
                arity(0)?;
                Self::mth_root_from(
                    3,
                    3,
                    &[("000", "1"), ("111", "1"), ("222", "1"), ("012", "-0.5")],
                    "y0 + y1 + y2 > 0 off the diagonal y0 = y1 = y2",
                )
            }
            "cubic_normal_form" => {
                arity(4)?;
                Self::mth_root_from(
                    3,
                    3,
                    &[("000", args[0]), ("111", args[1]), ("222", args[2]), ("012", args[3])],
                    "cone where the cubic form is positive",
                )
            }
            "quartic_s4" => {
                arity(0)?;
                Self::quartic_s4()
            }
            "revolution" => {
                arity(1)?;
                Self::revolution(args[0])
            }
            "riemannian_sphere" => {
                arity(0)?;
                Self::revolution("sqrt(1 - z^2)")
            }
            "cylinder" => {
                arity(0)?;
                Self::revolution("1")
            }
            _ => Err(FinslerError::UnknownBuiltin(name.to_string())),
        }
    }

    /// Names of the fixed builtin zoo used by the audits.
    pub fn zoo_names() -> &'static [&'static str] {
        &[
            "euclidean(3)",
            "cubic_l1",
            "cubic_l2",
            "quartic_s4",
            "riemannian_sphere",
            "cylinder",
        ]
    }

    pub fn euclidean(n: usize) -> Result<MetricSpec> {
        let g: BTreeMap<String, String> = (0..n).map(|i| (index_key(&[i, i]), "1".to_string())).collect();
        MetricSpec::from_raw(RawSpec {
            kind: "riemannian".into(),
            dim: n,
            m: None,
            coeffs: None,
            g: Some(g),
            profile: None,
            lagrangian: None,
            domain_note: Some("all y != 0".into()),
        })
    }

    pub fn revolution(profile: &str) -> Result<MetricSpec> {
        MetricSpec::from_raw(RawSpec {
            kind: "surface_of_revolution".into(),
            dim: 2,
            m: None,
            coeffs: None,
            g: None,
            profile: Some(profile.to_string()),
            lagrangian: None,
            domain_note: Some("coordinates (z, theta) with r(z) > 0".into()),
        })
    }

    fn mth_root_from(dim: usize, m: u32, entries: &[(&str, &str)], note: &str) -> Result<MetricSpec> {
        MetricSpec::from_raw(RawSpec {
            kind: "mth_root".into(),
            dim,
            m: Some(m),
            coeffs: Some(entries.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()),
            g: None,
            profile: None,
            lagrangian: None,
            domain_note: Some(note.into()),
        })
    }

    /// `L⁴ = (y0+y1+y2+y3)(y0+y1−y2−y3)(y0−y1+y2−y3)(y0−y1−y2+y3)`,
    /// expanded into symmetric coefficients.
    fn quartic_s4() -> Result<MetricSpec> {
        let signs = [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]];
        let mut monomials: BTreeMap<Vec<usize>, i64> = BTreeMap::new();
        for choice in 0..256usize {
            let picks: Vec<usize> = (0..4).map(|f| (choice >> (2 * f)) & 3).collect();
            let sign: i64 = picks.iter().enumerate().map(|(f, &v)| signs[f][v] as i64).product();
            let mut key = picks;
            key.sort_unstable();
            *monomials.entry(key).or_insert(0) += sign;
        }
        let entries: Vec<(String, String)> = monomials
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .map(|(k, c)| {
                let weight = multinomial(&k) as i64;
                let text = if c % weight == 0 {
                    format!("{}", c / weight)
                } else {
                    format!("{c}/{weight}")
                };
                (index_key(&k), text)
            })
            .collect();
        let refs: Vec<(&str, &str)> = entries.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        Self::mth_root_from(
            4,
            4,
            &refs,
            "cone where all four linear factors share a sign pattern with positive product",
        )
    }
}

impl Metric for MetricSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn energy_jet(&self, x: &[f64], y: &[f64], order: u32) -> Result<Jet> {
        let n = self.dim;
        let vars = point_jets(x, y, n, order)?;
        match &self.kind {
            MetricKind::Riemannian { g } => {
                let mut total = vars[0].constant_like(0.0);
                for i in 0..n {
                    for j in i..n {
                        let weight = if i == j { 0.5 } else { 1.0 };
                        let yy = &vars[n + i] * &vars[n + j];
                        let term = match g[i][j].constant_value() {
                            Some(0.0) => continue,
                            Some(c) => yy.scale(c * weight),
                            None => (&yy * &g[i][j].eval(&vars[..n])?).scale(weight),
                        };
                        total = &total + &term;
                    }
                }
                positive_energy(total, "g_ij y^i y^j / 2")
            }
            MetricKind::MthRoot { m, .. } => {
                let power = self.mth_power(&vars)?;
                if power.value() <= 0.0 || !power.value().is_finite() {
                    return Err(FinslerError::OutsideDomain(format!(
                        "L^{m} = {} is not positive",
                        power.value()
                    )));
                }
                let f = power.powf(2.0 / *m as f64)?.scale(0.5);
                positive_energy(f, "L^2 / 2")
            }
            MetricKind::Revolution { profile } => {
                let z = Jet::variable(0, x[0], 2 * n, order + 1)?;
                let r_high = profile.eval(&[z])?;
                let r_prime = r_high.derivative(0)?;
                let r = r_high.truncate(order)?;
                if r.value() <= 0.0 {
                    return Err(FinslerError::OutsideDomain(format!(
                        "profile radius r({}) = {} is not positive",
                        x[0],
                        r.value()
                    )));
                }
                let dz = &vars[2];
                let dtheta = &vars[3];
                let axial = &(&r_prime * &r_prime).add_scalar(1.0) * &(dz * dz);
                let azimuthal = &(&r * &r) * &(dtheta * dtheta);
                positive_energy((&axial + &azimuthal).scale(0.5), "L^2 / 2")
            }
            MetricKind::Custom { lagrangian } => {
                let l = lagrangian.eval(&vars)?;
                if l.value() <= 0.0 || !l.value().is_finite() {
                    return Err(FinslerError::OutsideDomain(format!(
                        "L = {} is not positive",
                        l.value()
                    )));
                }
                positive_energy((&l * &l).scale(0.5), "L^2 / 2")
            }
        }
    }

    fn length(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_point(x, y, self.dim)?;
        match &self.kind {
            MetricKind::Custom { lagrangian } => {
                let joint: Vec<f64> = x.iter().chain(y).copied().collect();
                let l = lagrangian.eval_f64(&joint)?;
                if l > 0.0 && l.is_finite() {
                    Ok(l)
                } else {
                    Err(FinslerError::OutsideDomain(format!("L = {l} is not positive")))
                }
            }
            MetricKind::MthRoot { m, .. } => {
                let vars = point_jets(x, y, self.dim, 1)?;
                let p = self.mth_power(&vars)?.value();
                if p > 0.0 && p.is_finite() {
                    Ok(p.powf(1.0 / *m as f64))
                } else {
                    Err(FinslerError::OutsideDomain(format!("L^{m} = {p} is not positive")))
                }
            }
            _ => Ok((2.0 * self.energy_jet(x, y, 1)?.value()).sqrt()),
        }
    }

    fn sampling_domain(&self) -> SamplingDomain {
        let n = self.dim;
        match &self.kind {
            MetricKind::Revolution { .. } => SamplingDomain {
                x: vec![(-0.5, 0.5), (-std::f64::consts::PI, std::f64::consts::PI)],
                y: vec![(-1.0, 1.0); 2],
            },
            MetricKind::MthRoot { .. } => SamplingDomain {
                x: vec![(-1.0, 1.0); n],
                y: vec![(0.1, 1.0); n],
            },
            _ => SamplingDomain {
                x: vec![(-1.0, 1.0); n],
                y: vec![(-1.0, 1.0); n],
            },
        }
    }
}
