//! Truncated multivariate Taylor expansions ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients of a scalar field around a point in
//! `num_vars` variables, densely, for every multi-index of total degree up to
//! `order`. The coefficient of the multi-index `α` is `∂^α f / α!`, so partial
//! derivatives are recovered with [`Jet::partial`]. Arithmetic truncates every
//! product at the jet order, which makes all retained coefficients exact (up to
//! rounding) for the represented function.
//!
//! Layouts (the enumeration of multi-indices and the product table) are shared
//! between all jets of the same shape through a process-wide cache.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{FinslerError, Result};

const BITS_PER_VAR: u32 = 4;
/// Largest number of variables a jet may carry.
pub const MAX_VARS: usize = 16;
/// Largest truncation order.
pub const MAX_ORDER: u32 = 12;

/// Threshold below which `abs_guard` refuses to pick a branch.
pub const ABS_GUARD_EPS: f64 = 1e-12;

/// Exponent vector of a monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(exponents: Vec<u8>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(num_vars: usize) -> Self {
        MultiIndex(vec![0; num_vars])
    }

    /// The multi-index `e_i`.
    pub fn unit(num_vars: usize, var: usize) -> Self {
        let mut e = vec![0; num_vars];
        e[var] = 1;
        MultiIndex(e)
    }

    /// Multi-index counting how often each variable occurs in `vars`.
    pub fn from_vars(num_vars: usize, vars: &[usize]) -> Self {
        let mut e = vec![0u8; num_vars];
        for &v in vars {
            e[v] += 1;
        }
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    /// `α! = Π α_i!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| factorial(e as u32)).product()
    }

    fn pack(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &e)| acc | ((e as u64) << (BITS_PER_VAR * i as u32)))
    }

    fn unpack(key: u64, num_vars: usize) -> Self {
        let mask = (1u64 << BITS_PER_VAR) - 1;
        MultiIndex(
            (0..num_vars)
                .map(|i| ((key >> (BITS_PER_VAR * i as u32)) & mask) as u8)
                .collect(),
        )
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

fn unit_key(var: usize) -> u64 {
    1u64 << (BITS_PER_VAR * var as u32)
}

#[derive(Debug)]
struct Layout {
    num_vars: usize,
    order: u32,
    /// Packed multi-indices, ordered by total degree.
    keys: Vec<u64>,
    lookup: HashMap<u64, usize>,
    /// Product table grouped by left factor: `row_start[i]..row_start[i + 1]`
    /// holds `(j, k)` with `key_i + key_j = key_k`.
    row_start: Vec<usize>,
    products: Vec<(u32, u32)>,
}

impl Layout {
    fn build(num_vars: usize, order: u32) -> Self {
        let mut keys = Vec::new();
        let mut degrees = Vec::new();
        let mut degree_start = Vec::with_capacity(order as usize + 2);
        for d in 0..=order {
            degree_start.push(keys.len());
            let mut exps = vec![0u8; num_vars];
            compositions(d, 0, &mut exps, &mut |e| {
                keys.push(MultiIndex(e.to_vec()).pack());
                degrees.push(d);
            });
        }
        degree_start.push(keys.len());
        let lookup: HashMap<u64, usize> = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();

        let mut row_start = Vec::with_capacity(keys.len() + 1);
        let mut products = Vec::new();
        for (i, &ki) in keys.iter().enumerate() {
            row_start.push(products.len());
            let limit = degree_start[(order - degrees[i]) as usize + 1];
            for (j, &kj) in keys[..limit].iter().enumerate() {
                let k = lookup[&(ki + kj)];
                products.push((j as u32, k as u32));
            }
        }
        row_start.push(products.len());

        Layout {
            num_vars,
            order,
            keys,
            lookup,
            row_start,
            products,
        }
    }

    fn len(&self) -> usize {
        self.keys.len()
    }
}

/// Enumerates exponent vectors of total degree `remaining` in the slots from `pos` on.
fn compositions(remaining: u32, pos: usize, exps: &mut Vec<u8>, out: &mut dyn FnMut(&[u8])) {
    let n = exps.len();
    if pos + 1 == n {
        exps[pos] = remaining as u8;
        out(exps);
        exps[pos] = 0;
        return;
    }
    if n == 0 {
        return;
    }
    for e in (0..=remaining).rev() {
        exps[pos] = e as u8;
        compositions(remaining - e, pos + 1, exps, out);
    }
    exps[pos] = 0;
}

fn layout(num_vars: usize, order: u32) -> Result<Arc<Layout>> {
    if num_vars == 0 || num_vars > MAX_VARS {
        return Err(FinslerError::InvalidJet(format!(
            "number of variables must be in 1..={MAX_VARS}, got {num_vars}"
        )));
    }
    if order > MAX_ORDER {
        return Err(FinslerError::InvalidJet(format!(
            "order must be at most {MAX_ORDER}, got {order}"
        )));
    }
    type LayoutCache = Mutex<HashMap<(usize, u32), Arc<Layout>>>;
    static CACHE: OnceLock<LayoutCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(l) = cache.lock().expect("layout cache poisoned").get(&(num_vars, order)) {
        return Ok(Arc::clone(l));
    }
    // Built outside the lock; a racing thread may build the same layout twice.
    let built = Arc::new(Layout::build(num_vars, order));
    let mut guard = cache.lock().expect("layout cache poisoned");
    Ok(Arc::clone(guard.entry((num_vars, order)).or_insert(built)))
}

/// Truncated Taylor expansion of a scalar field in several variables.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c != 0.0 {
                m.entry(
                    &MultiIndex::unpack(self.layout.keys[i], self.layout.num_vars).to_string(),
                    &c,
                );
            }
        }
        m.finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.layout.num_vars == other.layout.num_vars
            && self.layout.order == other.layout.order
            && self.coeffs == other.coeffs
    }
}

impl Jet {
    /// The constant function `value`.
    pub fn constant(value: f64, num_vars: usize, order: u32) -> Result<Jet> {
        let layout = layout(num_vars, order)?;
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Ok(Jet { layout, coeffs })
    }

    /// The coordinate function `x_{var_index}` expanded at `value`.
    pub fn variable(var_index: usize, value: f64, num_vars: usize, order: u32) -> Result<Jet> {
        if var_index >= num_vars {
            return Err(FinslerError::IndexOutOfRange {
                index: var_index,
                num_vars,
            });
        }
        if order < 1 {
            return Err(FinslerError::InvalidJet("a variable jet needs order >= 1".into()));
        }
        let mut j = Jet::constant(value, num_vars, order)?;
        let pos = j.layout.lookup[&unit_key(var_index)];
        j.coeffs[pos] = 1.0;
        Ok(j)
    }

    /// Variable jets for a whole point, slot `i` expanded at `point[i]`.
    pub fn variables(point: &[f64], order: u32) -> Result<Vec<Jet>> {
        (0..point.len())
            .map(|i| Jet::variable(i, point[i], point.len(), order))
            .collect()
    }

    /// A constant jet with the same shape as `self`.
    pub fn constant_like(&self, value: f64) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.layout.num_vars
    }

    pub fn order(&self) -> u32 {
        self.layout.order
    }

    /// Constant term, the value of the function at the expansion point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of `idx`; zero for multi-indices beyond the order.
    pub fn coeff(&self, idx: &MultiIndex) -> f64 {
        if idx.len() != self.layout.num_vars || idx.degree() > self.layout.order {
            return 0.0;
        }
        self.layout.lookup.get(&idx.pack()).map_or(0.0, |&p| self.coeffs[p])
    }

    /// All `(multi-index, coefficient)` pairs, ordered by total degree.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        self.layout
            .keys
            .iter()
            .zip(&self.coeffs)
            .map(|(&k, &c)| (MultiIndex::unpack(k, self.layout.num_vars), c))
    }

    /// Partial derivative `∂^idx f` at the expansion point.
    pub fn partial(&self, idx: &MultiIndex) -> Result<f64> {
        if idx.len() != self.layout.num_vars {
            return Err(FinslerError::InvalidArgument(format!(
                "multi-index has {} entries, jet has {} variables",
                idx.len(),
                self.layout.num_vars
            )));
        }
        let degree = idx.degree();
        if degree > self.layout.order {
            return Err(FinslerError::InsufficientOrder {
                requested: degree,
                order: self.layout.order,
            });
        }
        Ok(self.coeff(idx) * idx.factorial())
    }

    /// Partial derivative for a list of variables, e.g. `[0, 0, 3]` for `∂₀∂₀∂₃`.
    pub fn partial_vars(&self, vars: &[usize]) -> Result<f64> {
        if let Some(&bad) = vars.iter().find(|&&v| v >= self.layout.num_vars) {
            return Err(FinslerError::IndexOutOfRange {
                index: bad,
                num_vars: self.layout.num_vars,
            });
        }
        self.partial(&MultiIndex::from_vars(self.layout.num_vars, vars))
    }

    /// The jet of `∂f/∂x_var`, one order lower.
    pub fn derivative(&self, var: usize) -> Result<Jet> {
        if var >= self.layout.num_vars {
            return Err(FinslerError::IndexOutOfRange {
                index: var,
                num_vars: self.layout.num_vars,
            });
        }
        if self.layout.order == 0 {
            return Err(FinslerError::InsufficientOrder { requested: 1, order: 0 });
        }
        let lower = layout(self.layout.num_vars, self.layout.order - 1)?;
        let shift = BITS_PER_VAR * var as u32;
        let step = unit_key(var);
        let coeffs = lower
            .keys
            .iter()
            .map(|&k| {
                let exponent = ((k >> shift) & ((1 << BITS_PER_VAR) - 1)) as f64;
                let src = self.layout.lookup[&(k + step)];
                (exponent + 1.0) * self.coeffs[src]
            })
            .collect();
        Ok(Jet { layout: lower, coeffs })
    }

    /// Drops all terms above `order`.
    pub fn truncate(&self, order: u32) -> Result<Jet> {
        if order > self.layout.order {
            return Err(FinslerError::InsufficientOrder {
                requested: order,
                order: self.layout.order,
            });
        }
        if order == self.layout.order {
            return Ok(self.clone());
        }
        let lower = layout(self.layout.num_vars, order)?;
        // Degree-major ordering makes the lower layout a prefix.
        let coeffs = self.coeffs[..lower.len()].to_vec();
        Ok(Jet { layout: lower, coeffs })
    }

    fn assert_compatible(&self, other: &Jet) {
        assert!(
            Arc::ptr_eq(&self.layout, &other.layout)
                || (self.layout.num_vars == other.layout.num_vars && self.layout.order == other.layout.order),
            "jet shape mismatch: ({}, {}) vs ({}, {})",
            self.layout.num_vars,
            self.layout.order,
            other.layout.num_vars,
            other.layout.order
        );
    }

    fn map_coeffs(&self, f: impl Fn(f64) -> f64) -> Jet {
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Jet {
        self.map_coeffs(|c| c * factor)
    }

    pub fn add_scalar(&self, value: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        self.assert_compatible(other);
        let l = &self.layout;
        let mut out = vec![0.0; l.len()];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for &(j, k) in &l.products[l.row_start[i]..l.row_start[i + 1]] {
                out[k as usize] += a * other.coeffs[j as usize];
            }
        }
        Jet {
            layout: Arc::clone(l),
            coeffs: out,
        }
    }

    /// `self / other`; fails when the divisor vanishes at the expansion point.
    pub fn checked_div(&self, other: &Jet) -> Result<Jet> {
        Ok(self * &other.recip()?)
    }

    /// Evaluates `Σ_k derivs[k]/k! · δ^k` with `δ = self − self(0)` (Horner form).
    fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.layout.order as usize;
        debug_assert_eq!(derivs.len(), order + 1);
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut acc = self.constant_like(derivs[order] / factorial(order as u32));
        for k in (0..order).rev() {
            acc = &acc * &delta;
            acc.coeffs[0] += derivs[k] / factorial(k as u32);
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 == 0.0 || !a0.is_finite() {
            return Err(FinslerError::SingularPoint(format!(
                "division by a jet with constant term {a0}"
            )));
        }
        let derivs: Vec<f64> = (0..=self.layout.order)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * factorial(k) / a0.powi(k as i32 + 1)
            })
            .collect();
        Ok(self.compose(&derivs))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.layout.order as usize + 1])
    }

    pub fn ln(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 <= 0.0 || !a0.is_finite() {
            return Err(FinslerError::Domain(format!("log of non-positive value {a0}")));
        }
        let derivs: Vec<f64> = (0..=self.layout.order)
            .map(|k| {
                if k == 0 {
                    a0.ln()
                } else {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    sign * factorial(k - 1) / a0.powi(k as i32)
                }
            })
            .collect();
        Ok(self.compose(&derivs))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let derivs: Vec<f64> = (0..=self.layout.order as usize).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let derivs: Vec<f64> = (0..=self.layout.order as usize).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        if self.value() <= 0.0 {
            return Err(FinslerError::Domain(format!(
                "sqrt of non-positive value {}",
                self.value()
            )));
        }
        self.powf(0.5)
    }

    /// `self^exponent`. Integer exponents accept any base (non-zero when
    /// negative); fractional exponents need a positive constant term.
    pub fn powf(&self, exponent: f64) -> Result<Jet> {
        if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
            return self.powi(exponent as i32);
        }
        let a0 = self.value();
        if a0 <= 0.0 || !a0.is_finite() {
            return Err(FinslerError::Domain(format!(
                "fractional power {exponent} of non-positive value {a0}"
            )));
        }
        let mut falling = 1.0;
        let derivs: Vec<f64> = (0..=self.layout.order)
            .map(|k| {
                if k > 0 {
                    falling *= exponent - (k - 1) as f64;
                }
                falling * a0.powf(exponent - k as f64)
            })
            .collect();
        Ok(self.compose(&derivs))
    }

    /// Integer power by repeated squaring.
    pub fn powi(&self, exponent: i32) -> Result<Jet> {
        if exponent < 0 {
            return self.powi(-exponent)?.recip();
        }
        let mut result = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = exponent as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    /// Composition `self(inner_0, …, inner_{k-1})`: the jets in `inner` are
    /// substituted for this jet's variables. Their constant terms must equal
    /// the point this jet was expanded at. The result has the shape of the
    /// inner jets, whose order may not exceed this jet's order.
    pub fn substitute(&self, inner: &[Jet]) -> Result<Jet> {
        if inner.len() != self.layout.num_vars {
            return Err(FinslerError::InvalidArgument(format!(
                "substitution needs {} jets, got {}",
                self.layout.num_vars,
                inner.len()
            )));
        }
        let order = inner[0].order();
        if order > self.layout.order {
            return Err(FinslerError::InsufficientOrder {
                requested: order,
                order: self.layout.order,
            });
        }
        let deltas: Vec<Jet> = inner
            .iter()
            .map(|j| {
                let mut d = j.clone();
                d.coeffs[0] = 0.0;
                d
            })
            .collect();
        // powers[v][e] = δ_v^e
        let powers: Vec<Vec<Jet>> = deltas
            .iter()
            .map(|d| {
                let mut p = vec![d.constant_like(1.0)];
                for e in 1..=order as usize {
                    let next = &p[e - 1] * d;
                    p.push(next);
                }
                p
            })
            .collect();
        let mut acc = inner[0].constant_like(0.0);
        let limit = layout(self.layout.num_vars, order)?.len();
        for (pos, &key) in self.layout.keys[..limit].iter().enumerate() {
            let c = self.coeffs[pos];
            if c == 0.0 {
                continue;
            }
            let exps = MultiIndex::unpack(key, self.layout.num_vars);
            let mut term: Option<Jet> = None;
            for (v, &e) in exps.exponents().iter().enumerate() {
                if e > 0 {
                    let p = &powers[v][e as usize];
                    term = Some(match term {
                        None => p.clone(),
                        Some(t) => &t * p,
                    });
                }
            }
            match term {
                None => acc.coeffs[0] += c,
                Some(t) => acc = &acc + &t.scale(c),
            }
        }
        Ok(acc)
    }

    /// `|self|`, refusing to choose a branch when the value is within
    /// [`ABS_GUARD_EPS`] of zero.
    pub fn abs_guard(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0.abs() < ABS_GUARD_EPS {
            return Err(FinslerError::Domain(format!("abs is not differentiable at {a0}")));
        }
        Ok(if a0 < 0.0 { -self } else { self.clone() })
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.assert_compatible(rhs);
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.assert_compatible(rhs);
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map_coeffs(|c| -c)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

/// Sum of jets, `None` for an empty iterator.
pub fn sum<'a>(mut jets: impl Iterator<Item = &'a Jet>) -> Option<Jet> {
    let first = jets.next()?.clone();
    Some(jets.fold(first, |acc, j| &acc + j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn idx(e: &[u8]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    #[test]
    fn layout_sizes_match_binomials() {
        // C(n + K, K)
        assert_eq!(layout(2, 2).unwrap().len(), 6);
        assert_eq!(layout(8, 4).unwrap().len(), 495);
        assert_eq!(layout(8, 5).unwrap().len(), 1287);
        assert_eq!(layout(1, 3).unwrap().len(), 4);
    }

    #[test]
    fn variable_jet() {
        let j = Jet::variable(0, 3.0, 2, 2).unwrap();
        assert_eq!(j.value(), 3.0);
        assert_eq!(j.coeff(&idx(&[1, 0])), 1.0);
        for (mi, c) in j.terms() {
            if mi != idx(&[0, 0]) && mi != idx(&[1, 0]) {
                assert_eq!(c, 0.0, "{mi}");
            }
        }
        let z = Jet::variable(1, 0.0, 2, 4).unwrap();
        assert_eq!(z.value(), 0.0);
        assert_eq!(z.coeff(&idx(&[0, 1])), 1.0);
    }

    #[test]
    fn variable_jet_errors() {
        assert!(matches!(
            Jet::variable(2, 0.0, 2, 2),
            Err(FinslerError::IndexOutOfRange { .. })
        ));
        assert!(matches!(Jet::variable(0, 0.0, 2, 0), Err(FinslerError::InvalidJet(_))));
    }

    #[test]
    fn square_of_shifted_variable() {
        // (2 + ε)² = 4 + 4ε + ε²
        let x = Jet::variable(0, 2.0, 1, 3).unwrap();
        let sq = &x * &x;
        let got: Vec<f64> = (0..=3).map(|d| sq.coeff(&idx(&[d]))).collect();
        assert_eq!(got, vec![4.0, 4.0, 1.0, 0.0]);
    }

    #[test]
    fn binomial_expansion() {
        let x = Jet::variable(0, 1.0, 1, 2).unwrap();
        let sq = &x * &x;
        assert_eq!(sq.coeff(&idx(&[0])), 1.0);
        assert_eq!(sq.coeff(&idx(&[1])), 2.0);
        assert_eq!(sq.coeff(&idx(&[2])), 1.0);
    }

    #[test]
    fn cube_root_derivative_matches_finite_difference() {
        let u = Jet::variable(0, 8.0, 1, 3).unwrap();
        let r = u.powf(1.0 / 3.0).unwrap();
        assert_relative_eq!(r.value(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(r.coeff(&idx(&[1])), 1.0 / 12.0, epsilon = 1e-15);
        let h = 1e-5;
        let fd = ((8.0f64 + h).cbrt() - (8.0f64 - h).cbrt()) / (2.0 * h);
        assert_relative_eq!(r.coeff(&idx(&[1])), fd, max_relative = 1e-9);
    }

    #[test]
    fn division_by_zero_constant_is_singular() {
        let x = Jet::variable(0, 0.0, 1, 2).unwrap();
        let one = x.constant_like(1.0);
        assert!(matches!(one.checked_div(&x), Err(FinslerError::SingularPoint(_))));
    }

    #[test]
    fn domain_errors() {
        let x = Jet::variable(0, -1.0, 1, 2).unwrap();
        assert!(matches!(x.ln(), Err(FinslerError::Domain(_))));
        assert!(matches!(x.sqrt(), Err(FinslerError::Domain(_))));
        assert!(matches!(x.powf(0.5), Err(FinslerError::Domain(_))));
        // integer powers of negative bases are fine
        assert_eq!(x.powf(3.0).unwrap().value(), -1.0);
        let tiny = Jet::variable(0, 1e-13, 1, 2).unwrap();
        assert!(matches!(tiny.abs_guard(), Err(FinslerError::Domain(_))));
        assert_eq!(x.abs_guard().unwrap().coeff(&idx(&[1])), -1.0);
    }

    #[test]
    fn extract_partial_cases() {
        // x² y at (1, 1): ∂²/∂x∂y = 2x = 2
        let x = Jet::variable(0, 1.0, 2, 3).unwrap();
        let y = Jet::variable(1, 1.0, 2, 3).unwrap();
        let f = &(&x * &x) * &y;
        assert_relative_eq!(f.partial(&idx(&[1, 1])).unwrap(), 2.0);
        assert_relative_eq!(f.partial(&idx(&[2, 1])).unwrap(), 2.0);
        assert_eq!(f.partial(&idx(&[0, 0])).unwrap(), f.value());

        let g = Jet::variable(0, 1.0, 2, 2).unwrap();
        assert!(matches!(
            g.partial(&idx(&[2, 1])),
            Err(FinslerError::InsufficientOrder { requested: 3, order: 2 })
        ));
    }

    #[test]
    fn elementary_series() {
        let x = Jet::variable(0, 0.0, 1, 4).unwrap();
        let e = x.exp();
        let expect = [1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0];
        for (d, want) in expect.iter().enumerate() {
            assert_relative_eq!(e.coeff(&idx(&[d as u8])), *want, epsilon = 1e-15);
        }
        let s = x.sin();
        assert_relative_eq!(s.coeff(&idx(&[3])), -1.0 / 6.0, epsilon = 1e-15);
        let c = x.cos();
        assert_relative_eq!(c.coeff(&idx(&[4])), 1.0 / 24.0, epsilon = 1e-15);
        let one_plus = x.add_scalar(1.0);
        let l = one_plus.ln().unwrap();
        assert_relative_eq!(l.coeff(&idx(&[3])), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(l.coeff(&idx(&[4])), -0.25, epsilon = 1e-15);
        let r = one_plus.recip().unwrap();
        assert_relative_eq!(r.coeff(&idx(&[4])), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn derivative_and_truncate() {
        let x = Jet::variable(0, 2.0, 2, 3).unwrap();
        let y = Jet::variable(1, -1.0, 2, 3).unwrap();
        let f = &(&x * &x) * &y; // x² y
        let fx = f.derivative(0).unwrap(); // 2xy
        assert_eq!(fx.order(), 2);
        assert_relative_eq!(fx.value(), -4.0);
        assert_relative_eq!(fx.partial(&idx(&[0, 1])).unwrap(), 4.0);
        let t = f.truncate(1).unwrap();
        assert_eq!(t.order(), 1);
        assert_relative_eq!(t.partial(&idx(&[1, 0])).unwrap(), -4.0);
        assert!(t.truncate(2).is_err());
        let c = Jet::constant(1.0, 1, 0).unwrap();
        assert!(c.derivative(0).is_err());
    }

    #[test]
    fn substitution_is_composition() {
        // f(u, v) = u² v at (1, 2); u = 1 + s t, v = 2 + t in variables (s, t) at (1, 0)
        let u = Jet::variable(0, 1.0, 2, 3).unwrap();
        let v = Jet::variable(1, 2.0, 2, 3).unwrap();
        let f = &(&u * &u) * &v;
        let s = Jet::variable(0, 1.0, 2, 3).unwrap();
        let t = Jet::variable(1, 0.0, 2, 3).unwrap();
        let inner_u = (&s * &t).add_scalar(1.0);
        let inner_v = t.add_scalar(2.0);
        let composed = f.substitute(&[inner_u.clone(), inner_v.clone()]).unwrap();
        let direct = &(&inner_u * &inner_u) * &inner_v;
        for ((a, ca), (_, cb)) in composed.terms().zip(direct.terms()) {
            assert!((ca - cb).abs() < 1e-14, "{a}: {ca} vs {cb}");
        }
    }

    #[test]
    fn integer_powers() {
        let x = Jet::variable(0, -2.0, 1, 3).unwrap();
        let p = x.powi(3).unwrap();
        // (−2 + ε)³ = −8 + 12ε − 6ε² + ε³
        assert_eq!(p.coeff(&idx(&[0])), -8.0);
        assert_eq!(p.coeff(&idx(&[1])), 12.0);
        assert_eq!(p.coeff(&idx(&[2])), -6.0);
        assert_eq!(p.coeff(&idx(&[3])), 1.0);
        let inv = x.powi(-1).unwrap();
        assert_relative_eq!(inv.coeff(&idx(&[1])), -0.25);
    }
}
