use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::hexfloat;
use crate::basis::{gauss_quadrature, PolynomialFamily, UnivariateBasis};
use crate::error::{Error, Result};
use crate::multiindex::{
    constant_sum_count, graded_basis_indices, multinomial_coefficient, ConstantSumIterator,
    MultiIndex, DEFAULT_CAPACITY,
};

/// Relative admission threshold: `|a| ≤ tol · max(1, multinomial)` counts as zero.
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-12;

const MAGIC: &str = "GPCCACHE v1";

#[derive(Debug, Clone, PartialEq)]
pub struct CacheHeader {
    pub n: usize,
    pub d: usize,
    pub m: u32,
    pub families: Vec<PolynomialFamily>,
    pub tol: f64,
}

impl CacheHeader {
    fn line(&self) -> String {
        let fam: Vec<String> = self.families.iter().map(|f| f.to_string()).collect();
        format!(
            "{MAGIC} n={} d={} m={} fam={} tol={:e}",
            self.n,
            self.d,
            self.m,
            fam.join(","),
            self.tol
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("cache header: {what} in {line:?}"));
        let rest = line.strip_prefix(MAGIC).ok_or_else(|| bad("unknown format"))?;
        let mut fields = HashMap::new();
        for tok in rest.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad("malformed field"))?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(&format!("missing {k}")));
        let families = get("fam")?
            .split(',')
            .map(|s| s.parse())
            .collect::<Result<Vec<PolynomialFamily>>>()?;
        let header = Self {
            n: get("n")?.parse().map_err(|_| bad("n"))?,
            d: get("d")?.parse().map_err(|_| bad("d"))?,
            m: get("m")?.parse().map_err(|_| bad("m"))?,
            families,
            tol: get("tol")?.parse().map_err(|_| bad("tol"))?,
        };
        if header.families.len() != header.n {
            return Err(bad("family count differs from n"));
        }
        Ok(header)
    }
}

#[derive(Debug, Clone)]
pub struct CacheOptions {
    pub tol: f64,
    /// Number of iterator partitions; `None` uses the current rayon pool size.
    pub workers: Option<usize>,
    pub capacity: u128,
    pub max_order: u32,
}

impl Default for CacheOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_ZERO_TOLERANCE,
            workers: None,
            capacity: DEFAULT_CAPACITY,
            max_order: super::DEFAULT_MAX_MOMENT,
        }
    }
}

#[derive(Debug, Clone)]
struct Term {
    a: f64,
    /// (slot, power) pairs of the nonzero exponents.
    factors: Vec<(usize, u32)>,
}

/// Nonzero coefficients `a_i` of the multinomial moment formula for one m.
#[derive(Debug, Clone)]
pub struct InnerProductCache {
    header: CacheHeader,
    entries: Vec<(MultiIndex, f64)>,
    terms: Vec<Term>,
    candidates: u128,
}

impl InnerProductCache {
    pub fn build(families: &[PolynomialFamily], d: usize, m: u32, options: &CacheOptions) -> Result<Self> {
        let n = families.len();
        if n == 0 {
            return Err(Error::InvalidArgument("cache needs at least one dimension".into()));
        }
        if m == 0 || m > options.max_order {
            return Err(Error::InvalidArgument(format!(
                "moment order {m} outside 1..={}",
                options.max_order
            )));
        }
        let index_set = graded_basis_indices(n, d)?;
        let p = index_set.len();
        let count = constant_sum_count(m, p).ok_or(Error::Capacity {
            requested: u128::MAX,
            limit: options.capacity,
        })?;
        if count > options.capacity {
            return Err(Error::Capacity {
                requested: count,
                limit: options.capacity,
            });
        }
        let radix = m as u64 + 1;
        if (d as f64 + 1.0) * (radix as f64).log2() >= 63.0 {
            return Err(Error::Capacity {
                requested: (radix as u128).saturating_pow(d as u32 + 1),
                limit: 1 << 63,
            });
        }
        let tables = families
            .iter()
            .map(|&f| profile_table(f, d, m))
            .collect::<Result<Vec<_>>>()?;
        // digit weight of each slot's degree, per dimension
        let powers: Vec<u64> = (0..=d).map(|k| radix.pow(k as u32)).collect();
        let slot_keys: Vec<Vec<u64>> = index_set
            .indices()
            .iter()
            .map(|idx| idx.0.iter().map(|&deg| powers[deg as usize]).collect())
            .collect();

        let workers = options
            .workers
            .unwrap_or_else(rayon::current_num_threads)
            .max(1);
        let chunk = count.div_ceil(workers as u128).max(1);
        let ranges: Vec<(u128, u128)> = (0..workers as u128)
            .map(|w| (w * chunk, ((w + 1) * chunk).min(count)))
            .filter(|(a, b)| a < b)
            .collect();
        let tol = options.tol;
        let parts: Vec<Vec<(MultiIndex, f64)>> = ranges
            .par_iter()
            .map(|&(start, end)| -> Result<Vec<(MultiIndex, f64)>> {
                let mut it = ConstantSumIterator::from_rank(m, p, start, count)?;
                let mut out = Vec::new();
                let mut keys = vec![0u64; n];
                for _ in start..end {
                    let idx = it.next_index().expect("iterator shorter than its count");
                    keys.iter_mut().for_each(|k| *k = 0);
                    for (slot, &e) in idx.iter().enumerate() {
                        if e != 0 {
                            for (k, &w) in keys.iter_mut().zip(&slot_keys[slot]) {
                                *k += e as u64 * w;
                            }
                        }
                    }
                    let mut prod = 1.0;
                    for (key, table) in keys.iter().zip(&tables) {
                        // the zero-degree digit absorbs the remaining count
                        prod *= table.get(key).copied().unwrap_or(0.0);
                        if prod == 0.0 {
                            break;
                        }
                    }
                    if prod == 0.0 {
                        continue;
                    }
                    let multinomial = multinomial_coefficient(m, idx)? as f64;
                    let a = multinomial * prod;
                    if a.abs() > tol * multinomial.max(1.0) {
                        out.push((MultiIndex(idx.to_vec()), a));
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut entries: Vec<(MultiIndex, f64)> = parts.into_iter().flatten().collect();
        entries.sort_by(|x, y| x.0.cmp(&y.0));
        let header = CacheHeader {
            n,
            d,
            m,
            families: families.to_vec(),
            tol,
        };
        let mut cache = Self::from_entries(header, entries)?;
        cache.candidates = count;
        Ok(cache)
    }

    fn from_entries(header: CacheHeader, entries: Vec<(MultiIndex, f64)>) -> Result<Self> {
        let terms = entries
            .iter()
            .map(|(idx, a)| Term {
                a: *a,
                factors: idx
                    .0
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e != 0)
                    .map(|(k, &e)| (k, e))
                    .collect(),
            })
            .collect();
        let candidates = graded_basis_indices(header.n, header.d)
            .ok()
            .and_then(|s| constant_sum_count(header.m, s.len()))
            .unwrap_or(0);
        Ok(Self {
            header,
            entries,
            terms,
            candidates,
        })
    }

    pub fn header(&self) -> &CacheHeader {
        &self.header
    }

    pub fn order(&self) -> u32 {
        self.header.m
    }

    pub fn entries(&self) -> &[(MultiIndex, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Size of ℐ_{m,p}, the candidate set the cache was filtered from.
    pub fn candidates(&self) -> u128 {
        self.candidates
    }

    pub fn check_compatible(&self, families: &[PolynomialFamily], d: usize) -> Result<()> {
        if self.header.families != families || self.header.d != d {
            return Err(Error::Incompatible(format!(
                "cache built for d={} fam={:?}, expansion has d={d} fam={families:?}",
                self.header.d, self.header.families
            )));
        }
        Ok(())
    }

    /// `Σ_i a_i ∏_k c_k^{i_k}` for a coefficient vector of matching length.
    pub fn evaluate(&self, coefficients: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.factors
                    .iter()
                    .fold(t.a, |acc, &(k, e)| acc * coefficients[k].powi(e as i32))
            })
            .sum()
    }

    pub fn to_text(&self) -> String {
        let mut s = self.header.line();
        s.push('\n');
        for (idx, a) in &self.entries {
            let _ = writeln!(s, "{idx} {}", hexfloat::format(*a));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let mut w = BufWriter::new(fs::File::create(path)?);
        w.write_all(self.to_text().as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut lines = reader.lines();
        let header = CacheHeader::parse(
            &lines
                .next()
                .ok_or_else(|| Error::Parse("empty cache file".into()))??,
        )?;
        let p = graded_basis_indices(header.n, header.d)?.len();
        let mut entries = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Parse(format!("cache record {}: {line:?}", lineno + 2));
            let (idx, a) = line.split_once(' ').ok_or_else(bad)?;
            let idx = idx
                .split(',')
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad())?;
            if idx.len() != p || idx.iter().sum::<u32>() != header.m {
                return Err(bad());
            }
            entries.push((MultiIndex(idx), hexfloat::parse(a)?));
        }
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Parse("cache records are not sorted".into()));
        }
        Self::from_entries(header, entries)
    }

    /// Canonical file name for a cache in `dir`.
    pub fn default_path(dir: &Path, families: &[PolynomialFamily], d: usize, m: u32) -> PathBuf {
        let fam: Vec<String> = families
            .iter()
            .map(|f| {
                f.to_string()
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
                    .collect()
            })
            .collect();
        dir.join(format!(
            "gpccache_n{}_d{d}_m{m}_{}.txt",
            families.len(),
            fam.join("+")
        ))
    }

    /// Load the cache from `dir` when its header matches, else build and store it.
    pub fn load_or_build(
        dir: &Path,
        families: &[PolynomialFamily],
        d: usize,
        m: u32,
        options: &CacheOptions,
    ) -> Result<Self> {
        let path = Self::default_path(dir, families, d, m);
        let wanted = CacheHeader {
            n: families.len(),
            d,
            m,
            families: families.to_vec(),
            tol: options.tol,
        };
        if path.exists() {
            match Self::read(&path) {
                Ok(c) if c.header == wanted => return Ok(c),
                Ok(_) => log::info!("cache {} has a different header, rebuilding", path.display()),
                Err(e) => log::warn!("cache {} unreadable ({e}), rebuilding", path.display()),
            }
        }
        let cache = Self::build(families, d, m, options)?;
        cache.write(&path)?;
        Ok(cache)
    }
}

/// Caches for every moment order 3..=M used by one likelihood setup.
#[derive(Debug, Clone, Default)]
pub struct CacheSet {
    caches: BTreeMap<u32, InnerProductCache>,
}

impl CacheSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn build(families: &[PolynomialFamily], d: usize, max_order: u32, options: &CacheOptions) -> Result<Self> {
        let mut set = Self::new();
        for m in 3..=max_order {
            set.insert(InnerProductCache::build(families, d, m, options)?);
        }
        Ok(set)
    }

    /// Like [`CacheSet::build`] but persisted under `dir`.
    pub fn load_or_build(
        dir: &Path,
        families: &[PolynomialFamily],
        d: usize,
        max_order: u32,
        options: &CacheOptions,
    ) -> Result<Self> {
        let mut set = Self::new();
        for m in 3..=max_order {
            set.insert(InnerProductCache::load_or_build(dir, families, d, m, options)?);
        }
        Ok(set)
    }

    pub fn insert(&mut self, cache: InnerProductCache) {
        self.caches.insert(cache.order(), cache);
    }

    pub fn get(&self, m: u32) -> Option<&InnerProductCache> {
        self.caches.get(&m)
    }
}

/// `⟨∏_k φ_k^{e_k}⟩` for every degree profile `e` with `Σ e_k = m`, keyed by
/// the base-(m+1) number with digits `e_0..e_d`. Structural zeros are omitted.
fn profile_table(family: PolynomialFamily, d: usize, m: u32) -> Result<HashMap<u64, f64>> {
    let basis = UnivariateBasis::new(family, d)?;
    let q = (m as usize * d + 2) / 2;
    let rule = gauss_quadrature(family, q.max(1))?;
    let values: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&x| {
            let mut v = vec![0.0; d + 1];
            basis.evaluate_all(x, &mut v);
            v
        })
        .collect();
    let radix = m as u64 + 1;
    let mut table = HashMap::new();
    for MultiIndex(profile) in ConstantSumIterator::new(m, d + 1) {
        if structural_zero(&profile, family.is_symmetric()) {
            continue;
        }
        let ip: f64 = values
            .iter()
            .zip(&rule.weights)
            .map(|(v, w)| {
                w * profile
                    .iter()
                    .enumerate()
                    .map(|(k, &e)| v[k].powi(e as i32))
                    .product::<f64>()
            })
            .sum();
        let key = profile
            .iter()
            .rev()
            .fold(0u64, |acc, &e| acc * radix + e as u64);
        table.insert(key, ip);
    }
    Ok(table)
}

/// Zero by parity (odd total degree under a symmetric weight) or because the
/// highest-degree factor exceeds the combined degree of the others.
fn structural_zero(profile: &[u32], symmetric: bool) -> bool {
    let total: u64 = profile
        .iter()
        .enumerate()
        .map(|(k, &e)| k as u64 * e as u64)
        .sum();
    if symmetric && total % 2 == 1 {
        return true;
    }
    match profile.iter().rposition(|&e| e > 0) {
        Some(top) if top > 0 => (top as u64) > total - top as u64,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const H: PolynomialFamily = PolynomialFamily::Hermite;

    #[test]
    fn one_dim_second_order() {
        let c = InnerProductCache::build(&[H], 1, 2, &CacheOptions::default()).unwrap();
        let e = c.entries();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].0 .0, vec![0, 2]);
        assert_eq!(e[1].0 .0, vec![2, 0]);
        assert_abs_diff_eq!(e[0].1, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[1].1, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn structural_zeros() {
        // φ_2 alone against φ_0 powers vanishes
        assert!(structural_zero(&[2, 0, 1], false));
        assert!(!structural_zero(&[1, 0, 2], false));
        assert!(structural_zero(&[0, 1, 0, 1, 0], true));
        assert!(!structural_zero(&[3, 0, 0], true));
    }

    #[test]
    fn gaussian_moments_from_identity() {
        let basis = std::sync::Arc::new(super::super::ChaosBasis::isotropic(H, 1, 2).unwrap());
        let exp = super::super::GpcExpansion::new(basis, vec![0.0, 1.0, 0.0]).unwrap();
        let opts = CacheOptions::default();
        let set = CacheSet::build(&[H], 2, 5, &opts).unwrap();
        let mv = exp.moments(&set, 5).unwrap();
        for (got, want) in mv.as_slice().iter().zip([0.0, 1.0, 0.0, 3.0, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn header_round_trip_and_mismatch() {
        let fams = [H, PolynomialFamily::Jacobi { alpha: 1.0, beta: 2.0 }];
        let c = InnerProductCache::build(&fams, 2, 3, &CacheOptions::default()).unwrap();
        let text = c.to_text();
        assert!(text.starts_with("GPCCACHE v1 n=2 d=2 m=3 fam=hermite,jacobi(1;2) tol=1e-12\n"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        c.write(&path).unwrap();
        let back = InnerProductCache::read(&path).unwrap();
        assert_eq!(back.to_text(), text);
        assert!(back.check_compatible(&[H, H], 2).is_err());
        assert!(back.check_compatible(&fams, 2).is_ok());
    }

    #[test]
    fn capacity_guard() {
        let opts = CacheOptions {
            capacity: 1000,
            ..CacheOptions::default()
        };
        assert!(matches!(
            InnerProductCache::build(&[H; 4], 3, 5, &opts),
            Err(Error::Capacity { requested: 575_757, .. })
        ));
    }
}
