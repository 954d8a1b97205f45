//! Search spaces, configurations and the unit-cube encoding.
//!
//! All model-based code works on points in `[0, 1]^d`. A [`SearchSpace`]
//! maps native hyperparameter values to that cube (linearly, or linearly in
//! log space for logarithmic dimensions) and back, rounding integer
//! dimensions to the nearest grid point.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Continuous,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    Linear,
    #[serde(alias = "log")]
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDimension")]
pub struct Dimension {
    pub name: String,
    pub kind: Kind,
    pub lower: f64,
    pub upper: f64,
    pub scaling: Scaling,
}

#[derive(Deserialize)]
struct RawDimension {
    name: String,
    kind: Kind,
    lower: f64,
    upper: f64,
    #[serde(default = "default_scaling")]
    scaling: Scaling,
}

fn default_scaling() -> Scaling {
    Scaling::Linear
}

impl TryFrom<RawDimension> for Dimension {
    type Error = Error;

    fn try_from(raw: RawDimension) -> Result<Self> {
        Dimension::new(raw.name, raw.kind, raw.lower, raw.upper, raw.scaling)
    }
}

impl Dimension {
    pub fn new(
        name: impl Into<String>,
        kind: Kind,
        lower: f64,
        upper: f64,
        scaling: Scaling,
    ) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: String| Error::Dimension {
            dimension: name.clone(),
            reason,
        };
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(invalid("bounds must be finite".into()));
        }
        if lower >= upper {
            return Err(invalid(format!("lower {lower} must be < upper {upper}")));
        }
        if scaling == Scaling::Logarithmic && lower <= 0.0 {
            return Err(invalid(format!(
                "logarithmic scaling needs lower > 0, got {lower}"
            )));
        }
        if kind == Kind::Integer && (lower.fract() != 0.0 || upper.fract() != 0.0) {
            return Err(invalid(format!(
                "integer bounds must be integral, got [{lower}, {upper}]"
            )));
        }
        Ok(Self {
            name,
            kind,
            lower,
            upper,
            scaling,
        })
    }

    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Result<Self> {
        Self::new(name, Kind::Continuous, lower, upper, Scaling::Linear)
    }

    pub fn integer(name: impl Into<String>, lower: f64, upper: f64) -> Result<Self> {
        Self::new(name, Kind::Integer, lower, upper, Scaling::Linear)
    }

    pub fn log(mut self) -> Result<Self> {
        self.scaling = Scaling::Logarithmic;
        Self::new(self.name, self.kind, self.lower, self.upper, self.scaling)
    }

    /// Zero-width dimensions only arise from [`SearchSpace::restrict`].
    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }

    fn check(&self, value: f64) -> Result<()> {
        let err = |reason: String| {
            Err(Error::Dimension {
                dimension: self.name.clone(),
                reason,
            })
        };
        if !value.is_finite() || value < self.lower || value > self.upper {
            return err(format!(
                "{value} outside [{}, {}]",
                self.lower, self.upper
            ));
        }
        if self.kind == Kind::Integer && value.fract() != 0.0 {
            return err(format!("{value} is not an integer"));
        }
        Ok(())
    }

    fn encode(&self, value: f64) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        let u = match self.scaling {
            Scaling::Linear => (value - self.lower) / (self.upper - self.lower),
            Scaling::Logarithmic => {
                (value.ln() - self.lower.ln()) / (self.upper.ln() - self.lower.ln())
            }
        };
        u.clamp(0.0, 1.0)
    }

    fn decode(&self, u: f64) -> f64 {
        if self.is_degenerate() {
            return self.lower;
        }
        let v = match self.scaling {
            Scaling::Linear => self.lower + u * (self.upper - self.lower),
            Scaling::Logarithmic => {
                (self.lower.ln() + u * (self.upper.ln() - self.lower.ln())).exp()
            }
        };
        let v = match self.kind {
            // round half up
            Kind::Integer => (v + 0.5).floor(),
            Kind::Continuous => v,
        };
        v.clamp(self.lower, self.upper)
    }
}

/// One point of a search space in native units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(pub Vec<f64>);

impl Configuration {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bitwise identity; used for deduplication of replayed configurations.
    pub fn same_as(&self, other: &Configuration) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.to_bits() == b.to_bits() || a == b)
    }
}

impl From<Vec<f64>> for Configuration {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Dimension>", into = "Vec<Dimension>")]
pub struct SearchSpace {
    dimensions: Vec<Dimension>,
}

impl TryFrom<Vec<Dimension>> for SearchSpace {
    type Error = Error;

    fn try_from(dimensions: Vec<Dimension>) -> Result<Self> {
        SearchSpace::new(dimensions)
    }
}

impl From<SearchSpace> for Vec<Dimension> {
    fn from(space: SearchSpace) -> Self {
        space.dimensions
    }
}

impl SearchSpace {
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self> {
        if dimensions.is_empty() {
            return Err(Error::Validation("search space has no dimensions".into()));
        }
        for (i, d) in dimensions.iter().enumerate() {
            if dimensions[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::Validation(format!(
                    "duplicate dimension name `{}`",
                    d.name
                )));
            }
        }
        Ok(Self { dimensions })
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dimensions
    }

    pub fn dim(&self) -> usize {
        self.dimensions.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.dimensions.iter().map(|d| d.name.as_str())
    }

    pub fn validate(&self, config: &Configuration) -> Result<()> {
        if config.len() != self.dim() {
            return Err(Error::Validation(format!(
                "configuration has {} values, space has {} dimensions",
                config.len(),
                self.dim()
            )));
        }
        self.dimensions
            .iter()
            .zip(config.values())
            .try_for_each(|(d, &v)| d.check(v))
    }

    pub fn contains(&self, config: &Configuration) -> bool {
        self.validate(config).is_ok()
    }

    pub fn encode(&self, config: &Configuration) -> Result<Vec<f64>> {
        self.validate(config)?;
        Ok(self.encode_unchecked(config))
    }

    /// Encodes without bound checks, clamping into the cube. Used for
    /// configurations that were valid in a wider space than `self`.
    pub fn encode_unchecked(&self, config: &Configuration) -> Vec<f64> {
        self.dimensions
            .iter()
            .zip(config.values())
            .map(|(d, &v)| d.encode(v))
            .collect()
    }

    pub fn decode(&self, point: &[f64]) -> Result<Configuration> {
        if point.len() != self.dim() {
            return Err(Error::Validation(format!(
                "point has {} coordinates, space has {} dimensions",
                point.len(),
                self.dim()
            )));
        }
        for (d, &u) in self.dimensions.iter().zip(point) {
            if !(0.0..=1.0).contains(&u) {
                return Err(Error::Dimension {
                    dimension: d.name.clone(),
                    reason: format!("unit-cube coordinate {u} outside [0, 1]"),
                });
            }
        }
        Ok(self.decode_clamped(point))
    }

    pub(crate) fn decode_clamped(&self, point: &[f64]) -> Configuration {
        Configuration(
            self.dimensions
                .iter()
                .zip(point)
                .map(|(d, &u)| d.decode(u.clamp(0.0, 1.0)))
                .collect(),
        )
    }

    /// Snaps a unit-cube point onto the encoding of the configuration it
    /// decodes to, so integer dimensions sit on their grid.
    pub fn snap(&self, point: &[f64]) -> Vec<f64> {
        self.encode_unchecked(&self.decode_clamped(point))
    }

    pub fn sample_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim()).map(|_| rng.random::<f64>()).collect()
    }

    /// Uniform in the encoded cube, hence log-uniform on logarithmic dimensions.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let u = self.sample_unit(rng);
        self.decode_clamped(&u)
    }

    /// Intersects each dimension's interval with `[lows[j], highs[j]]` (native units).
    pub fn restrict(&self, lows: &[f64], highs: &[f64]) -> Result<SearchSpace> {
        if lows.len() != self.dim() || highs.len() != self.dim() {
            return Err(Error::Validation(
                "restrict bounds must have one entry per dimension".into(),
            ));
        }
        let dimensions = self
            .dimensions
            .iter()
            .zip(lows.iter().zip(highs))
            .map(|(d, (&lo, &hi))| {
                if lo > hi {
                    return Err(Error::Dimension {
                        dimension: d.name.clone(),
                        reason: format!("restrict low {lo} > high {hi}"),
                    });
                }
                let lower = lo.max(d.lower);
                let upper = hi.min(d.upper);
                if lower > upper {
                    return Err(Error::Dimension {
                        dimension: d.name.clone(),
                        reason: format!(
                            "[{lo}, {hi}] does not intersect [{}, {}]",
                            d.lower, d.upper
                        ),
                    });
                }
                let (lower, upper) = match d.kind {
                    Kind::Integer => {
                        let (l, u) = (lower.ceil(), upper.floor());
                        if l > u {
                            // no grid point inside; collapse onto the nearest one
                            let v = (lower + 0.5).floor().clamp(d.lower, d.upper);
                            (v, v)
                        } else {
                            (l, u)
                        }
                    }
                    Kind::Continuous => (lower, upper),
                };
                Ok(Dimension {
                    name: d.name.clone(),
                    kind: d.kind,
                    lower,
                    upper,
                    scaling: d.scaling,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SearchSpace { dimensions })
    }

    /// Per-dimension `(lower, upper)` bounds.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.dimensions.iter().map(|d| (d.lower, d.upper)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn lin(lo: f64, hi: f64) -> Dimension {
        Dimension::continuous("x", lo, hi).unwrap()
    }

    fn space(dims: Vec<Dimension>) -> SearchSpace {
        SearchSpace::new(dims).unwrap()
    }

    #[test]
    fn encode_examples() {
        let s = space(vec![lin(0.0, 10.0)]);
        assert_eq!(s.encode(&vec![0.0].into()).unwrap(), vec![0.0]);

        let lr = space(vec![Dimension::continuous("learning_rate", 1e-6, 1.0)
            .unwrap()
            .log()
            .unwrap()]);
        let u = lr.encode(&vec![1e-3].into()).unwrap()[0];
        assert!((u - 0.5).abs() < 1e-12, "{u}");

        let ne = space(vec![Dimension::integer("n_estimators", 2.0, 256.0)
            .unwrap()
            .log()
            .unwrap()]);
        assert_eq!(ne.encode(&vec![256.0].into()).unwrap(), vec![1.0]);
    }

    #[test]
    fn encode_out_of_bounds_names_dimension() {
        let s = space(vec![Dimension::continuous("depth", 0.0, 1.0).unwrap()]);
        let err = s.encode(&vec![2.0].into()).unwrap_err();
        assert!(err.to_string().contains("depth"), "{err}");
    }

    #[test]
    fn decode_examples() {
        let s = space(vec![lin(0.0, 10.0)]);
        assert_eq!(s.decode(&[0.5]).unwrap().values(), &[5.0]);

        let d = space(vec![Dimension::integer("d", 2.0, 32.0).unwrap().log().unwrap()]);
        assert_eq!(d.decode(&[0.5]).unwrap().values(), &[8.0]);

        assert!(s.decode(&[1.5]).is_err());
        assert!(s.decode(&[-0.1]).is_err());
    }

    #[test]
    fn integer_rounding_ties_up() {
        let s = space(vec![Dimension::integer("k", 0.0, 2.0).unwrap()]);
        assert_eq!(s.decode(&[0.25]).unwrap().values(), &[1.0]);
        assert_eq!(s.decode(&[0.75]).unwrap().values(), &[2.0]);
    }

    #[test]
    fn invalid_dimensions() {
        assert!(Dimension::continuous("a", 1.0, 1.0).is_err());
        assert!(Dimension::continuous("a", 0.0, 1.0).unwrap().log().is_err());
        assert!(Dimension::integer("a", 0.5, 3.0).is_err());
        assert!(SearchSpace::new(vec![lin(0.0, 1.0), lin(0.0, 2.0)]).is_err());
    }

    #[test]
    fn sample_uniform_moments_and_determinism() {
        let s = space(vec![
            lin(0.0, 10.0),
            Dimension::continuous("lr", 1e-6, 1.0).unwrap().log().unwrap(),
        ]);
        let mut rng = seeded(7);
        let n = 10_000;
        let draws: Vec<_> = (0..n).map(|_| s.sample_uniform(&mut rng)).collect();
        let mean_u: f64 = draws
            .iter()
            .map(|c| s.encode(c).unwrap()[0])
            .sum::<f64>()
            / n as f64;
        let se = (1.0 / 12.0f64).sqrt() / (n as f64).sqrt();
        assert!((mean_u - 0.5).abs() < 3.0 * se, "{mean_u}");

        let below = draws.iter().filter(|c| c.values()[1] < 1e-3).count() as f64 / n as f64;
        let se = (0.25f64 / n as f64).sqrt();
        assert!((below - 0.5).abs() < 3.0 * se, "{below}");

        let a = s.sample_uniform(&mut seeded(11));
        let b = s.sample_uniform(&mut seeded(11));
        assert_eq!(a, b);
    }

    #[test]
    fn restrict_examples() {
        let s = space(vec![lin(0.0, 10.0)]);
        let r = s.restrict(&[2.0], &[5.0]).unwrap();
        let mut rng = seeded(1);
        for _ in 0..200 {
            let v = r.sample_uniform(&mut rng).values()[0];
            assert!((2.0..=5.0).contains(&v));
        }
        assert_eq!(s.restrict(&[0.0], &[10.0]).unwrap(), s);
        assert!(s.restrict(&[5.0], &[2.0]).is_err());

        let li = space(vec![Dimension::integer("n", 2.0, 256.0).unwrap().log().unwrap()]);
        let r = li.restrict(&[8.0], &[8.0]).unwrap();
        for _ in 0..50 {
            assert_eq!(r.sample_uniform(&mut rng).values(), &[8.0]);
        }
        assert_eq!(r.decode(&[0.3]).unwrap().values(), &[8.0]);
    }

    #[test]
    fn serde_roundtrip_and_validation() {
        let json = r#"[{"name":"lr","kind":"continuous","lower":1e-6,"upper":1.0,"scaling":"log"},
                       {"name":"depth","kind":"integer","lower":2,"upper":32}]"#;
        let s: SearchSpace = serde_json::from_str(json).unwrap();
        assert_eq!(s.dimensions()[0].scaling, Scaling::Logarithmic);
        assert_eq!(s.dimensions()[1].scaling, Scaling::Linear);
        let back: SearchSpace = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);

        let bad = r#"[{"name":"x","kind":"continuous","lower":1,"upper":0}]"#;
        assert!(serde_json::from_str::<SearchSpace>(bad).is_err());
    }

    proptest! {
        #[test]
        fn continuous_roundtrip(u in 0.0f64..=1.0, lo in -5.0f64..5.0, w in 0.1f64..10.0, log in any::<bool>()) {
            let (lo, hi) = if log { (lo.abs() + 0.01, lo.abs() + 0.01 + w) } else { (lo, lo + w) };
            let mut d = lin(lo, hi);
            if log { d = d.log().unwrap(); }
            let s = space(vec![d]);
            let c = s.decode(&[u]).unwrap();
            let back = s.encode(&c).unwrap()[0];
            prop_assert!((back - u).abs() < 1e-9);
            let again = s.decode(&[back]).unwrap();
            prop_assert!((again.values()[0] - c.values()[0]).abs() <= 1e-9 * c.values()[0].abs().max(1.0));
        }

        #[test]
        fn integer_grid_roundtrip(k in 2i64..=256) {
            let s = space(vec![Dimension::integer("n", 2.0, 256.0).unwrap().log().unwrap()]);
            let c = Configuration(vec![k as f64]);
            let u = s.encode(&c).unwrap();
            prop_assert_eq!(s.decode(&u).unwrap(), c);
        }

        #[test]
        fn restrict_never_enlarges(a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let s = space(vec![lin(0.0, 10.0), Dimension::integer("k", 0.0, 20.0).unwrap()]);
            let r = s.restrict(&[lo, lo * 2.0], &[hi, hi * 2.0]).unwrap();
            for (orig, new) in s.dimensions().iter().zip(r.dimensions()) {
                prop_assert!(new.lower >= orig.lower && new.upper <= orig.upper);
                prop_assert!(new.lower <= new.upper);
            }
        }
    }
}
