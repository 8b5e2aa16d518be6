//! Sources of labeled true points: a seeded separable generator, the fixed
//! adversarial fixtures, and JSON Lines files.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::InitialPrediction;
use crate::types::{CostModel, FeatureVector, Label};

/// Rejections allowed per emitted point before giving up.
pub const MAX_REJECTIONS: u64 = 10_000;

/// One true point and its label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamRecord {
    pub z: FeatureVector,
    pub label: Label,
}

impl StreamRecord {
    pub fn new(z: impl Into<FeatureVector>, label: Label) -> Self {
        StreamRecord { z: z.into(), label }
    }
}

fn default_label_mix() -> f64 {
    0.5
}

/// Parameters of a random separable stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub d: usize,
    /// Bound on `|z|`.
    #[serde(alias = "R")]
    pub radius: f64,
    pub gamma: f64,
    /// Only the direction is used; the generator rescales to `|w*| = 1/gamma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_star: Option<FeatureVector>,
    pub length: usize,
    pub seed: u64,
    #[serde(default = "default_label_mix")]
    pub label_mix: f64,
    /// Draw `w*` from the nonnegative orthant.
    #[serde(default)]
    pub coordinate_sign_constraint: bool,
}

impl StreamSpec {
    pub fn new(d: usize, radius: f64, gamma: f64, length: usize, seed: u64) -> Self {
        StreamSpec {
            d,
            radius,
            gamma,
            w_star: None,
            length,
            seed,
            label_mix: 0.5,
            coordinate_sign_constraint: false,
        }
    }
}

/// Where a stream came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum StreamSource {
    Generated {
        spec: StreamSpec,
    },
    Fixture {
        id: Fixture,
    },
    File {
        path: String,
    },
    /// Records recovered from a transcript.
    Transcript,
}

/// A finite stream plus what is known about it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stream {
    pub source: StreamSource,
    pub records: Vec<StreamRecord>,
    /// A separator certified for these records (`label·z·w* >= 1` on all).
    pub w_star: Option<FeatureVector>,
    /// Bound on `|z|` used by the mistake bounds.
    pub radius: f64,
    /// Cost model the stream is meant to be played with.
    pub cost_model: Option<CostModel>,
    #[serde(default)]
    pub initial_prediction: InitialPrediction,
}

impl Stream {
    /// Wraps bare records: no certified separator, radius = max `|z|`.
    pub fn from_records(source: StreamSource, records: Vec<StreamRecord>) -> Self {
        let radius = max_norm(&records);
        Stream {
            source,
            records,
            w_star: None,
            radius,
            cost_model: None,
            initial_prediction: InitialPrediction::Positive,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.records.first().map(|r| r.z.dim())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn max_norm(records: &[StreamRecord]) -> f64 {
    records.iter().map(|r| r.z.norm()).fold(0.0, f64::max)
}

fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if v.iter().any(|c: &f64| *c != 0.0) {
            return v;
        }
    }
}

fn sample_in_ball(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> FeatureVector {
    let dir = FeatureVector::new(gaussian_vector(rng, d));
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / d as f64);
    dir.scaled(r / dir.norm())
}

/// The separator a spec generates from: the given `w*` or a random
/// direction, scaled to norm `1/gamma`.
pub fn resolve_w_star(spec: &StreamSpec, rng: &mut ChaCha8Rng) -> Result<FeatureVector> {
    let dir = match &spec.w_star {
        Some(w) => {
            w.check_dim(spec.d)?;
            if w.is_zero() {
                return Err(Error::InvalidParameter("w* must be nonzero".into()));
            }
            if spec.coordinate_sign_constraint && w.coords().iter().any(|c| *c < 0.0) {
                return Err(Error::InvalidParameter(
                    "w* has a negative coordinate but coordinate_sign_constraint is set".into(),
                ));
            }
            w.clone()
        }
        None => {
            let mut v = gaussian_vector(rng, spec.d);
            if spec.coordinate_sign_constraint {
                v.iter_mut().for_each(|c| *c = c.abs());
            }
            FeatureVector::new(v)
        }
    };
    Ok(dir.scaled(1.0 / (spec.gamma * dir.norm())))
}

/// Draws a separable stream. Each `z` is uniform in the `radius`-ball
/// conditioned on `|z·w*| >= 1`; labels are stratified so that
/// `round(label_mix·length)` of them are positive.
pub fn generate_separable_stream(spec: &StreamSpec) -> Result<Stream> {
    if spec.d == 0 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    if !(spec.gamma > 0.0 && spec.gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {}",
            spec.gamma
        )));
    }
    if !spec.radius.is_finite() || spec.radius < spec.gamma {
        return Err(Error::InfeasibleStream {
            radius: spec.radius,
            gamma: spec.gamma,
        });
    }
    if !(0.0..=1.0).contains(&spec.label_mix) {
        return Err(Error::InvalidParameter(format!(
            "label_mix must lie in [0, 1], got {}",
            spec.label_mix
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let w_star = resolve_w_star(spec, &mut rng)?;

    let positives = (spec.label_mix * spec.length as f64).round() as usize;
    let mut labels: Vec<Label> = (0..spec.length)
        .map(|k| {
            if k < positives {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();
    labels.shuffle(&mut rng);

    let mut records = Vec::with_capacity(spec.length);
    for label in labels {
        let mut attempts = 0;
        let z = loop {
            if attempts >= MAX_REJECTIONS {
                return Err(Error::MarginTooDemanding { attempts });
            }
            attempts += 1;
            let z = sample_in_ball(&mut rng, spec.d, spec.radius);
            if z.norm() > spec.radius {
                continue;
            }
            let m = z.dot(&w_star);
            if m.abs() < 1.0 {
                continue;
            }
            // the ball is symmetric, so reflecting keeps the conditional law
            let z = if (m > 0.0) == (label == Label::Positive) {
                z
            } else {
                -&z
            };
            if label.sign() * z.dot(&w_star) >= 1.0 {
                break z;
            }
        };
        records.push(StreamRecord { z, label });
    }
    Ok(Stream {
        source: StreamSource::Generated { spec: spec.clone() },
        records,
        w_star: Some(w_star),
        radius: spec.radius,
        cost_model: None,
        initial_prediction: InitialPrediction::Positive,
    })
}

/// The hand-built streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fixture {
    /// `A = (1,0)` positive, then `B, C` forever.
    Example1Original,
    /// `A = (-1,0)` negative, then `B, C` forever.
    Example1Footnote,
    /// `z_0`, then four points forever; not linearly separable.
    Example2,
}

impl Fixture {
    pub const ALL: [Fixture; 3] = [
        Fixture::Example1Original,
        Fixture::Example1Footnote,
        Fixture::Example2,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Fixture::Example1Original => "example1-original",
            Fixture::Example1Footnote => "example1-footnote",
            Fixture::Example2 => "example2",
        }
    }

    pub fn cost_model(self) -> CostModel {
        match self {
            Fixture::Example1Original | Fixture::Example1Footnote => CostModel::L2 { alpha: 0.5 },
            Fixture::Example2 => CostModel::L2 { alpha: 5.0 },
        }
    }

    /// Separator with `label·z·w* >= 1` on every record, where one exists.
    pub fn certified_w_star(self) -> Option<FeatureVector> {
        match self {
            // margins on A, B, C: 4, 1, -1 (original) and -4, 1, -1 (footnote)
            Fixture::Example1Original | Fixture::Example1Footnote => Some([4.0, -1.0].into()),
            Fixture::Example2 => None,
        }
    }

    /// Vertical separator that errs only on `z_0`.
    pub fn reference_separator(self) -> Option<FeatureVector> {
        match self {
            Fixture::Example2 => Some([1.0, 0.0].into()),
            _ => self.certified_w_star(),
        }
    }

    /// Start convention the narrated runs use.
    pub fn initial_prediction(self) -> InitialPrediction {
        match self {
            Fixture::Example1Footnote => InitialPrediction::Positive,
            Fixture::Example1Original | Fixture::Example2 => InitialPrediction::Negative,
        }
    }

    fn opener(self) -> StreamRecord {
        match self {
            Fixture::Example1Original => StreamRecord::new([1.0, 0.0], Label::Positive),
            Fixture::Example1Footnote => StreamRecord::new([-1.0, 0.0], Label::Negative),
            Fixture::Example2 => StreamRecord::new([-4.0, -3.0], Label::Positive),
        }
    }

    fn cycle(self) -> Vec<StreamRecord> {
        match self {
            Fixture::Example1Original | Fixture::Example1Footnote => vec![
                StreamRecord::new([0.0, -1.0], Label::Positive),
                StreamRecord::new([-0.5, -1.0], Label::Negative),
            ],
            Fixture::Example2 => vec![
                StreamRecord::new([-1.0, -7.0], Label::Negative),
                StreamRecord::new([3.0, 2.0], Label::Positive),
                StreamRecord::new([-1.0, 7.0], Label::Negative),
                StreamRecord::new([3.0, -2.0], Label::Positive),
            ],
        }
    }

    pub fn records(self, length: usize) -> Vec<StreamRecord> {
        let cycle = self.cycle();
        std::iter::once(self.opener())
            .chain(cycle.iter().cloned().cycle())
            .take(length)
            .collect()
    }

    /// The first `length` records with the fixture's metadata.
    pub fn stream(self, length: usize) -> Stream {
        let mut all = vec![self.opener()];
        all.extend(self.cycle());
        Stream {
            source: StreamSource::Fixture { id: self },
            records: self.records(length),
            w_star: self.certified_w_star(),
            radius: max_norm(&all),
            cost_model: Some(self.cost_model()),
            initial_prediction: self.initial_prediction(),
        }
    }
}

impl fmt::Display for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Fixture::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fixture {s:?}")))
    }
}

pub fn example1_stream(variant: Fixture, length: usize) -> Result<Stream> {
    match variant {
        Fixture::Example1Original | Fixture::Example1Footnote => Ok(variant.stream(length)),
        other => Err(Error::InvalidParameter(format!(
            "{other} is not an example-1 variant"
        ))),
    }
}

pub fn example2_stream(length: usize) -> Stream {
    Fixture::Example2.stream(length)
}

/// Reads a JSON Lines stream. Blank lines are skipped.
pub fn load_stream(path: impl AsRef<Path>) -> Result<Vec<StreamRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records: Vec<StreamRecord> = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: k + 1,
            message,
        };
        let record: StreamRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        FeatureVector::try_new(record.z.coords().to_vec()).map_err(|e| parse_err(e.to_string()))?;
        if let Some(first) = records.first() {
            if first.z.dim() != record.z.dim() {
                return Err(parse_err(format!(
                    "dimension {} differs from the first record's {}",
                    record.z.dim(),
                    first.z.dim()
                )));
            }
        }
        records.push(record);
    }
    Ok(records)
}

pub fn save_stream(path: impl AsRef<Path>, records: &[StreamRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_records() {
        let s = Fixture::Example1Footnote.records(7);
        assert_eq!(s[0], StreamRecord::new([-1.0, 0.0], Label::Negative));
        assert_eq!(s[1], StreamRecord::new([0.0, -1.0], Label::Positive));
        assert_eq!(s[2], StreamRecord::new([-0.5, -1.0], Label::Negative));
        for t in 1..5 {
            assert_eq!(s[t + 2], s[t]);
        }
        assert_eq!(
            Fixture::Example1Original.records(1)[0],
            StreamRecord::new([1.0, 0.0], Label::Positive)
        );
    }

    #[test]
    fn example2_records() {
        let s = example2_stream(9).records;
        let labels: Vec<Label> = s[..5].iter().map(|r| r.label).collect();
        use Label::*;
        assert_eq!(labels, [Positive, Negative, Positive, Negative, Positive]);
        assert_eq!(s[0].z, [-4.0, -3.0].into());
        assert_eq!(s[5], s[1]);
        // the vertical separator errs on z_0 only
        let w = Fixture::Example2.reference_separator().unwrap();
        let wrong: Vec<usize> = (0..5)
            .filter(|&t| s[t].label.sign() * s[t].z.dot(&w) < 0.0)
            .collect();
        assert_eq!(wrong, [0]);
    }

    #[test]
    fn certified_separators_separate() {
        for f in [Fixture::Example1Original, Fixture::Example1Footnote] {
            let w = f.certified_w_star().unwrap();
            for r in f.records(3) {
                assert!(r.label.sign() * r.z.dot(&w) >= 1.0, "{f}: {:?}", r);
            }
        }
    }

    #[test]
    fn fixture_ids_round_trip() {
        for f in Fixture::ALL {
            assert_eq!(f.id().parse::<Fixture>().unwrap(), f);
        }
        assert!("example3".parse::<Fixture>().is_err());
    }

    #[test]
    fn generator_rejects_bad_specs() {
        let spec = StreamSpec::new(2, 0.5, 1.0, 10, 1);
        assert!(matches!(
            generate_separable_stream(&spec),
            Err(Error::InfeasibleStream { .. })
        ));
        // the admissible shell is a sliver of the ball
        let spec = StreamSpec::new(20, 1.0, 0.999, 10, 1);
        assert!(matches!(
            generate_separable_stream(&spec),
            Err(Error::MarginTooDemanding { .. })
        ));
    }

    #[test]
    fn label_mix_is_stratified() {
        let mut spec = StreamSpec::new(3, 5.0, 0.5, 200, 9);
        spec.label_mix = 0.3;
        let s = generate_separable_stream(&spec).unwrap();
        assert_eq!(
            s.records
                .iter()
                .filter(|r| r.label == Label::Positive)
                .count(),
            60
        );
    }

    #[test]
    fn sign_constraint_gives_nonnegative_separator() {
        let mut spec = StreamSpec::new(4, 5.0, 0.5, 5, 2);
        spec.coordinate_sign_constraint = true;
        let s = generate_separable_stream(&spec).unwrap();
        assert!(s.w_star.unwrap().coords().iter().all(|c| *c >= 0.0));
    }

    #[test]
    fn given_w_star_is_rescaled() {
        let mut spec = StreamSpec::new(2, 5.0, 0.5, 5, 2);
        spec.w_star = Some([3.0, 4.0].into());
        let w = generate_separable_stream(&spec).unwrap().w_star.unwrap();
        assert!((w.norm() - 2.0).abs() < 1e-12);
        assert!((w.coords()[0] / w.coords()[1] - 0.75).abs() < 1e-12);
    }
}
