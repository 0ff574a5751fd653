//! Multi-channel datasets: construction, channel splitting, stratified
//! train/test splits, preprocessing, manifests, and synthetic generators.

mod csv_io;
mod manifest;
mod preprocess;
mod synth;

pub use csv_io::{read_csv_matrix, read_labels, write_csv_matrix, Labels};
pub use manifest::{load_manifest, load_split, ChannelEntry, DatasetManifest, PreparedSplit};
pub use preprocess::{
    normalize_unit_interval, standardize, zca_whiten, Pipeline, Standardizer, Step, UnitInterval,
    Zca, DEFAULT_ZCA_EPS,
};
pub use synth::gen_synth_blobs;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Channel name used when a single matrix is wrapped as a dataset.
pub const DEFAULT_CHANNEL: &str = "x";

#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelDataset {
    channels: Vec<Matrix>,
    labels: Matrix,
    channel_names: Vec<String>,
    meta: String,
}

impl MultiChannelDataset {
    pub fn new(
        channels: Vec<Matrix>,
        labels: Matrix,
        channel_names: Vec<String>,
        meta: impl Into<String>,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Dataset("no channels".into()));
        }
        if channel_names.len() != channels.len() {
            return Err(Error::Dataset(format!(
                "{} channel names for {} channels",
                channel_names.len(),
                channels.len()
            )));
        }
        let rows = labels.nrows();
        for (name, ch) in channel_names.iter().zip(&channels) {
            if ch.nrows() != rows {
                return Err(Error::Dataset(format!(
                    "channel `{name}` has {} rows, labels have {rows}",
                    ch.nrows()
                )));
            }
            if ch.ncols() == 0 {
                return Err(Error::Dataset(format!("channel `{name}` has no columns")));
            }
        }
        check_one_hot(&labels)?;
        Ok(MultiChannelDataset {
            channels,
            labels,
            channel_names,
            meta: meta.into(),
        })
    }

    /// One channel named [`DEFAULT_CHANNEL`].
    pub fn single(x: Matrix, labels: Matrix) -> Result<Self> {
        Self::new(vec![x], labels, vec![DEFAULT_CHANNEL.to_string()], "single matrix")
    }

    pub fn rows(&self) -> usize {
        self.labels.nrows()
    }
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }
    pub fn class_count(&self) -> usize {
        self.labels.ncols()
    }
    pub fn channels(&self) -> &[Matrix] {
        &self.channels
    }
    pub fn labels(&self) -> &Matrix {
        &self.labels
    }
    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }
    pub fn meta(&self) -> &str {
        &self.meta
    }
    pub fn channel_dims(&self) -> Vec<usize> {
        self.channels.iter().map(|c| c.ncols()).collect()
    }

    /// Class index of each row.
    pub fn class_ids(&self) -> Vec<usize> {
        argmax_rows(&self.labels)
    }

    /// All channels side by side.
    pub fn concatenated(&self) -> Matrix {
        concat_columns(&self.channels)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let pick = |m: &Matrix| m.select(ndarray::Axis(0), idx);
        MultiChannelDataset {
            channels: self.channels.iter().map(pick).collect(),
            labels: pick(&self.labels),
            channel_names: self.channel_names.clone(),
            meta: self.meta.clone(),
        }
    }

    pub fn select_channels(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.channels.len()) {
            return Err(Error::Dataset(format!("no channel {bad}")));
        }
        Self::new(
            idx.iter().map(|&i| self.channels[i].clone()).collect(),
            self.labels.clone(),
            idx.iter().map(|&i| self.channel_names[i].clone()).collect(),
            self.meta.clone(),
        )
    }

    pub(crate) fn map_channels(
        &self,
        mut f: impl FnMut(usize, &Matrix) -> Result<Matrix>,
    ) -> Result<Self> {
        let channels = self
            .channels
            .iter()
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(channels, self.labels.clone(), self.channel_names.clone(), self.meta.clone())
    }
}

pub fn concat_columns(parts: &[Matrix]) -> Matrix {
    let views: Vec<_> = parts.iter().map(|m| m.view()).collect();
    ndarray::concatenate(ndarray::Axis(1), &views).expect("row counts agree")
}

fn check_one_hot(labels: &Matrix) -> Result<()> {
    if labels.ncols() == 0 {
        return Err(Error::LabelFormat("no classes".into()));
    }
    for (i, row) in labels.outer_iter().enumerate() {
        let ones = row.iter().filter(|v| **v == 1.0).count();
        let zeros = row.iter().filter(|v| **v == 0.0).count();
        if ones != 1 || zeros != row.len() - 1 {
            return Err(Error::LabelFormat(format!("row {i} is not a one-hot vector")));
        }
    }
    Ok(())
}

/// `N×K` indicator matrix for class ids in `[0, K)`.
pub fn one_hot(ids: &[usize], classes: usize) -> Result<Matrix> {
    if classes == 0 {
        return Err(Error::LabelFormat("zero classes".into()));
    }
    let mut out = Matrix::zeros((ids.len(), classes));
    for (i, &id) in ids.iter().enumerate() {
        if id >= classes {
            return Err(Error::LabelFormat(format!(
                "row {i}: class {id} outside [0, {classes})"
            )));
        }
        out[[i, id]] = 1.0;
    }
    Ok(out)
}

/// Column index of each row's maximum; ties go to the lowest index.
pub fn argmax_rows(m: &Matrix) -> Vec<usize> {
    m.outer_iter()
        .map(|row| {
            let mut best = 0;
            for (j, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Contiguous column blocks, one per channel.
    #[default]
    Blocked,
    /// Column `j` belongs to channel `j mod count`.
    Interleaved,
}

/// Split a flat feature matrix into `count` channels of equal width.
pub fn channelize(x: &Matrix, count: usize, layout: Layout) -> Result<Vec<Matrix>> {
    if count == 0 || !x.ncols().is_multiple_of(count) {
        return Err(Error::Dataset(format!(
            "{} columns do not split into {count} channels",
            x.ncols()
        )));
    }
    let width = x.ncols() / count;
    Ok((0..count)
        .map(|c| {
            let cols: Vec<usize> = match layout {
                Layout::Blocked => (c * width..(c + 1) * width).collect(),
                Layout::Interleaved => (0..width).map(|j| j * count + c).collect(),
            };
            x.select(ndarray::Axis(1), &cols)
        })
        .collect())
}

/// Stratified index split: per class, a seeded shuffle and a cut. Class
/// quotas are floors of `fraction · size`, topped up by largest remainder
/// so that the train total is `round(fraction · N)`.
pub fn split_indices(class_ids: &[usize], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::param("train_fraction", format!("{fraction} outside (0, 1)")));
    }
    let classes = class_ids.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &c) in class_ids.iter().enumerate() {
        members[c].push(i);
    }
    for (class, m) in members.iter().enumerate() {
        if !m.is_empty() && m.len() < 2 {
            return Err(Error::Stratification { class, count: m.len() });
        }
    }

    let target = (fraction * class_ids.len() as f64).round() as usize;
    let mut quota: Vec<usize> = members
        .iter()
        .map(|m| (fraction * m.len() as f64).floor() as usize)
        .collect();
    let mut order: Vec<usize> = (0..classes).filter(|&c| !members[c].is_empty()).collect();
    order.sort_by(|&a, &b| {
        let ra = fraction * members[a].len() as f64 - quota[a] as f64;
        let rb = fraction * members[b].len() as f64 - quota[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut assigned: usize = quota.iter().sum();
    for &c in order.iter().cycle().take(order.len() * 2) {
        if assigned >= target {
            break;
        }
        if quota[c] < members[c].len() {
            quota[c] += 1;
            assigned += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (c, mut m) in members.into_iter().enumerate() {
        m.shuffle(&mut rng);
        train.extend_from_slice(&m[..quota[c]]);
        test.extend_from_slice(&m[quota[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split_train_test(
    data: &MultiChannelDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(MultiChannelDataset, MultiChannelDataset)> {
    let (train, test) = split_indices(&data.class_ids(), train_fraction, seed)?;
    Ok((data.select_rows(&train), data.select_rows(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn one_hot_examples() {
        assert_eq!(one_hot(&[0, 1, 2], 3).unwrap(), Matrix::eye(3));
        assert_eq!(one_hot(&[0, 0], 1).unwrap(), Matrix::ones((2, 1)));
        assert!(one_hot(&[3], 3).is_err());
        let ids = vec![2, 0, 1, 1, 2];
        assert_eq!(argmax_rows(&one_hot(&ids, 3).unwrap()), ids);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax_rows(&array![[0.1, 0.9], [0.5, 0.5]]), vec![1, 0]);
    }

    #[test]
    fn dataset_validation() {
        let y = one_hot(&[0, 1], 2).unwrap();
        assert!(MultiChannelDataset::new(
            vec![Matrix::zeros((2, 3)), Matrix::zeros((3, 3))],
            y.clone(),
            vec!["a".into(), "b".into()],
            ""
        )
        .is_err());
        assert!(MultiChannelDataset::single(Matrix::zeros((2, 3)), array![[1.0, 1.0], [0.0, 1.0]]).is_err());
        assert!(MultiChannelDataset::single(Matrix::zeros((2, 3)), y).is_ok());
    }

    #[test]
    fn channelize_shapes() {
        let x = Matrix::from_shape_fn((2, 5625), |(i, j)| (i * 5625 + j) as f64);
        let ch = channelize(&x, 45, Layout::Blocked).unwrap();
        assert_eq!(ch.len(), 45);
        assert!(ch.iter().all(|c| c.dim() == (2, 125)));
        assert_eq!(ch[1][[0, 0]], 125.0);

        let x = Matrix::zeros((1, 24000));
        let ch = channelize(&x, 8, Layout::Blocked).unwrap();
        assert!(ch.iter().all(|c| c.dim() == (1, 3000)));

        let x = array![[0.0, 1.0, 2.0, 3.0]];
        assert_eq!(channelize(&x, 1, Layout::Blocked).unwrap(), vec![x.clone()]);
        let inter = channelize(&x, 2, Layout::Interleaved).unwrap();
        assert_eq!(inter[0], array![[0.0, 2.0]]);
        assert_eq!(inter[1], array![[1.0, 3.0]]);
        assert!(channelize(&x, 3, Layout::Blocked).is_err());
    }

    #[test]
    fn split_counts_dsa_shape() {
        let ids: Vec<usize> = (0..9120).map(|i| i % 19).collect();
        let (train, test) = split_indices(&ids, 2.0 / 3.0, 1).unwrap();
        assert_eq!((train.len(), test.len()), (6080, 3040));
    }

    #[test]
    fn split_is_partition_and_stratified() {
        let ids: Vec<usize> = (0..103).map(|i| (i * 7) % 4).collect();
        let (train, test) = split_indices(&ids, 0.7, 5).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
        for c in 0..4 {
            let total = ids.iter().filter(|&&i| i == c).count() as f64;
            let in_train = train.iter().filter(|&&i| ids[i] == c).count() as f64;
            assert!((in_train - 0.7 * total).abs() <= 1.0);
        }
        assert_eq!(split_indices(&ids, 0.7, 5).unwrap(), (train, test));
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            split_indices(&[0, 0, 1], 0.5, 0),
            Err(Error::Stratification { class: 1, count: 1 })
        ));
        assert!(split_indices(&[0, 0], 1.0, 0).is_err());
    }
}
