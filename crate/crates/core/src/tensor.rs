//! Dense complex tensors over binary indices.
//!
//! Every index has dimension 2. Labels are kept in ascending order and the
//! data is row-major over them, so the first label is the most significant
//! bit of the linear offset.

use num_complex::Complex64;

use crate::Label;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    labels: Vec<Label>,
    data: Vec<Complex64>,
}

impl Tensor {
    /// Creates a tensor whose `labels` are already strictly ascending.
    ///
    /// Panics if the labels are unsorted or repeated, or if the data length
    /// is not `2^labels.len()`.
    pub fn new(labels: Vec<Label>, data: Vec<Complex64>) -> Self {
        assert!(
            labels.windows(2).all(|w| w[0] < w[1]),
            "tensor labels must be strictly ascending: {labels:?}"
        );
        assert_eq!(data.len(), 1 << labels.len(), "data length mismatch");
        Tensor { labels, data }
    }

    /// Creates a tensor from data laid out row-major over `axes` in the given
    /// (possibly unsorted) order, transposing into ascending label order.
    pub fn from_axes(axes: &[Label], data: &[Complex64]) -> Self {
        let rank = axes.len();
        assert_eq!(data.len(), 1 << rank, "data length mismatch");
        let mut labels = axes.to_vec();
        labels.sort_unstable();
        labels.dedup();
        assert_eq!(labels.len(), rank, "repeated label in {axes:?}");
        // stride of each source axis inside the sorted layout
        let strides: Vec<usize> = axes
            .iter()
            .map(|l| 1 << (rank - 1 - labels.binary_search(l).unwrap()))
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
        for (src, &v) in data.iter().enumerate() {
            let dst: usize = (0..rank)
                .filter(|&k| src >> (rank - 1 - k) & 1 == 1)
                .map(|k| strides[k])
                .sum();
            out[dst] = v;
        }
        Tensor { labels, data: out }
    }

    pub fn scalar(value: Complex64) -> Self {
        Tensor {
            labels: Vec::new(),
            data: vec![value],
        }
    }

    /// Rank-1 tensor equal to the computational basis vector `|bit⟩`.
    pub fn basis(label: Label, bit: u8) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); 2];
        data[usize::from(bit)] = Complex64::new(1.0, 0.0);
        Tensor {
            labels: vec![label],
            data,
        }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    pub fn contains(&self, label: Label) -> bool {
        self.labels.binary_search(&label).is_ok()
    }

    /// Value of a rank-0 tensor.
    pub fn as_scalar(&self) -> Option<Complex64> {
        (self.labels.is_empty()).then(|| self.data[0])
    }

    /// Entry at the given bit per label (in label order).
    pub fn get(&self, bits: &[u8]) -> Complex64 {
        assert_eq!(bits.len(), self.rank());
        let offset = bits.iter().fold(0, |acc, &b| acc * 2 + usize::from(b));
        self.data[offset]
    }

    /// Sub-array with `label` fixed to `bit`. Returns a clone if the label is
    /// not present.
    pub fn fix(&self, label: Label, bit: u8) -> Tensor {
        let Ok(pos) = self.labels.binary_search(&label) else {
            return self.clone();
        };
        let rank = self.rank();
        let stride = 1usize << (rank - 1 - pos);
        let base = usize::from(bit) * stride;
        let data = (0..self.data.len() / 2)
            .map(|k| {
                let hi = k / stride;
                let lo = k % stride;
                self.data[hi * stride * 2 + base + lo]
            })
            .collect();
        let mut labels = self.labels.clone();
        labels.remove(pos);
        Tensor { labels, data }
    }

    /// Fixes several labels at once; labels absent from the tensor are ignored.
    pub fn fix_many<'a>(&self, assignment: impl IntoIterator<Item = (&'a Label, &'a u8)>) -> Tensor {
        let mut t = std::borrow::Cow::Borrowed(self);
        for (&label, &bit) in assignment {
            if t.contains(label) {
                t = std::borrow::Cow::Owned(t.fix(label, bit));
            }
        }
        t.into_owned()
    }

    /// Elementwise product aligned by label (outer product on disjoint labels).
    pub fn product(&self, other: &Tensor) -> Tensor {
        let mut labels: Vec<Label> = self.labels.iter().chain(&other.labels).copied().collect();
        labels.sort_unstable();
        labels.dedup();
        let rank = labels.len();
        let sa = strides_in(&self.labels, &labels);
        let sb = strides_in(&other.labels, &labels);
        let data = (0..1usize << rank)
            .map(|x| {
                let (mut oa, mut ob) = (0, 0);
                for k in 0..rank {
                    if x >> (rank - 1 - k) & 1 == 1 {
                        oa += sa[k];
                        ob += sb[k];
                    }
                }
                self.data[oa] * other.data[ob]
            })
            .collect();
        Tensor { labels, data }
    }

    /// Data laid out row-major over `order`, which must be a permutation of
    /// the tensor's labels.
    pub fn data_in_order(&self, order: &[Label]) -> Vec<Complex64> {
        let rank = self.rank();
        assert_eq!(order.len(), rank);
        let strides = strides_in(&self.labels, order);
        assert!(
            order.iter().all(|l| self.contains(*l)),
            "order {order:?} is not a permutation of {:?}",
            self.labels
        );
        (0..1usize << rank)
            .map(|x| {
                let off: usize = (0..rank)
                    .filter(|&k| x >> (rank - 1 - k) & 1 == 1)
                    .map(|k| strides[k])
                    .sum();
                self.data[off]
            })
            .collect()
    }
}

impl AsRef<Tensor> for Tensor {
    fn as_ref(&self) -> &Tensor {
        self
    }
}

/// For each label of `target`, the stride of that label in a tensor with
/// ascending `own` labels, or 0 if absent.
pub(crate) fn strides_in(own: &[Label], target: &[Label]) -> Vec<usize> {
    let rank = own.len();
    target
        .iter()
        .map(|l| match own.binary_search(l) {
            Ok(p) => 1 << (rank - 1 - p),
            Err(_) => 0,
        })
        .collect()
}
